"""Bucket scheme, Q-error, and query canonicalization."""

from __future__ import annotations

import math
import random

import pytest

from likecard import (
    ConfigError,
    PatternKind,
    Query,
    covers,
    make_buckets,
    q_error,
    scheme_with_count,
)
from likecard.core import Config


class TestBuckets:
    def test_single_bucket(self):
        scheme = make_buckets(1.5, 2)
        assert scheme.n == 1
        b = scheme.buckets[0]
        assert (b.c_l, b.c_u, b.est) == (1, 2, 1.5)

    def test_two_buckets(self):
        scheme = make_buckets(1.5, 6)
        assert [(b.c_l, b.c_u) for b in scheme.buckets] == [(1, 2), (3, 6)]
        assert [b.est for b in scheme.buckets] == [1.5, 4.5]

    def test_max_card_inside_last_bucket(self):
        scheme = make_buckets(1.5, 1)
        assert scheme.n == 1 and scheme.max_card == 2

    def test_bucket_of(self):
        scheme = make_buckets(1.5, 20)
        assert scheme.bucket_of(2).bucket_id == 1
        assert scheme.bucket_of(3).bucket_id == 2
        assert scheme.bucket_of(7).bucket_id == 3
        assert scheme.bucket_of(15).bucket_id == 3
        assert scheme.bucket_of(16).bucket_id == 4

    def test_bucket_of_out_of_range(self):
        scheme = make_buckets(1.5, 6)
        with pytest.raises(ConfigError):
            scheme.bucket_of(0)
        with pytest.raises(ConfigError):
            scheme.bucket_of(scheme.max_card + 1)

    def test_tiling_and_error_bound(self):
        rng = random.Random(42)
        for _ in range(50):
            eb = rng.uniform(1.01, 1.99)
            max_card = rng.randint(1, 10 ** rng.randint(1, 7))
            scheme = make_buckets(eb, max_card)
            assert scheme.buckets[0].c_l == 1
            assert scheme.max_card >= max_card
            for prev, cur in zip(scheme.buckets, scheme.buckets[1:]):
                assert cur.c_l == prev.c_u + 1
            for b in scheme.buckets:
                assert b.c_u == math.floor(b.c_l * eb * eb)
                assert b.c_u >= b.c_l
                # worst case q-error sits at the bucket ends
                for card in {b.c_l, b.c_u}:
                    assert q_error(b.est, card) <= eb + 1e-12

    def test_scheme_with_count_inverts(self):
        for eb, max_card in [(1.5, 14997), (1.2, 500), (1.05, 37)]:
            scheme = make_buckets(eb, max_card)
            again = scheme_with_count(eb, scheme.n)
            assert again == scheme

    def test_rejects_bad_eb(self):
        for eb in (1.0, 0.5, 0, -2, float("nan"), float("inf")):
            with pytest.raises(ConfigError):
                make_buckets(eb, 10)


class TestQError:
    def test_symmetric(self):
        assert q_error(4.5, 3) == pytest.approx(1.5)
        assert q_error(3, 4.5) == pytest.approx(1.5)
        assert q_error(5, 5) == 1.0

    def test_rejects_nonpositive(self):
        for est, true in [(0, 1), (1, 0), (-1, 3), (2, -4)]:
            with pytest.raises(ConfigError):
                q_error(est, true)


class TestQuery:
    def test_suffix_stored_reversed(self):
        q = Query.from_raw(PatternKind.SUFFIX, b"abc")
        assert q.body == b"cba"
        assert q.raw == b"abc"

    def test_prefix_substring_stored_as_written(self):
        for kind in (PatternKind.PREFIX, PatternKind.SUBSTRING):
            q = Query.from_raw(kind, b"abc")
            assert q.body == b"abc" and q.raw == b"abc"

    def test_empty_body_rejected(self):
        with pytest.raises(ConfigError):
            Query(PatternKind.PREFIX, b"")

    def test_kind_parse(self):
        assert PatternKind.parse("PREFIX") is PatternKind.PREFIX
        with pytest.raises(ConfigError):
            PatternKind.parse("infix")


def _matches(query: Query, universe: list[bytes]) -> set[bytes]:
    raw = query.raw
    if query.kind is PatternKind.PREFIX:
        return {s for s in universe if s.startswith(raw)}
    if query.kind is PatternKind.SUFFIX:
        return {s for s in universe if s.endswith(raw)}
    return {s for s in universe if raw in s}


class TestCovers:
    """covers() is the canonical byte-prefix relation; for prefix and
    suffix kinds it coincides with match-set inclusion, for substring
    kind it implies inclusion but not conversely."""

    def _universe(self) -> list[bytes]:
        alphabet = [b"a", b"b"]
        out = [b""]
        frontier = [b""]
        for _ in range(6):
            frontier = [s + c for s in frontier for c in alphabet]
            out.extend(frontier)
        return out

    def _patterns(self, kind: PatternKind) -> list[Query]:
        bodies = []
        frontier = [b""]
        for _ in range(3):
            frontier = [s + c for s in frontier for c in [b"a", b"b"]]
            bodies.extend(frontier)
        return [Query.from_raw(kind, b) for b in bodies]

    @pytest.mark.parametrize("kind", [PatternKind.PREFIX, PatternKind.SUFFIX])
    def test_exact_for_prefix_suffix(self, kind):
        universe = self._universe()
        patterns = self._patterns(kind)
        for a in patterns:
            for b in patterns:
                inclusion = _matches(a, universe) >= _matches(b, universe)
                assert covers(a, b) == inclusion, (a, b)

    def test_substring_one_direction(self):
        universe = self._universe()
        patterns = self._patterns(PatternKind.SUBSTRING)
        for a in patterns:
            for b in patterns:
                if covers(a, b):
                    assert _matches(a, universe) >= _matches(b, universe)
        # inclusion without the prefix relation: "b" matches everything "ab" does
        a = Query(PatternKind.SUBSTRING, b"b")
        b = Query(PatternKind.SUBSTRING, b"ab")
        assert _matches(a, universe) >= _matches(b, universe)
        assert not covers(a, b)

    def test_kind_mismatch_never_covers(self):
        assert not covers(Query(PatternKind.PREFIX, b"a"),
                          Query(PatternKind.SUBSTRING, b"ab"))


class TestConfig:
    def test_defaults(self):
        cfg = Config(eb=1.5)
        assert cfg.max_len == 10 and cfg.p_n is None and cfg.tree_threshold is None

    def test_validation(self):
        with pytest.raises(ConfigError):
            Config(eb=1.0)
        with pytest.raises(ConfigError):
            Config(eb=1.5, max_len=0)
        with pytest.raises(ConfigError):
            Config(eb=1.5, p_n=1.0)
        with pytest.raises(ConfigError):
            Config(eb=1.5, p_n=0.0)
        with pytest.raises(ConfigError):
            Config(eb=1.5, tree_threshold=1)
