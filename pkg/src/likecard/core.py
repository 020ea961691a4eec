"""Core domain types: pattern queries, geometric buckets, Q-error.

Cardinalities are grouped into buckets whose bounds grow by a factor of
eb**2, where eb is the target worst-case Q-error.  Reporting the
geometric midpoint c_l * eb for every cardinality in [c_l, c_u] with
c_u = floor(c_l * eb**2) keeps the Q-error of a correctly classified
query at or below eb.

Queries are stored in canonical form: suffix bodies are byte-reversed,
so that for every pattern kind "query A covers query B" coincides with
"canonical body of A is a prefix of canonical body of B" on catalog
relations used here.  That single convention lets one prefix-ordered
structure serve prefix, suffix and substring workloads.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass

from .errors import ConfigError

DEFAULT_MAX_LEN = 10


class PatternKind(enum.Enum):
    """The three supported LIKE shapes: S%, %S and %S%."""

    PREFIX = "prefix"
    SUFFIX = "suffix"
    SUBSTRING = "substring"

    @classmethod
    def parse(cls, name: str) -> "PatternKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ConfigError(f"unknown pattern kind: {name!r}") from None


@dataclass(frozen=True)
class Query:
    """A single LIKE predicate with the wildcard positions stripped.

    ``body`` is the canonical byte form: the literal text for prefix and
    substring queries, the byte-reversed literal for suffix queries.
    """

    kind: PatternKind
    body: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.body, bytes):
            raise ConfigError("query body must be bytes")
        if not self.body:
            raise ConfigError("query body must be non-empty")

    @classmethod
    def from_raw(cls, kind: PatternKind, raw: bytes) -> "Query":
        """Build a query from the literal as written in the predicate."""
        if kind is PatternKind.SUFFIX:
            raw = raw[::-1]
        return cls(kind, raw)

    @property
    def raw(self) -> bytes:
        """The literal as it appears in the predicate."""
        if self.kind is PatternKind.SUFFIX:
            return self.body[::-1]
        return self.body


def covers(a: Query, b: Query) -> bool:
    """True when every string matched by ``b`` is also matched by ``a``.

    Implemented as the canonical byte-prefix relation.  For prefix and
    suffix kinds this is exact in both directions; for substring kind a
    canonical prefix always covers, but a covering pair need not be a
    prefix pair.
    """
    if a.kind is not b.kind:
        return False
    return b.body.startswith(a.body)


@dataclass(frozen=True)
class Bucket:
    """One cardinality class [c_l, c_u] reported as the estimate c_l * eb."""

    bucket_id: int
    c_l: int
    c_u: int
    est: float


class BucketScheme:
    """The geometric tiling of [1, max_card] into buckets.

    Bucket 1 starts at c_l = 1; each later bucket starts one past the
    previous upper bound, and every upper bound is floor(c_l * eb**2).
    """

    __slots__ = ("eb", "buckets", "_lowers")

    def __init__(self, eb: float, buckets: tuple[Bucket, ...]):
        self.eb = eb
        self.buckets = buckets
        self._lowers = [b.c_l for b in buckets]

    @property
    def n(self) -> int:
        return len(self.buckets)

    @property
    def max_card(self) -> int:
        return self.buckets[-1].c_u

    def bucket_of(self, cardinality: int) -> Bucket:
        """The unique bucket whose range contains ``cardinality``."""
        if cardinality < 1:
            raise ConfigError(f"cardinality must be >= 1, got {cardinality}")
        if cardinality > self.max_card:
            raise ConfigError(
                f"cardinality {cardinality} exceeds scheme range {self.max_card}"
            )
        return self.buckets[bisect_right(self._lowers, cardinality) - 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BucketScheme):
            return NotImplemented
        return self.eb == other.eb and self.buckets == other.buckets

    def __repr__(self) -> str:
        return f"BucketScheme(eb={self.eb}, n={self.n}, max_card={self.max_card})"


def _check_eb(eb: float) -> None:
    if not (isinstance(eb, (int, float)) and math.isfinite(eb)) or eb <= 1.0:
        raise ConfigError(f"error bound must be a finite float > 1, got {eb!r}")


def make_buckets(eb: float, max_card: int) -> BucketScheme:
    """Tile [1, max_card] with buckets for the error bound ``eb``."""
    _check_eb(eb)
    if max_card < 1:
        raise ConfigError(f"max cardinality must be >= 1, got {max_card}")
    ratio = eb * eb
    buckets = []
    c_l = 1
    while c_l <= max_card:
        c_u = math.floor(c_l * ratio)
        buckets.append(Bucket(len(buckets) + 1, c_l, c_u, c_l * eb))
        c_l = c_u + 1
    return BucketScheme(eb, tuple(buckets))


def scheme_with_count(eb: float, n: int) -> BucketScheme:
    """The scheme with exactly ``n`` buckets; inverse of make_buckets on n."""
    _check_eb(eb)
    if n < 1:
        raise ConfigError(f"bucket count must be >= 1, got {n}")
    ratio = eb * eb
    buckets = []
    c_l = 1
    for i in range(1, n + 1):
        c_u = math.floor(c_l * ratio)
        buckets.append(Bucket(i, c_l, c_u, c_l * eb))
        c_l = c_u + 1
    return BucketScheme(eb, tuple(buckets))


def q_error(estimate: float, true_cardinality: float) -> float:
    """max(estimate / truth, truth / estimate); both sides must be > 0."""
    if estimate <= 0 or true_cardinality <= 0:
        raise ConfigError("q_error requires positive estimate and cardinality")
    return max(estimate / true_cardinality, true_cardinality / estimate)


@dataclass(frozen=True)
class Config:
    """Build-time parameters for an estimator model.

    eb: worst-case Q-error target, > 1 (values below 2 are the intended
        operating range; larger values are accepted).
    max_len: longest pattern body indexed exactly, in bytes.
    p_n: optional lower bound on the probability that an empty-answer
        query is routed to bucket 1.
    tree_threshold: optional fixed bucket id above which keys move to
        the shared tree index; chosen automatically when unset.
    """

    eb: float
    max_len: int = DEFAULT_MAX_LEN
    p_n: float | None = None
    tree_threshold: int | None = None

    def __post_init__(self) -> None:
        _check_eb(self.eb)
        if not isinstance(self.max_len, int) or self.max_len < 1:
            raise ConfigError(f"max pattern length must be an int >= 1, got {self.max_len!r}")
        if self.p_n is not None and not (0.0 < self.p_n < 1.0):
            raise ConfigError(f"empty-answer probability must lie in (0, 1), got {self.p_n!r}")
        if self.tree_threshold is not None and self.tree_threshold < 2:
            raise ConfigError(
                f"tree threshold must be >= 2, got {self.tree_threshold!r}"
            )
