"""Routing probability formulas: identities, limits, and exact counting."""

from __future__ import annotations

import itertools
import math

import pytest

from likecard.errors import ConfigError
from likecard.probmodel import (
    feasible_f_range,
    nondecreasing_count,
    p_b1_prefix_walk,
    p_bucket,
    p_fallthrough_naive,
    walk_margin_g,
)


class TestPBucket:
    def test_known_values(self):
        assert p_bucket(0.1, 3) == pytest.approx(0.09, abs=1e-12)
        assert p_bucket(0.1, 2) == pytest.approx(0.1, abs=1e-12)

    def test_two_layers_is_exactly_f(self):
        for f in (0.01, 0.05, 0.3, 0.9):
            assert p_bucket(f, 2) == pytest.approx(f, abs=1e-12)

    def test_within_unit_interval(self):
        for f in (1e-6, 0.01, 0.5, 0.999):
            for m in range(2, 9):
                assert 0.0 < p_bucket(f, m) < 1.0

    def test_deep_stack_limit(self):
        # (f - f**m) and (f + f**m) both approach f as m grows
        f = 0.3
        assert p_bucket(f, 31) == pytest.approx(f / (1 + f), rel=1e-6)
        assert p_bucket(f, 30) == pytest.approx(f / (1 + f), rel=1e-6)

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            p_bucket(0.0, 2)
        with pytest.raises(ConfigError):
            p_bucket(1.0, 2)
        with pytest.raises(ConfigError):
            p_bucket(0.1, 1)


class TestFallthrough:
    def test_known_value(self):
        assert p_fallthrough_naive(0.1, 3, 3) == pytest.approx(0.8281, abs=1e-12)

    def test_matches_definition(self):
        for f, m, n in itertools.product((0.01, 0.1), (2, 3, 4), (2, 5, 8)):
            expected = (1 - p_bucket(f, m)) ** (n - 1)
            assert p_fallthrough_naive(f, m, n) == pytest.approx(expected, abs=1e-15)

    def test_needs_two_buckets(self):
        with pytest.raises(ConfigError):
            p_fallthrough_naive(0.1, 2, 1)


class TestNondecreasingCount:
    def test_brute_force(self):
        for n in range(2, 7):
            for t in range(1, 7):
                brute = sum(
                    1 for seq in itertools.product(range(2, n + 1), repeat=t)
                    if all(a <= b for a, b in zip(seq, seq[1:]))
                )
                assert nondecreasing_count(n, t) == brute == math.comb(n + t - 2, t)


class TestPrefixWalk:
    def test_known_value(self):
        assert p_b1_prefix_walk(0.5, 2, 3) == pytest.approx(0.8125, abs=1e-12)

    def test_certain_fallthrough(self):
        for t, n in ((1, 2), (3, 5), (5, 8)):
            assert p_b1_prefix_walk(1.0, t, n) == 1.0

    def test_two_buckets_never_violates_order(self):
        # with a single non-b1 bucket the id sequence is always flat
        for q in (0.0, 0.3, 0.7):
            for t in (1, 2, 4):
                assert p_b1_prefix_walk(q, t, 2) == pytest.approx(1 - (1 - q) ** t, abs=1e-12)

    def test_walk_beats_single_probe(self):
        for q, t, n in itertools.product((0.1, 0.5, 0.9), (2, 3, 5), (3, 5, 8)):
            assert p_b1_prefix_walk(q, t, n) >= q

    def test_brute_force_model(self):
        # enumerate the idealized routing model exactly: each of t probes
        # falls to bucket 1 with probability q, else lands uniformly on
        # buckets 2..n; the walk misses only all-foreign nondecreasing runs
        for q, t, n in itertools.product((0.25, 0.6), (1, 2, 3, 4), (2, 3, 5)):
            miss = 0.0
            for seq in itertools.product(range(1, n + 1), repeat=t):
                if 1 in seq or any(a > b for a, b in zip(seq, seq[1:])):
                    continue
                miss += ((1 - q) / (n - 1)) ** t
            assert p_b1_prefix_walk(q, t, n) == pytest.approx(1 - miss, abs=1e-12)


class TestMarginG:
    def test_minimal_at_two_steps(self):
        for p_n in (0.5, 0.9, 0.99):
            for n in (3, 5, 8, 12):
                g2 = walk_margin_g(p_n, n, 2)
                for t in range(3, 9):
                    assert walk_margin_g(p_n, n, t) >= g2


class TestFeasibleRange:
    def test_two_layer_budget_is_exact(self):
        # with m = 2 the acceptance rate equals f, so f_max hits the budget
        for p_n, n in ((0.9, 5), (0.99, 8), (0.5, 3)):
            f_max = feasible_f_range(p_n, n, 2)
            g2 = walk_margin_g(p_n, n, 2)
            c = 1 - (n - 1) * g2
            budget = 1 - c ** (1 / (n - 1))
            assert f_max == pytest.approx(budget, abs=1e-9)

    def test_budget_respected_for_all_layer_counts(self):
        for p_n, n, m in itertools.product((0.9, 0.99), (3, 8, 12), range(2, 9)):
            f_max = feasible_f_range(p_n, n, m)
            g2 = walk_margin_g(p_n, n, 2)
            c = 1 - (n - 1) * g2
            if c <= 0:
                assert f_max == pytest.approx(1.0, abs=1e-6)
                continue
            budget = 1 - c ** (1 / (n - 1))
            assert p_bucket(f_max, m) <= budget + 1e-9

    def test_end_to_end_target_met(self):
        # the whole chain: f_max -> naive fall-through -> walk at depth 2
        for p_n, n, m in itertools.product((0.5, 0.9, 0.99), (3, 5, 12), (2, 3, 4, 8)):
            f_max = feasible_f_range(p_n, n, m)
            q = p_fallthrough_naive(f_max, m, n)
            assert p_b1_prefix_walk(q, 2, n) >= p_n - 1e-6

    def test_loose_target_is_vacuous(self):
        assert feasible_f_range(0.01, 12, 2) == pytest.approx(1.0, abs=1e-6)

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            feasible_f_range(1.0, 5, 2)
        with pytest.raises(ConfigError):
            feasible_f_range(0.9, 1, 2)
        with pytest.raises(ConfigError):
            walk_margin_g(0.0, 5, 2)
