"""Closed-form probabilities for empty-answer query routing.

All formulas treat every Bloom layer as an ideal filter with exact
false-positive rate f and independent answers.  Under that model:

* p_bucket(f, m): chance one m-layer stack accepts a key it never saw.
* p_fallthrough_naive(f, m, n): chance a foreign key clears all n - 1
  stacks and lands in bucket 1 without any prefix walking.
* p_b1_prefix_walk(q, t, n): chance the walk over t shortened prefixes
  routes an empty-answer query to bucket 1, given per-probe
  fall-through q.  The walk fails only when every prefix classification
  misses bucket 1 and the resulting ids happen to be nondecreasing,
  which for uniform ids gives the counting factor C(n+t-2, t)/(n-1)**t.

feasible_f_range inverts the chain at the adversarial depth t = 2 to
produce the largest per-layer rate f that still meets a requested
routing probability p_n.
"""

from __future__ import annotations

from math import comb, isfinite

from .errors import ConfigError, InfeasibleError

_EPS = 1e-9


def _check_f(f: float) -> None:
    if not (0.0 < f < 1.0) or not isfinite(f):
        raise ConfigError(f"false-positive rate must lie in (0, 1), got {f!r}")


def _check_m(m: int) -> None:
    if not isinstance(m, int) or m < 2:
        raise ConfigError(f"layer count must be an int >= 2, got {m!r}")


def p_bucket(f: float, m: int) -> float:
    """Acceptance probability of an m-layer stack for an unseen key."""
    _check_f(f)
    _check_m(m)
    if m % 2 == 1:
        return (f - f ** m) / (1.0 + f)
    return (f + f ** m) / (1.0 + f)


def p_fallthrough_naive(f: float, m: int, n: int) -> float:
    """Probability an unseen key is rejected by all n - 1 stacks."""
    if n < 2:
        raise ConfigError(f"bucket count must be >= 2, got {n}")
    return (1.0 - p_bucket(f, m)) ** (n - 1)


def nondecreasing_count(n: int, t: int) -> int:
    """Number of nondecreasing length-t id sequences over buckets 2..n."""
    if n < 2 or t < 1:
        raise ConfigError("need n >= 2 buckets and t >= 1 steps")
    return comb(n + t - 2, t)


def p_b1_prefix_walk(q: float, t: int, n: int) -> float:
    """Probability the t-step prefix walk routes an empty query to bucket 1.

    ``q`` is the single-probe fall-through probability, ``t`` the number
    of shortened prefixes inspected, ``n`` the bucket count.
    """
    if not (0.0 <= q <= 1.0):
        raise ConfigError(f"fall-through probability must lie in [0, 1], got {q!r}")
    if n < 2 or t < 1:
        raise ConfigError("need n >= 2 buckets and t >= 1 steps")
    miss = (1.0 - q) ** t * nondecreasing_count(n, t) / (n - 1) ** t
    return 1.0 - miss


def walk_margin_g(p_n: float, n: int, t: int) -> float:
    """The per-step slack ((1-p_n)/C(n+t-2,t))**(1/t); minimal at t = 2."""
    if not (0.0 < p_n < 1.0):
        raise ConfigError(f"target probability must lie in (0, 1), got {p_n!r}")
    return ((1.0 - p_n) / nondecreasing_count(n, t)) ** (1.0 / t)


def feasible_f_range(p_n: float, n: int, m: int) -> float:
    """Largest per-layer rate f meeting the routing target p_n at depth t=2.

    Returns the greatest f such that p_bucket(g, m) stays within the
    derived per-stack budget for every g <= f; 1 - 1e-9 when the target
    is met for any rate.  Raises InfeasibleError when the budget itself
    is non-positive.
    """
    if not (0.0 < p_n < 1.0):
        raise ConfigError(f"target probability must lie in (0, 1), got {p_n!r}")
    if n < 2:
        raise ConfigError(f"bucket count must be >= 2, got {n}")
    _check_m(m)
    g2 = walk_margin_g(p_n, n, 2)
    c = 1.0 - (n - 1) * g2
    if c <= 0.0:
        return 1.0 - _EPS
    budget = 1.0 - c ** (1.0 / (n - 1))
    if budget <= 0.0:
        raise InfeasibleError(
            f"routing target p_n={p_n} with n={n} buckets leaves no "
            "false-positive budget"
        )
    # first crossing of p_bucket over the budget, swept from below; for
    # even m p_bucket is increasing so this is the unique crossing
    hi = 1.0 - _EPS
    bracket = _first_crossing_scan(budget, m, hi)
    if bracket is None:
        return hi
    lo_f, hi_f = bracket
    while hi_f - lo_f > _EPS:
        mid = (lo_f + hi_f) / 2.0
        if p_bucket(mid, m) <= budget:
            lo_f = mid
        else:
            hi_f = mid
    return lo_f


def _first_crossing_scan(budget: float, m: int, hi: float,
                         steps: int = 2048) -> tuple[float, float] | None:
    """Bracket the first f where p_bucket exceeds the budget, or None."""
    # log-spaced sweep: crossings sit many decades below 1 for small budgets
    lo_exp, hi_exp = -12.0, 0.0
    prev = 10.0 ** lo_exp
    for i in range(1, steps + 1):
        f = min(hi, 10.0 ** (lo_exp + (hi_exp - lo_exp) * i / steps))
        if p_bucket(f, m) > budget:
            return prev, f
        prev = f
        if f >= hi:
            break
    return None
