"""Storage cost model and deterministic parameter selection.

For a stack with layer count m over N_p own keys and N_n foreign keys,
the expected serialized size in bits follows from the survivor
populations shrinking by f per layer (ideal-filter model, 1/ln(2)**2
bits per key per layer, 8 * key_len bits per exact table entry).
optimize_bucket minimizes that cost over f for each candidate m with a
deterministic global 1-D search (DIRECT) plus a bounded local polish,
then keeps the cheapest (m, f).

select_plan optimizes every materialized bucket, then chooses the probe
threshold tau by pricing, for each candidate, the filter stacks up to
tau against an actually-built trie over everything above tau.  When an
empty-answer routing target p_n is set, each (tau, m) caps f at the
feasible range from probmodel, with tau acting as the effective bucket
count seen by a probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import direct, minimize_scalar

from .core import BucketScheme, Config
from .errors import ConfigError, InfeasibleError, TrieSizeError
from .layered import frontier
from .probmodel import feasible_f_range
from .treeindex import CompactTrie, trie_build

F_FLOOR = 1e-6
F_CEIL = 0.5
M_CANDIDATES = tuple(range(2, 9))
_DIRECT_BUDGET = 200

_BITS_PER_KEY = 1.0 / (math.log(2.0) ** 2)


@dataclass(frozen=True)
class BucketStats:
    """Planning inputs for one bucket's stack."""

    bucket_id: int
    n_pos: int
    n_neg: int
    key_len: int

    def __post_init__(self) -> None:
        if self.n_pos < 1:
            raise ConfigError("a materialized bucket needs at least one key")
        if self.n_neg < 0 or self.key_len < 1:
            raise ConfigError("bad bucket statistics")


@dataclass(frozen=True)
class PlanChoice:
    """Chosen layer count and rate for one bucket, with its predicted bits."""

    bucket_id: int
    m: int
    f: float
    predicted_bits: float


@dataclass(frozen=True)
class Plan:
    """A full model layout: per-bucket choices, threshold, and trie."""

    tau: int
    choices: dict[int, PlanChoice]
    trie: CompactTrie | None
    trie_bits: int
    total_bits: float


def storage_cost(k: int, f: float, n_pos: int, n_neg: int, key_len: int,
                 odd: bool) -> float:
    """Expected serialized bits of a stack with m = 2k+1 (odd) or 2k layers."""
    if k < 1:
        raise ConfigError(f"layer pair count must be >= 1, got {k}")
    if not (0.0 < f < 1.0):
        raise ConfigError(f"false-positive rate must lie in (0, 1), got {f!r}")
    bloom_unit = -math.log(f) * _BITS_PER_KEY
    fk = f ** k
    if odd:
        filters = bloom_unit * (n_pos + n_neg * f) * (1.0 - fk) / (1.0 - f)
        table = 8.0 * key_len * n_pos * fk
    else:
        filters = bloom_unit * (n_pos * (1.0 - fk)
                                + n_neg * f * (1.0 - f ** (k - 1))) / (1.0 - f)
        table = 8.0 * key_len * n_neg * fk
    return filters + table


def cost_for_m(m: int, f: float, n_pos: int, n_neg: int, key_len: int) -> float:
    """storage_cost with the layer count given directly."""
    if m % 2 == 1:
        return storage_cost((m - 1) // 2, f, n_pos, n_neg, key_len, True)
    return storage_cost(m // 2, f, n_pos, n_neg, key_len, False)


def _minimize_f(m: int, stats: BucketStats, f_lo: float, f_hi: float) -> tuple[float, float]:
    """(f, cost) minimizing the cost model over [f_lo, f_hi], deterministically."""
    n_pos, n_neg, key_len = stats.n_pos, stats.n_neg, stats.key_len

    def cost_log(x) -> float:
        return cost_for_m(m, 10.0 ** float(x[0]), n_pos, n_neg, key_len)

    lo, hi = math.log10(f_lo), math.log10(f_hi)
    if hi <= lo:
        f = f_hi
        return f, cost_for_m(m, f, n_pos, n_neg, key_len)
    res = direct(cost_log, [(lo, hi)], maxfun=_DIRECT_BUDGET, len_tol=1e-10)
    best_x = float(res.x[0])
    # bounded polish around the global search result
    span = (hi - lo) * 0.05
    p_lo, p_hi = max(lo, best_x - span), min(hi, best_x + span)
    polished = minimize_scalar(lambda x: cost_log([x]), bounds=(p_lo, p_hi),
                               method="bounded", options={"xatol": 1e-12})
    candidates = [(cost_for_m(m, 10.0 ** x, n_pos, n_neg, key_len), 10.0 ** x)
                  for x in (best_x, float(polished.x))]
    # interval ends are legal choices too; DIRECT never samples them exactly
    candidates.append((cost_for_m(m, f_lo, n_pos, n_neg, key_len), f_lo))
    candidates.append((cost_for_m(m, f_hi, n_pos, n_neg, key_len), f_hi))
    cost, f = min(candidates)
    return f, cost


def optimize_bucket(stats: BucketStats, f_caps: dict[int, float] | None = None,
                    f_lo: float = F_FLOOR, f_hi: float = F_CEIL) -> PlanChoice:
    """Cheapest (m, f) for one bucket; ties prefer fewer layers, then smaller f.

    ``f_caps`` optionally lowers the upper rate bound per layer count,
    as produced by the feasibility analysis.  Layer counts whose cap
    falls below the search floor are skipped; if all do, the bucket is
    infeasible.
    """
    best: tuple[float, int, float] | None = None
    for m in M_CANDIDATES:
        hi = f_hi
        if f_caps is not None:
            hi = min(hi, f_caps.get(m, f_hi))
        if hi < f_lo:
            continue
        f, cost = _minimize_f(m, stats, f_lo, hi)
        if best is None or (cost, m, f) < best:
            best = (cost, m, f)
    if best is None:
        raise InfeasibleError(
            f"bucket {stats.bucket_id}: no layer count admits a rate above "
            f"the search floor {F_FLOOR}"
        )
    cost, m, f = best
    return PlanChoice(stats.bucket_id, m, f, cost)


def _feasibility_caps(p_n: float | None, n_eff: int) -> dict[int, float] | None:
    if p_n is None:
        return None
    caps: dict[int, float] = {}
    for m in M_CANDIDATES:
        try:
            caps[m] = feasible_f_range(p_n, n_eff, m)
        except InfeasibleError:
            caps[m] = 0.0
    return caps


def select_plan(keys_by_bucket: dict[int, set[bytes]], scheme: BucketScheme,
                config: Config, use_frontier: bool = True) -> Plan:
    """Choose tau and per-bucket parameters minimizing total predicted bits.

    Candidate thresholds run from the full bucket count down to the
    lowest the trie id field can serve; each candidate prices its trie
    by building it.  A fixed config.tree_threshold restricts the search
    to that single value and surfaces its errors instead of skipping.
    """
    n = scheme.n
    if n == 1:
        return Plan(1, {}, None, 0, 0.0)
    b1 = keys_by_bucket.get(1, set())
    b1_neg = len(frontier(b1)) if use_frontier else len(b1)
    sizes = {i: len(keys_by_bucket.get(i, set())) for i in range(1, n + 1)}
    above = {n: 0}
    for i in range(n - 1, 0, -1):
        above[i] = above[i + 1] + sizes[i + 1]

    def bucket_stats(i: int) -> BucketStats | None:
        if sizes[i] == 0:
            return None
        return BucketStats(i, sizes[i], b1_neg + above[i], config.max_len)

    fixed = config.tree_threshold
    if fixed is not None:
        candidates = [min(fixed, n)]
    else:
        candidates = list(range(n, max(2, n - 15) - 1, -1))

    tau_free_choices: dict[int, PlanChoice] = {}
    if config.p_n is None:
        for i in range(2, n + 1):
            stats = bucket_stats(i)
            if stats is not None:
                tau_free_choices[i] = optimize_bucket(stats)

    best_plan: Plan | None = None
    infeasible: list[str] = []
    for tau in candidates:
        tree_entries: dict[bytes, int] = {}
        for i in range(tau + 1, n + 1):
            for key in keys_by_bucket.get(i, set()):
                tree_entries[key] = i
        if tree_entries:
            try:
                trie = trie_build(tree_entries, tau)
            except TrieSizeError:
                if fixed is not None:
                    raise
                continue
            trie_bits = trie.serialized_size() * 8
        else:
            trie, trie_bits = None, 0

        if config.p_n is None:
            choices = {i: c for i, c in tau_free_choices.items() if i <= tau}
        else:
            caps = _feasibility_caps(config.p_n, tau)
            choices = {}
            try:
                for i in range(2, tau + 1):
                    stats = bucket_stats(i)
                    if stats is not None:
                        choices[i] = optimize_bucket(stats, f_caps=caps)
            except InfeasibleError as exc:
                if fixed is not None:
                    raise
                infeasible.append(f"tau={tau}: {exc}")
                continue
        total = sum(c.predicted_bits for c in choices.values()) + trie_bits
        if best_plan is None or total < best_plan.total_bits:
            best_plan = Plan(tau, choices, trie, trie_bits, total)

    if best_plan is None:
        raise InfeasibleError(
            "no probe threshold satisfies the empty-answer target: "
            + "; ".join(infeasible)
        )
    return best_plan
