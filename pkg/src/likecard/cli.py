"""Command-line interface: build, estimate, eval, gen.

build trains a model file from a newline-delimited dataset; estimate
answers a single LIKE pattern against a model; eval scores a model on a
tab-separated workload of queries with known cardinalities; gen creates
such a workload, mixing catalog patterns with verified-empty probes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

from .core import DEFAULT_MAX_LEN, Config, PatternKind, Query
from .errors import LikecardError
from .estimator import EstimatorModel, estimate, estimate_many, load_model, build, serialize_model
from .groundtruth import (
    Workload,
    gen_workload,
    read_dataset,
    read_workload,
    unescape_bytes,
    write_workload,
)

EMPTY_CUTOFF = 2.0


def parse_pattern_text(text: str) -> Query:
    """A query from predicate text: S% prefix, %S suffix, %S% substring.

    The body may use \\xNN escapes for non-printable bytes.  Wildcards
    are only recognized at the ends; interior ones are rejected.
    """
    if len(text) >= 2 and text.startswith("%") and text.endswith("%"):
        kind, inner = PatternKind.SUBSTRING, text[1:-1]
    elif text.endswith("%"):
        kind, inner = PatternKind.PREFIX, text[:-1]
    elif text.startswith("%"):
        kind, inner = PatternKind.SUFFIX, text[1:]
    else:
        raise LikecardError(
            "pattern must carry a leading and/or trailing % wildcard"
        )
    if "%" in inner:
        raise LikecardError("only leading/trailing % wildcards are supported")
    if not inner:
        raise LikecardError("pattern body is empty")
    return Query.from_raw(kind, unescape_bytes(inner))


@dataclass
class EvalReport:
    """Workload scoring results; Q-error fields cover non-empty queries only."""

    n_queries: int
    n_positive: int
    n_empty: int
    mean_q_error: float | None
    quantiles: dict[str, float] | None
    by_cardinality: list[dict]
    by_length: list[dict]
    empty_identified_rate: float | None
    model_size_bytes: int
    mean_latency_ms: float
    build_seconds: float | None = None

    def to_dict(self) -> dict:
        return {
            "queries": self.n_queries,
            "positives": self.n_positive,
            "empties": self.n_empty,
            "q_error": None if self.mean_q_error is None else
                {"mean": self.mean_q_error, **self.quantiles},
            "by_cardinality": self.by_cardinality,
            "by_length": self.by_length,
            "empty_identified_rate": self.empty_identified_rate,
            "model_size_bytes": self.model_size_bytes,
            "mean_latency_ms": self.mean_latency_ms,
            "build_seconds": self.build_seconds,
        }


def _nearest_rank(sorted_values: list[float], pct: float) -> float:
    idx = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[idx - 1]


def evaluate(model: EstimatorModel, workload: Workload,
             model_size_bytes: int) -> EvalReport:
    """Score ``model`` on ``workload``; Q-error over positives, detection
    rate over empties, plus single-call latency."""
    for query, _ in workload.entries:
        if query.kind is not model.kind:
            raise LikecardError(
                f"workload contains {query.kind.value} queries but the model "
                f"was built for {model.kind.value}"
            )
    queries = [q for q, _ in workload.entries]
    estimates = estimate_many(model, queries)

    q_errors: list[float] = []
    per_bucket: dict[int, list[float]] = {}
    per_length: dict[int, list[float]] = {}
    n_empty = identified = 0
    scheme = model.scheme
    for (query, card), est in zip(workload.entries, estimates):
        if card == 0:
            n_empty += 1
            if est < EMPTY_CUTOFF:
                identified += 1
            continue
        q = max(est / card, card / est)
        q_errors.append(q)
        bucket_id = scheme.bucket_of(min(card, scheme.max_card)).bucket_id
        per_bucket.setdefault(bucket_id, []).append(q)
        per_length.setdefault(len(query.body), []).append(q)

    if q_errors:
        ordered = sorted(q_errors)
        mean_q = sum(ordered) / len(ordered)
        quantiles = {f"p{p}": _nearest_rank(ordered, p) for p in (50, 90, 99)}
        quantiles["max"] = ordered[-1]
    else:
        mean_q, quantiles = None, None

    by_card = []
    for bucket_id in sorted(per_bucket):
        b = scheme.buckets[bucket_id - 1]
        qs = per_bucket[bucket_id]
        hi = f"{b.c_u}+" if bucket_id == scheme.n else f"{b.c_u}"
        by_card.append({"range": f"[{b.c_l},{hi}]", "count": len(qs),
                        "mean_q_error": sum(qs) / len(qs)})
    by_length = []
    for length in sorted(per_length):
        qs = per_length[length]
        by_length.append({"length": length, "count": len(qs),
                          "mean_q_error": sum(qs) / len(qs)})

    sample = queries[:2000]
    t0 = time.perf_counter()
    for q in sample:
        estimate(model, q)
    elapsed = time.perf_counter() - t0
    mean_latency_ms = elapsed / len(sample) * 1000.0 if sample else 0.0

    return EvalReport(
        n_queries=len(workload.entries),
        n_positive=len(q_errors),
        n_empty=n_empty,
        mean_q_error=mean_q,
        quantiles=quantiles,
        by_cardinality=by_card,
        by_length=by_length,
        empty_identified_rate=identified / n_empty if n_empty else None,
        model_size_bytes=model_size_bytes,
        mean_latency_ms=mean_latency_ms,
    )


def _fmt(value: float | None, spec: str = ".4f") -> str:
    return "n/a" if value is None else format(value, spec)


def _print_report(report: EvalReport) -> None:
    print(f"queries:            {report.n_queries} "
          f"({report.n_positive} non-empty, {report.n_empty} empty)")
    print(f"mean q-error:       {_fmt(report.mean_q_error)}")
    if report.quantiles:
        qs = report.quantiles
        print(f"q-error quantiles:  p50={qs['p50']:.4f} p90={qs['p90']:.4f} "
              f"p99={qs['p99']:.4f} max={qs['max']:.4f}")
    if report.by_cardinality:
        print("by true cardinality:")
        for row in report.by_cardinality:
            print(f"  {row['range']:>16} n={row['count']:<7} "
                  f"mean q-error {row['mean_q_error']:.4f}")
    if report.by_length:
        print("by body length:")
        for row in report.by_length:
            print(f"  {row['length']:>16} n={row['count']:<7} "
                  f"mean q-error {row['mean_q_error']:.4f}")
    rate = report.empty_identified_rate
    print(f"empties identified: {_fmt(rate)}"
          + (f" (estimate < {EMPTY_CUTOFF:g})" if rate is not None else ""))
    print(f"model size:         {report.model_size_bytes} bytes")
    print(f"mean latency:       {report.mean_latency_ms:.4f} ms")
    print(f"build time:         "
          + ("n/a" if report.build_seconds is None
             else f"{report.build_seconds:.2f} s"))


def _cmd_build(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    kind = PatternKind.parse(args.pattern)
    config = Config(eb=args.eb, max_len=args.max_len, p_n=args.pn,
                    tree_threshold=args.tree_threshold)
    t0 = time.perf_counter()
    model = build(dataset, kind, config, args.seed,
                  use_frontier=not args.no_frontier,
                  long_queries=args.long_queries)
    elapsed = time.perf_counter() - t0
    data = serialize_model(model)
    with open(args.output, "wb") as fh:
        fh.write(data)
    plan = model.plan
    print(f"built {kind.value} model over {model.dataset_size} strings: "
          f"{model.scheme.n} buckets, probe threshold {model.tau}")
    if plan is not None and args.explain:
        for bucket_id in sorted(plan.choices):
            c = plan.choices[bucket_id]
            b = model.scheme.buckets[bucket_id - 1]
            print(f"  bucket {bucket_id:>2} [{b.c_l},{b.c_u}]: "
                  f"m={c.m} f={c.f:.6g} predicted {c.predicted_bits / 8:.0f} bytes")
        if plan.trie is not None:
            print(f"  tree index: {plan.trie.node_count} nodes, "
                  f"{plan.trie_bits // 8} bytes")
    if plan is not None:
        print(f"predicted size {plan.total_bits / 8:.0f} bytes, "
              f"actual {len(data)} bytes")
    print(f"build time {elapsed:.2f} s -> {args.output}")
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    query = parse_pattern_text(args.query)
    value = estimate(model, query)
    if args.round:
        # round half up so x.5 never rounds down
        print(int(value + 0.5))
    else:
        print(f"{value:.2f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    workload = read_workload(args.workload)
    if not workload.entries:
        raise LikecardError("workload is empty")
    report = evaluate(model, workload, os.path.getsize(args.model))
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        _print_report(report)
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    dataset = read_dataset(args.data)
    kind = PatternKind.parse(args.pattern)
    workload = gen_workload(dataset, kind, args.max_len, args.pos, args.neg,
                            max_extra=args.max_extra, seed=args.seed)
    write_workload(args.output, workload)
    print(f"wrote {len(workload.entries)} queries "
          f"({args.pos} positive, {args.neg} empty) -> {args.output}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="likecard",
        description="Cardinality estimation for LIKE predicates with a "
                    "guaranteed worst-case q-error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="train a model from a dataset file")
    p.add_argument("--data", required=True, help="newline-delimited dataset")
    p.add_argument("--pattern", required=True,
                   choices=["prefix", "suffix", "substring"])
    p.add_argument("--eb", type=float, required=True,
                   help="worst-case q-error bound, > 1")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN,
                   help="longest body indexed exactly (default %(default)s)")
    p.add_argument("--pn", type=float, default=None,
                   help="empty-answer bucket-1 routing probability target")
    p.add_argument("--tree-threshold", type=int, default=None,
                   help="fixed bucket id above which keys go to the tree index")
    p.add_argument("--no-frontier", action="store_true",
                   help="train against all bucket 1 keys instead of the frontier")
    p.add_argument("--long-queries", action="store_true",
                   help="also build the companion model for bodies over --max-len")
    p.add_argument("--explain", action="store_true",
                   help="print the per-bucket parameter choices")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("estimate", help="estimate one LIKE pattern")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("query", metavar="QUERY",
                   help="pattern text such as 'abc%%', '%%abc' or '%%abc%%'")
    p.add_argument("--round", action="store_true",
                   help="print a rounded integer instead of two decimals")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("eval", help="score a model against a workload file")
    p.add_argument("-m", "--model", required=True)
    p.add_argument("-w", "--workload", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen", help="generate a workload with exact counts")
    p.add_argument("--data", required=True)
    p.add_argument("--pattern", required=True,
                   choices=["prefix", "suffix", "substring"])
    p.add_argument("--pos", type=int, required=True,
                   help="number of non-empty queries drawn from the catalog")
    p.add_argument("--neg", type=int, required=True,
                   help="number of verified empty-answer queries")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--max-extra", type=int, default=3,
                   help="longest random extension for empty queries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LikecardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
