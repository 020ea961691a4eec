"""Model construction, query estimation, and the model file format.

A model holds one layered filter stack per bucket from 2 up to the
probe threshold tau, an optional compact trie for everything above tau,
and the bucket scheme they classify into.  Estimation classifies the
canonical body with an ascending probe, hardened by a prefix walk: the
body's shortened prefixes are classified too, and any bucket 1 hit or
any covering violation (a shorter prefix claiming a lower bucket than a
longer one) routes the query to bucket 1.  On build data the walk is
exact; on unseen empty-answer queries it boosts the bucket 1 routing
probability as modeled in probmodel.

Bodies longer than the indexed length are estimated by a chain of
conditional window frequencies over a substring model: the host model
prices the leading window, and each extra position multiplies in the
ratio of two window estimates, clamped to (0, 1]; the result never
drops below the bucket 1 estimate.  Substring models chain over
themselves; prefix and suffix models need a companion substring model
built alongside (over byte-reversed strings for suffix kind).

Models serialize to a little-endian binary format with a trailing
64-bit blake2b checksum; loading a model reproduces its estimates
bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from hashlib import blake2b
from typing import Iterable, Sequence

from .bloom import BloomFilter, derive_seed
from .core import BucketScheme, Config, PatternKind, Query, make_buckets, scheme_with_count
from .errors import (
    BadMagicError,
    ChecksumError,
    ConfigError,
    DatasetError,
    LongQueryError,
    ModelFormatError,
    TruncatedModelError,
    UnsupportedVersionError,
)
from .groundtruth import PatternCatalog, enumerate_patterns
from .layered import LayeredFilter, LookupTable, build_layered, classify, collect_negatives, frontier
from .paramsel import Plan, select_plan
from .treeindex import CompactTrie

_MAGIC = b"LRNT"
_VERSION = 1
_KIND_CODE = {PatternKind.PREFIX: 0, PatternKind.SUFFIX: 1, PatternKind.SUBSTRING: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}
# placeholder rate recorded for buckets that have no keys at build time
_DEGENERATE_F = 0.5
_COMPANION_TAG = 0x636F6D70  # "comp"


@dataclass
class EstimatorModel:
    """A built estimator: filter stacks, optional trie, optional companion."""

    kind: PatternKind
    config: Config
    scheme: BucketScheme
    dataset_size: int
    master_seed: int
    tau: int
    filters: tuple[LayeredFilter, ...]
    trie: CompactTrie | None
    companion: "EstimatorModel | None" = None
    plan: Plan | None = None

    @property
    def b1_estimate(self) -> float:
        return self.scheme.buckets[0].est

    def estimate(self, query: Query) -> float:
        return estimate(self, query)

    def save(self, path: str) -> None:
        save_model(self, path)


def bucketize(catalog: PatternCatalog, scheme: BucketScheme) -> dict[int, set[bytes]]:
    """Group catalog bodies by the bucket their cardinality falls into."""
    keys_by_bucket: dict[int, set[bytes]] = {}
    for body, card in catalog.entries.items():
        bucket_id = scheme.bucket_of(card).bucket_id
        keys_by_bucket.setdefault(bucket_id, set()).add(body)
    return keys_by_bucket


def build(dataset: Sequence[bytes], kind: PatternKind, config: Config,
          seed: int, *, use_frontier: bool = True,
          long_queries: bool = False) -> EstimatorModel:
    """Build an estimator for ``kind`` queries over ``dataset``.

    ``use_frontier`` shrinks every stack's foreign set to the bucket 1
    frontier; classification of catalog patterns is unchanged.
    ``long_queries`` also builds the companion substring model that
    prefix and suffix models need for bodies longer than max_len.
    """
    catalog = enumerate_patterns(dataset, kind, config.max_len)
    if not catalog.entries:
        raise DatasetError("dataset yields no patterns; all strings are empty")
    scheme = make_buckets(config.eb, catalog.max_card)
    keys_by_bucket = bucketize(catalog, scheme)
    plan = select_plan(keys_by_bucket, scheme, config, use_frontier)
    b1_frontier = frontier(keys_by_bucket.get(1, set())) if use_frontier else None

    filters = []
    for i in range(2, plan.tau + 1):
        choice = plan.choices.get(i)
        bucket_seed = derive_seed(seed, i)
        if choice is None:
            filters.append(build_layered(i, set(), set(), 2, _DEGENERATE_F, bucket_seed))
            continue
        negatives = collect_negatives(keys_by_bucket, i, use_frontier,
                                      b1_frontier)
        filters.append(build_layered(i, keys_by_bucket[i], negatives,
                                     choice.m, choice.f, bucket_seed))

    companion = None
    if long_queries and kind is not PatternKind.SUBSTRING:
        comp_data = dataset if kind is PatternKind.PREFIX else [s[::-1] for s in dataset]
        comp_config = replace(config, p_n=None, tree_threshold=None)
        companion = build(comp_data, PatternKind.SUBSTRING, comp_config,
                          derive_seed(seed, _COMPANION_TAG),
                          use_frontier=use_frontier)

    return EstimatorModel(kind, config, scheme, catalog.dataset_size, seed,
                          plan.tau, tuple(filters), plan.trie, companion, plan)


# ---------------------------------------------------------------------------
# classification and estimation

def classify_query(model: EstimatorModel, body: bytes,
                   cache: dict[bytes, int] | None = None) -> int:
    """Ascending-probe bucket id for one canonical body, no prefix walk."""
    if cache is not None:
        found = cache.get(body)
        if found is None:
            found = classify(model.filters, model.trie, body)
            cache[body] = found
        return found
    return classify(model.filters, model.trie, body)


def classify_with_prefix_walk(model: EstimatorModel, body: bytes,
                              cache: dict[bytes, int] | None = None) -> int:
    """Bucket id after validating the body's prefix chain.

    Walks the shortened prefixes from the full body down to one byte.
    A bucket 1 hit anywhere, or a shorter prefix classifying below a
    longer one, routes to bucket 1; otherwise the full body's id stands.
    """
    first = classify_query(model, body, cache)
    if first == 1:
        return 1
    prev = first
    for k in range(1, len(body)):
        b = classify_query(model, body[:len(body) - k], cache)
        if b == 1 or b < prev:
            return 1
        prev = b
    return first


def _bucket_estimate(model: EstimatorModel, body: bytes,
                     cache: dict[bytes, int] | None = None) -> float:
    bucket_id = classify_with_prefix_walk(model, body, cache)
    return model.scheme.buckets[bucket_id - 1].est


def compose_markov(dataset_size: int, first_estimate: float,
                   ratio_pairs: Iterable[tuple[float, float]]) -> float:
    """Chain a leading-window estimate with conditional ratio factors.

    Each (numerator, denominator) pair contributes the ratio of two
    window estimates, clamped to (0, 1] so no factor can inflate the
    running frequency.
    """
    prob = first_estimate / dataset_size
    for num, den in ratio_pairs:
        ratio = num / den
        if ratio > 1.0:
            ratio = 1.0
        prob *= ratio
    return dataset_size * prob


def markov_product(model: EstimatorModel, body: bytes,
                   cache: dict[bytes, int] | None = None,
                   window_cache: dict[bytes, int] | None = None) -> float:
    """The raw chained estimate for a body longer than max_len."""
    length = model.config.max_len
    if len(body) <= length:
        raise ConfigError("chained estimation is for bodies longer than max_len")
    if length < 2:
        raise LongQueryError("chained estimation requires max_len >= 2")
    if model.kind is PatternKind.SUBSTRING:
        window_model = model
        window_cache = cache
    else:
        window_model = model.companion
        if window_model is None:
            raise LongQueryError(
                "query is longer than the indexed length and this model has "
                "no companion substring model; rebuild with long-query support"
            )
    first = _bucket_estimate(model, body[:length], cache)
    pairs = []
    for i in range(length, len(body)):
        window = body[i - length + 1:i + 1]
        context = body[i - length + 1:i]
        pairs.append((_bucket_estimate(window_model, window, window_cache),
                      _bucket_estimate(window_model, context, window_cache)))
    return compose_markov(model.dataset_size, first, pairs)


def markov_estimate(model: EstimatorModel, body: bytes,
                    cache: dict[bytes, int] | None = None,
                    window_cache: dict[bytes, int] | None = None) -> float:
    """The chained estimate, floored at the bucket 1 estimate."""
    raw = markov_product(model, body, cache, window_cache)
    return max(raw, model.b1_estimate)


def estimate(model: EstimatorModel, query: Query,
             cache: dict[bytes, int] | None = None,
             window_cache: dict[bytes, int] | None = None) -> float:
    """The cardinality estimate for one query against this model."""
    if query.kind is not model.kind:
        raise ConfigError(
            f"query kind {query.kind.value} does not match model kind "
            f"{model.kind.value}"
        )
    if len(query.body) > model.config.max_len:
        return markov_estimate(model, query.body, cache, window_cache)
    return _bucket_estimate(model, query.body, cache)


def estimate_many(model: EstimatorModel, queries: Iterable[Query]) -> list[float]:
    """Estimates for a batch, sharing classification work across queries."""
    cache: dict[bytes, int] = {}
    window_cache: dict[bytes, int] = {}
    return [estimate(model, q, cache, window_cache) for q in queries]


# ---------------------------------------------------------------------------
# model files

class _Reader:
    __slots__ = ("buf", "offset")

    def __init__(self, buf: bytes, offset: int = 0):
        self.buf = buf
        self.offset = offset

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.buf):
            raise TruncatedModelError("model file ends inside a structure")
        values = struct.unpack_from(fmt, self.buf, self.offset)
        self.offset += size
        return values

    def take_bytes(self, size: int) -> bytes:
        if self.offset + size > len(self.buf):
            raise TruncatedModelError("model file ends inside a structure")
        out = self.buf[self.offset:self.offset + size]
        self.offset += size
        return out


def serialize_model(model: EstimatorModel) -> bytes:
    cfg = model.config
    parts = [
        _MAGIC,
        struct.pack("<HB", _VERSION, _KIND_CODE[model.kind]),
        struct.pack("<dH", cfg.eb, cfg.max_len),
        struct.pack("<Bd", 0 if cfg.p_n is None else 1,
                    0.0 if cfg.p_n is None else cfg.p_n),
        struct.pack("<QQ", model.dataset_size, model.master_seed),
        struct.pack("<HH", model.scheme.n, model.tau),
    ]
    for lf in model.filters:
        parts.append(struct.pack("<Bd", lf.m, lf.target_f))
        for layer in lf.layers:
            parts.append(layer.serialize())
        parts.append(lf.table.serialize())
    if model.trie is not None:
        parts.append(b"\x01")
        parts.append(model.trie.serialize())
    else:
        parts.append(b"\x00")
    if model.companion is not None:
        sub = serialize_model(model.companion)
        parts.append(b"\x01")
        parts.append(struct.pack("<Q", len(sub)))
        parts.append(sub)
    else:
        parts.append(b"\x00")
    payload = b"".join(parts)
    digest = blake2b(payload, digest_size=8).digest()
    return payload + digest


def deserialize_model(data: bytes) -> EstimatorModel:
    if len(data) < 4 or data[:4] != _MAGIC:
        raise BadMagicError("not a model file")
    reader = _Reader(data, 4)
    (version, kind_code) = reader.take("<HB")
    if version != _VERSION:
        raise UnsupportedVersionError(f"unsupported model version {version}")
    if kind_code not in _CODE_KIND:
        raise ModelFormatError(f"unknown pattern kind code {kind_code}")
    kind = _CODE_KIND[kind_code]
    eb, max_len = reader.take("<dH")
    pn_flag, p_n = reader.take("<Bd")
    dataset_size, master_seed = reader.take("<QQ")
    n_buckets, tau = reader.take("<HH")
    if tau < 1 or tau > n_buckets or (n_buckets > 1 and tau < 2):
        raise ModelFormatError(f"invalid probe threshold {tau} for {n_buckets} buckets")
    try:
        config = Config(eb, max_len, p_n if pn_flag else None)
        scheme = scheme_with_count(eb, n_buckets)
    except ConfigError as exc:
        raise ModelFormatError(f"invalid model parameters: {exc}") from None

    filters = []
    for i in range(2, tau + 1):
        m, target_f = reader.take("<Bd")
        if m < 2:
            raise ModelFormatError(f"bucket {i}: invalid layer count {m}")
        layers = []
        for _ in range(m - 1):
            bf, reader.offset = BloomFilter.deserialize(reader.buf, reader.offset)
            layers.append(bf)
        table, reader.offset = LookupTable.deserialize(reader.buf, reader.offset,
                                                       holds_positives=m % 2 == 1)
        filters.append(LayeredFilter(i, m, target_f, tuple(layers), table))

    (trie_flag,) = reader.take("<B")
    trie = None
    if trie_flag == 1:
        trie, reader.offset = CompactTrie.deserialize(reader.buf, reader.offset, tau)
    elif trie_flag != 0:
        raise ModelFormatError(f"bad trie flag {trie_flag}")

    (comp_flag,) = reader.take("<B")
    companion = None
    if comp_flag == 1:
        (sub_len,) = reader.take("<Q")
        companion = deserialize_model(reader.take_bytes(sub_len))
    elif comp_flag != 0:
        raise ModelFormatError(f"bad companion flag {comp_flag}")

    if len(data) - reader.offset < 8:
        raise TruncatedModelError("model file ends before its checksum")
    if len(data) - reader.offset > 8:
        raise ModelFormatError("trailing data after model payload")
    digest = blake2b(data[:-8], digest_size=8).digest()
    if digest != data[-8:]:
        raise ChecksumError("model file checksum mismatch")

    return EstimatorModel(kind, config, scheme, dataset_size, master_seed,
                          tau, tuple(filters), trie, companion)


def save_model(model: EstimatorModel, path: str) -> None:
    data = serialize_model(model)
    with open(path, "wb") as fh:
        fh.write(data)


def load_model(path: str) -> EstimatorModel:
    with open(path, "rb") as fh:
        data = fh.read()
    return deserialize_model(data)
