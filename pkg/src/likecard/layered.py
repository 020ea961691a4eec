"""Layered Bloom stacks with an exact final lookup table.

Each materialized bucket gets a stack of m - 1 Bloom filters capped by
an exact table.  Odd layers are built over the keys that must answer
true, even layers over the foreign keys that slipped past the previous
layer, and the final table stores whichever side survived every filter.
The construction guarantees that every key the stack was built for
classifies true and every supplied foreign key classifies false, no
matter how the Bloom layers misfire; only keys outside both sets can be
misrouted, at the rates in probmodel.

Foreign keys for bucket i are the bucket 1 keys (optionally compressed
to their frontier: the keys with no shorter bucket 1 key as a prefix)
plus every key of buckets above i, including tree-resident ones.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .bloom import BloomFilter, derive_seed
from .errors import ConfigError, TruncatedModelError


class LookupTable:
    """An exact membership set; the last layer of every stack."""

    __slots__ = ("keys", "holds_positives")

    def __init__(self, keys: Iterable[bytes], holds_positives: bool):
        self.keys = frozenset(keys)
        self.holds_positives = holds_positives

    def __contains__(self, key: bytes) -> bool:
        return key in self.keys

    def __len__(self) -> int:
        return len(self.keys)

    def serialize(self) -> bytes:
        """u32 entry count, then length-prefixed keys in sorted order."""
        parts = [struct.pack("<I", len(self.keys))]
        for key in sorted(self.keys):
            if len(key) > 0xFFFF:
                raise ConfigError("table key exceeds 65535 bytes")
            parts.append(struct.pack("<H", len(key)))
            parts.append(key)
        return b"".join(parts)

    @classmethod
    def deserialize(cls, buf: bytes, offset: int,
                    holds_positives: bool) -> tuple["LookupTable", int]:
        if offset + 4 > len(buf):
            raise TruncatedModelError("truncated lookup table header")
        (count,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        keys = []
        for _ in range(count):
            if offset + 2 > len(buf):
                raise TruncatedModelError("truncated lookup table entry")
            (klen,) = struct.unpack_from("<H", buf, offset)
            offset += 2
            if offset + klen > len(buf):
                raise TruncatedModelError("truncated lookup table entry")
            keys.append(buf[offset:offset + klen])
            offset += klen
        return cls(keys, holds_positives), offset

    def serialized_size(self) -> int:
        return 4 + sum(2 + len(k) for k in self.keys)


@dataclass
class LayeredFilter:
    """One bucket's classifier: m - 1 Bloom layers plus the exact table."""

    bucket_id: int
    m: int
    target_f: float
    layers: tuple[BloomFilter, ...]
    table: LookupTable

    def serialized_size(self) -> int:
        return (sum(l.serialized_size() for l in self.layers)
                + self.table.serialized_size())


def frontier(keys: Iterable[bytes]) -> set[bytes]:
    """The keys having no other member of ``keys`` as a proper prefix.

    Probing only the frontier is enough to recognize membership of the
    whole set by prefix covering, and it is what the bucket 1 foreign
    set is reduced to when frontier compression is on.
    """
    result: set[bytes] = set()
    last: bytes | None = None
    for key in sorted(keys):
        if last is not None and key.startswith(last):
            continue
        result.add(key)
        last = key
    return result


def collect_negatives(keys_by_bucket: Mapping[int, set[bytes]], bucket_id: int,
                      use_frontier: bool,
                      b1_frontier: set[bytes] | None = None) -> set[bytes]:
    """Foreign keys for ``bucket_id``: bucket 1 (or its frontier) plus all
    keys of buckets above it, tree-resident buckets included."""
    if bucket_id < 2:
        raise ConfigError("bucket 1 has no filter stack")
    base = keys_by_bucket.get(1, set())
    if use_frontier:
        negatives = set(b1_frontier if b1_frontier is not None else frontier(base))
    else:
        negatives = set(base)
    for other_id, keys in keys_by_bucket.items():
        if other_id > bucket_id:
            negatives.update(keys)
    return negatives


def build_layered(bucket_id: int, positives: set[bytes], negatives: set[bytes],
                  m: int, f: float, seed: int) -> LayeredFilter:
    """Alternate Bloom layers over the surviving sides, then freeze the rest.

    ``seed`` is the per-bucket seed; each layer derives its own from it.
    Layers over an empty survivor set become zero-bit filters, which
    keeps the layer count uniform without spending space.
    """
    if not isinstance(m, int) or m < 2:
        raise ConfigError(f"layer count must be an int >= 2, got {m!r}")
    if positives & negatives:
        raise ConfigError("positive and foreign key sets overlap")
    q_pos = positives
    q_neg = negatives
    layers: list[BloomFilter] = []
    for j in range(1, m):
        layer_seed = derive_seed(seed, j)
        members = q_pos if j % 2 == 1 else q_neg
        if members:
            bf = BloomFilter.sized_for(len(members), f, layer_seed)
            for key in members:
                bf.insert(key)
        else:
            bf = BloomFilter.degenerate(layer_seed)
        if j % 2 == 1:
            q_neg = {k for k in q_neg if k in bf}
        else:
            q_pos = {k for k in q_pos if k in bf}
        layers.append(bf)
    holds_positives = m % 2 == 1
    table = LookupTable(q_pos if holds_positives else q_neg, holds_positives)
    return LayeredFilter(bucket_id, m, f, tuple(layers), table)


def classify_one(lf: LayeredFilter, key: bytes) -> bool:
    """Does this stack claim the key?  Odd-layer misses reject, even-layer
    misses accept, and the final table answers exactly for its side."""
    for j, layer in enumerate(lf.layers, start=1):
        hit = key in layer
        if j % 2 == 1:
            if not hit:
                return False
        elif not hit:
            return True
    if lf.table.holds_positives:
        return key in lf.table
    return key not in lf.table


def classify(filters: Sequence[LayeredFilter], trie, key: bytes) -> int:
    """Bucket id for ``key``: first claiming stack in ascending order,
    else the tree index, else bucket 1."""
    for lf in filters:
        if classify_one(lf, key):
            return lf.bucket_id
    if trie is not None:
        found = trie.lookup(key)
        if found is not None:
            return found
    return 1
