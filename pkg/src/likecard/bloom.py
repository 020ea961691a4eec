"""Seeded Bloom filter with double hashing over blake2b.

Sized by the classic rule n_bits = ceil(capacity * -ln(f) / ln(2)**2)
with k = max(1, round(bits-per-key * ln 2)) hash functions.  The two
base hashes come from a single keyed blake2b-128 digest; probe i uses
h1 + i * h2 (h2 forced odd) modulo the bit count, so a (key, seed) pair
always probes the same positions on every platform and process.

A filter built over an empty key set has zero bits and rejects every
probe.  Membership answers are one-sided: keys that were inserted are
always reported present.
"""

from __future__ import annotations

import math
import struct
from hashlib import blake2b

from .errors import ConfigError, TruncatedModelError

_LN2 = math.log(2.0)
_LN2_SQ = _LN2 * _LN2
_MASK64 = (1 << 64) - 1


def derive_seed(master: int, *parts: int) -> int:
    """A stable 64-bit seed for a component addressed by ``parts``."""
    h = blake2b(digest_size=8)
    h.update(struct.pack("<Q", master & _MASK64))
    for p in parts:
        h.update(struct.pack("<Q", p & _MASK64))
    return int.from_bytes(h.digest(), "little")


def bloom_sizing(capacity: int, target_f: float) -> tuple[int, int]:
    """(n_bits, k_hashes) for ``capacity`` keys at false-positive rate f."""
    if capacity < 1:
        raise ConfigError(f"bloom capacity must be >= 1, got {capacity}")
    if not (0.0 < target_f < 1.0):
        raise ConfigError(f"false-positive rate must lie in (0, 1), got {target_f!r}")
    n_bits = math.ceil(capacity * -math.log(target_f) / _LN2_SQ)
    k = max(1, round(n_bits / capacity * _LN2))
    return n_bits, k


class BloomFilter:
    """Fixed-size bit array with k double-hashed probe positions per key."""

    __slots__ = ("seed", "n_bits", "k_hashes", "bits", "target_f", "n_inserted", "_key")

    def __init__(self, seed: int, n_bits: int, k_hashes: int, bits: bytearray,
                 target_f: float = 0.0, n_inserted: int = 0):
        self.seed = seed & _MASK64
        self.n_bits = n_bits
        self.k_hashes = k_hashes
        self.bits = bits
        self.target_f = target_f
        self.n_inserted = n_inserted
        self._key = struct.pack("<Q", self.seed)

    @classmethod
    def sized_for(cls, capacity: int, target_f: float, seed: int) -> "BloomFilter":
        """An empty filter dimensioned for ``capacity`` keys at rate f."""
        n_bits, k = bloom_sizing(capacity, target_f)
        return cls(seed, n_bits, k, bytearray((n_bits + 7) // 8), target_f)

    @classmethod
    def degenerate(cls, seed: int) -> "BloomFilter":
        """A zero-bit filter that rejects everything; used for empty layers."""
        return cls(seed, 0, 1, bytearray())

    def _hash_pair(self, key: bytes) -> tuple[int, int]:
        d = blake2b(key, digest_size=16, key=self._key).digest()
        h1 = int.from_bytes(d[:8], "little")
        h2 = int.from_bytes(d[8:], "little") | 1
        return h1, h2

    def insert(self, key: bytes) -> None:
        n = self.n_bits
        if n == 0:
            raise ConfigError("cannot insert into a zero-bit filter")
        h1, h2 = self._hash_pair(key)
        bits = self.bits
        for _ in range(self.k_hashes):
            pos = h1 % n
            bits[pos >> 3] |= 1 << (pos & 7)
            h1 = (h1 + h2) & _MASK64
        self.n_inserted += 1

    def __contains__(self, key: bytes) -> bool:
        n = self.n_bits
        if n == 0:
            return False
        h1, h2 = self._hash_pair(key)
        bits = self.bits
        for _ in range(self.k_hashes):
            pos = h1 % n
            if not (bits[pos >> 3] >> (pos & 7)) & 1:
                return False
            h1 = (h1 + h2) & _MASK64
        return True

    def serialize(self) -> bytes:
        """seed u64 | n_bits u32 | k u16 | bit array padded to 64-bit words."""
        n_words = (self.n_bits + 63) // 64
        pad = n_words * 8 - len(self.bits)
        return struct.pack("<QIH", self.seed, self.n_bits, self.k_hashes) + bytes(self.bits) + b"\x00" * pad

    @classmethod
    def deserialize(cls, buf: bytes, offset: int = 0) -> tuple["BloomFilter", int]:
        if offset + 14 > len(buf):
            raise TruncatedModelError("truncated bloom filter header")
        seed, n_bits, k = struct.unpack_from("<QIH", buf, offset)
        offset += 14
        n_bytes = ((n_bits + 63) // 64) * 8
        if offset + n_bytes > len(buf):
            raise TruncatedModelError("truncated bloom filter bit array")
        used = (n_bits + 7) // 8
        bits = bytearray(buf[offset:offset + used])
        return cls(seed, n_bits, k, bits), offset + n_bytes

    def serialized_size(self) -> int:
        return 14 + ((self.n_bits + 63) // 64) * 8

    def __repr__(self) -> str:
        return f"BloomFilter(n_bits={self.n_bits}, k={self.k_hashes}, seed={self.seed:#x})"
