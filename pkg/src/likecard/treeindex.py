"""Compact trie for the sparse high-cardinality buckets.

Keys whose bucket id exceeds the probe threshold tau are stored in one
shared byte trie instead of per-bucket filter stacks.  Each node packs
into a single 32-bit word:

    bits  0-7   label byte
    bits  8-11  bucket id offset; 0 means no id, else id = tau + offset
    bits 12-27  index of the first child (0 means no children)
    bit  28     set on the last node of a sibling block
    bits 29-31  reserved, zero

Nodes are laid out breadth-first so every sibling block is contiguous
and sorted by label; the children of the virtual root start at index 0.
The 4-bit offset limits stored ids to (tau, tau + 15] and the 16-bit
child index limits the trie to 65535 nodes.
"""

from __future__ import annotations

import struct
from collections import deque
from typing import Iterator, Mapping

from .errors import TrieBucketRangeError, TrieSizeError, TruncatedModelError

_LAST = 1 << 28
_MAX_NODES = 65535


class CompactTrie:
    """Read-only packed-word trie mapping byte keys to bucket ids."""

    __slots__ = ("tau", "nodes")

    def __init__(self, tau: int, nodes: list[int]):
        self.tau = tau
        self.nodes = nodes

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def serialized_size(self) -> int:
        return 2 + 4 * len(self.nodes)

    def lookup(self, key: bytes) -> int | None:
        """The bucket id stored for ``key``, or None when absent."""
        nodes = self.nodes
        if not nodes or not key:
            return None
        pos = 0
        last_i = len(key) - 1
        for i, byte in enumerate(key):
            while True:
                word = nodes[pos]
                label = word & 0xFF
                if label == byte:
                    break
                if label > byte or word & _LAST:
                    return None
                pos += 1
            if i == last_i:
                field = (word >> 8) & 0xF
                return self.tau + field if field else None
            pos = (word >> 12) & 0xFFFF
            if pos == 0:
                return None
        return None

    def items(self) -> Iterator[tuple[bytes, int]]:
        """All (key, bucket id) pairs, in key order."""
        nodes = self.nodes
        if not nodes:
            return

        def walk(pos: int, prefix: bytes) -> Iterator[tuple[bytes, int]]:
            while True:
                word = nodes[pos]
                key = prefix + bytes([word & 0xFF])
                field = (word >> 8) & 0xF
                if field:
                    yield key, self.tau + field
                child = (word >> 12) & 0xFFFF
                if child:
                    yield from walk(child, key)
                if word & _LAST:
                    return
                pos += 1

        yield from walk(0, b"")

    def serialize(self) -> bytes:
        """u16 node count followed by the packed words, little-endian."""
        return struct.pack("<H", len(self.nodes)) + struct.pack(
            f"<{len(self.nodes)}I", *self.nodes
        )

    @classmethod
    def deserialize(cls, buf: bytes, offset: int, tau: int) -> tuple["CompactTrie", int]:
        if offset + 2 > len(buf):
            raise TruncatedModelError("truncated trie header")
        (count,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        if offset + 4 * count > len(buf):
            raise TruncatedModelError("truncated trie node array")
        nodes = list(struct.unpack_from(f"<{count}I", buf, offset))
        return cls(tau, nodes), offset + 4 * count


def trie_build(entries: Mapping[bytes, int], tau: int) -> CompactTrie:
    """Pack ``entries`` (key -> bucket id) into a trie relative to ``tau``.

    Every id must lie in (tau, tau + 15]; the built trie must not exceed
    65535 nodes.  Violations raise TrieBucketRangeError and TrieSizeError.
    """
    for key, bucket_id in entries.items():
        if not key:
            raise TrieBucketRangeError("trie keys must be non-empty")
        if not (tau < bucket_id <= tau + 15):
            raise TrieBucketRangeError(
                f"tree threshold too low: bucket id {bucket_id} does not fit "
                f"in (tau, tau+15] with tau={tau}"
            )
    # nested [offset-field, {label: child}] nodes, rooted at a virtual node
    root: list = [0, {}]
    for key, bucket_id in entries.items():
        node = root
        for byte in key:
            node = node[1].setdefault(byte, [0, {}])
        node[0] = bucket_id - tau

    words: list[int] = []
    # parent_slot is the index of the word whose first-child field must
    # point at the block built from this children dict
    queue: deque[tuple[dict, int | None]] = deque()
    if root[1]:
        queue.append((root[1], None))
    while queue:
        children, parent_slot = queue.popleft()
        block_start = len(words)
        if parent_slot is not None:
            words[parent_slot] |= block_start << 12
        labels = sorted(children)
        for i, label in enumerate(labels):
            field, grand = children[label]
            word = label | (field << 8)
            if i == len(labels) - 1:
                word |= _LAST
            slot = len(words)
            words.append(word)
            if grand:
                queue.append((grand, slot))
        if len(words) > _MAX_NODES:
            raise TrieSizeError(
                f"tree too large: {len(words)}+ nodes exceed {_MAX_NODES}; "
                "raise the tree threshold"
            )
    return CompactTrie(tau, words)
