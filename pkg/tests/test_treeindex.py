"""Compact trie packing, lookups, limits, and serialization."""

from __future__ import annotations

import random

import pytest

from likecard.errors import TrieBucketRangeError, TrieSizeError, TruncatedModelError
from likecard.treeindex import CompactTrie, trie_build


class TestBuildAndLookup:
    def test_empty(self):
        trie = trie_build({}, tau=7)
        assert trie.node_count == 0
        assert trie.lookup(b"a") is None
        assert list(trie.items()) == []

    def test_two_leaves(self):
        trie = trie_build({b"ab": 9, b"ac": 10}, tau=7)
        assert trie.node_count == 3
        assert trie.lookup(b"ab") == 9
        assert trie.lookup(b"ac") == 10
        assert trie.lookup(b"a") is None
        assert trie.lookup(b"abc") is None
        assert trie.lookup(b"b") is None
        assert trie.lookup(b"") is None

    def test_key_on_interior_node(self):
        trie = trie_build({b"a": 9, b"ab": 10}, tau=8)
        assert trie.node_count == 2
        assert trie.lookup(b"a") == 9
        assert trie.lookup(b"ab") == 10
        assert trie.lookup(b"aa") is None

    def test_items_sorted(self):
        entries = {b"ba": 9, b"ab": 10, b"b": 11, b"abc": 9}
        trie = trie_build(entries, tau=8)
        assert list(trie.items()) == sorted(entries.items())

    def test_id_range_enforced(self):
        with pytest.raises(TrieBucketRangeError):
            trie_build({b"a": 7}, tau=7)  # id must exceed tau
        with pytest.raises(TrieBucketRangeError):
            trie_build({b"a": 23}, tau=7)  # tau + 16 is out of the 4-bit field
        trie = trie_build({b"a": 22}, tau=7)  # tau + 15 is the last valid id
        assert trie.lookup(b"a") == 22

    def test_empty_key_rejected(self):
        with pytest.raises(TrieBucketRangeError):
            trie_build({b"": 9}, tau=7)

    def test_node_limit(self):
        entries = {i.to_bytes(3, "big"): 9 for i in range(66_000)}
        with pytest.raises(TrieSizeError):
            trie_build(entries, tau=8)

    def test_fuzz_roundtrip(self):
        rng = random.Random(1234)
        alphabet = b"abcde"
        entries: dict[bytes, int] = {}
        while len(entries) < 3000:
            key = bytes(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
            entries[key] = rng.randint(8, 22)
        trie = trie_build(entries, tau=7)
        for key, bucket_id in entries.items():
            assert trie.lookup(key) == bucket_id
        assert dict(trie.items()) == entries
        misses = 0
        for _ in range(10_000):
            key = bytes(rng.choice(b"abcdefgh") for _ in range(rng.randint(1, 14)))
            if key not in entries:
                misses += 1
                assert trie.lookup(key) is None
        assert misses > 5000  # the fuzz actually exercised misses


class TestSerialization:
    def test_size_is_header_plus_four_bytes_per_node(self):
        for entries in ({}, {b"ab": 9, b"ac": 10}, {b"a": 9, b"ab": 10, b"b": 12}):
            trie = trie_build(entries, tau=7)
            data = trie.serialize()
            assert len(data) == 2 + 4 * trie.node_count
            assert trie.serialized_size() == len(data)

    def test_roundtrip(self):
        entries = {b"ab": 9, b"ac": 10, b"b": 11, b"bcd": 9}
        trie = trie_build(entries, tau=7)
        data = trie.serialize()
        back, offset = CompactTrie.deserialize(data, 0, tau=7)
        assert offset == len(data)
        assert dict(back.items()) == entries
        assert back.serialize() == data

    def test_truncated(self):
        trie = trie_build({b"ab": 9}, tau=7)
        data = trie.serialize()
        with pytest.raises(TruncatedModelError):
            CompactTrie.deserialize(data[:1], 0, tau=7)
        with pytest.raises(TruncatedModelError):
            CompactTrie.deserialize(data[:-2], 0, tau=7)
