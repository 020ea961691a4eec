"""Shared fixtures: the frozen word corpus and a small deterministic slice."""

from __future__ import annotations

import pathlib

import pytest

from likecard import read_dataset

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def words() -> list[bytes]:
    """The committed desk corpus: distinct lowercase words, 20k-50k strings."""
    corpus = read_dataset(str(DATA_DIR / "words.txt"))
    assert 20_000 <= len(corpus) <= 50_000
    return corpus


@pytest.fixture(scope="session")
def small_words(words: list[bytes]) -> list[bytes]:
    """A deterministic 3k-string slice for mid-weight tests."""
    return words[::9]
