"""Exact pattern cardinalities, workload generation, and file formats.

A pattern catalog maps every canonical pattern body up to a length cap
to the number of dataset strings it matches.  Catalogs are the training
input for estimator models and the source of truth in evaluation.

Datasets are newline-delimited byte strings.  Workload files are
tab-separated lines ``kind<TAB>body<TAB>cardinality`` where the body is
printable ASCII with ``\\xNN`` escapes for everything else (and for the
backslash itself), so arbitrary byte patterns survive a text file.
"""

from __future__ import annotations

import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import PatternKind, Query
from .errors import ConfigError, DatasetError, GenerationError


@dataclass
class PatternCatalog:
    """All distinct pattern bodies of one kind up to max_len, with counts."""

    kind: PatternKind
    max_len: int
    dataset_size: int
    entries: dict[bytes, int] = field(default_factory=dict)

    @property
    def max_card(self) -> int:
        if not self.entries:
            raise DatasetError("catalog is empty")
        return max(self.entries.values())


def enumerate_patterns(dataset: Sequence[bytes], kind: PatternKind,
                       max_len: int) -> PatternCatalog:
    """Count, for every canonical body of length <= max_len, the matching strings.

    Substring bodies are deduplicated per string first, so each string
    contributes at most 1 to any body's count.
    """
    if len(dataset) == 0:
        raise DatasetError("dataset must contain at least one string")
    if max_len < 1:
        raise ConfigError(f"max pattern length must be >= 1, got {max_len}")
    counts: dict[bytes, int] = {}
    if kind is PatternKind.SUBSTRING:
        for s in dataset:
            n = len(s)
            seen = set()
            add = seen.add
            for i in range(n):
                hi = min(max_len, n - i) + 1
                for l in range(1, hi):
                    add(s[i:i + l])
            for sub in seen:
                counts[sub] = counts.get(sub, 0) + 1
    else:
        for s in dataset:
            if kind is PatternKind.SUFFIX:
                s = s[::-1]
            for l in range(1, min(max_len, len(s)) + 1):
                p = s[:l]
                counts[p] = counts.get(p, 0) + 1
    return PatternCatalog(kind, max_len, len(dataset), counts)


def exact_cardinality(dataset: Sequence[bytes], query: Query) -> int:
    """Reference count of strings matching ``query``, by direct scan."""
    raw = query.raw
    if query.kind is PatternKind.PREFIX:
        return sum(1 for s in dataset if s.startswith(raw))
    if query.kind is PatternKind.SUFFIX:
        return sum(1 for s in dataset if s.endswith(raw))
    return sum(1 for s in dataset if raw in s)


def _prefix_upper(body: bytes) -> bytes | None:
    """Smallest byte string greater than every string prefixed by ``body``."""
    arr = bytearray(body)
    while arr:
        if arr[-1] < 0xFF:
            arr[-1] += 1
            return bytes(arr)
        arr.pop()
    return None


class Corpus:
    """A dataset prepared for fast exact matching.

    Prefix and suffix counts come from binary search over sorted copies;
    substring checks run over one joined buffer when no string contains
    the separator byte, falling back to per-string scans otherwise.
    """

    def __init__(self, strings: Sequence[bytes]):
        if len(strings) == 0:
            raise DatasetError("dataset must contain at least one string")
        self.strings = list(strings)
        self._fwd = sorted(self.strings)
        self._rev = sorted(s[::-1] for s in self.strings)
        if any(b"\n" in s for s in self.strings):
            self._buf = None
            self._starts = None
        else:
            buf = b"\n".join(self.strings)
            starts = [0]
            pos = buf.find(b"\n")
            while pos != -1:
                starts.append(pos + 1)
                pos = buf.find(b"\n", pos + 1)
            self._buf = buf
            self._starts = starts

    def __len__(self) -> int:
        return len(self.strings)

    def _range_count(self, ordered: list[bytes], body: bytes) -> int:
        lo = bisect_left(ordered, body)
        upper = _prefix_upper(body)
        hi = len(ordered) if upper is None else bisect_left(ordered, upper)
        return hi - lo

    def cardinality(self, query: Query) -> int:
        body = query.body
        if query.kind is PatternKind.PREFIX:
            return self._range_count(self._fwd, body)
        if query.kind is PatternKind.SUFFIX:
            return self._range_count(self._rev, body)
        if self._buf is None or b"\n" in body:
            return sum(1 for s in self.strings if body in s)
        # count distinct lines containing the body; a hit is always inside
        # one line because neither body nor strings contain the separator
        buf, starts = self._buf, self._starts
        count = 0
        pos = buf.find(body)
        while pos != -1:
            line = bisect_right(starts, pos) - 1
            count += 1
            if line + 1 >= len(starts):
                break
            pos = buf.find(body, starts[line + 1])
        return count

    def is_empty(self, query: Query) -> bool:
        body = query.body
        if query.kind is PatternKind.SUBSTRING:
            if self._buf is not None and b"\n" not in body:
                return self._buf.find(body) == -1
            return all(body not in s for s in self.strings)
        ordered = self._fwd if query.kind is PatternKind.PREFIX else self._rev
        return self._range_count(ordered, body) == 0


@dataclass
class Workload:
    """Evaluation queries paired with their exact cardinalities."""

    entries: list[tuple[Query, int]]

    def __len__(self) -> int:
        return len(self.entries)


def gen_workload(dataset: Sequence[bytes], kind: PatternKind, max_len: int,
                 n_pos: int, n_neg: int, max_extra: int = 3, seed: int = 0,
                 catalog: PatternCatalog | None = None) -> Workload:
    """A deterministic workload of catalog positives and verified-empty negatives.

    Positives are sampled without replacement from the catalog.  Each
    negative takes a uniformly chosen catalog body, appends 1..max_extra
    bytes drawn from the dataset's observed alphabet to its raw form,
    and keeps the result only if the dataset genuinely has no match.
    Gives up after 10 * n_neg failed candidates.
    """
    if n_pos < 0 or n_neg < 0:
        raise ConfigError("workload sizes must be >= 0")
    if n_neg > 0 and max_extra < 1:
        raise ConfigError(f"max extra bytes must be >= 1, got {max_extra}")
    if catalog is None:
        catalog = enumerate_patterns(dataset, kind, max_len)
    if not catalog.entries:
        raise DatasetError("catalog is empty; dataset has no non-empty strings")
    rng = random.Random(seed)
    keys = sorted(catalog.entries)
    entries: list[tuple[Query, int]] = []
    for body in rng.sample(keys, min(n_pos, len(keys))):
        entries.append((Query(kind, body), catalog.entries[body]))

    if n_neg > 0:
        corpus = Corpus(dataset)
        alphabet = sorted({b for s in dataset for b in s})
        if not alphabet:
            raise DatasetError("dataset alphabet is empty")
        produced = 0
        seen: set[bytes] = set()
        budget = 10 * n_neg
        while produced < n_neg and budget > 0:
            budget -= 1
            parent = Query(kind, rng.choice(keys))
            extra = bytes(rng.choice(alphabet)
                          for _ in range(rng.randint(1, max_extra)))
            candidate = Query.from_raw(kind, parent.raw + extra)
            if candidate.body in seen:
                continue
            if not corpus.is_empty(candidate):
                continue
            seen.add(candidate.body)
            entries.append((candidate, 0))
            produced += 1
        if produced < n_neg:
            raise GenerationError(
                f"could not find {n_neg} empty-answer queries within "
                f"{10 * n_neg} attempts; got {produced}"
            )
    return Workload(entries)


# ---------------------------------------------------------------------------
# file formats

def write_dataset(path: str, strings: Sequence[bytes]) -> None:
    for s in strings:
        if b"\n" in s:
            raise DatasetError("dataset strings must not contain newline bytes")
    with open(path, "wb") as fh:
        for s in strings:
            fh.write(s)
            fh.write(b"\n")


def read_dataset(path: str) -> list[bytes]:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data:
        return []
    lines = data.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    return lines


def escape_bytes(body: bytes) -> str:
    out = []
    for b in body:
        if 0x20 <= b <= 0x7E and b != 0x5C:
            out.append(chr(b))
        else:
            out.append(f"\\x{b:02x}")
    return "".join(out)


def unescape_bytes(text: str) -> bytes:
    out = bytearray()
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\":
            if i + 4 > n or text[i + 1] != "x":
                raise DatasetError(f"bad escape in pattern body: {text[i:i+4]!r}")
            try:
                out.append(int(text[i + 2:i + 4], 16))
            except ValueError:
                raise DatasetError(f"bad escape in pattern body: {text[i:i+4]!r}") from None
            i += 4
        else:
            code = ord(c)
            if not (0x20 <= code <= 0x7E):
                raise DatasetError(f"unescaped non-printable character {c!r} in body")
            out.append(code)
            i += 1
    return bytes(out)


def write_workload(path: str, workload: Workload) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for query, card in workload.entries:
            fh.write(f"{query.kind.value}\t{escape_bytes(query.raw)}\t{card}\n")


def read_workload(path: str) -> Workload:
    entries: list[tuple[Query, int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DatasetError(f"workload line {lineno}: expected 3 tab-separated fields")
            try:
                kind = PatternKind.parse(parts[0])
            except ConfigError as exc:
                raise DatasetError(f"workload line {lineno}: {exc}") from None
            body = unescape_bytes(parts[1])
            try:
                card = int(parts[2])
            except ValueError:
                raise DatasetError(f"workload line {lineno}: bad cardinality {parts[2]!r}") from None
            if card < 0:
                raise DatasetError(f"workload line {lineno}: negative cardinality")
            entries.append((Query.from_raw(kind, body), card))
    return Workload(entries)
