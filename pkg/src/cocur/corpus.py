"""Corpus ingestion: tokenization, parallel/monolingual loading, vocabularies.

File format is deliberately plain: UTF-8 text, one sentence per line, source
and target in separate files with equal line counts.  Labels (for synthetic
corpora) live in a sibling TSV ``id <TAB> in_domain <TAB> clean`` with 0/1
values.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DataError

UNK = "<unk>"
UNK_ID = 0


@dataclass(frozen=True)
class PairLabels:
    in_domain: bool
    clean: bool


@dataclass(frozen=True)
class SentencePair:
    id: int
    source: tuple[str, ...]
    target: tuple[str, ...]
    labels: Optional[PairLabels] = None


class Corpus:
    """An immutable indexed list of sentence pairs; iteration order == id order.

    Monolingual corpora are represented with empty target sides.
    """

    def __init__(self, pairs: Sequence[SentencePair], source_path: str = "", target_path: str = ""):
        self.pairs = tuple(pairs)
        self.source_path = source_path
        self.target_path = target_path
        for i, p in enumerate(self.pairs):
            if p.id != i:
                raise DataError(f"corpus ids must be dense 0..N-1, got id {p.id} at position {i}")

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, i: int) -> SentencePair:
        return self.pairs[i]

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)

    @property
    def labeled(self) -> bool:
        return len(self.pairs) > 0 and all(p.labels is not None for p in self.pairs)

    def subset(self, ids: Sequence[int]) -> "Corpus":
        """New corpus from the given pairs (in the given order), re-id'd densely."""
        pairs = [
            SentencePair(new_id, self.pairs[i].source, self.pairs[i].target, self.pairs[i].labels)
            for new_id, i in enumerate(ids)
        ]
        return Corpus(pairs, self.source_path, self.target_path)


def tokenize(line: str, lowercase: bool = True) -> tuple[str, ...]:
    """Whitespace tokenization; lowercasing is on by default."""
    if lowercase:
        line = line.lower()
    return tuple(line.split())


def _read_lines(path) -> list[str]:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc


def load_parallel(
    source_path,
    target_path,
    lowercase: bool = True,
    max_len: Optional[int] = None,
) -> Corpus:
    """Load a parallel corpus; pairs with an empty tokenized side are dropped
    and the survivors re-id'd densely.  Line-count mismatch is a hard error.
    """
    src_lines = _read_lines(source_path)
    tgt_lines = _read_lines(target_path)
    if len(src_lines) != len(tgt_lines):
        raise DataError(f"line count mismatch {len(src_lines)} vs {len(tgt_lines)}")
    pairs = []
    for src_line, tgt_line in zip(src_lines, tgt_lines):
        src = tokenize(src_line, lowercase)
        tgt = tokenize(tgt_line, lowercase)
        if not src or not tgt:
            continue
        if max_len is not None and (len(src) > max_len or len(tgt) > max_len):
            continue
        pairs.append(SentencePair(len(pairs), src, tgt))
    return Corpus(pairs, str(source_path), str(target_path))


def load_mono(path, lowercase: bool = True, max_len: Optional[int] = None) -> Corpus:
    """Load a monolingual corpus (empty target sides); empty lines are dropped."""
    pairs = []
    for line in _read_lines(path):
        src = tokenize(line, lowercase)
        if not src:
            continue
        if max_len is not None and len(src) > max_len:
            continue
        pairs.append(SentencePair(len(pairs), src, ()))
    return Corpus(pairs, str(path))


def write_corpus(corpus: Corpus, source_path, target_path=None) -> None:
    with open(source_path, "w", encoding="utf-8") as fh:
        for p in corpus:
            fh.write(" ".join(p.source) + "\n")
    if target_path is not None:
        with open(target_path, "w", encoding="utf-8") as fh:
            for p in corpus:
                fh.write(" ".join(p.target) + "\n")


def write_labels(corpus: Corpus, path) -> None:
    if not corpus.labeled:
        raise DataError("corpus carries no labels")
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            fh.write(f"{p.id}\t{int(p.labels.in_domain)}\t{int(p.labels.clean)}\n")


def attach_labels(corpus: Corpus, path) -> Corpus:
    """Return a copy of ``corpus`` with labels read from a TSV file."""
    table: dict[int, PairLabels] = {}
    for line in _read_lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataError(f"labels file {path}: expected 3 tab-separated fields, got {len(fields)}")
        table[int(fields[0])] = PairLabels(bool(int(fields[1])), bool(int(fields[2])))
    pairs = []
    for p in corpus:
        if p.id not in table:
            raise DataError(f"labels file {path}: missing id {p.id}")
        pairs.append(SentencePair(p.id, p.source, p.target, table[p.id]))
    return Corpus(pairs, corpus.source_path, corpus.target_path)


class Vocab:
    """Token -> index map with UNK fixed at index 0.

    Indices are deterministic: frequency-descending with lexicographic
    tiebreak, so identical corpora always produce identical vocabularies.
    """

    def __init__(self, tokens: Sequence[str], min_count: int = 1):
        self.min_count = min_count
        self._index = {UNK: UNK_ID}
        for tok in tokens:
            if tok not in self._index:
                self._index[tok] = len(self._index)
        self._tokens = list(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token(self, idx: int) -> str:
        return self._tokens[idx]

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.fromiter((self._index.get(t, UNK_ID) for t in tokens), dtype=np.int32, count=len(tokens))


def build_vocab(corpus: Corpus, min_count: int = 1, side: str = "both") -> Vocab:
    """Build a vocabulary over one or both sides of a corpus.

    Every token with frequency >= min_count gets an index; everything else
    maps to UNK.
    """
    if min_count < 1:
        raise DataError(f"min_count must be >= 1, got {min_count}")
    if side not in ("both", "source", "target"):
        raise DataError(f"unknown vocab side {side!r}")
    counts: Counter[str] = Counter()
    for p in corpus:
        if side in ("both", "source"):
            counts.update(p.source)
        if side in ("both", "target"):
            counts.update(p.target)
    kept = [t for t, c in counts.items() if c >= min_count and t != UNK]
    kept.sort(key=lambda t: (-counts[t], t))
    return Vocab(kept, min_count)


def encode_flat(corpus: Corpus, vocab: Vocab, side: str) -> tuple[np.ndarray, np.ndarray]:
    """Encode one side of a corpus as (flat token ids, offsets of length N+1)."""
    seqs = [(p.source if side == "source" else p.target) for p in corpus]
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    for i, s in enumerate(seqs):
        offsets[i + 1] = offsets[i] + len(s)
    flat = np.empty(int(offsets[-1]), dtype=np.int32)
    pos = 0
    for s in seqs:
        for t in s:
            flat[pos] = vocab.id(t)
            pos += 1
    return flat, offsets
