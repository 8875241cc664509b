"""Title tokenization and frozen pretrained word embeddings."""

from __future__ import annotations

import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

# ASCII punctuation plus the typographic marks common in titles
PUNCTUATION = string.punctuation + "\u2018\u2019\u201c\u201d\u00ab\u00bb\u2026\u2013\u2014"

EMPTY_TOKEN = "<empty>"


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    source_title: str

    def __len__(self):
        return len(self.tokens)


def tokenize(title: str) -> TokenSequence:
    """Lowercase, split on whitespace, strip punctuation at token edges.

    Internal punctuation survives, so "9/11", "pg-13" and "don't" stay whole.
    """
    tokens = []
    for raw in title.lower().split():
        tok = raw.strip(PUNCTUATION)
        if tok:
            tokens.append(tok)
    return TokenSequence(tuple(tokens), title)


class EmbeddingTable:
    """Immutable token -> vector map backed by one contiguous matrix."""

    def __init__(self, tokens: Iterable[str], vectors: np.ndarray):
        vectors = np.array(vectors, dtype=np.float64)
        tokens = list(tokens)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError("need one vector row per token")
        index = {}
        keep = []
        for i, tok in enumerate(tokens):
            if tok not in index:  # first occurrence wins
                index[tok] = len(keep)
                keep.append(i)
        self._vectors = vectors[keep]
        self._vectors.setflags(write=False)
        self._index = index
        self.dim = vectors.shape[1]

    @classmethod
    def from_dict(cls, entries: Mapping[str, Iterable[float]]) -> "EmbeddingTable":
        toks = list(entries)
        return cls(toks, np.array([list(entries[t]) for t in toks], dtype=np.float64))

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._index)

    def __getitem__(self, token: str) -> np.ndarray:
        return self._vectors[self._index[token]]

    def get(self, token: str, default=None):
        i = self._index.get(token)
        return default if i is None else self._vectors[i]

    @property
    def tokens(self) -> list[str]:
        return list(self._index)

    @property
    def vectors(self) -> np.ndarray:
        return self._vectors


def load_embeddings(path: str | Path, dim: int = 300) -> EmbeddingTable:
    """Read the plain-text embedding format: ``token v1 ... v_dim`` per line."""
    tokens, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}"
                )
            try:
                rows.append(np.array(parts[1:], dtype=np.float64))
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from exc
            tokens.append(parts[0])
    if not rows:
        return EmbeddingTable([], np.zeros((0, dim)))
    return EmbeddingTable(tokens, np.vstack(rows))


def write_embeddings(table: EmbeddingTable, path: str | Path, precision: int = 6) -> None:
    fmt = f"%.{precision}f"
    with open(path, "w", encoding="utf-8") as fh:
        for tok in table.tokens:
            fh.write(tok + " " + " ".join(fmt % v for v in table[tok]) + "\n")


@dataclass(frozen=True)
class EmbeddingMatrix:
    rows: np.ndarray
    kept_tokens: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.rows.shape[0]


def embed_title(
    t: TokenSequence, e: EmbeddingTable, max_len: int = 30, oov: str = "drop"
) -> EmbeddingMatrix:
    """Look up title tokens, handle OOV tokens, then truncate to ``max_len``.

    ``oov="drop"`` skips unknown tokens; ``oov="zero"`` keeps them as zero rows.
    A title with nothing left becomes one zero row tagged ``<empty>``.
    """
    if oov not in ("drop", "zero"):
        raise ValueError(f"unknown OOV policy {oov!r}")
    if oov == "drop":
        kept = [tok for tok in t.tokens if tok in e]
    else:
        kept = list(t.tokens)
    kept = kept[:max_len]
    if not kept:
        return EmbeddingMatrix(np.zeros((1, e.dim)), (EMPTY_TOKEN,))
    zero = np.zeros(e.dim)
    rows = np.array([e.get(tok, zero) for tok in kept], dtype=np.float64)
    return EmbeddingMatrix(rows, tuple(kept))


@dataclass(frozen=True)
class TextConfig:
    max_len: int = 30
    oov: str = "drop"

    def embed(self, title: str, e: EmbeddingTable) -> EmbeddingMatrix:
        return embed_title(tokenize(title), e, self.max_len, self.oov)
