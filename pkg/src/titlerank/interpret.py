"""Reading attention weights back out of a trained scorer.

Four analyses: per-word attention weights and their top-k list, a
corpus-level directed graph of word-to-word attention, a side-by-side view
of one title under two models, and the quartile word-score table built
from raw post scores.

Note that attention here has no learnable parameters and the embeddings are
frozen, so attention maps depend only on the embedding table. Two models
that share a table produce identical maps. :func:`compare_title` therefore
also reports leave-one-out score deltas, which do depend on the trained
weights.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import Ranker, self_attention
from .text import EMPTY_TOKEN, tokenize
from .stopwords import ENGLISH

AGGREGATIONS = ("incoming", "outgoing", "incoming_with_diagonal")


class InterpretationError(ValueError):
    pass


@dataclass(frozen=True)
class WordWeight:
    token: str
    weight: float
    occurrences: int


def position_weights(A: np.ndarray, mode: str = "incoming") -> np.ndarray | None:
    """Per-position attention weight of one title, or None for one-token titles.

    ``incoming``: off-diagonal column sum / (n - 1), the mass a word receives
    as context for the others. ``outgoing``: off-diagonal row sum / (n - 1).
    ``incoming_with_diagonal``: full column sum / n.
    """
    n = A.shape[0]
    if mode == "incoming_with_diagonal":
        return A.sum(axis=0) / n
    if n < 2:
        return None
    diag = np.diag(A)
    if mode == "incoming":
        return (A.sum(axis=0) - diag) / (n - 1)
    if mode == "outgoing":
        return (A.sum(axis=1) - diag) / (n - 1)
    raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


def _titles(corpus: Iterable) -> list[str]:
    return [t if isinstance(t, str) else t.title for t in corpus]


def _require_trained(model) -> None:
    if model is None or not getattr(model, "trained", False):
        raise InterpretationError("attention analysis needs a trained model")


def _title_attention(model: Ranker, title: str):
    m = model.embed(title)
    if m.kept_tokens == (EMPTY_TOKEN,):
        return None, None
    return m.kept_tokens, self_attention(m.rows)[0]


def word_attention_weights(model: Ranker, corpus: Iterable, min_freq: int = 1,
                           mode: str = "incoming") -> list[WordWeight]:
    """Mean per-occurrence attention weight for every token in ``corpus``.

    Titles that embed to a single token carry no off-diagonal attention and
    are skipped (except for ``incoming_with_diagonal``).
    """
    _require_trained(model)
    if mode not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    values = defaultdict(list)
    for title in _titles(corpus):
        tokens, A = _title_attention(model, title)
        if tokens is None:
            continue
        w = position_weights(A, mode)
        if w is None:
            continue
        for tok, x in zip(tokens, w):
            values[tok].append(float(x))
    out = [WordWeight(tok, math.fsum(v) / len(v), len(v))
           for tok, v in values.items() if len(v) >= min_freq]
    out.sort(key=lambda ww: ww.token)
    return out


def top_k_words(weights: Sequence[WordWeight], k: int = 15) -> list[WordWeight]:
    return sorted(weights, key=lambda ww: (-ww.weight, ww.token))[:max(k, 0)]


# ------------------------------------------------------------------ graph


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: float
    count: int


@dataclass
class AttentionGraph:
    nodes: dict[str, float]
    edges: list[Edge]

    def to_dot(self, name: str = "attention") -> str:
        lines = [f"digraph {_quote(name)} {{"]
        for tok in sorted(self.nodes):
            lines.append(f"  {_quote(tok)} [size={self.nodes[tok]:.4f}];")
        for e in self.edges:
            lines.append(f"  {_quote(e.src)} -> {_quote(e.dst)} "
                         f"[label=\"{e.weight:.4f}\", weight={e.weight:.4f}];")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def write_dot(self, path: str | Path, name: str = "attention") -> None:
        Path(path).write_text(self.to_dot(name), encoding="utf-8")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def rank_edges(model: Ranker, corpus: Iterable, stopwords: Iterable[str] | None = None,
               min_count: int = 1) -> list[Edge]:
    """Every distinct (src -> dst) token pair, strongest average weight first.

    For positions i != j in a title, ``A[j][i]`` (how much position j attends
    to position i) is credited to edge ``token_i -> token_j``: the source is
    context for the destination. Self-loops between repeats of one token and
    edges touching a stopword are dropped.
    """
    _require_trained(model)
    stop = ENGLISH if stopwords is None else frozenset(stopwords)
    acc = defaultdict(list)
    for title in _titles(corpus):
        tokens, A = _title_attention(model, title)
        if tokens is None or len(tokens) < 2:
            continue
        n = len(tokens)
        for j in range(n):
            if tokens[j] in stop:
                continue
            for i in range(n):
                if i == j or tokens[i] in stop or tokens[i] == tokens[j]:
                    continue
                acc[(tokens[i], tokens[j])].append(float(A[j, i]))
    edges = [Edge(s, d, math.fsum(v) / len(v), len(v))
             for (s, d), v in acc.items() if len(v) >= min_count]
    edges.sort(key=lambda e: (-e.weight, e.src, e.dst))
    return edges


def attention_graph(model: Ranker, corpus: Iterable, top_edges: int = 50,
                    stopwords: Iterable[str] | None = None, min_count: int = 1) -> AttentionGraph:
    """Graph of the ``top_edges`` strongest edges; node size is the word's mean incoming weight."""
    corpus = list(corpus)
    edges = rank_edges(model, corpus, stopwords, min_count)[:top_edges]
    weights = {w.token: w.weight for w in word_attention_weights(model, corpus)}
    nodes = {}
    for e in edges:
        for tok in (e.src, e.dst):
            nodes[tok] = weights.get(tok, 0.0)
    return AttentionGraph(nodes, edges)


# ------------------------------------------------------ title comparison


@dataclass(frozen=True)
class TokenComparison:
    token: str
    weight_a: float
    weight_b: float
    loo_delta_a: float
    loo_delta_b: float


def title_token_weights(model: Ranker, title: str) -> tuple[tuple[str, ...], np.ndarray]:
    """Incoming attention weight per kept token; a single token gets 1.0."""
    m = model.embed(title)
    A = self_attention(m.rows)[0]
    w = position_weights(A, "incoming")
    return m.kept_tokens, np.ones(1) if w is None else w


def leave_one_out(model: Ranker, tokens: Sequence[str]) -> np.ndarray:
    """``score(tokens) - score(tokens without position i)`` for each i."""
    full = model.score_tokens(tokens)
    return np.array([full - model.score_tokens(list(tokens[:i]) + list(tokens[i + 1:]))
                     for i in range(len(tokens))])


def compare_title(title: str, model_a: Ranker, model_b: Ranker) -> list[TokenComparison]:
    tokens_a, wa = title_token_weights(model_a, title)
    tokens_b, wb = title_token_weights(model_b, title)
    if tokens_a != tokens_b:
        raise InterpretationError(
            f"models disagree on the embedded title: {tokens_a} vs {tokens_b}"
        )
    if tokens_a == (EMPTY_TOKEN,):
        raise InterpretationError(f"no known tokens in title {title!r}")
    da = leave_one_out(model_a, tokens_a)
    db = leave_one_out(model_b, tokens_b)
    return [TokenComparison(t, float(a), float(b), float(x), float(y))
            for t, a, b, x, y in zip(tokens_a, wa, wb, da, db)]


def write_comparison(rows: Sequence[TokenComparison], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["token", "weight_a", "weight_b", "loo_delta_a", "loo_delta_b"])
        for r in rows:
            w.writerow([r.token, f"{r.weight_a:.6f}", f"{r.weight_b:.6f}",
                        f"{r.loo_delta_a:.6f}", f"{r.loo_delta_b:.6f}"])


def write_word_weights(weights: Sequence[WordWeight], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "token", "weight", "occurrences"])
        for rank, ww in enumerate(weights, 1):
            w.writerow([rank, ww.token, f"{ww.weight:.6f}", ww.occurrences])


# ------------------------------------------------------ quartile scores


@dataclass
class QuartileTable:
    scores: dict[str, float]
    quartiles: dict[str, int]
    boundaries: tuple[float, float, float]
    samples: list[list[str]]
    normalizer: float

    def rows(self):
        return [(t, self.scores[t], self.quartiles[t]) for t in sorted(self.scores)]


def quartile_word_scores(posts: Sequence, min_freq: int = 10, top_n_norm: int = 100,
                         sample: int = 150, seed: int = 0) -> QuartileTable:
    """Average normalized post score per word, split into quartiles.

    Each post's score is divided by the mean score of the subreddit's top
    ``top_n_norm`` posts (all posts when there are fewer). A word's score is
    the mean over the posts containing it; words occurring fewer than
    ``min_freq`` times are dropped. Words tied with a boundary fall into the
    lower quartile. ``sample`` words per quartile are drawn with ``seed``.
    """
    posts = list(posts)
    if not posts:
        raise ValueError("no posts")
    ranked = sorted((p.score for p in posts), reverse=True)
    normalizer = float(np.mean(ranked[:top_n_norm]))
    if normalizer == 0:
        raise ValueError("top posts have zero mean score; cannot normalize")

    per_token = defaultdict(list)
    occurrences = defaultdict(int)
    for p in posts:
        toks = tokenize(p.title).tokens
        for t in toks:
            occurrences[t] += 1
        for t in set(toks):
            per_token[t].append(p.score / normalizer)
    scores = {t: math.fsum(v) / len(v) for t, v in per_token.items() if occurrences[t] >= min_freq}
    if not scores:
        return QuartileTable({}, {}, (math.nan,) * 3, [[], [], [], []], normalizer)

    vals = np.array(list(scores.values()))
    bounds = tuple(float(b) for b in np.percentile(vals, [25, 50, 75]))
    quartiles = {t: int(sum(s > b for b in bounds)) for t, s in scores.items()}
    rng = np.random.default_rng(seed)
    samples = []
    for q in range(4):
        members = sorted(t for t, qi in quartiles.items() if qi == q)
        if len(members) > sample:
            members = sorted(rng.choice(members, size=sample, replace=False).tolist())
        samples.append(members)
    return QuartileTable(scores, quartiles, bounds, samples, normalizer)


def write_quartiles(table: QuartileTable, path: str | Path) -> None:
    sampled = {t for s in table.samples for t in s}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["token", "score", "quartile", "sampled"])
        for tok, score, q in table.rows():
            w.writerow([tok, f"{score:.6f}", q, int(tok in sampled)])
