"""Bag-of-words logistic and embedding-average MLP baselines.

Both expose the same callable-scorer interface as the main model so the
evaluation code is shared. They are trained on the same winner/loser pairs,
by default with the smooth pairwise logistic loss ``log(1 + exp(-(x1 - x2)))``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .pairing import PostPair
from .text import EmbeddingTable, tokenize
from .train import hinge_loss, make_optimizer

KINDS = ("onehot_logistic", "glove_mlp")
LOSSES = ("logistic", "hinge")


@dataclass(frozen=True)
class BaselineConfig:
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-2
    seed: int = 0
    loss: str = "logistic"
    margin: float = 0.0
    optimizer: str = "adam"
    vocab_size: int = 20000
    hidden: int = 256

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")


class Vocabulary:
    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens


def build_vocab(titles: Iterable, size: int = 20000) -> Vocabulary:
    """Most frequent ``size`` tokens; equal counts are ordered lexicographically.

    ``titles`` may hold strings or objects with a ``title`` attribute.
    """
    counts = Counter()
    n = 0
    for t in titles:
        n += 1
        counts.update(tokenize(t if isinstance(t, str) else t.title).tokens)
    if n == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary([tok for tok, _ in ranked[:size]])


def bag_matrix(titles: Sequence[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Binary presence matrix; repeated tokens count once."""
    indptr, indices = [0], []
    for title in titles:
        ids = sorted({vocab.index[t] for t in tokenize(title).tokens if t in vocab})
        indices.extend(ids)
        indptr.append(len(indices))
    data = np.ones(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(titles), len(vocab)))


# ------------------------------------------------------------- logistic


@dataclass
class LogisticParams:
    weights: np.ndarray
    bias: float

    def to_vector(self):
        return np.concatenate([self.weights, [self.bias]])

    def with_vector(self, v):
        return LogisticParams(np.array(v[:-1]), float(v[-1]))


def onehot_score(title: str, params: LogisticParams, vocab: Vocabulary) -> float:
    ids = {vocab.index[t] for t in tokenize(title).tokens if t in vocab}
    return float(sum(params.weights[i] for i in sorted(ids)) + params.bias)


class OneHotLogistic:
    kind = "onehot_logistic"

    def __init__(self, params: LogisticParams, vocab: Vocabulary):
        self.params = params
        self.vocab = vocab

    def __call__(self, title: str) -> float:
        return onehot_score(title, self.params, self.vocab)

    def score_many(self, titles):
        return bag_matrix(titles, self.vocab) @ self.params.weights + self.params.bias

    def features(self, titles):
        return bag_matrix(titles, self.vocab)

    def scores(self, X, params):
        return X @ params.weights + params.bias

    def grad(self, X, upstream, params):
        return LogisticParams(X.T @ upstream, float(upstream.sum()))

    def top_weights(self, k: int = 20, absolute: bool = True) -> list[tuple[str, float]]:
        w = self.params.weights
        key = np.abs(w) if absolute else w
        order = sorted(range(len(w)), key=lambda i: (-key[i], self.vocab.tokens[i]))
        return [(self.vocab.tokens[i], float(w[i])) for i in order[:k]]


# ------------------------------------------------------------------ MLP


def glove_average(title: str, embeddings: EmbeddingTable) -> np.ndarray:
    vecs = [embeddings[t] for t in tokenize(title).tokens if t in embeddings]
    if not vecs:
        return np.zeros(embeddings.dim)
    return np.mean(vecs, axis=0)


@dataclass
class MlpParams:
    w1: np.ndarray  # (dim, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H,)
    b2: float

    def to_vector(self):
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def with_vector(self, v):
        d, h = self.w1.shape
        w1 = np.array(v[:d * h]).reshape(d, h)
        b1 = np.array(v[d * h:d * h + h])
        w2 = np.array(v[d * h + h:d * h + 2 * h])
        return MlpParams(w1, b1, w2, float(v[-1]))

    def check(self):
        d, h = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ValueError("inconsistent MLP parameter shapes")


def init_mlp(dim: int, hidden: int, seed: int) -> MlpParams:
    rng = np.random.default_rng(seed)
    l1 = np.sqrt(6.0 / (dim + hidden))
    l2 = np.sqrt(6.0 / (hidden + 1))
    return MlpParams(rng.uniform(-l1, l1, (dim, hidden)), np.zeros(hidden),
                     rng.uniform(-l2, l2, hidden), 0.0)


def mlp_forward(X: np.ndarray, params: MlpParams):
    pre = X @ params.w1 + params.b1
    h = np.maximum(pre, 0.0)
    return h @ params.w2 + params.b2, (X, pre, h)


def mlp_score(title: str, params: MlpParams, embeddings: EmbeddingTable) -> float:
    params.check()
    x = glove_average(title, embeddings)
    if x.shape[0] != params.w1.shape[0]:
        raise ValueError(f"embedding dim {x.shape[0]} != MLP input dim {params.w1.shape[0]}")
    return float(mlp_forward(x[None, :], params)[0][0])


class GloveMlp:
    kind = "glove_mlp"

    def __init__(self, params: MlpParams, embeddings: EmbeddingTable):
        params.check()
        self.params = params
        self.embeddings = embeddings

    def __call__(self, title: str) -> float:
        return mlp_score(title, self.params, self.embeddings)

    def features(self, titles):
        return np.array([glove_average(t, self.embeddings) for t in titles]).reshape(len(titles), -1)

    def score_many(self, titles):
        return mlp_forward(self.features(titles), self.params)[0]

    def scores(self, X, params):
        return mlp_forward(X, params)[0]

    def grad(self, X, upstream, params):
        _, (X, pre, h) = mlp_forward(X, params)
        dw2 = h.T @ upstream
        dpre = upstream[:, None] * params.w2[None, :] * (pre > 0)
        return MlpParams(X.T @ dpre, dpre.sum(axis=0), dw2, float(upstream.sum()))


# ------------------------------------------------------------- training


def pair_loss(x1, x2, loss: str = "logistic", margin: float = 0.0):
    if loss == "hinge":
        return hinge_loss(x1, x2, margin)
    return np.logaddexp(0.0, -(np.asarray(x1) - np.asarray(x2)))


def pair_loss_slope(x1, x2, loss: str = "logistic", margin: float = 0.0):
    """d loss / d x1 (the slope w.r.t. x2 is its negation)."""
    diff = np.asarray(x1) - np.asarray(x2)
    if loss == "hinge":
        return -(margin - diff > 0).astype(np.float64)
    return -0.5 * (1.0 - np.tanh(diff / 2.0))  # -sigmoid(-diff), overflow-free


def _fit(model, titles_w, titles_l, cfg: BaselineConfig):
    Xw = model.features(titles_w)
    Xl = model.features(titles_l)
    theta = model.params.to_vector()
    opt = make_optimizer(cfg.optimizer, theta.size, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    n = len(titles_w)
    params = model.params
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            xw = model.scores(Xw[idx], params)
            xl = model.scores(Xl[idx], params)
            total += float(pair_loss(xw, xl, cfg.loss, cfg.margin).sum())
            slope = pair_loss_slope(xw, xl, cfg.loss, cfg.margin) / len(idx)
            gw = model.grad(Xw[idx], slope, params).to_vector()
            gl = model.grad(Xl[idx], -slope, params).to_vector()
            theta = opt.step(theta, gw + gl)
            params = params.with_vector(theta)
        losses.append(total / n)
    model.params = params
    return losses


def train_baseline(kind: str, pairs: Sequence[PostPair], cfg: BaselineConfig = BaselineConfig(),
                   embeddings: EmbeddingTable | None = None):
    """Train a baseline scorer on winner/loser pairs; returns the scorer."""
    if kind in ("onehot", "logistic"):
        kind = "onehot_logistic"
    if kind in ("mlp", "glove"):
        kind = "glove_mlp"
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if not pairs:
        raise ValueError("no training pairs")
    tw = [p.winner.title for p in pairs]
    tl = [p.loser.title for p in pairs]
    if kind == "onehot_logistic":
        vocab = build_vocab(tw + tl, cfg.vocab_size)
        model = OneHotLogistic(LogisticParams(np.zeros(len(vocab)), 0.0), vocab)
    else:
        if embeddings is None:
            raise ValueError("glove_mlp needs an embedding table")
        model = GloveMlp(init_mlp(embeddings.dim, cfg.hidden, cfg.seed), embeddings)
    model.loss_history = _fit(model, tw, tl, cfg)
    return model
