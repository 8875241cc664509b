"""Mini-batch pairwise training of the attention/convolution scorer."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import (
    ModelConfig,
    ModelParams,
    Ranker,
    batch_grad,
    batch_scores,
    init_params,
    pad_contexts,
    self_attention,
)
from .pairing import PostPair
from .text import EMPTY_TOKEN, EmbeddingTable, TextConfig, embed_title, tokenize

logger = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adam")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 64
    learning_rate: float = 1e-3
    margin: float = 0.0
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0 or self.margin < 0:
            raise ValueError("learning_rate must be > 0 and margin >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")


@dataclass
class TrainReport:
    epoch_loss: list[float] = field(default_factory=list)
    epoch_accuracy: list[float] = field(default_factory=list)
    wall_time: float = 0.0
    pairs_per_second: float = 0.0
    n_pairs: int = 0
    n_dropped: int = 0


def hinge_loss(x1, x2, margin: float = 0.0):
    """Pairwise max-margin loss ``max(0, margin + x2 - x1)``; x1 is the winner's output."""
    return np.maximum(0.0, margin + np.asarray(x2) - np.asarray(x1))


class Adam:
    def __init__(self, size: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SGD:
    def __init__(self, size: int, lr: float):
        self.lr = lr

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.lr * grad


def make_optimizer(name: str, size: int, lr: float):
    return Adam(size, lr) if name == "adam" else SGD(size, lr)


def embed_pairs(pairs: Sequence[PostPair], embeddings: EmbeddingTable, text: TextConfig):
    """Embed every distinct title once; drop pairs with an unembeddable title.

    Returns ``(kept_pairs, {title: embedding_rows})``.
    """
    rows = {}
    kept = []
    for pair in pairs:
        ok = True
        for title in (pair.winner.title, pair.loser.title):
            if title not in rows:
                m = embed_title(tokenize(title), embeddings, text.max_len, text.oov)
                rows[title] = None if m.kept_tokens == (EMPTY_TOKEN,) else m.rows
            ok = ok and rows[title] is not None
        if ok:
            kept.append(pair)
    return kept, {t: r for t, r in rows.items() if r is not None}


def train(
    pairs: Sequence[PostPair],
    embeddings: EmbeddingTable,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    text_cfg: TextConfig | None = None,
    cache_contexts: bool = True,
    init: ModelParams | None = None,
    on_step: Callable[[ModelParams], None] | None = None,
) -> tuple[ModelParams, TrainReport]:
    """Fit the scorer so each pair's winner outscores its loser.

    With ``cache_contexts`` the attention context of every title is computed
    once up front; otherwise it is recomputed for every batch. Both give the
    same trajectory because attention has no parameters.
    """
    text_cfg = text_cfg or TextConfig(max_len=model_cfg.max_len)
    if embeddings.dim != model_cfg.dim:
        raise TrainingError(f"embedding dim {embeddings.dim} != model dim {model_cfg.dim}")
    kept, rows = embed_pairs(pairs, embeddings, text_cfg)
    if not kept:
        raise TrainingError("no trainable pairs: every pair has a title with no known tokens")
    report = TrainReport(n_pairs=len(kept), n_dropped=len(pairs) - len(kept))
    if report.n_dropped:
        logger.info("dropped %d pairs with unembeddable titles", report.n_dropped)

    titles = sorted(rows)
    title_index = {t: i for i, t in enumerate(titles)}
    win_idx = np.array([title_index[p.winner.title] for p in kept])
    lose_idx = np.array([title_index[p.loser.title] for p in kept])

    if cache_contexts:
        cached = [self_attention(rows[t])[1] for t in titles]

        def contexts(idx):
            return [cached[i] for i in idx]
    else:
        def contexts(idx):
            return [self_attention(rows[titles[i]])[1] for i in idx]

    params = init.copy() if init is not None else init_params(train_cfg.seed, model_cfg)
    params.check(model_cfg)
    theta = params.to_vector()
    opt = make_optimizer(train_cfg.optimizer, theta.size, train_cfg.learning_rate)
    rng = np.random.default_rng(train_cfg.seed)
    n = len(kept)
    bs = train_cfg.batch_size

    start = time.perf_counter()
    step_time = 0.0
    for epoch in range(train_cfg.epochs):
        order = rng.permutation(n)
        losses = np.empty(n)
        t0 = time.perf_counter()
        for lo in range(0, n, bs):
            batch = order[lo:lo + bs]
            B = len(batch)
            stacked, npos = pad_contexts(contexts(np.concatenate([win_idx[batch], lose_idx[batch]])), model_cfg)
            scores, cache = batch_scores(stacked, npos, params, model_cfg)
            loss = hinge_loss(scores[:B], scores[B:], train_cfg.margin)
            losses[lo:lo + B] = loss
            active = (loss > 0).astype(np.float64) / B
            upstream = np.concatenate([-active, active])
            grad = batch_grad(cache, upstream, params, model_cfg)
            theta = opt.step(theta, grad.to_vector())
            params = params.with_vector(theta)
            if on_step is not None:
                on_step(params)
        step_time += time.perf_counter() - t0
        report.epoch_loss.append(float(losses.mean()))
        report.epoch_accuracy.append(_train_accuracy(contexts, win_idx, lose_idx, params, model_cfg))
        logger.debug("epoch %d loss %.4f acc %.4f", epoch, report.epoch_loss[-1], report.epoch_accuracy[-1])

    report.wall_time = time.perf_counter() - start
    report.pairs_per_second = n * train_cfg.epochs / step_time if step_time > 0 else float("inf")
    return params, report


def _train_accuracy(contexts, win_idx, lose_idx, params, cfg, chunk=512) -> float:
    correct = 0
    for lo in range(0, len(win_idx), chunk):
        w = win_idx[lo:lo + chunk]
        l = lose_idx[lo:lo + chunk]
        stacked, npos = pad_contexts(contexts(np.concatenate([w, l])), cfg)
        s = batch_scores(stacked, npos, params, cfg)[0]
        correct += int(np.sum(s[:len(w)] > s[len(w):]))
    return correct / len(win_idx)


def fit_ranker(pairs, embeddings, model_cfg, train_cfg, text_cfg=None) -> Ranker:
    params, _ = train(pairs, embeddings, model_cfg, train_cfg, text_cfg)
    return Ranker(params, model_cfg, embeddings, text_cfg)
