"""Title scorer: parameter-free self-attention, 1-D convolution, dense head.

The attention layer has no weights and the embeddings are frozen, so a
title's attention context is a constant of training. Everything learnable
lives in the convolution and the dense layer, and gradients are derived by
hand below.

Batched routines work on zero-padded context stacks of shape
``(batch, max_len, dim)`` together with the number of valid convolution
positions per title; positions past that count are masked to zero before
the dense layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .text import EmbeddingMatrix, EmbeddingTable, TextConfig, TokenSequence, embed_title, tokenize

ACTIVATIONS = ("relu", "none")


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 300
    kernel_size: int = 3
    num_filters: int = 1
    max_len: int = 30
    activation: str = "relu"
    # False removes the convolution and feeds the flattened context to the dense layer
    use_conv: bool = True

    def __post_init__(self):
        if not 1 <= self.kernel_size <= self.max_len:
            raise ValueError(f"kernel_size must be in [1, max_len], got {self.kernel_size}")
        if self.num_filters < 1 or self.dim < 1:
            raise ValueError("num_filters and dim must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def positions(self) -> int:
        """Convolution output length for a full-width title."""
        return self.max_len - self.kernel_size + 1

    @property
    def dense_width(self) -> int:
        if self.use_conv:
            return self.num_filters * self.positions
        return self.max_len * self.dim


@dataclass
class ModelParams:
    conv_kernel: np.ndarray  # (F, k, dim)
    conv_bias: np.ndarray  # (F,)
    dense_weights: np.ndarray  # (dense_width,), filter-major
    dense_bias: float

    ORDER = ("conv_kernel", "conv_bias", "dense_weights", "dense_bias")

    def arrays(self) -> list[np.ndarray]:
        return [self.conv_kernel, self.conv_bias, self.dense_weights,
                np.atleast_1d(np.float64(self.dense_bias))]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_vector(self, vec: np.ndarray) -> "ModelParams":
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.array(vec[pos:pos + a.size], dtype=np.float64).reshape(a.shape))
            pos += a.size
        if pos != vec.size:
            raise ValueError("parameter vector has the wrong length")
        return ModelParams(out[0], out[1], out[2], float(out[3][0]))

    def copy(self) -> "ModelParams":
        return self.with_vector(self.to_vector())

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays())

    def check(self, cfg: ModelConfig) -> None:
        F = cfg.num_filters if cfg.use_conv else 0
        expected = {
            "conv_kernel": (F, cfg.kernel_size, cfg.dim),
            "conv_bias": (F,),
            "dense_weights": (cfg.dense_width,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if not all(np.all(np.isfinite(a)) for a in self.arrays()):
            raise ValueError("non-finite parameter")


def init_params(seed: int, cfg: ModelConfig) -> ModelParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    k, d = cfg.kernel_size, cfg.dim
    if cfg.use_conv:
        F = cfg.num_filters
        limit = np.sqrt(6.0 / (k * d + k * F))
        kernel = rng.uniform(-limit, limit, size=(F, k, d))
        conv_bias = np.zeros(F)
    else:
        kernel = np.zeros((0, k, d))
        conv_bias = np.zeros(0)
    limit = np.sqrt(6.0 / (cfg.dense_width + 1))
    dense = rng.uniform(-limit, limit, size=cfg.dense_width)
    return ModelParams(kernel, conv_bias, dense, 0.0)


# ---------------------------------------------------------------- attention


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def self_attention(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A, A @ M)`` with ``A = softmax(M M^T / sqrt(d))`` row-wise."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1:
        raise ValueError(f"expected an (n, d) matrix with n >= 1, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entry in embedding matrix")
    A = softmax_rows(M @ M.T / np.sqrt(M.shape[1]))
    return A, A @ M


# ------------------------------------------------------------ batched core


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == "relu" else z


def conv_positions(n: int, cfg: ModelConfig) -> int:
    """Valid output positions for an n-token title (short titles pad up to k)."""
    return max(n, cfg.kernel_size) - cfg.kernel_size + 1


def pad_contexts(contexts: Sequence[np.ndarray], cfg: ModelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stack contexts into a zero-padded ``(B, max_len, dim)`` array.

    Returns the stack and the valid convolution position count per title.
    """
    B = len(contexts)
    out = np.zeros((B, cfg.max_len, cfg.dim))
    npos = np.empty(B, dtype=np.int64)
    for b, ctx in enumerate(contexts):
        n = ctx.shape[0]
        if n > cfg.max_len:
            raise ValueError(f"title has {n} rows, more than max_len={cfg.max_len}")
        if ctx.shape[1] != cfg.dim:
            raise ValueError(f"context dim {ctx.shape[1]} != model dim {cfg.dim}")
        out[b, :n] = ctx
        npos[b] = conv_positions(n, cfg)
    return out, npos


@dataclass
class BatchCache:
    windows: np.ndarray | None  # (B, P, k, d)
    z: np.ndarray | None  # (B, F, P) pre-activation
    mask: np.ndarray | None  # (B, P)
    features: np.ndarray  # (B, dense_width)


def batch_scores(ctx: np.ndarray, npos: np.ndarray, params: ModelParams,
                 cfg: ModelConfig) -> tuple[np.ndarray, BatchCache]:
    if not cfg.use_conv:
        feats = ctx.reshape(ctx.shape[0], -1)
        return feats @ params.dense_weights + params.dense_bias, BatchCache(None, None, None, feats)
    k = cfg.kernel_size
    windows = sliding_window_view(ctx, k, axis=1).transpose(0, 1, 3, 2)
    z = np.einsum("bpkd,fkd->bfp", windows, params.conv_kernel) + params.conv_bias[None, :, None]
    mask = (np.arange(cfg.positions)[None, :] < npos[:, None]).astype(np.float64)
    h = _activate(z, cfg.activation) * mask[:, None, :]
    feats = h.reshape(h.shape[0], -1)
    return feats @ params.dense_weights + params.dense_bias, BatchCache(windows, z, mask, feats)


def batch_grad(cache: BatchCache, upstream: np.ndarray, params: ModelParams,
               cfg: ModelConfig) -> ModelParams:
    """Gradient of ``sum_b upstream[b] * score_b`` with respect to the parameters."""
    dw = cache.features.T @ upstream
    db = float(upstream.sum())
    if not cfg.use_conv:
        return ModelParams(np.zeros_like(params.conv_kernel), np.zeros_like(params.conv_bias), dw, db)
    F, P = cfg.num_filters, cfg.positions
    dh = upstream[:, None, None] * params.dense_weights.reshape(F, P)[None]
    dz = dh * cache.mask[:, None, :]
    if cfg.activation == "relu":
        dz = dz * (cache.z > 0)
    dbc = dz.sum(axis=(0, 2))
    dK = np.einsum("bfp,bpkd->fkd", dz, cache.windows)
    return ModelParams(dK, dbc, dw, db)


# ------------------------------------------------------------ single title


@dataclass
class ForwardTrace:
    attention: np.ndarray
    context: np.ndarray
    conv_out: np.ndarray  # (F, n_positions); empty rows when the conv is bypassed
    score: float
    tokens: tuple[str, ...] = field(default=())


def conv1d_forward(context: np.ndarray, params: ModelParams, cfg: ModelConfig) -> np.ndarray:
    """Activated convolution output of shape ``(F, max(n, k) - k + 1)``."""
    n = context.shape[0]
    if n < cfg.kernel_size:
        context = np.vstack([context, np.zeros((cfg.kernel_size - n, context.shape[1]))])
    windows = sliding_window_view(context, cfg.kernel_size, axis=0).transpose(0, 2, 1)
    z = np.einsum("pkd,fkd->fp", windows, params.conv_kernel) + params.conv_bias[:, None]
    return _activate(z, cfg.activation)


def dense_forward(features: np.ndarray, params: ModelParams) -> float:
    features = np.asarray(features, dtype=np.float64).ravel()
    if features.shape != params.dense_weights.shape:
        raise ValueError(
            f"dense input has {features.size} values, weights expect {params.dense_weights.size}"
        )
    return float(features @ params.dense_weights + params.dense_bias)


def pad_conv_out(conv_out: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    padded = np.zeros((cfg.num_filters, cfg.positions))
    padded[:, :conv_out.shape[1]] = conv_out
    return padded.ravel()


def forward(m: EmbeddingMatrix | np.ndarray, params: ModelParams, cfg: ModelConfig) -> ForwardTrace:
    rows = m.rows if isinstance(m, EmbeddingMatrix) else np.asarray(m, dtype=np.float64)
    tokens = m.kept_tokens if isinstance(m, EmbeddingMatrix) else ()
    A, ctx = self_attention(rows)
    return forward_context(A, ctx, params, cfg, tokens)


def forward_context(A, ctx, params, cfg, tokens=()) -> ForwardTrace:
    stacked, npos = pad_contexts([ctx], cfg)
    scores, cache = batch_scores(stacked, npos, params, cfg)
    if cfg.use_conv:
        conv_out = cache.features.reshape(cfg.num_filters, cfg.positions)[:, :npos[0]]
    else:
        conv_out = np.zeros((0, 0))
    return ForwardTrace(A, ctx, conv_out, float(scores[0]), tuple(tokens))


def backward(trace_winner: ForwardTrace, trace_loser: ForwardTrace, params: ModelParams,
             cfg: ModelConfig, margin: float = 0.0) -> ModelParams:
    """Subgradient of ``max(0, margin + x_loser - x_winner)`` for one pair.

    Zero is taken at the kink. Embeddings and attention carry no parameters.
    """
    if margin + trace_loser.score - trace_winner.score <= 0:
        return zeros_like(params)
    stacked, npos = pad_contexts([trace_winner.context, trace_loser.context], cfg)
    _, cache = batch_scores(stacked, npos, params, cfg)
    return batch_grad(cache, np.array([-1.0, 1.0]), params, cfg)


def zeros_like(params: ModelParams) -> ModelParams:
    return params.with_vector(np.zeros(params.size))


# ---------------------------------------------------------------- scorer


class Ranker:
    """Callable title scorer bundling weights with the text pipeline."""

    kind = "attention_conv"

    def __init__(self, params: ModelParams, cfg: ModelConfig, embeddings: EmbeddingTable,
                 text: TextConfig | None = None, trained: bool = True):
        params.check(cfg)
        self.trained = trained
        self.params = params
        self.cfg = cfg
        self.embeddings = embeddings
        self.text = text or TextConfig(max_len=cfg.max_len)

    def embed(self, title: str) -> EmbeddingMatrix:
        return embed_title(tokenize(title), self.embeddings, self.cfg.max_len, self.text.oov)

    def trace(self, title: str) -> ForwardTrace:
        return forward(self.embed(title), self.params, self.cfg)

    def score_tokens(self, tokens: Sequence[str]) -> float:
        seq = TokenSequence(tuple(tokens), " ".join(tokens))
        m = embed_title(seq, self.embeddings, self.cfg.max_len, self.text.oov)
        return forward(m, self.params, self.cfg).score

    def __call__(self, title: str) -> float:
        return self.trace(title).score

    def score_many(self, titles: Sequence[str]) -> np.ndarray:
        contexts = [self_attention(self.embed(t).rows)[1] for t in titles]
        out = np.empty(len(titles))
        for start in range(0, len(titles), 256):
            stacked, npos = pad_contexts(contexts[start:start + 256], self.cfg)
            out[start:start + 256] = batch_scores(stacked, npos, self.params, self.cfg)[0]
        return out

    def with_params(self, params: ModelParams) -> "Ranker":
        return Ranker(params, self.cfg, self.embeddings, self.text, self.trained)


def ablated(cfg: ModelConfig) -> ModelConfig:
    return replace(cfg, use_conv=False)
