"""Acceptance criteria, each run at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary by
conftest.py) and then asserts. Criterion 11 needs a real post dump and is
skipped unless TITLERANK_REAL_POSTS and TITLERANK_REAL_EMBEDDINGS are set.
"""

import os
import time

import numpy as np
import pytest
import scipy.stats

from titlerank.baselines import BaselineConfig, train_baseline
from titlerank.corpus import filter_posts, load_posts, subsample
from titlerank.evaluation import kfold_cv, paired_t_test, summarize
from titlerank.interpret import rank_edges, top_k_words, word_attention_weights
from titlerank.model import (
    ModelConfig,
    Ranker,
    ablated,
    backward,
    batch_grad,
    batch_scores,
    forward,
    init_params,
    pad_contexts,
    self_attention,
)
from titlerank.pairing import PairingConfig, pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.text import TextConfig, load_embeddings
from titlerank.train import TrainConfig, train

from conftest import random_collection
from test_pairing import brute_force_greedy

RESULTS = []

# The library defaults (margin 0, lr 1e-3) admit the constant-output solution
# with zero loss; acceptance trains with a unit margin and a larger step.
MAIN_MODEL = ModelConfig(dim=300, kernel_size=3, num_filters=1, max_len=30)
MAIN_TRAIN = TrainConfig(epochs=20, batch_size=64, learning_rate=1e-2, margin=1.0, seed=0)


def record(number, ok, detail):
    RESULTS.append((number, bool(ok), detail))
    assert ok, f"criterion {number}: {detail}"


# ----------------------------------------------------------------- 1 to 3


def test_01_attention_rows(rng):
    start = time.perf_counter()
    worst, single_ok = 0.0, True
    for i in range(1000):
        n = int(rng.integers(1, 31))
        d = (4, 300)[i % 2]
        M = rng.normal(size=(n, d)) * rng.uniform(0.1, 3.0)
        A, ctx = self_attention(M)
        worst = max(worst, float(np.abs(A.sum(axis=1) - 1).max()))
        if n == 1:
            single_ok &= bool(np.array_equal(ctx, M))
    elapsed = time.perf_counter() - start
    record(1, worst < 1e-6 and single_ok and elapsed < 5,
           f"max |row sum - 1| = {worst:.2e}, n=1 exact: {single_ok}, {elapsed:.2f}s")


def _oracle_loss(theta, shapes, windows_w, windows_l, npos_w, npos_l, k, L, margin):
    """Hinge loss in extended precision from precomputed conv windows.

    Written independently of the model code: conv as an explicit matrix
    product over stacked windows, ReLU, zero padding, dense dot product.
    """
    (F, _, _), n_dense = shapes
    kd = windows_w.shape[1]
    kern = theta[:F * kd].reshape(F, kd)
    cb = theta[F * kd:F * kd + F]
    dw = theta[F * kd + F:F * kd + F + n_dense]
    db = theta[-1]

    def score(windows, npos):
        z = np.maximum(windows @ kern.T + cb, 0).T
        feat = np.zeros((F, L - k + 1), dtype=np.longdouble)
        feat[:, :npos] = z
        return feat.ravel() @ dw + db

    return max(np.longdouble(0), margin + score(windows_l, npos_l) - score(windows_w, npos_w))


def _windows(M, k):
    """Attention context in extended precision, cut into flattened conv windows."""
    M = M.astype(np.longdouble)
    n, d = M.shape
    S = M @ M.T / np.sqrt(np.longdouble(d))
    S -= S.max(axis=1, keepdims=True)
    E = np.exp(S)
    C = (E / E.sum(axis=1, keepdims=True)) @ M
    if n < k:
        C = np.vstack([C, np.zeros((k - n, d), dtype=np.longdouble)])
    npos = C.shape[0] - k + 1
    return np.stack([C[i:i + k].ravel() for i in range(npos)]), npos


def test_02_gradient_fidelity(rng):
    start = time.perf_counter()
    eps, margin, L = 1e-5, 1.0, 30
    worst, pairs_done, worst_where = 0.0, 0, ""
    while pairs_done < 100:
        d = (4, 300)[pairs_done % 2]
        k, F = (int(rng.integers(1, 4)), int(rng.integers(1, 3))) if d == 4 else (3, 1)
        cfg = ModelConfig(dim=d, kernel_size=k, num_filters=F, max_len=L)
        p = init_params(int(rng.integers(1 << 30)), cfg)
        p.conv_bias[:] = rng.normal(0, 0.1, F)
        Mw = rng.normal(size=(int(rng.integers(1, L + 1)), d))
        Ml = rng.normal(size=(int(rng.integers(1, L + 1)), d))
        tw, tl = forward(Mw, p, cfg), forward(Ml, p, cfg)
        if margin + tl.score - tw.score <= 1e-3:
            continue  # inactive pair
        pairs_done += 1

        single = backward(tw, tl, p, cfg, margin).to_vector()
        stacked, npos = pad_contexts([tw.context, tl.context], cfg)
        batched = batch_grad(batch_scores(stacked, npos, p, cfg)[1], np.array([-1.0, 1.0]), p, cfg).to_vector()

        ww, nw = _windows(Mw, k)
        wl, nl = _windows(Ml, k)
        theta = p.to_vector().astype(np.longdouble)
        shapes = (p.conv_kernel.shape, p.dense_weights.size)
        num = np.empty(theta.size)
        for i in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[i] += eps
            down[i] -= eps
            num[i] = float((_oracle_loss(up, shapes, ww, wl, nw, nl, k, L, margin)
                            - _oracle_loss(down, shapes, ww, wl, nw, nl, k, L, margin)) / (2 * eps))
        for g in (single, batched):
            rel = np.abs(g - num) / np.maximum(np.maximum(np.abs(g), np.abs(num)), 1e-8)
            if rel.max() > worst:
                worst, worst_where = float(rel.max()), f"d={d} k={k} F={F} coord {int(rel.argmax())}"
    elapsed = time.perf_counter() - start
    record(2, worst < 1e-4 and elapsed < 30,
           f"100 active pairs, max relative error {worst:.2e} ({worst_where}), {elapsed:.1f}s")


def test_03_permutation_equivariance(rng):
    worst = 0.0
    for i in range(100):
        n = int(rng.integers(1, 31))
        M = rng.normal(size=(n, (4, 300)[i % 2]))
        P = np.eye(n)[rng.permutation(n)]
        A, _ = self_attention(M)
        A2, _ = self_attention(P @ M)
        worst = max(worst, float(np.abs(A2 - P @ A @ P.T).max()))
    record(3, worst <= 1e-10, f"max deviation {worst:.2e}")


# -------------------------------------------------------------------- 4


def test_04_pairing_oracle(rng):
    mismatches, violations = 0, 0
    for _ in range(50):
        n = int(rng.integers(2, 201))
        c = random_collection(rng, n, spread=int(rng.integers(600, 12 * 3600)))
        got = [(p.winner.id, p.loser.id) for p in pair_posts(c)]
        want = [(a.id, b.id) for a, b in brute_force_greedy(list(c))]
        mismatches += got != want
        for p in pair_posts(c):
            w, l = p.winner, p.loser
            violations += not (w.score - l.score >= 20 and w.score >= 2 * l.score
                               and abs(w.created_utc - l.created_utc) <= 1800
                               and w.subreddit == l.subreddit)
    record(4, mismatches == 0 and violations == 0,
           f"50 corpora: {mismatches} mismatches vs brute force, {violations} constraint violations")


# ------------------------------------------------------- planted corpus


@pytest.fixture(scope="module")
def planted():
    corpus = generate(SynthConfig(n_posts=5000, vocab_size=2000, n_positive=15, n_negative=15), seed=0)
    pairs = pair_posts(filter_posts(corpus.posts))
    return corpus, pairs


def _fit_main(cfg, embeddings):
    def fit(pairs):
        params, _ = train(pairs, embeddings, cfg, MAIN_TRAIN)
        return Ranker(params, cfg, embeddings)
    return fit


@pytest.fixture(scope="module")
def main_cv(planted):
    corpus, pairs = planted
    start = time.perf_counter()
    reports = kfold_cv(pairs, _fit_main(MAIN_MODEL, corpus.embeddings), k=5, seed=0)
    return reports, time.perf_counter() - start


def test_05_planted_signal(planted, main_cv):
    corpus, pairs = planted
    reports, t_main = main_cv
    start = time.perf_counter()
    onehot = kfold_cv(pairs, lambda tr: train_baseline("onehot", tr, BaselineConfig()), k=5, seed=0)
    elapsed = t_main + time.perf_counter() - start
    m, _ = summarize(reports)
    o, _ = summarize(onehot)
    record(5, m >= 0.90 and o >= 0.85 and elapsed < 300,
           f"{len(pairs)} pairs: main {m:.4f} (>= 0.90), one-hot {o:.4f} (>= 0.85), {elapsed:.0f}s")


def test_06_interpretability(planted):
    corpus, pairs = planted
    model = _fit_main(MAIN_MODEL, corpus.embeddings)(pairs)
    titles = [p.title for p in corpus.posts]
    top = top_k_words(word_attention_weights(model, titles, min_freq=5), 15)
    hits = len({w.token for w in top} & set(corpus.positive))

    edges = rank_edges(model, titles, stopwords=[])
    rank = {(e.src, e.dst): i for i, e in enumerate(edges)}
    cutoff = len(edges) / 10
    bigram_ranks = [rank[(a, b)] for a, b in corpus.bigrams]
    in_decile = all(r < cutoff for r in bigram_ranks)
    record(6, hits >= 10 and in_decile,
           f"{hits}/15 positive plants in top-15; bigram edge ranks {bigram_ranks} "
           f"of {len(edges)} (top decile < {cutoff:.0f})")


def test_07_frozen_features(planted):
    corpus, pairs = planted
    tc = TrainConfig(epochs=3, optimizer="sgd", learning_rate=1e-2, margin=1.0, seed=0)
    traj = {True: [], False: []}
    for cache in (True, False):
        train(pairs, corpus.embeddings, MAIN_MODEL, tc, cache_contexts=cache,
              on_step=lambda p, c=cache: traj[c].append(p.to_vector()))
    same = len(traj[True]) == len(traj[False]) and all(
        np.array_equal(a, b) for a, b in zip(traj[True], traj[False]))
    record(7, same, f"{len(traj[True])} sgd steps over 3 epochs, bit-identical: {same}")


# -------------------------------------------------------------------- 8


def test_08_statistics_oracle():
    gen = np.random.default_rng(2024)
    vectors = [([0.88, 0.87, 0.89, 0.86, 0.88], [0.84, 0.85, 0.83, 0.86, 0.84]),
               ([0.90, 0.90, 0.90, 0.90, 0.99], [0.90, 0.90, 0.90, 0.90, 0.60])]
    while len(vectors) < 20:
        n = int(gen.integers(2, 11))
        a = gen.uniform(0.5, 0.95, n)
        vectors.append((a.tolist(), (a - gen.normal(gen.normal(0, 0.02), 0.02, n)).tolist()))
    worst_t = worst_p = 0.0
    for a, b in vectors:
        r = paired_t_test(a, b)
        ref = scipy.stats.ttest_rel(a, b)
        worst_t = max(worst_t, abs(r.t_statistic - ref.statistic))
        worst_p = max(worst_p, abs(r.p_value - ref.pvalue))
    record(8, worst_t <= 1e-9 and worst_p <= 1e-9,
           f"20 pairs vs scipy.stats.ttest_rel: max |dt| {worst_t:.1e}, max |dp| {worst_p:.1e}")


# ----------------------------------------------------------------- 9, 10


def test_09_conv_ablation(planted, main_cv):
    corpus, pairs = planted
    full, _ = summarize(main_cv[0])
    cfg = ablated(ModelConfig(dim=300, kernel_size=1, max_len=30))
    bypass, _ = summarize(kfold_cv(pairs, _fit_main(cfg, corpus.embeddings), k=5, seed=0))
    record(9, full >= bypass - 0.02, f"full {full:.4f} vs no-conv {bypass:.4f} (diff {full - bypass:+.4f})")


def test_10_throughput(planted):
    corpus, pairs = planted
    _, report = train(pairs, corpus.embeddings, MAIN_MODEL, TrainConfig(epochs=2, batch_size=64))
    record(10, True, f"{report.pairs_per_second:.0f} pairs/s at batch 64 (reported, not asserted)")


# -------------------------------------------------------------------- 11


def test_11_real_data():
    posts_path = os.environ.get("TITLERANK_REAL_POSTS")
    emb_path = os.environ.get("TITLERANK_REAL_EMBEDDINGS")
    if not posts_path or not emb_path:
        RESULTS.append((11, None, "skipped: set TITLERANK_REAL_POSTS and TITLERANK_REAL_EMBEDDINGS"))
        pytest.skip("no real post dump supplied")
    emb = load_embeddings(emb_path, dim=300)
    c = filter_posts(load_posts(posts_path))
    fraction = float(os.environ.get("TITLERANK_REAL_FRACTION", "1.0"))
    pairs = pair_posts(subsample(c, fraction, seed=0), PairingConfig())
    cfg = ModelConfig()
    text = TextConfig(max_len=cfg.max_len)

    def fit(tr):
        params, _ = train(tr, emb, cfg, MAIN_TRAIN, text)
        return Ranker(params, cfg, emb, text)

    acc, _ = summarize(kfold_cv(pairs, fit, k=5, seed=0))
    record(11, 0.55 <= acc <= 0.70, f"{len(pairs)} pairs, CV accuracy {acc:.4f} (in [0.55, 0.70])")
