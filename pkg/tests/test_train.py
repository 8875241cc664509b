import math

import numpy as np
import pytest

from titlerank.corpus import filter_posts
from titlerank.model import ModelConfig, batch_scores, init_params, pad_contexts, self_attention
from titlerank.pairing import make_pair, pair_posts
from titlerank.text import EmbeddingTable, TextConfig, embed_title, tokenize
from titlerank.train import (
    SGD,
    Adam,
    TrainConfig,
    TrainingError,
    fit_ranker,
    hinge_loss,
    train,
)

from conftest import make_post


@pytest.fixture(scope="module")
def synth_pairs(small_synth):
    return pair_posts(filter_posts(small_synth.posts))


def small_cfg(dim, **kw):
    return ModelConfig(dim=dim, kernel_size=kw.pop("kernel_size", 3), max_len=30, **kw)


class TestHinge:
    @pytest.mark.parametrize("x1,x2,margin,expected", [
        (3.0, 1.0, 0.0, 0.0),
        (1.0, 3.0, 0.0, 2.0),
        (2.0, 2.0, 1.0, 1.0),
        (2.0, 2.0, 0.0, 0.0),
        (2.5, 2.0, 1.0, 0.5),
    ])
    def test_values(self, x1, x2, margin, expected):
        assert hinge_loss(x1, x2, margin) == expected

    def test_vectorized(self):
        np.testing.assert_array_equal(hinge_loss(np.array([0.0, 5.0]), np.array([1.0, 1.0])), [1.0, 0.0])


class TestOptimizers:
    def test_sgd_step(self):
        assert SGD(2, 0.1).step(np.array([1.0, 1.0]), np.array([2.0, -1.0])).tolist() == [0.8, 1.1]

    def test_adam_first_step_is_sign_sized(self):
        # after bias correction m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps)
        g = np.array([0.5, -2.0, 0.0])
        out = Adam(3, 0.01).step(np.zeros(3), g)
        np.testing.assert_allclose(out, -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12)


def two_title_table():
    rng = np.random.default_rng(7)
    return EmbeddingTable(["great", "news", "sad", "day"], rng.normal(size=(4, 6)))


class TestTrain:
    def test_single_pair_is_separated(self):
        table = two_title_table()
        pair = make_pair(make_post(0, 50, 100, "great news"), make_post(1, 5, 200, "sad day"))
        cfg = ModelConfig(dim=6, kernel_size=1, max_len=4)
        params, report = train([pair], table, cfg, TrainConfig(epochs=200, learning_rate=1e-2, margin=1.0))
        assert report.epoch_loss[-1] == 0.0
        assert report.epoch_accuracy[-1] == 1.0

    def test_deterministic(self, small_synth, synth_pairs):
        cfg = small_cfg(32)
        tc = TrainConfig(epochs=2, seed=11, learning_rate=1e-2, margin=1.0)
        a, _ = train(synth_pairs, small_synth.embeddings, cfg, tc)
        b, _ = train(synth_pairs, small_synth.embeddings, cfg, tc)
        assert np.array_equal(a.to_vector(), b.to_vector())

    def test_seed_matters(self, small_synth, synth_pairs):
        cfg = small_cfg(32)
        a, _ = train(synth_pairs, small_synth.embeddings, cfg, TrainConfig(epochs=1, seed=1))
        b, _ = train(synth_pairs, small_synth.embeddings, cfg, TrainConfig(epochs=1, seed=2))
        assert not np.array_equal(a.to_vector(), b.to_vector())

    @pytest.mark.parametrize("optimizer", ["sgd", "adam"])
    def test_cached_contexts_are_bit_identical(self, small_synth, synth_pairs, optimizer):
        cfg = small_cfg(32, num_filters=2)
        tc = TrainConfig(epochs=2, optimizer=optimizer, learning_rate=1e-2, margin=1.0)
        a, ra = train(synth_pairs[:300], small_synth.embeddings, cfg, tc, cache_contexts=True)
        b, rb = train(synth_pairs[:300], small_synth.embeddings, cfg, tc, cache_contexts=False)
        assert np.array_equal(a.to_vector(), b.to_vector())
        assert ra.epoch_loss == rb.epoch_loss

    def test_sgd_step_decreases_full_batch_loss(self, small_synth, synth_pairs):
        pairs = synth_pairs[:200]
        cfg = small_cfg(32)
        init = init_params(4, cfg)

        def mean_loss(params):
            ctx = [self_attention(embed_title(tokenize(t), small_synth.embeddings).rows)[1]
                   for t in [p.winner.title for p in pairs] + [p.loser.title for p in pairs]]
            s = batch_scores(*pad_contexts(ctx, cfg), params, cfg)[0]
            return float(hinge_loss(s[:len(pairs)], s[len(pairs):], 1.0).mean())

        tc = TrainConfig(epochs=1, batch_size=len(pairs), optimizer="sgd", learning_rate=1e-4, margin=1.0)
        after, _ = train(pairs, small_synth.embeddings, cfg, tc, init=init)
        assert mean_loss(after) < mean_loss(init)

    def test_on_step_count(self, small_synth, synth_pairs):
        calls = []
        pairs = synth_pairs[:130]
        train(pairs, small_synth.embeddings, small_cfg(32), TrainConfig(epochs=2, batch_size=64),
              on_step=lambda p: calls.append(1))
        assert len(calls) == 2 * math.ceil(130 / 64)

    def test_unembeddable_pairs_dropped(self):
        table = two_title_table()
        good = make_pair(make_post(0, 50, 100, "great news"), make_post(1, 5, 200, "sad day"))
        bad = make_pair(make_post(2, 50, 300, "great news"), make_post(3, 5, 400, "zebra yak"))
        _, report = train([good, bad], table, ModelConfig(dim=6, kernel_size=1, max_len=4), TrainConfig(epochs=1))
        assert (report.n_pairs, report.n_dropped) == (1, 1)

    def test_errors(self):
        table = two_title_table()
        bad = make_pair(make_post(2, 50, 300, "zebra"), make_post(3, 5, 400, "yak"))
        with pytest.raises(TrainingError):
            train([bad], table, ModelConfig(dim=6, kernel_size=1, max_len=4), TrainConfig(epochs=1))
        with pytest.raises(TrainingError):
            train([bad], table, ModelConfig(dim=7, kernel_size=1, max_len=4), TrainConfig(epochs=1))

    def test_report_fields(self, small_synth, synth_pairs):
        _, r = train(synth_pairs[:100], small_synth.embeddings, small_cfg(32), TrainConfig(epochs=3))
        assert len(r.epoch_loss) == len(r.epoch_accuracy) == 3
        assert r.pairs_per_second > 0 and r.wall_time > 0

    def test_fit_ranker_scores_strings(self, small_synth, synth_pairs):
        ranker = fit_ranker(synth_pairs[:100], small_synth.embeddings, small_cfg(32),
                            TrainConfig(epochs=1), TextConfig(max_len=30))
        assert math.isfinite(ranker(synth_pairs[0].winner.title))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(margin=-1)
