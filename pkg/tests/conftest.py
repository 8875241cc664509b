import numpy as np
import pytest

from titlerank import synth
from titlerank.corpus import Post, PostCollection
from titlerank.text import EmbeddingTable


def make_post(i, score, t, title=None, sub="test", stickied=False):
    return Post(f"p{i:04d}", title or f"title number {i}", score, sub, t, stickied)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_table():
    rng = np.random.default_rng(0)
    words = ["my", "cat", "reddit", "remembering", "9/11", "today", "dog", "good", "morning"]
    return EmbeddingTable(words, rng.normal(size=(len(words), 8)))


@pytest.fixture(scope="session")
def small_synth():
    cfg = synth.SynthConfig(n_posts=1500, vocab_size=500, dim=32, n_bigrams=3)
    return synth.generate(cfg, seed=5)


def random_collection(rng, n, sub="test", t0=1_500_000_000, spread=6 * 3600):
    times = np.sort(rng.integers(t0, t0 + spread, size=n))
    scores = np.exp(rng.uniform(np.log(2), np.log(500), size=n)).astype(int)
    posts = [make_post(i, int(s), int(t), sub=sub) for i, (s, t) in enumerate(zip(scores, times))]
    return PostCollection(sorted(posts, key=lambda p: (p.created_utc, p.id)), sub)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(mod.RESULTS, key=lambda r: r[0]):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{status}  criterion {number:>2}: {detail}")
