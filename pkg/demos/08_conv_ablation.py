"""
What does the convolution buy?
==============================

Turning the convolution off wires the attention output straight into the
dense layer. On this planted corpus the answer is instructive: the plants
add the same amount wherever they appear, so a plain linear readout of the
attended words already captures them, and the bypass does at least as well.
"""

from titlerank.corpus import filter_posts
from titlerank.evaluation import kfold_cv, summarize
from titlerank.model import ModelConfig, Ranker, ablated
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.train import TrainConfig, train

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
pairs = pair_posts(filter_posts(corpus.posts))
tc = TrainConfig(epochs=10, learning_rate=1e-2, margin=1.0)


def fitter(cfg):
    def fit(tr):
        params, _ = train(tr, corpus.embeddings, cfg, tc)
        return Ranker(params, cfg, corpus.embeddings)
    return fit


configs = {
    "conv k=3, 1 filter": ModelConfig(dim=50),
    "conv k=3, 4 filters": ModelConfig(dim=50, num_filters=4),
    "no conv": ablated(ModelConfig(dim=50, kernel_size=1)),
}
for name, cfg in configs.items():
    mean, std = summarize(kfold_cv(pairs, fitter(cfg), k=5, seed=0))
    print(f"{name:20s} {mean:.3f} ({std:.3f})")
