"""
One title, two models
=====================

Attention here has no weights of its own and the embeddings are frozen, so
two models trained on different data still attend identically. What
differs is how much each model's score depends on each word, measured by
deleting the word and rescoring.
"""

import numpy as np

from titlerank.corpus import filter_posts
from titlerank.interpret import compare_title
from titlerank.model import ModelConfig, Ranker
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.train import TrainConfig, train

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
pairs = pair_posts(filter_posts(corpus.posts))
# Four filters rather than one. A single ReLU filter leaves a sizeable share
# of titles where it never fires; those titles all score exactly the dense
# bias, and deleting a word from them changes nothing.
cfg = ModelConfig(dim=50, num_filters=4)
tc = TrainConfig(epochs=5, learning_rate=1e-2, margin=1.0)

# Two "communities": one model sees the first half of the pairs, the other
# the second half.
half = len(pairs) // 2
a, _ = train(pairs[:half], corpus.embeddings, cfg, tc)
b, _ = train(pairs[half:], corpus.embeddings, cfg, tc)
model_a = Ranker(a, cfg, corpus.embeddings)
model_b = Ranker(b, cfg, corpus.embeddings)

title = next(p.title for p in corpus.posts if corpus.positive[0] in p.title.lower())
print(title)
print(f"{'token':12s} {'attention':>9s} {'delta A':>8s} {'delta B':>8s}")
for row in compare_title(title, model_a, model_b):
    print(f"{row.token:12s} {row.weight_a:9.4f} {row.loo_delta_a:8.3f} {row.loo_delta_b:8.3f}")

# %%
# The same experiment with one filter shows the silent region.
one = ModelConfig(dim=50)
p1, _ = train(pairs[:half], corpus.embeddings, one, tc)
scores = Ranker(p1, one, corpus.embeddings).score_many([p.title for p in corpus.posts])
print(f"one filter: {np.mean(scores == p1.dense_bias):.0%} of titles score exactly the bias")
