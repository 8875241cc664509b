"""
A corpus with known answers
===========================

Real post dumps cannot be redistributed, so everything in these demos runs
on a generated corpus whose ground truth is known. Some words ("plants")
raise a post's score, others lower it, and a few word pairs always appear
together. This script builds one and looks at what came out.
"""

import numpy as np

from titlerank.corpus import filter_posts
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate

# A small corpus keeps every demo under a few seconds. The embedding table is
# part of the output: each plant word leans along one shared direction.
cfg = SynthConfig(n_posts=2000, vocab_size=600, dim=50)
corpus = generate(cfg, seed=0)

print("positive plants:", corpus.positive[:5], "...")
print("negative plants:", corpus.negative[:5], "...")
print("bigrams:", corpus.bigrams)

# %%
# A few titles with their scores. Plants add +120 or -34 to a base of 40.
for post in list(corpus.posts)[:5]:
    print(f"{post.score:5d}  {post.title}")

# %%
# Scores are a sum of planted effects plus noise, so a least-squares fit
# on the plant counts recovers the effects.
X = np.hstack([np.ones((len(corpus.posts), 1)), corpus.plant_counts])
y = np.array([p.score for p in corpus.posts], dtype=float)
coef, *_ = np.linalg.lstsq(X, y, rcond=None)
print(f"intercept {coef[0]:.1f}, mean positive effect {coef[1:16].mean():.1f}, "
      f"mean negative effect {coef[16:].mean():.1f}")

# %%
# Filtering drops low-score and stickied posts. Pairing then matches posts
# made within 30 minutes of each other whose scores differ by at least 20
# and by a factor of two.
kept = filter_posts(corpus.posts)
pairs = pair_posts(kept)
print(f"{len(corpus.posts)} posts -> {len(kept)} after filtering -> {len(pairs)} pairs")
w, l = pairs[0].winner, pairs[0].loser
print(f"example pair: {w.score} '{w.title}'  beats  {l.score} '{l.title}'")
