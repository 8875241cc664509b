"""
Word scores without a model
===========================

A quick look at the raw data before any training. Each post's score is
scaled by the average of the subreddit's top posts. A word then gets the
mean scaled score of the posts it appears in, and the words are cut into
quartiles.
"""

from titlerank.interpret import quartile_word_scores
from titlerank.synth import SynthConfig, generate

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
table = quartile_word_scores(list(corpus.posts), min_freq=10, top_n_norm=100, sample=5, seed=0)

print(f"normalizer (mean of top 100 scores): {table.normalizer:.1f}")
print("quartile boundaries:", [round(b, 3) for b in table.boundaries])
for q, words in enumerate(table.samples):
    print(f"Q{q + 1}: {', '.join(words)}")

# %%
# Positive plants should all land in the top quartile, negative ones low.
top = [w for w in corpus.positive if table.quartiles.get(w) == 3]
low = [w for w in corpus.negative if table.quartiles.get(w) == 0]
print(f"{len(top)}/{len(corpus.positive)} positive plants in Q4, "
      f"{len(low)}/{len(corpus.negative)} negative plants in Q1")
