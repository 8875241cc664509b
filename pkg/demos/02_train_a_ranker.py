"""
Training the pairwise ranker
============================

The scorer embeds a title, lets every word attend to every other word,
slides a small convolution over the result and reads a single number off a
dense layer. Training only ever sees pairs: it pushes the winner's number
above the loser's.
"""

from titlerank.corpus import filter_posts
from titlerank.model import ModelConfig, Ranker
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.train import TrainConfig, train

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
pairs = pair_posts(filter_posts(corpus.posts))

# The model config must agree with the embedding width.
model_cfg = ModelConfig(dim=50, kernel_size=3, num_filters=1, max_len=30)

# A margin of 1 asks the winner to lead by a clear gap. With margin 0 a model
# that scores every title the same has zero loss, which is why the report
# tracks accuracy (ties count as wrong) alongside the loss.
train_cfg = TrainConfig(epochs=10, learning_rate=1e-2, margin=1.0, seed=0)
params, report = train(pairs, corpus.embeddings, model_cfg, train_cfg)

for epoch, (loss, acc) in enumerate(zip(report.epoch_loss, report.epoch_accuracy), 1):
    print(f"epoch {epoch:2d}  loss {loss:.3f}  train accuracy {acc:.3f}")
print(f"{report.pairs_per_second:.0f} pairs/s")

# %%
# A trained ranker scores raw strings. Titles containing a positive plant
# should come out on top.
ranker = Ranker(params, model_cfg, corpus.embeddings)
titles = [
    f"{corpus.positive[0]} {corpus.bigrams[0][0]} {corpus.bigrams[0][1]}",
    f"{corpus.negative[0]} {corpus.bigrams[0][0]} {corpus.bigrams[0][1]}",
]
for t in titles:
    print(f"{ranker(t):8.3f}  {t}")
