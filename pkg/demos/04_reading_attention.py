"""
Which words draw attention?
===========================

Each title gets an attention matrix: row i says how word i mixes in the
other words. Averaging the attention a word receives over the whole corpus
gives a ranking of words, and averaging word-to-word weights gives a
directed graph.
"""

from titlerank.corpus import filter_posts
from titlerank.interpret import attention_graph, rank_edges, top_k_words, word_attention_weights
from titlerank.model import ModelConfig, Ranker
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.train import TrainConfig, train

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
pairs = pair_posts(filter_posts(corpus.posts))
cfg = ModelConfig(dim=50)
params, _ = train(pairs, corpus.embeddings, cfg, TrainConfig(epochs=5, learning_rate=1e-2, margin=1.0))
ranker = Ranker(params, cfg, corpus.embeddings)
titles = [p.title for p in corpus.posts]

# %%
# Top words by mean incoming attention. The plants sit far out along a
# shared direction in embedding space, so every other word attends to them.
top = top_k_words(word_attention_weights(ranker, titles, min_freq=5), 15)
planted = set(corpus.positive)
for w in top:
    mark = "  <- positive plant" if w.token in planted else ""
    print(f"{w.token:12s} {w.weight:.4f} ({w.occurrences} uses){mark}")

# %%
# The graph keeps the strongest word-to-word edges. An edge a -> b means a is
# context that b attends to. Plants dominate, because every word attends to
# them.
graph = attention_graph(ranker, titles, top_edges=10, stopwords=[], min_count=3)
for e in graph.edges:
    print(f"{e.src:>10s} -> {e.dst:<10s} {e.weight:.3f} over {e.count} titles")

# %%
# Among ordinary words, the planted bigrams stand out: the partners have
# nearly parallel vectors, so each attends strongly to the other.
edges = rank_edges(ranker, titles, stopwords=[], min_count=3)
rank = {(e.src, e.dst): i for i, e in enumerate(edges)}
for a, b in corpus.bigrams:
    print(f"{a} -> {b}: rank {rank[(a, b)] + 1} of {len(edges)}")
graph.write_dot("attention_graph.dot")
print("wrote attention_graph.dot (render with: dot -Tpng attention_graph.dot)")
