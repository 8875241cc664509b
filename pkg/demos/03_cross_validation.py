"""
Cross-validation against baselines
==================================

Accuracy is the share of held-out pairs in which the winner outscores the
loser. Five folds share one seeded split, so the per-fold accuracies of two
models can be compared with a paired t-test.
"""

from titlerank.baselines import BaselineConfig, train_baseline
from titlerank.corpus import filter_posts
from titlerank.evaluation import kfold_cv, paired_t_test, summarize
from titlerank.model import ModelConfig, Ranker
from titlerank.pairing import pair_posts
from titlerank.synth import SynthConfig, generate
from titlerank.train import TrainConfig, train

corpus = generate(SynthConfig(n_posts=2000, vocab_size=600, dim=50), seed=0)
pairs = pair_posts(filter_posts(corpus.posts))
emb = corpus.embeddings
model_cfg = ModelConfig(dim=50)
train_cfg = TrainConfig(epochs=10, learning_rate=1e-2, margin=1.0)


def fit_attention(train_pairs):
    params, _ = train(train_pairs, emb, model_cfg, train_cfg)
    return Ranker(params, model_cfg, emb)


# Each fitter takes training pairs and returns something that scores strings.
fitters = {
    "attention": fit_attention,
    "one-hot logistic": lambda tr: train_baseline("onehot", tr, BaselineConfig()),
    "embedding MLP": lambda tr: train_baseline("mlp", tr, BaselineConfig(hidden=64, learning_rate=1e-3), emb),
}
results = {}
for name, fit in fitters.items():
    reports = kfold_cv(pairs, fit, k=5, seed=0)
    results[name] = [r.accuracy for r in reports]
    mean, std = summarize(reports)
    print(f"{name:18s} {mean:.3f} ({std:.3f})")

# %%
# The t-test runs on fold-by-fold differences.
for name in ("one-hot logistic", "embedding MLP"):
    sig = paired_t_test(results["attention"], results[name])
    verdict = "significant" if sig.significant_at_05 else "not significant"
    print(f"attention vs {name}: diff {sig.mean_diff:+.3f}, p = {sig.p_value:.3g} ({verdict})")
