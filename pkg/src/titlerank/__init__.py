"""Interpretable attention-based pairwise popularity ranking of post titles."""

__version__ = "0.1.0"

from .corpus import Post, PostCollection, filter_posts, load_posts, parse_post_record, subsample
from .pairing import PairingConfig, PostPair, pair_posts, validate_pair
from .text import EmbeddingTable, embed_title, load_embeddings, tokenize
from .model import ModelConfig, ModelParams, Ranker, forward, init_params, self_attention
from .train import TrainConfig, hinge_loss, train
from .evaluation import kfold_cv, paired_t_test, pairwise_accuracy

__all__ = [
    "Post", "PostCollection", "filter_posts", "load_posts", "parse_post_record", "subsample",
    "PairingConfig", "PostPair", "pair_posts", "validate_pair",
    "EmbeddingTable", "embed_title", "load_embeddings", "tokenize",
    "ModelConfig", "ModelParams", "Ranker", "forward", "init_params", "self_attention",
    "TrainConfig", "hinge_loss", "train",
    "kfold_cv", "paired_t_test", "pairwise_accuracy",
]
