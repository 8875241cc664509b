"""Binary checkpoints for the scorer and the baselines.

Layout::

    8 bytes   magic b"TITLERNK"
    uint32    format version (little-endian)
    uint32    header length in bytes
    header    UTF-8 JSON describing the model and array layout
    payload   little-endian float64 arrays, in header order

A plain-text JSON manifest with seed, configs and training metadata is
written next to every checkpoint as ``<path>.manifest.json``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .baselines import GloveMlp, LogisticParams, MlpParams, OneHotLogistic, Vocabulary
from .model import ModelConfig, ModelParams, Ranker
from .text import EmbeddingTable, TextConfig

MAGIC = b"TITLERNK"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _write(path, kind: str, arrays: list[tuple[str, np.ndarray]], extra: dict) -> None:
    header = dict(extra)
    header["kind"] = kind
    header["arrays"] = [{"name": n, "shape": list(np.shape(a))} for n, a in arrays]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read(path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    header = json.loads(data[16:16 + hlen].decode("utf-8"))
    pos = 16 + hlen
    arrays = {}
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        a = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
        arrays[entry["name"]] = a.reshape(entry["shape"])
        pos += 8 * count
    if pos != len(data):
        raise CheckpointError(f"{path}: payload size does not match header")
    return header, arrays


def write_manifest(path, metadata: dict) -> Path:
    out = Path(str(path) + ".manifest.json")
    out.write_text(json.dumps(metadata, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return out


def save(path, scorer, metadata: dict | None = None) -> None:
    """Write any scorer produced by this package."""
    if isinstance(scorer, Ranker):
        p = scorer.params
        arrays = [("conv_kernel", p.conv_kernel), ("conv_bias", p.conv_bias),
                  ("dense_weights", p.dense_weights), ("dense_bias", np.array([p.dense_bias]))]
        extra = {"model_config": asdict(scorer.cfg), "text_config": asdict(scorer.text)}
        kind = "attention_conv"
    elif isinstance(scorer, OneHotLogistic):
        arrays = [("weights", scorer.params.weights), ("bias", np.array([scorer.params.bias]))]
        extra = {"vocab": scorer.vocab.tokens}
        kind = "onehot_logistic"
    elif isinstance(scorer, GloveMlp):
        p = scorer.params
        arrays = [("w1", p.w1), ("b1", p.b1), ("w2", p.w2), ("b2", np.array([p.b2]))]
        extra = {"hidden": int(p.w1.shape[1]), "dim": int(p.w1.shape[0])}
        kind = "glove_mlp"
    else:
        raise CheckpointError(f"cannot checkpoint {type(scorer).__name__}")
    _write(path, kind, arrays, extra)
    if metadata is not None:
        write_manifest(path, dict(metadata, kind=kind, format_version=FORMAT_VERSION))


def load(path, embeddings: EmbeddingTable | None = None):
    header, a = _read(path)
    kind = header["kind"]
    if kind == "attention_conv":
        if embeddings is None:
            raise CheckpointError("attention_conv checkpoints need the embedding table")
        cfg = ModelConfig(**header["model_config"])
        params = ModelParams(a["conv_kernel"], a["conv_bias"], a["dense_weights"], float(a["dense_bias"][0]))
        return Ranker(params, cfg, embeddings, TextConfig(**header["text_config"]))
    if kind == "onehot_logistic":
        return OneHotLogistic(LogisticParams(a["weights"], float(a["bias"][0])), Vocabulary(header["vocab"]))
    if kind == "glove_mlp":
        if embeddings is None:
            raise CheckpointError("glove_mlp checkpoints need the embedding table")
        return GloveMlp(MlpParams(a["w1"], a["b1"], a["w2"], float(a["b2"][0])), embeddings)
    raise CheckpointError(f"{path}: unknown checkpoint kind {kind!r}")


def read_header(path) -> dict:
    return _read(path)[0]
