"""Self-describing single-file checkpoints.

Layout: one JSON header line (format version, model config, vocabulary,
parameter names and shapes) followed by the raw little-endian float64 bytes
of every parameter in header order. Writing the same model twice produces
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .data import Vocabulary
from .model import ModelConfig, SequenceModel

FORMAT_NAME = "toxspan-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is missing, malformed, or incompatible."""


def save_checkpoint(path: str, model: SequenceModel, vocab: Vocabulary) -> None:
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": asdict(model.config),
        "vocab": vocab.tokens[3:],  # specials are implicit
        "params": [
            {"name": name, "shape": list(var.value.shape)}
            for name, var in model.params.items()
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode())
        fh.write(b"\n")
        for var in model.params.values():
            fh.write(np.ascontiguousarray(var.value, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> tuple[SequenceModel, Vocabulary]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint header") from exc
    if header.get("format") != FORMAT_NAME:
        raise CheckpointError(f"{path}: not a {FORMAT_NAME} file")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {header.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    config = ModelConfig(**header["config"])
    vocab = Vocabulary(header["vocab"])
    model = SequenceModel(config)

    recorded = {entry["name"]: tuple(entry["shape"]) for entry in header["params"]}
    if set(recorded) != set(model.params):
        missing = set(model.params) - set(recorded)
        extra = set(recorded) - set(model.params)
        raise CheckpointError(
            f"{path}: parameter set mismatch (missing {sorted(missing)}, "
            f"unexpected {sorted(extra)})"
        )

    offset = 0
    for entry in header["params"]:
        name, shape = entry["name"], tuple(entry["shape"])
        expected = model.params[name].value.shape
        if shape != expected:
            raise CheckpointError(
                f"{path}: parameter {name!r} has shape {shape}, expected {expected}"
            )
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated data for parameter {name!r}")
        values = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        model.params[name].value = values.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes")
    return model, vocab
