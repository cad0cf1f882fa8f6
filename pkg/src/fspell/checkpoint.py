"""Checkpoint container: plain-text manifest + raw little-endian float64 data.

Layout:  magic line, 8-byte little-endian manifest length, the UTF-8 JSON
manifest (format version, model configuration, and per-parameter
name/shape/offset entries), then the raw parameter values in manifest order.
Offsets are byte offsets into the data section. Save-load-save is byte-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .model import ModelConfig, ModelParams
from .vocab import Vocabulary

MAGIC = b"FSPELLCKPT\n"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def config_to_dict(cfg: ModelConfig) -> dict:
    return {
        "d_model": cfg.d_model,
        "n_enc_layers": cfg.n_enc_layers,
        "n_dec_layers": cfg.n_dec_layers,
        "n_heads": cfg.n_heads,
        "ffn_dim": cfg.ffn_dim,
        "max_frames": cfg.max_frames,
        "max_letters": cfg.max_letters,
        "dropout": cfg.dropout,
        "letters": cfg.vocab.letters,
    }


def config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(
        d_model=int(d["d_model"]),
        n_enc_layers=int(d["n_enc_layers"]),
        n_dec_layers=int(d["n_dec_layers"]),
        n_heads=int(d["n_heads"]),
        ffn_dim=int(d["ffn_dim"]),
        max_frames=int(d["max_frames"]),
        max_letters=int(d["max_letters"]),
        dropout=float(d["dropout"]),
        vocab=Vocabulary(str(d["letters"])),
    )


def _manifest(params: ModelParams) -> bytes:
    entries = []
    offset = 0
    for name, shape, _ in params.specs:
        entries.append({"name": name, "shape": list(shape), "offset": offset})
        offset += int(np.prod(shape)) * 8
    manifest = {
        "format_version": FORMAT_VERSION,
        "model": config_to_dict(params.config),
        "params": entries,
    }
    return json.dumps(manifest, separators=(",", ":")).encode("utf-8")


def save_checkpoint(path, params: ModelParams) -> None:
    manifest = _manifest(params)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(manifest)))
        fh.write(manifest)
        fh.write(np.ascontiguousarray(params.flat, dtype="<f8").tobytes())


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic)")
    pos = len(MAGIC)
    if len(blob) < pos + 8:
        raise CheckpointError("truncated checkpoint header")
    (mlen,) = struct.unpack_from("<Q", blob, pos)
    pos += 8
    try:
        manifest = json.loads(blob[pos:pos + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable manifest: {exc}") from None
    pos += mlen
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {manifest.get('format_version')}")

    config = config_from_dict(manifest["model"])
    params = ModelParams(config)
    expected = [
        {"name": name, "shape": list(shape)} for name, shape, _ in params.specs
    ]
    listed = [{"name": e["name"], "shape": e["shape"]} for e in manifest["params"]]
    if listed != expected:
        raise CheckpointError("manifest parameter list does not match the model configuration")

    data = blob[pos:]
    if len(data) != params.flat.size * 8:
        raise CheckpointError(
            f"data section holds {len(data)} bytes, expected {params.flat.size * 8}"
        )
    params.flat[:] = np.frombuffer(data, dtype="<f8")
    return params
