"""Dotted-key configuration for the CLI.

A config file is plain `key = value` lines (# comments allowed) using dotted
names, e.g.:

    model.d_model = 64
    train.epochs = 10
    synth.word_len_range = 3,8

Precedence: built-in defaults < config file < command-line overrides. When
no --config flag is given, the FSPELL_CONFIG environment variable may name a
default file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .decoding import DecodeConfig
from .model import ModelConfig
from .synth import SynthConfig
from .training import TrainConfig
from .vocab import Vocabulary

ENV_CONFIG = "FSPELL_CONFIG"


def _parse_range(text: str) -> tuple[int, int]:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected 'lo,hi', got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# dotted key -> (section, constructor kwarg, parser)
KEY_TABLE: dict[str, tuple[str, str, type | object]] = {
    "model.d_model": ("model", "d_model", int),
    "model.n_enc_layers": ("model", "n_enc_layers", int),
    "model.n_dec_layers": ("model", "n_dec_layers", int),
    "model.n_heads": ("model", "n_heads", int),
    "model.ffn_dim": ("model", "ffn_dim", int),
    "model.max_frames": ("model", "max_frames", int),
    "model.max_letters": ("model", "max_letters", int),
    "model.dropout": ("model", "dropout", float),
    "model.letters": ("model", "letters", str),
    "train.epochs": ("train", "epochs", int),
    "train.lr": ("train", "lr", float),
    "train.adam_beta1": ("train", "adam_beta1", float),
    "train.adam_beta2": ("train", "adam_beta2", float),
    "train.adam_eps": ("train", "adam_eps", float),
    "train.lambda": ("train", "ctc_weight", float),
    "train.seed": ("train", "seed", int),
    "train.checkpoint_every": ("train", "checkpoint_every", int),
    "decode.beam_width": ("decode", "beam_width", int),
    "decode.beta": ("decode", "beta", float),
    "decode.gamma": ("decode", "gamma", float),
    "decode.max_decode_len": ("decode", "max_decode_len", int),
    "synth.n_words": ("synth", "n_words", int),
    "synth.word_len_range": ("synth", "word_len_range", _parse_range),
    "synth.frames_per_letter_range": ("synth", "frames_per_letter_range", _parse_range),
    "synth.noise_sigma": ("synth", "noise_sigma", float),
    "synth.seed": ("synth", "seed", int),
    "synth.transition_frames": ("synth", "transition_frames", int),
}


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)


def parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in KEY_TABLE:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def build_config(file_values: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None) -> AppConfig:
    """Merge defaults, file values, and overrides into typed configs."""
    merged: dict[str, str] = {}
    merged.update(file_values or {})
    merged.update(overrides or {})

    sections: dict[str, dict] = {"model": {}, "train": {}, "decode": {}, "synth": {}}
    for key, value in merged.items():
        if key not in KEY_TABLE:
            raise ConfigError(f"unknown config key {key!r}")
        section, kwarg, parser = KEY_TABLE[key]
        try:
            sections[section][kwarg] = parser(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None

    model_kwargs = sections["model"]
    if "letters" in model_kwargs:
        model_kwargs["vocab"] = Vocabulary(model_kwargs.pop("letters"))
    model = ModelConfig(**model_kwargs)
    return AppConfig(
        model=model,
        train=TrainConfig(model=model, **sections["train"]),
        decode=DecodeConfig(**sections["decode"]),
        synth=SynthConfig(**sections["synth"]),
    )


def load_config(path: str | None, overrides: dict[str, str] | None = None) -> AppConfig:
    """Resolve the config path (flag, else FSPELL_CONFIG) and build configs."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    file_values = parse_config_file(path) if path else None
    return build_config(file_values, overrides)
