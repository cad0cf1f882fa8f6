"""Transformer encoder-decoder over pose sequences, with a length token.

The encoder consumes a T x 42 matrix of normalized hand features, prepended
with one learnable token whose output position regresses the word length as
a (sin, cos) pair. The remaining T positions feed a per-frame letter/blank
emission head. The decoder is a standard causally masked transformer that
cross-attends to the encoder memory and predicts letters plus EOS.

All parameters live in one flat float64 buffer; the per-parameter tensors
are views into it, which keeps optimizer steps and checkpointing cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .posenorm import N_FEATURES, PoseSequence
from .vocab import Vocabulary

LN_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 128
    n_enc_layers: int = 3
    n_dec_layers: int = 3
    n_heads: int = 8
    ffn_dim: int = 512
    max_frames: int = 512
    max_letters: int = 32
    dropout: float = 0.1
    vocab: Vocabulary = field(default_factory=Vocabulary)

    def __post_init__(self):
        for name in ("d_model", "n_enc_layers", "n_dec_layers", "n_heads",
                     "ffn_dim", "max_frames", "max_letters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def _attn_specs(prefix: str, d: int):
    for part in ("wq", "wk", "wv", "wo"):
        yield f"{prefix}.{part}", (d, d), "xavier"
    for part in ("bq", "bk", "bv", "bo"):
        yield f"{prefix}.{part}", (d,), "zeros"


def _ln_specs(prefix: str, d: int):
    yield f"{prefix}.g", (d,), "ones"
    yield f"{prefix}.b", (d,), "zeros"


def _ffn_specs(prefix: str, d: int, f: int):
    yield f"{prefix}.w1", (d, f), "xavier"
    yield f"{prefix}.b1", (f,), "zeros"
    yield f"{prefix}.w2", (f, d), "xavier"
    yield f"{prefix}.b2", (d,), "zeros"


def param_specs(cfg: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """Ordered parameter layout; checkpoint data follows this order."""
    d, f, v = cfg.d_model, cfg.ffn_dim, cfg.vocab
    specs: list[tuple[str, tuple[int, ...], str]] = [
        ("input.w", (N_FEATURES, d), "xavier"),
        ("input.b", (d,), "zeros"),
        ("len_token", (d,), "table"),
        ("enc.pos", (cfg.max_frames + 1, d), "table"),
    ]
    for i in range(cfg.n_enc_layers):
        specs += list(_attn_specs(f"enc{i}.attn", d))
        specs += list(_ln_specs(f"enc{i}.ln1", d))
        specs += list(_ffn_specs(f"enc{i}.ffn", d, f))
        specs += list(_ln_specs(f"enc{i}.ln2", d))
    specs += [
        ("emit.w", (d, v.n_letters + 1), "xavier"),
        ("emit.b", (v.n_letters + 1,), "zeros"),
        ("len_head.w", (d, 2), "xavier"),
        ("len_head.b", (2,), "zeros"),
        ("dec.emb", (v.n_tokens, d), "table"),
        ("dec.pos", (cfg.max_letters, d), "table"),
    ]
    for i in range(cfg.n_dec_layers):
        specs += list(_attn_specs(f"dec{i}.self", d))
        specs += list(_ln_specs(f"dec{i}.ln1", d))
        specs += list(_attn_specs(f"dec{i}.cross", d))
        specs += list(_ln_specs(f"dec{i}.ln2", d))
        specs += list(_ffn_specs(f"dec{i}.ffn", d, f))
        specs += list(_ln_specs(f"dec{i}.ln3", d))
    specs += [
        ("out.w", (d, v.n_decoder_classes), "xavier"),
        ("out.b", (v.n_decoder_classes,), "zeros"),
    ]
    return specs


class ModelParams:
    """All trainable arrays, as named views into one flat float64 buffer."""

    def __init__(self, config: ModelConfig, flat: np.ndarray | None = None):
        self.config = config
        self.specs = param_specs(config)
        total = sum(int(np.prod(shape)) for _, shape, _ in self.specs)
        if flat is None:
            flat = np.zeros(total, dtype=np.float64)
        else:
            flat = np.ascontiguousarray(flat, dtype=np.float64)
            if flat.size != total:
                raise ValueError(f"flat buffer has {flat.size} values, expected {total}")
        self.flat = flat
        self.flat_grad = np.zeros(total, dtype=np.float64)
        self._tensors: dict[str, Tensor] = {}
        offset = 0
        for name, shape, _ in self.specs:
            n = int(np.prod(shape))
            t = Tensor(self.flat[offset:offset + n].reshape(shape), requires_grad=True)
            t.grad = self.flat_grad[offset:offset + n].reshape(shape)
            self._tensors[name] = t
            offset += n

    @classmethod
    def initialized(cls, config: ModelConfig, seed: int) -> "ModelParams":
        params = cls(config)
        rng = np.random.default_rng(seed)
        table_bound = 1.0 / math.sqrt(config.d_model)
        for name, shape, kind in params.specs:
            t = params._tensors[name]
            if kind == "xavier":
                bound = math.sqrt(6.0 / (shape[0] + shape[1]))
                t.data[...] = rng.uniform(-bound, bound, size=shape)
            elif kind == "table":
                t.data[...] = rng.uniform(-table_bound, table_bound, size=shape)
            elif kind == "ones":
                t.data[...] = 1.0
            # zeros are already zeros
        return params

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def items(self):
        return self._tensors.items()

    @property
    def n_params(self) -> int:
        return self.flat.size

    def zero_grad(self) -> None:
        self.flat_grad[:] = 0.0

    def grad_norm(self) -> float:
        return float(np.sqrt(np.dot(self.flat_grad, self.flat_grad)))

    def clone(self) -> "ModelParams":
        return ModelParams(self.config, self.flat.copy())


@dataclass
class EncoderOutput:
    """Per-frame letter/blank log-probabilities (T rows; the token position
    is excluded), the 2-vector length prediction, and the full contextual
    memory (T+1 rows) for the decoder."""

    emissions: Tensor
    length_pred: Tensor
    memory: Tensor


def _dropout(x: Tensor, p: float, train: bool, rng) -> Tensor:
    if not train or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("training-mode dropout needs an RNG")
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * ad.constant(keep)


def _layer_norm(x: Tensor, g: Tensor, b: Tensor) -> Tensor:
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered * ((var + LN_EPS) ** -0.5) * g + b


def _attention(params: ModelParams, prefix: str, queries: Tensor, keys_values: Tensor,
               mask: np.ndarray | None) -> Tensor:
    cfg = params.config
    n_heads, d = cfg.n_heads, cfg.d_model
    head_dim = d // n_heads
    s_q, s_k = queries.shape[0], keys_values.shape[0]

    q = queries @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]
    k = keys_values @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]
    v = keys_values @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]
    qh = q.reshape(s_q, n_heads, head_dim).transpose((1, 0, 2))
    kh = k.reshape(s_k, n_heads, head_dim).transpose((1, 0, 2))
    vh = v.reshape(s_k, n_heads, head_dim).transpose((1, 0, 2))

    scores = (qh @ kh.swapaxes(-1, -2)) * (1.0 / math.sqrt(head_dim))
    if mask is not None:
        scores = scores + ad.constant(mask)
    weights = ad.softmax(scores, axis=-1)
    context = (weights @ vh).transpose((1, 0, 2)).reshape(s_q, d)
    return context @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]


def _ffn(params: ModelParams, prefix: str, x: Tensor) -> Tensor:
    hidden = (x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"]).relu()
    return hidden @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]


def _sublayer(params: ModelParams, ln_prefix: str, x: Tensor, out: Tensor,
              train: bool, rng) -> Tensor:
    out = _dropout(out, params.config.dropout, train, rng)
    return _layer_norm(x + out, params[f"{ln_prefix}.g"], params[f"{ln_prefix}.b"])


def causal_mask(n: int) -> np.ndarray:
    return np.triu(np.full((n, n), -np.inf), k=1)


def encoder_forward(params: ModelParams, pose: PoseSequence | np.ndarray,
                    train: bool = False, rng=None) -> EncoderOutput:
    """Encode a pose sequence into emissions, a length prediction, and memory."""
    cfg = params.config
    feats = pose.features if isinstance(pose, PoseSequence) else np.asarray(pose, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != N_FEATURES:
        raise ValueError(f"pose features must be T x {N_FEATURES}")
    n_frames = feats.shape[0]
    if n_frames < 1:
        raise ValueError("pose sequence must have at least one frame")
    if n_frames > cfg.max_frames:
        raise ValueError(f"sequence length {n_frames} exceeds max_frames {cfg.max_frames}")
    if not np.isfinite(feats).all():
        raise ValueError("pose features contain non-finite values")

    x = Tensor(feats) @ params["input.w"] + params["input.b"]
    token = params["len_token"].reshape(1, cfg.d_model)
    x = ad.concat([token, x], axis=0)
    x = x + params["enc.pos"][: n_frames + 1]
    for i in range(cfg.n_enc_layers):
        x = _sublayer(params, f"enc{i}.ln1", x,
                      _attention(params, f"enc{i}.attn", x, x, None), train, rng)
        x = _sublayer(params, f"enc{i}.ln2", x, _ffn(params, f"enc{i}.ffn", x), train, rng)

    emissions = ad.log_softmax(x[1:] @ params["emit.w"] + params["emit.b"], axis=-1)
    length_pred = (x[0:1] @ params["len_head.w"] + params["len_head.b"]).reshape(2)
    return EncoderOutput(emissions=emissions, length_pred=length_pred, memory=x)


def decoder_forward(params: ModelParams, memory: Tensor, tokens: Sequence[int],
                    train: bool = False, rng=None) -> Tensor:
    """Causally masked decoding over a token prefix.

    Returns one log-softmax row per input position over the decoder classes
    (letters, EOS, PAD); row i depends only on tokens[0..i] and the memory.
    """
    cfg = params.config
    vocab = cfg.vocab
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.ndim != 1 or ids.size < 1:
        raise ValueError("tokens must be a non-empty id sequence")
    if ids.size > cfg.max_letters:
        raise ValueError(f"token sequence length {ids.size} exceeds max_letters {cfg.max_letters}")
    if ids[0] != vocab.bos_id:
        raise ValueError("token sequence must start with BOS")
    if ((ids < 0) | (ids >= vocab.n_tokens)).any():
        raise ValueError("unknown token id in sequence")

    x = params["dec.emb"][ids] + params["dec.pos"][: ids.size]
    mask = causal_mask(ids.size)
    for i in range(cfg.n_dec_layers):
        x = _sublayer(params, f"dec{i}.ln1", x,
                      _attention(params, f"dec{i}.self", x, x, mask), train, rng)
        x = _sublayer(params, f"dec{i}.ln2", x,
                      _attention(params, f"dec{i}.cross", x, memory, None), train, rng)
        x = _sublayer(params, f"dec{i}.ln3", x, _ffn(params, f"dec{i}.ffn", x), train, rng)
    return ad.log_softmax(x @ params["out.w"] + params["out.b"], axis=-1)
