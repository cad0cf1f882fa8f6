"""Training losses and their weighted combination.

Three terms drive training: a CTC loss that sums over all frame-to-letter
alignments of the emission matrix, a squared error between the predicted and
true word-length points on the unit circle, and token-level cross-entropy on
the teacher-forced decoder. The combined objective weights the CTC term.

The CTC dynamic program runs entirely in log space over the blank-interleaved
target; its gradient with respect to the log-emissions is computed with the
matching backward recursion, so the loss plugs into the autodiff graph as a
single op.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .lengths import encode_length
from .vocab import Vocabulary

logger = logging.getLogger(__name__)

NEG_INF = -np.inf


@dataclass(frozen=True)
class LossBreakdown:
    ctc: float
    mse: float
    ce: float
    total: float
    ctc_weight: float

    @property
    def skip(self) -> bool:
        """True when the example cannot contribute a finite gradient."""
        return not math.isfinite(self.total)


def extended_target(target: Sequence[int], blank: int) -> np.ndarray:
    """Blank-interleaved state sequence: blank, t1, blank, t2, ..., blank."""
    ext = np.full(2 * len(target) + 1, blank, dtype=np.int64)
    ext[1::2] = target
    return ext


def min_frames(target: Sequence[int]) -> int:
    """Shortest emission length that can align to the target: one frame per
    letter plus one separating blank per adjacent repeat."""
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def _skip_mask(ext: np.ndarray, blank: int) -> np.ndarray:
    """allow[s]: paths may jump from state s-2 straight to s."""
    allow = np.zeros(ext.size, dtype=bool)
    if ext.size > 2:
        allow[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])
    return allow


def _ctc_alpha(log_probs: np.ndarray, ext: np.ndarray, allow: np.ndarray) -> np.ndarray:
    n_frames, n_states = log_probs.shape[0], ext.size
    alpha = np.full((n_frames, n_states), NEG_INF)
    alpha[0, 0] = log_probs[0, ext[0]]
    if n_states > 1:
        alpha[0, 1] = log_probs[0, ext[1]]
    for t in range(1, n_frames):
        prev = alpha[t - 1]
        merged = prev.copy()
        merged[1:] = np.logaddexp(merged[1:], prev[:-1])
        if n_states > 2:
            merged[2:] = np.logaddexp(merged[2:], np.where(allow[2:], prev[:-2], NEG_INF))
        alpha[t] = merged + log_probs[t, ext]
    return alpha


def _ctc_beta(log_probs: np.ndarray, ext: np.ndarray, allow: np.ndarray) -> np.ndarray:
    n_frames, n_states = log_probs.shape[0], ext.size
    beta = np.full((n_frames, n_states), NEG_INF)
    beta[-1, -1] = 0.0
    if n_states > 1:
        beta[-1, -2] = 0.0
    for t in range(n_frames - 2, -1, -1):
        nxt = beta[t + 1] + log_probs[t + 1, ext]
        merged = nxt.copy()
        merged[:-1] = np.logaddexp(merged[:-1], nxt[1:])
        if n_states > 2:
            merged[:-2] = np.logaddexp(merged[:-2], np.where(allow[2:], nxt[2:], NEG_INF))
        beta[t] = merged
    return beta


def ctc_labeling_logp(log_probs: np.ndarray, target: Sequence[int],
                      blank: int) -> float:
    """Total log-probability of all alignment paths that collapse to target;
    -inf when the target is unreachable."""
    log_probs = np.asarray(log_probs, dtype=np.float64)
    if len(target) == 0:
        return float(log_probs[:, blank].sum())
    if log_probs.shape[0] < min_frames(target):
        return NEG_INF
    ext = extended_target(target, blank)
    allow = _skip_mask(ext, blank)
    alpha = _ctc_alpha(log_probs, ext, allow)
    if ext.size > 1:
        return float(np.logaddexp(alpha[-1, -1], alpha[-1, -2]))
    return float(alpha[-1, -1])


def ctc_loss(emissions: Tensor, target: Sequence[int]) -> Tensor:
    """Negative log-probability of the target under all valid alignments.

    `emissions` holds per-frame log-probabilities over letters plus a final
    blank column; `target` contains letter ids only. Unreachable targets
    (too few frames) yield +inf with a diagnostic and no gradient.
    """
    e = emissions.data
    if e.ndim != 2 or e.shape[1] < 2:
        raise ValueError("emissions must be T x (n_letters + 1)")
    blank = e.shape[1] - 1
    target = list(target)
    if any((t < 0 or t >= blank) for t in target):
        raise ValueError("target must contain letter ids only")

    if e.shape[0] < min_frames(target):
        logger.warning(
            "target of length %d needs at least %d frames, got %d; CTC loss is infinite",
            len(target), min_frames(target), e.shape[0],
        )
        return Tensor(np.float64(np.inf))

    ext = extended_target(target, blank)
    allow = _skip_mask(ext, blank)
    alpha = _ctc_alpha(e, ext, allow)
    if ext.size > 1:
        log_z = np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    else:
        log_z = alpha[-1, -1]
    if not np.isfinite(log_z):
        logger.warning("CTC loss is infinite (no alignment has finite probability)")
        return Tensor(np.float64(np.inf))

    def bwd(g):
        beta = _ctc_beta(e, ext, allow)
        occupancy = np.exp(alpha + beta - log_z)          # (T, S)
        grad = np.zeros_like(e)
        rows = np.broadcast_to(np.arange(e.shape[0])[:, None], occupancy.shape)
        cols = np.broadcast_to(ext[None, :], occupancy.shape)
        np.add.at(grad, (rows, cols), occupancy)
        return (g * -grad,)

    return ad.from_op(np.float64(-log_z), (emissions,), bwd)


def length_mse(pred: Tensor, target_len: int) -> Tensor:
    """Half the squared distance between the predicted 2-vector and the
    target length's point on the unit circle."""
    diff = pred - ad.constant(encode_length(target_len))
    return (diff * diff).sum() * 0.5


def cross_entropy(decoder_logprobs: Tensor, target: Sequence[int],
                  vocab: Vocabulary) -> Tensor:
    """Mean negative log-probability of the target tokens.

    `target` is the letter-id sequence followed by EOS, aligned one-to-one
    with the decoder rows (which were produced from BOS + letters).
    """
    rows = decoder_logprobs.data
    if rows.ndim != 2:
        raise ValueError("decoder output must be 2-D")
    if len(target) != rows.shape[0]:
        raise ValueError(
            f"{rows.shape[0]} decoder rows but {len(target)} target tokens"
        )
    classes = []
    for tok in target:
        if 0 <= tok < vocab.n_letters:
            classes.append(tok)
        elif tok == vocab.eos_id:
            classes.append(vocab.eos_class)
        else:
            raise ValueError(f"token id {tok} is not a letter or EOS")
    idx = (np.arange(len(target)), np.array(classes, dtype=np.int64))
    return -(decoder_logprobs[idx].mean())


def total_loss(ctc: float | Tensor, ce: float | Tensor, mse: float | Tensor,
               ctc_weight: float) -> LossBreakdown:
    """Weighted sum: ctc_weight * ctc + ce + mse, with per-term bookkeeping."""
    ctc_v, ce_v, mse_v = float(ctc), float(ce), float(mse)
    total = ctc_weight * ctc_v + ce_v + mse_v
    if not math.isfinite(total):
        logger.warning("non-finite total loss (ctc=%g); example should be skipped", ctc_v)
    return LossBreakdown(ctc=ctc_v, mse=mse_v, ce=ce_v, total=total,
                         ctc_weight=ctc_weight)
