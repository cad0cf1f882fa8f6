"""Inference strategies: greedy CTC, prefix beam search, autoregressive
decoding, and hybrid re-ranking.

The hybrid path generates candidates with prefix beam search over the frame
emissions, scores each candidate with the decoder used as a language model
over the encoder memory, and re-ranks by

    ctc_logp + beta * lm_logp - gamma * |L_hat - len(word)|

where L_hat is the (continuous) length decoded from the length token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .lengths import continuous_length
from .model import ModelParams, decoder_forward, encoder_forward
from .posenorm import PoseSequence

NEG_INF = -np.inf


@dataclass
class Hypothesis:
    """A candidate transcript with its score components.

    `combined` always decomposes as ctc_logp + beta * lm_logp -
    gamma * length_penalty, so every ranking decision can be audited from
    the stored fields.
    """

    letters: tuple[int, ...]
    ctc_logp: float
    lm_logp: float | None = None
    length_penalty: float | None = None
    combined: float | None = None


@dataclass(frozen=True)
class DecodeConfig:
    beam_width: int = 5
    beta: float = 0.4
    gamma: float = 1.2
    max_decode_len: int = 30

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("beta and gamma must be >= 0")


def collapse_path(path: Sequence[int], blank: int) -> tuple[int, ...]:
    """CTC collapse: merge adjacent repeats, then drop blanks."""
    out: list[int] = []
    prev = None
    for p in path:
        if p != prev and p != blank:
            out.append(int(p))
        prev = p
    return tuple(out)


def greedy_ctc(emissions: np.ndarray | Tensor) -> tuple[int, ...]:
    """Best letter per frame, collapsed."""
    e = emissions.data if isinstance(emissions, Tensor) else np.asarray(emissions)
    blank = e.shape[1] - 1
    return collapse_path(e.argmax(axis=1), blank)


def greedy_path_logp(emissions: np.ndarray | Tensor) -> float:
    e = emissions.data if isinstance(emissions, Tensor) else np.asarray(emissions)
    return float(e.max(axis=1).sum())


def beam_ctc(emissions: np.ndarray | Tensor, beam_width: int) -> list[Hypothesis]:
    """Prefix beam search over the emission lattice.

    Tracks blank/non-blank log-mass per collapsed prefix and merges the mass
    of identical prefixes with log-sum-exp, so each hypothesis carries the
    total alignment-summed log-probability of its labeling, not just the
    best path. Returns up to `beam_width` hypotheses, best first.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    e = emissions.data if isinstance(emissions, Tensor) else np.asarray(emissions)
    blank = e.shape[1] - 1

    # prefix -> (log mass ending in blank, log mass ending in its last letter)
    beams: dict[tuple[int, ...], tuple[float, float]] = {(): (0.0, NEG_INF)}
    for t in range(e.shape[0]):
        row = e[t]
        nxt: dict[tuple[int, ...], tuple[float, float]] = {}

        def bump(prefix, d_blank=NEG_INF, d_letter=NEG_INF):
            pb, pl = nxt.get(prefix, (NEG_INF, NEG_INF))
            nxt[prefix] = (np.logaddexp(pb, d_blank), np.logaddexp(pl, d_letter))

        for prefix, (p_blank, p_letter) in beams.items():
            total = np.logaddexp(p_blank, p_letter)
            bump(prefix, d_blank=total + row[blank])
            for c in range(blank):
                if prefix and prefix[-1] == c:
                    # repeat merges into the same labeling...
                    bump(prefix, d_letter=p_letter + row[c])
                    # ...unless a blank intervened
                    bump(prefix + (c,), d_letter=p_blank + row[c])
                else:
                    bump(prefix + (c,), d_letter=total + row[c])

        ranked = sorted(nxt.items(),
                        key=lambda kv: (-np.logaddexp(kv[1][0], kv[1][1]), kv[0]))
        beams = dict(ranked[:beam_width])

    scored = [(float(np.logaddexp(pb, pl)), prefix) for prefix, (pb, pl) in beams.items()]
    scored.sort(key=lambda sp: (-sp[0], sp[1]))
    return [Hypothesis(letters=prefix, ctc_logp=logp) for logp, prefix in scored]


def autoregressive_decode(params: ModelParams, memory: Tensor,
                          max_decode_len: int = 30) -> tuple[int, ...]:
    """Generate letters one at a time by argmax until EOS or the cap.

    PAD is never produced; it is excluded from the argmax.
    """
    vocab = params.config.vocab
    tokens = [vocab.bos_id]
    letters: list[int] = []
    with ad.no_grad():
        while len(letters) < max_decode_len:
            rows = decoder_forward(params, memory, tokens)
            last = rows.data[-1].copy()
            last[vocab.pad_class] = NEG_INF
            choice = int(last.argmax())
            if choice == vocab.eos_class:
                break
            letters.append(choice)
            tokens.append(choice)
    return tuple(letters)


def score_hypothesis_lm(params: ModelParams, memory: Tensor,
                        letters: Sequence[int]) -> float:
    """Decoder-as-language-model score: sum of per-letter log-probabilities
    under teacher forcing, plus the final EOS term."""
    vocab = params.config.vocab
    letters = list(letters)
    if len(letters) > params.config.max_letters - 1:
        raise ValueError(
            f"hypothesis length {len(letters)} exceeds max_letters - 1"
        )
    with ad.no_grad():
        rows = decoder_forward(params, memory, [vocab.bos_id] + letters).data
    logp = 0.0
    for i, letter in enumerate(letters):
        logp += float(rows[i, letter])
    logp += float(rows[len(letters), vocab.eos_class])
    return logp


def rerank(hyps: Sequence[Hypothesis], length_pred: np.ndarray | Tensor,
           config: DecodeConfig) -> tuple[Hypothesis, list[Hypothesis]]:
    """Combine CTC, LM, and length-penalty scores and re-rank.

    The length penalty compares each hypothesis's letter count against the
    continuous decoded length (no rounding). Ties break by higher ctc_logp,
    then lexicographically.
    """
    if not hyps:
        raise ValueError("cannot rerank an empty hypothesis list")
    vec = length_pred.data if isinstance(length_pred, Tensor) else np.asarray(length_pred)
    predicted_len = continuous_length(vec)
    rescored = []
    for h in hyps:
        if h.lm_logp is None:
            raise ValueError("every hypothesis needs a populated lm_logp")
        penalty = abs(predicted_len - len(h.letters))
        combined = h.ctc_logp + config.beta * h.lm_logp - config.gamma * penalty
        rescored.append(Hypothesis(letters=h.letters, ctc_logp=h.ctc_logp,
                                   lm_logp=h.lm_logp, length_penalty=penalty,
                                   combined=combined))
    rescored.sort(key=lambda h: (-h.combined, -h.ctc_logp, h.letters))
    return rescored[0], rescored


def decode_hybrid(params: ModelParams, pose: PoseSequence,
                  config: DecodeConfig) -> tuple[Hypothesis, list[Hypothesis]]:
    """Full two-stage inference: beam candidates, LM scores, re-rank."""
    with ad.no_grad():
        enc = encoder_forward(params, pose)
        hyps = beam_ctc(enc.emissions, config.beam_width)
        for h in hyps:
            h.lm_logp = score_hypothesis_lm(params, enc.memory, h.letters)
    return rerank(hyps, enc.length_pred, config)
