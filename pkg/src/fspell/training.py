"""Training loop (batch size 1, Adam) and decoding-strategy evaluation.

Each example runs the encoder (CTC loss on the frame emissions, squared
error on the length token), teacher-forces the decoder (cross-entropy with
EOS supervised), combines the losses, and applies one Adam update. Examples
whose labels cannot align to the available frames are skipped and counted.
Everything is deterministic under the configured seed.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .decoding import (DecodeConfig, autoregressive_decode, beam_ctc, greedy_ctc,
                       rerank, score_hypothesis_lm)
from .losses import cross_entropy, ctc_loss, length_mse, total_loss
from .metrics import corpus_report
from .model import ModelConfig, ModelParams, encoder_forward, decoder_forward

logger = logging.getLogger(__name__)

GRAD_CLIP_NORM = 5.0
MAX_LABEL_LEN = 30


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    lr: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    ctc_weight: float = 5.0
    seed: int = 0
    checkpoint_every: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")


class Adam:
    """Adam over the flat parameter buffer.

    All scratch space is preallocated; a step performs no array allocation,
    which matters at batch size 1 where the optimizer runs per example.
    """

    def __init__(self, params: ModelParams, cfg: TrainConfig):
        self.cfg = cfg
        self.m = np.zeros_like(params.flat)
        self.v = np.zeros_like(params.flat)
        self._buf = np.empty_like(params.flat)
        self.t = 0

    def step(self, params: ModelParams) -> None:
        cfg = self.cfg
        self.t += 1
        g = params.flat_grad
        m, v, buf = self.m, self.v, self._buf

        m *= cfg.adam_beta1
        np.multiply(g, 1.0 - cfg.adam_beta1, out=buf)
        m += buf
        v *= cfg.adam_beta2
        np.multiply(g, g, out=buf)
        buf *= 1.0 - cfg.adam_beta2
        v += buf

        bias1 = 1.0 - cfg.adam_beta1 ** self.t
        bias2 = 1.0 - cfg.adam_beta2 ** self.t
        # update = lr * (m / bias1) / (sqrt(v / bias2) + eps)
        np.sqrt(v, out=buf)
        buf *= 1.0 / math.sqrt(bias2)
        buf += cfg.adam_eps
        np.divide(m, buf, out=buf)
        buf *= cfg.lr / bias1
        params.flat -= buf


def split_of(source_id: str) -> str:
    """Deterministic 80/10/10 split keyed on the sequence id."""
    digest = hashlib.sha256(source_id.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:8], "little") % 10
    if bucket < 8:
        return "train"
    return "val" if bucket == 8 else "test"


def split_corpus(corpus) -> dict[str, list]:
    splits: dict[str, list] = {"train": [], "val": [], "test": []}
    for pose, label in corpus:
        splits[split_of(pose.source_id)].append((pose, label))
    return splits


def _validate_labels(corpus, model_cfg: ModelConfig) -> None:
    for pose, label in corpus:
        if label is None:
            raise ValueError(f"{pose.source_id}: training requires a label")
        if not 1 <= len(label) <= MAX_LABEL_LEN:
            raise ValueError(
                f"{pose.source_id}: label length {len(label)} outside [1, {MAX_LABEL_LEN}]"
            )
        if len(label) > model_cfg.max_letters - 1:
            raise ValueError(
                f"{pose.source_id}: label length {len(label)} exceeds max_letters - 1"
            )


def holdout_greedy_accuracy(params: ModelParams, examples) -> float | None:
    """Corpus letter accuracy of greedy decoding; None on an empty split."""
    if not examples:
        return None
    vocab = params.config.vocab
    pairs = []
    with ad.no_grad():
        for pose, label in examples:
            enc = encoder_forward(params, pose)
            pairs.append((label, vocab.decode(list(greedy_ctc(enc.emissions)))))
    return corpus_report(pairs).accuracy


@dataclass
class TrainResult:
    params: ModelParams
    log: list[dict]


def train(cfg: TrainConfig, corpus, checkpoint_hook=None) -> TrainResult:
    """Train on the hash-split training portion of `corpus`.

    `corpus` is a list of (PoseSequence, label) pairs, typically loaded from
    a prepared features file. `checkpoint_hook(epoch, params)` fires every
    `checkpoint_every` epochs when set. Returns the final parameters and one
    log record per epoch.
    """
    if not corpus:
        raise ValueError("empty corpus")
    _validate_labels(corpus, cfg.model)
    splits = split_corpus(corpus)
    train_split, val_split = splits["train"], splits["val"]
    if not train_split:
        raise ValueError("training split is empty")
    logger.info("corpus split: %d train / %d val / %d test",
                len(train_split), len(val_split), len(splits["test"]))

    params = ModelParams.initialized(cfg.model, cfg.seed)
    optimizer = Adam(params, cfg)
    vocab = cfg.model.vocab
    order_rng = np.random.default_rng(cfg.seed + 1)
    dropout_rng = np.random.default_rng(cfg.seed + 2)
    log: list[dict] = []
    clipped = 0

    for epoch in range(1, cfg.epochs + 1):
        order = order_rng.permutation(len(train_split))
        sums = np.zeros(4)  # ctc, ce, mse, total
        processed = 0
        skipped = 0
        for idx in order:
            pose, label = train_split[idx]
            target = vocab.encode(label)
            enc = encoder_forward(params, pose, train=True, rng=dropout_rng)
            ctc = ctc_loss(enc.emissions, target)
            if not np.isfinite(float(ctc)):
                skipped += 1
                continue
            mse = length_mse(enc.length_pred, len(target))
            rows = decoder_forward(params, enc.memory, [vocab.bos_id] + target,
                                   train=True, rng=dropout_rng)
            ce = cross_entropy(rows, target + [vocab.eos_id], vocab)
            total = ctc * cfg.ctc_weight + ce + mse
            breakdown = total_loss(ctc, ce, mse, cfg.ctc_weight)

            params.zero_grad()
            total.backward(np.float64(1.0))
            norm = params.grad_norm()
            if norm > GRAD_CLIP_NORM:
                params.flat_grad *= GRAD_CLIP_NORM / norm
                clipped += 1
            optimizer.step(params)

            sums += (breakdown.ctc, breakdown.ce, breakdown.mse, breakdown.total)
            processed += 1

        if processed == 0:
            raise ValueError(f"epoch {epoch}: every example was skipped")
        assert processed + skipped == len(train_split)
        acc = holdout_greedy_accuracy(params, val_split)
        record = {
            "epoch": epoch,
            "mean_ctc": float(sums[0] / processed),
            "mean_ce": float(sums[1] / processed),
            "mean_mse": float(sums[2] / processed),
            "mean_total": float(sums[3] / processed),
            "holdout_letter_acc": None if acc is None else float(acc),
            "skipped": skipped,
        }
        log.append(record)
        logger.info(
            "epoch %d: total %.4f (ctc %.4f, ce %.4f, mse %.4f), holdout acc %s, skipped %d",
            epoch, record["mean_total"], record["mean_ctc"], record["mean_ce"],
            record["mean_mse"], "n/a" if acc is None else f"{acc:.3f}", skipped,
        )
        if checkpoint_hook and cfg.checkpoint_every > 0 and epoch % cfg.checkpoint_every == 0:
            checkpoint_hook(epoch, params)

    if clipped:
        logger.info("gradient clipping engaged on %d of %d updates",
                    clipped, optimizer.t)
    return TrainResult(params=params, log=log)


STRATEGY_NAMES = {
    "greedy": "Encoder only (CTC) greedy",
    "beam": "Encoder only (CTC) + beam",
    "autoregressive": "Encoder-decoder autoregressive",
    "rerank": "Beam + decoder re-ranking",
}


@dataclass
class StrategyTable:
    rows: list[tuple[str, float]]  # (strategy key, letter accuracy %)
    n_letters: int

    def accuracy(self, key: str) -> float:
        return dict(self.rows)[key]

    def render(self) -> str:
        width = max(len(n) for n in STRATEGY_NAMES.values()) + 2
        lines = [f"{'Decoding Strategy':<{width}}Letter Accuracy %"]
        lines += [f"{STRATEGY_NAMES[key]:<{width}}{acc:17.1f}" for key, acc in self.rows]
        lines.append(f"(N = {self.n_letters} reference letters)")
        return "\n".join(lines) + "\n"


def evaluate_strategies(params: ModelParams, corpus,
                        decode_cfg: DecodeConfig | None = None) -> StrategyTable:
    """Letter accuracy of all four decoding strategies on one corpus.

    Every strategy scores against the same reference set, so the rows are
    directly comparable.
    """
    decode_cfg = decode_cfg or DecodeConfig()
    vocab = params.config.vocab
    pairs: dict[str, list[tuple[str, str]]] = {k: [] for k in STRATEGY_NAMES}
    if not corpus:
        raise ValueError("empty corpus")
    with ad.no_grad():
        for pose, label in corpus:
            if label is None:
                raise ValueError(f"{pose.source_id}: evaluation requires a label")
            enc = encoder_forward(params, pose)
            pairs["greedy"].append((label, vocab.decode(list(greedy_ctc(enc.emissions)))))
            hyps = beam_ctc(enc.emissions, decode_cfg.beam_width)
            pairs["beam"].append((label, vocab.decode(list(hyps[0].letters))))
            auto = autoregressive_decode(params, enc.memory, decode_cfg.max_decode_len)
            pairs["autoregressive"].append((label, vocab.decode(list(auto))))
            for h in hyps:
                h.lm_logp = score_hypothesis_lm(params, enc.memory, h.letters)
            best, _ = rerank(hyps, enc.length_pred, decode_cfg)
            pairs["rerank"].append((label, vocab.decode(list(best.letters))))
    rows = []
    n_letters = 0
    for key in STRATEGY_NAMES:
        report = corpus_report(pairs[key])
        rows.append((key, 100.0 * report.accuracy))
        n_letters = report.ref_len
    return StrategyTable(rows=rows, n_letters=n_letters)
