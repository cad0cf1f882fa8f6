"""Signing-hand detection and pose normalization.

Fingerspelling is one-handed, so the first preprocessing step picks the
signing hand: the hand whose joints move more between consecutive frames
wins, refined by a majority vote over all of a signer's videos (signers are
highly consistent about which hand they spell with).

Each retained frame is then normalized in four steps, in order: shift the
wrist to the origin, mirror left hands so every hand looks right-handed,
rescale the per-frame bounding box to 1x1, and standardize all 42 values
jointly to zero mean inside [-0.5, 0.5].
"""

from __future__ import annotations

import enum
import io
import json
import logging
import threading
from dataclasses import dataclass

import numpy as np

from .landmarks import WRIST, HandFrame, LandmarkSequence

logger = logging.getLogger(__name__)

N_FEATURES = 42  # 21 joints x (x, y)


class HandSide(enum.Enum):
    Left = "left"
    Right = "right"


@dataclass(frozen=True)
class PoseSequence:
    """Normalized per-frame features, one 42-wide row per retained frame."""

    features: np.ndarray
    source_id: str
    kept_fraction: float

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[1] != N_FEATURES:
            raise ValueError(f"features must be T x {N_FEATURES}")
        if self.features.shape[0] < 1:
            raise ValueError("T must be >= 1")
        if not np.isfinite(self.features).all() or np.abs(self.features).max() > 0.5:
            raise ValueError("features must be standardized into [-0.5, 0.5]")

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


class SignerHistory:
    """Per-signer record of past hand decisions; append-and-vote is atomic."""

    def __init__(self):
        self._picks: dict[str, list[HandSide]] = {}
        self._lock = threading.Lock()

    def record_and_vote(self, signer_id: str, pick: HandSide) -> HandSide:
        with self._lock:
            picks = self._picks.setdefault(signer_id, [])
            picks.append(pick)
            rights = sum(1 for p in picks if p is HandSide.Right)
            lefts = len(picks) - rights
        if rights > lefts:
            return HandSide.Right
        if lefts > rights:
            return HandSide.Left
        # even vote: trust the most recent evidence
        return pick

    def picks(self, signer_id: str) -> list[HandSide]:
        with self._lock:
            return list(self._picks.get(signer_id, []))


def _hand_xy(frame: HandFrame, side: HandSide) -> np.ndarray | None:
    hand = frame.left if side is HandSide.Left else frame.right
    if hand is None:
        return None
    return np.array([[p.x, p.y] for p in hand], dtype=np.float64)


def hand_variability(seq: LandmarkSequence, side: HandSide) -> float:
    """Total joint motion: summed per-joint displacement between consecutive
    frames where the hand is present in both. Zero if the hand never moves
    or never appears."""
    total = 0.0
    prev = None
    for frame in seq.frames:
        cur = _hand_xy(frame, side)
        if cur is not None and prev is not None:
            total += float(np.linalg.norm(cur - prev, axis=1).sum())
        prev = cur
    return total


def video_hand_pick(seq: LandmarkSequence) -> HandSide:
    """Per-video pick: the hand with more motion. Equal variability breaks
    toward Right (right-hand dominance in single-handed spelling)."""
    v_left = hand_variability(seq, HandSide.Left)
    v_right = hand_variability(seq, HandSide.Right)
    return HandSide.Left if v_left > v_right else HandSide.Right


def detect_signing_hand(seq: LandmarkSequence, history: SignerHistory) -> HandSide:
    """Pick the signing hand for this video, voted against the signer's
    past decisions."""
    return history.record_and_vote(seq.signer_id, video_hand_pick(seq))


def mirror_frame(xs: np.ndarray) -> np.ndarray:
    """Reflect x coordinates: x -> -x + max(xs). Reverses the left/right
    ordering while preserving pairwise distances; the rightmost point maps
    to zero."""
    xs = np.asarray(xs, dtype=np.float64)
    return -xs + xs.max()


def scale_to_unit_box(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Divide each axis by its per-frame maximum so the bounding box becomes
    1x1; None when either maximum is zero (degenerate frame)."""
    mx, my = xs.max(), ys.max()
    if mx == 0.0 or my == 0.0:
        return None
    return xs / mx, ys / my


def standardize(values: np.ndarray) -> np.ndarray:
    """Center on the mean and divide by twice the max absolute value,
    landing every entry in [-0.5, 0.5]."""
    centered = values - values.mean()
    return centered / (2.0 * np.abs(centered).max())


def normalize_frame(xy: np.ndarray, side: HandSide) -> np.ndarray | None:
    """Normalize one frame's 21x2 joint array; None if degenerate.

    Order: origin shift to the wrist, mirror (left hands only), per-axis
    bounding-box scaling, then joint standardization of all 42 values.
    """
    shifted = xy - xy[WRIST]
    xs, ys = shifted[:, 0], shifted[:, 1]
    if side is HandSide.Left:
        xs = mirror_frame(xs)
    scaled = scale_to_unit_box(xs, ys)
    if scaled is None:
        return None
    # row layout is x1,y1,...,x21,y21
    return standardize(np.column_stack(scaled).reshape(-1))


def normalize_sequence(seq: LandmarkSequence, side: HandSide) -> PoseSequence:
    """Run the full per-frame pipeline over the chosen hand.

    Frames without the hand are dropped (no interpolation); frames whose
    post-shift bounding box collapses on either axis are dropped with a
    warning. The surviving fraction is recorded so callers can filter badly
    tracked videos.
    """
    rows = []
    for t, frame in enumerate(seq.frames):
        xy = _hand_xy(frame, side)
        if xy is None:
            continue
        row = normalize_frame(xy, side)
        if row is None:
            logger.warning(
                "%s: frame %d has a degenerate bounding box after origin shift; dropped",
                seq.video_id, t,
            )
            continue
        rows.append(row)
    if not rows:
        raise ValueError(f"{seq.video_id}: empty after filtering ({side.name} hand)")
    features = np.stack(rows)
    return PoseSequence(
        features=features,
        source_id=seq.video_id,
        kept_fraction=len(rows) / len(seq.frames),
    )


def prepare_corpus(seqs, history: SignerHistory | None = None
                   ) -> tuple[list[tuple[PoseSequence, str | None]], list[dict]]:
    """Normalize every sequence, with a per-video hand-decision report.

    Sequences whose chosen hand never appears are dropped with a warning.
    Returns (pose, label) pairs plus report rows with the raw per-video pick
    and the history-voted decision.
    """
    history = history or SignerHistory()
    prepared: list[tuple[PoseSequence, str | None]] = []
    report: list[dict] = []
    for seq in seqs:
        pick = video_hand_pick(seq)
        voted = history.record_and_vote(seq.signer_id, pick)
        report.append({
            "video_id": seq.video_id,
            "signer_id": seq.signer_id,
            "per_video_pick": pick.value,
            "voted_pick": voted.value,
        })
        try:
            prepared.append((normalize_sequence(seq, voted), seq.label))
        except ValueError as exc:
            logger.warning("dropping sequence: %s", exc)
    return prepared, report


def write_features_file(pairs) -> bytes:
    """Serialize normalized (pose, label) pairs to JSONL bytes."""
    buf = io.StringIO()
    for pose, label in pairs:
        rec = {
            "source_id": pose.source_id,
            "label": label,
            "kept_fraction": pose.kept_fraction,
            "features": pose.features.tolist(),
        }
        buf.write(json.dumps(rec, separators=(",", ":")))
        buf.write("\n")
    return buf.getvalue().encode("utf-8")


def parse_features_file(data: bytes) -> list[tuple[PoseSequence, str | None]]:
    pairs = []
    for idx, raw in enumerate(io.BytesIO(data)):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"features record {idx}: malformed JSON ({exc.msg})") from None
        feats = np.asarray(rec["features"], dtype=np.float64)
        if feats.ndim != 2 or feats.shape[1] != N_FEATURES:
            raise ValueError(f"features record {idx}: expected T x {N_FEATURES} matrix")
        label = rec.get("label")
        pairs.append((
            PoseSequence(features=feats, source_id=str(rec["source_id"]),
                         kept_fraction=float(rec.get("kept_fraction", 1.0))),
            None if label is None else str(label),
        ))
    return pairs


def load_features_file(path) -> list[tuple[PoseSequence, str | None]]:
    with open(path, "rb") as fh:
        return parse_features_file(fh.read())


def save_features_file(path, pairs) -> None:
    with open(path, "wb") as fh:
        fh.write(write_features_file(pairs))
