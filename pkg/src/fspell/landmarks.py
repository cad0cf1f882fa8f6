"""Keypoint sequence file format: parsing, validation, serialization.

This is the boundary between external pose extractors and the pipeline. The
on-disk format is JSON Lines, one record per video:

    {"video_id": str, "signer_id": str, "label": str|null,
     "frames": [{"left": [[x, y, conf] * 21]|null, "right": ...|null}, ...]}

Field order is fixed for deterministic writing and floats are emitted with
their shortest exact representation, so parse(write(seqs)) round-trips
field-for-field.
"""

from __future__ import annotations

import io
import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable

from .vocab import Vocabulary

logger = logging.getLogger(__name__)

HAND_JOINTS = 21
WRIST = 0


@dataclass(frozen=True)
class Landmark:
    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class HandFrame:
    left: tuple[Landmark, ...] | None = None
    right: tuple[Landmark, ...] | None = None

    def hand(self, side) -> tuple[Landmark, ...] | None:
        return self.left if side.name == "Left" else self.right

    @property
    def empty(self) -> bool:
        return self.left is None and self.right is None


@dataclass(frozen=True)
class LandmarkSequence:
    video_id: str
    signer_id: str
    frames: tuple[HandFrame, ...]
    label: str | None = None

    @property
    def n_frames(self) -> int:
        return len(self.frames)


class SchemaError(ValueError):
    """Raised when an input record violates the landmark file schema."""


def _validate_hand(points, record_idx: int, side: str) -> tuple[Landmark, ...] | None:
    if points is None:
        return None
    if not isinstance(points, list) or len(points) != HAND_JOINTS:
        got = len(points) if isinstance(points, list) else type(points).__name__
        raise SchemaError(
            f"record {record_idx}: {side} hand must have exactly {HAND_JOINTS} landmarks, got {got}"
        )
    out = []
    for j, p in enumerate(points):
        if not isinstance(p, list) or len(p) not in (3, 4):
            raise SchemaError(
                f"record {record_idx}: {side} hand joint {j} must be [x, y, conf]"
            )
        if len(p) == 4:
            # some extractors emit a depth coordinate; only x and y are used
            logger.warning(
                "record %d: %s hand joint %d carries a z coordinate; discarding it",
                record_idx, side, j,
            )
        x, y, conf = float(p[0]), float(p[1]), float(p[2])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise SchemaError(
                f"record {record_idx}: {side} hand joint {j} has non-finite coordinates"
            )
        if not 0.0 <= conf <= 1.0:
            raise SchemaError(
                f"record {record_idx}: {side} hand joint {j} confidence {conf} outside [0, 1]"
            )
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            # extractors overshoot near image borders; keep the point but flag it
            logger.warning(
                "record %d: %s hand joint %d coordinate (%g, %g) outside [0, 1]",
                record_idx, side, j, x, y,
            )
        out.append(Landmark(x, y, conf))
    return tuple(out)


def parse_landmark_file(data: bytes | IO[bytes], vocab: Vocabulary | None = None
                        ) -> list[LandmarkSequence]:
    """Parse and validate a landmark JSONL stream.

    Raises `SchemaError` naming the offending record for any invariant
    violation; on success every returned sequence is fully valid.
    """
    if isinstance(data, bytes):
        data = io.BytesIO(data)
    vocab = vocab or Vocabulary()
    seqs = []
    for idx, raw in enumerate(data):
        line = raw.decode("utf-8").strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"record {idx}: malformed JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise SchemaError(f"record {idx}: expected an object")
        for key in ("video_id", "signer_id", "frames"):
            if key not in rec:
                raise SchemaError(f"record {idx}: missing field {key!r}")
        video_id, signer_id = str(rec["video_id"]), str(rec["signer_id"])
        label = rec.get("label")
        if label is not None:
            label = str(label)
            if not vocab.is_word(label):
                raise SchemaError(
                    f"record {idx}: label {label!r} contains non-vocabulary letters"
                )
        frames_raw = rec["frames"]
        if not isinstance(frames_raw, list) or len(frames_raw) == 0:
            raise SchemaError(f"record {idx}: T must be >= 1 (empty frames list)")
        frames = []
        for f in frames_raw:
            if not isinstance(f, dict):
                raise SchemaError(f"record {idx}: frame entries must be objects")
            frames.append(HandFrame(
                left=_validate_hand(f.get("left"), idx, "left"),
                right=_validate_hand(f.get("right"), idx, "right"),
            ))
        seqs.append(LandmarkSequence(video_id, signer_id, tuple(frames), label))
    return seqs


def _hand_json(hand: tuple[Landmark, ...] | None):
    if hand is None:
        return None
    return [[p.x, p.y, p.confidence] for p in hand]


def write_landmark_file(seqs: Iterable[LandmarkSequence]) -> bytes:
    """Serialize sequences to JSONL bytes; parse(write(s)) == s."""
    buf = io.StringIO()
    for s in seqs:
        rec = {
            "video_id": s.video_id,
            "signer_id": s.signer_id,
            "label": s.label,
            "frames": [
                {"left": _hand_json(f.left), "right": _hand_json(f.right)}
                for f in s.frames
            ],
        }
        buf.write(json.dumps(rec, separators=(",", ":")))
        buf.write("\n")
    return buf.getvalue().encode("utf-8")


def load_landmark_file(path, vocab: Vocabulary | None = None) -> list[LandmarkSequence]:
    with open(path, "rb") as fh:
        return parse_landmark_file(fh, vocab)


def save_landmark_file(path, seqs: Iterable[LandmarkSequence]) -> None:
    with open(path, "wb") as fh:
        fh.write(write_landmark_file(seqs))


def missing_pose_stats(seqs: Iterable[LandmarkSequence]) -> list[int]:
    """Histogram of per-sequence missing-hand fractions in ten 10% bins.

    A frame counts as missing when neither hand was detected. Bin `i` covers
    fractions in [i/10, (i+1)/10), except the last bin which includes 1.0.
    Bucket counts sum to the number of sequences.
    """
    buckets = [0] * 10
    for s in seqs:
        missing = sum(1 for f in s.frames if f.empty)
        frac = missing / len(s.frames)
        buckets[min(int(frac * 10), 9)] += 1
    return buckets
