"""Video decoding and landmark-file emission.

The output follows the fspell landmark-file schema exactly (JSON Lines, one
record per video, fixed field order):

    {"video_id": str, "signer_id": str, "label": str|null,
     "frames": [{"left": [[x, y, conf]*21]|null, "right": ...}, ...]}

With `with_z` enabled each point carries a fourth component, which the
ingesting side parses and discards. Determinism is not promised here: some
backends are free to be stateful across frames.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import cv2
import numpy as np

from .backends import HandDetection


@dataclass(frozen=True)
class ExtractionJob:
    video_path: str
    video_id: str
    signer_id: str
    label: str | None = None
    frame_stride: int = 1
    with_z: bool = False

    def __post_init__(self):
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be >= 1")


def iter_video_frames(path: str, stride: int):
    """Yield every stride-th decoded frame; raises on unreadable video."""
    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        raise IOError(f"cannot open video {path!r}")
    try:
        index = 0
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            if index % stride == 0:
                yield frame
            index += 1
    finally:
        cap.release()


def _hand_json(det: HandDetection | None, with_z: bool):
    if det is None:
        return None
    conf = float(np.clip(det.confidence, 0.0, 1.0))
    points = []
    for j, (x, y) in enumerate(det.points):
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"backend produced a non-finite coordinate at joint {j}")
        entry = [x, y, conf]
        if with_z and det.z is not None:
            entry.append(float(det.z[j]))
        points.append(entry)
    return points


def extract(job: ExtractionJob, backend) -> dict:
    """Run the backend over the sampled frames of one video.

    Returns the landmark record as a dict ready for JSONL serialization.
    Raises when the video cannot be read or decodes to zero frames.
    """
    frames = []
    for frame in iter_video_frames(job.video_path, job.frame_stride):
        left, right = backend.detect(frame)
        frames.append({
            "left": _hand_json(left, job.with_z),
            "right": _hand_json(right, job.with_z),
        })
    if not frames:
        raise IOError(f"video {job.video_path!r} decoded to zero frames")
    return {
        "video_id": job.video_id,
        "signer_id": job.signer_id,
        "label": job.label,
        "frames": frames,
    }


def write_records(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")))
            fh.write("\n")
