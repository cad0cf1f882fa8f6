"""Per-frame hand landmark backends.

Each backend maps a BGR frame to optional left/right hand detections with 21
points in image-normalized [0, 1] coordinates. `MediaPipeBackend` wraps the
Holistic solution when the mediapipe package is installed; `CentroidBackend`
is a dependency-free fallback that plants a canonical hand shape on the
brightest blob in the frame, useful for plumbing tests and demos.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

HAND_JOINTS = 21


@dataclass(frozen=True)
class HandDetection:
    points: np.ndarray          # (21, 2) normalized x, y
    confidence: float
    z: np.ndarray | None = None  # (21,) relative depth when the backend has it


Detections = tuple[HandDetection | None, HandDetection | None]  # (left, right)


class MediaPipeBackend:
    """Holistic model from the mediapipe package (lazy import)."""

    def __init__(self):
        try:
            import mediapipe as mp
        except ImportError as exc:
            raise RuntimeError(
                "the mediapipe package is not installed; "
                "install the 'mediapipe' extra or use --backend centroid"
            ) from exc
        self._holistic = mp.solutions.holistic.Holistic(
            static_image_mode=False, model_complexity=1)
        self._warned_confidence = False

    def close(self):
        self._holistic.close()

    def _convert(self, hand_landmarks) -> HandDetection | None:
        if hand_landmarks is None:
            return None
        pts = np.array([[lm.x, lm.y] for lm in hand_landmarks.landmark])
        z = np.array([lm.z for lm in hand_landmarks.landmark])
        if pts.shape[0] != HAND_JOINTS:
            return None
        if not self._warned_confidence:
            # holistic exposes no per-hand presence score
            logger.warning("holistic backend reports no hand confidence; using 1.0")
            self._warned_confidence = True
        return HandDetection(points=pts, confidence=1.0, z=z)

    def detect(self, frame_bgr: np.ndarray) -> Detections:
        import cv2

        result = self._holistic.process(cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB))
        return (self._convert(result.left_hand_landmarks),
                self._convert(result.right_hand_landmarks))


# canonical 21-point splay (wrist plus four joints per finger), in a unit
# box; fingers extend toward larger y so the downstream per-axis bounding-box
# scaling (which keys on post-wrist-shift maxima) keeps the frame
def _canonical_hand() -> np.ndarray:
    pts = np.zeros((HAND_JOINTS, 2))
    pts[0] = (0.5, 0.0)  # wrist first
    for finger in range(5):
        base_x = 0.15 + 0.175 * finger
        for joint in range(4):
            idx = 1 + finger * 4 + joint
            t = (joint + 1) / 4.0
            pts[idx] = (0.5 + (base_x - 0.5) * t, 0.9 * t)
    return pts


class CentroidBackend:
    """Plants a canonical right hand on the brightest blob in the frame.

    Purely geometric: frames with too few bright pixels yield no detection.
    Deterministic given the frame contents.
    """

    def __init__(self, threshold: int = 128, min_fraction: float = 0.001):
        self.threshold = threshold
        self.min_fraction = min_fraction
        self._shape = _canonical_hand()

    def close(self):
        pass

    def detect(self, frame_bgr: np.ndarray) -> Detections:
        gray = frame_bgr.mean(axis=2)
        h, w = gray.shape
        ys, xs = np.nonzero(gray > self.threshold)
        fraction = xs.size / gray.size
        if fraction < self.min_fraction:
            return (None, None)
        cx, cy = xs.mean() / w, ys.mean() / h
        span_x = max((xs.max() - xs.min()) / w, 4.0 / w)
        span_y = max((ys.max() - ys.min()) / h, 4.0 / h)
        pts = np.empty_like(self._shape)
        pts[:, 0] = cx + (self._shape[:, 0] - 0.5) * span_x
        pts[:, 1] = cy + (self._shape[:, 1] - 0.5) * span_y
        pts = np.clip(pts, 0.0, 1.0)
        confidence = float(min(1.0, 10.0 * fraction))
        return (None, HandDetection(points=pts, confidence=confidence))


BACKENDS = {
    "mediapipe": MediaPipeBackend,
    "centroid": CentroidBackend,
}


def make_backend(name: str):
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(BACKENDS)}") from None
