"""Synthetic fingerspelling corpora for desk-scale verification.

Each letter of the alphabet gets a fixed 21-point "pose-font" hand shape,
drawn once from the seed. A word is rendered by holding each letter's shape
for a few frames and inserting linear interpolation frames between letters,
with i.i.d. Gaussian coordinate noise throughout. Shapes live in raw image
coordinates with the wrist at the bounding-box corner, so the full
preprocessing pipeline (hand detection, origin shift, scaling,
standardization) is exercised end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .landmarks import HAND_JOINTS, HandFrame, Landmark, LandmarkSequence
from .vocab import Vocabulary

N_SIGNERS = 4

# raw-coordinate layout of the glyph box; offsets keep every joint right of
# and below the wrist so per-frame bounding boxes never collapse
WRIST_POS = np.array([0.35, 0.40])
GLYPH_MIN, GLYPH_MAX = 0.03, 0.30


@dataclass(frozen=True)
class SynthConfig:
    n_words: int = 200
    word_len_range: tuple[int, int] = (3, 8)
    frames_per_letter_range: tuple[int, int] = (3, 5)
    noise_sigma: float = 0.01
    seed: int = 0
    transition_frames: int = 2

    def __post_init__(self):
        for name in ("word_len_range", "frames_per_letter_range"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name} must be an ordered non-empty range")
        if not 1 <= self.word_len_range[0] and self.word_len_range[1] <= 30:
            raise ValueError("word lengths must lie in [1, 30]")
        if self.n_words < 1:
            raise ValueError("n_words must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.transition_frames < 0:
            raise ValueError("transition_frames must be >= 0")


def letter_fonts(vocab: Vocabulary, rng: np.random.Generator) -> np.ndarray:
    """One canonical 21x2 shape per letter, wrist first at the box corner."""
    fonts = np.empty((vocab.n_letters, HAND_JOINTS, 2))
    for i in range(vocab.n_letters):
        offsets = rng.uniform(GLYPH_MIN, GLYPH_MAX, size=(HAND_JOINTS, 2))
        offsets[0] = 0.0
        fonts[i] = WRIST_POS + offsets
    return fonts


def _frame(points: np.ndarray, rng: np.random.Generator, sigma: float) -> HandFrame:
    noisy = points + rng.normal(0.0, sigma, size=points.shape) if sigma > 0 else points
    conf = rng.uniform(0.9, 1.0, size=HAND_JOINTS)
    right = tuple(Landmark(float(x), float(y), float(c))
                  for (x, y), c in zip(noisy, conf))
    return HandFrame(left=None, right=right)


def render_word(word: str, fonts: np.ndarray, cfg: SynthConfig,
                vocab: Vocabulary, rng: np.random.Generator) -> list[HandFrame]:
    """Hold each letter's shape, interpolate across letter boundaries.

    With holds h_i per letter and t transition frames per boundary, a word
    of L letters yields sum(h_i) + (L-1)*t frames.
    """
    lo, hi = cfg.frames_per_letter_range
    ids = vocab.encode(word)
    frames: list[HandFrame] = []
    for pos, letter_id in enumerate(ids):
        hold = int(rng.integers(lo, hi + 1))
        for _ in range(hold):
            frames.append(_frame(fonts[letter_id], rng, cfg.noise_sigma))
        if pos + 1 < len(ids):
            nxt = fonts[ids[pos + 1]]
            for j in range(cfg.transition_frames):
                w = (j + 1) / (cfg.transition_frames + 1)
                blend = (1.0 - w) * fonts[letter_id] + w * nxt
                frames.append(_frame(blend, rng, cfg.noise_sigma))
    return frames


def generate_synthetic(cfg: SynthConfig, vocab: Vocabulary | None = None
                       ) -> list[LandmarkSequence]:
    """Seeded corpus of labeled right-handed sequences; bit-reproducible."""
    vocab = vocab or Vocabulary()
    rng = np.random.default_rng(cfg.seed)
    fonts = letter_fonts(vocab, rng)
    seqs = []
    letters = list(vocab.letters)
    for i in range(cfg.n_words):
        length = int(rng.integers(cfg.word_len_range[0], cfg.word_len_range[1] + 1))
        word = "".join(rng.choice(letters, size=length))
        frames = render_word(word, fonts, cfg, vocab, rng)
        seqs.append(LandmarkSequence(
            video_id=f"synth-{i:05d}",
            signer_id=f"signer-{i % N_SIGNERS:02d}",
            frames=tuple(frames),
            label=word,
        ))
    return seqs
