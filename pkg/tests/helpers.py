"""Shared test utilities: independent oracles and finite-difference checks.

The oracles here deliberately avoid the library's own dynamic programs:
CTC scores come from exhaustive path enumeration, and edit distances from a
separate two-row Levenshtein, so the tests check implementations against
genuinely independent references.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


def rel_err(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(floor, np.abs(analytic) + np.abs(numeric))
    return float((np.abs(analytic - numeric) / denom).max())


def central_diff(fn, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of one array."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = fn(x)
        flat[i] = orig - eps
        down = fn(x)
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * eps)
    return grad


def random_log_probs(rng: np.random.Generator, n_frames: int, n_cols: int) -> np.ndarray:
    logits = rng.normal(size=(n_frames, n_cols))
    return logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))


def collapse(path, blank: int) -> tuple[int, ...]:
    out, prev = [], None
    for p in path:
        if p != prev and p != blank:
            out.append(int(p))
        prev = p
    return tuple(out)


@lru_cache(maxsize=None)
def _path_table(n_frames: int, n_cols: int):
    """All (n_cols)^T frame paths plus per-labeling path indices."""
    blank = n_cols - 1
    paths = np.array(list(itertools.product(range(n_cols), repeat=n_frames)),
                     dtype=np.int64)
    groups: dict[tuple[int, ...], list[int]] = {}
    for i, path in enumerate(paths):
        groups.setdefault(collapse(path, blank), []).append(i)
    indices = {lab: np.array(ix, dtype=np.int64) for lab, ix in groups.items()}
    return paths, indices


def _logsumexp(scores: np.ndarray) -> float:
    mx = scores.max()
    return float(mx + np.log(np.exp(scores - mx).sum()))


def brute_force_labeling_logps(log_probs: np.ndarray) -> dict[tuple[int, ...], float]:
    """Alignment-summed log-probability of every reachable labeling, by
    exhaustive enumeration of all (n_cols)^T paths."""
    n_frames, n_cols = log_probs.shape
    paths, indices = _path_table(n_frames, n_cols)
    scores = log_probs[np.arange(n_frames), paths].sum(axis=1)
    return {lab: _logsumexp(scores[ix]) for lab, ix in indices.items()}


def brute_force_ctc_logp(log_probs: np.ndarray, target) -> float:
    """Exhaustive alignment sum for one labeling; -inf when unreachable."""
    n_frames, n_cols = log_probs.shape
    paths, indices = _path_table(n_frames, n_cols)
    ix = indices.get(tuple(target))
    if ix is None:
        return -np.inf
    scores = log_probs[np.arange(n_frames), paths[ix]].sum(axis=1)
    return _logsumexp(scores)


def reference_levenshtein(a: str, b: str) -> int:
    """Two-row iterative edit distance, independent of the metrics module."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]
