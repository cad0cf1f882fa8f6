"""Pose-based fingerspelling translation pipeline.

Keypoint file ingestion, signing-hand detection and normalization, a
transformer encoder-decoder with a word-length token, CTC/MSE/CE training,
and greedy / beam / autoregressive / re-ranked decoding.
"""

__version__ = "0.1.0"
