"""Adapter that runs a holistic landmark extractor over video files and
emits landmark files in the fspell ingestion schema."""

__version__ = "0.1.0"
