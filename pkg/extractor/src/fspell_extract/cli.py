"""fspell-extract: one video in, one landmark record out."""

from __future__ import annotations

import argparse
import logging
import sys

from .backends import BACKENDS, make_backend
from .extract import ExtractionJob, extract, write_records


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fspell-extract",
        description="extract hand landmarks from a video into the fspell landmark schema",
    )
    parser.add_argument("--video", required=True)
    parser.add_argument("--video-id", required=True)
    parser.add_argument("--signer-id", required=True)
    parser.add_argument("--label", help="ground-truth letter string, if known")
    parser.add_argument("--stride", type=int, default=1,
                        help="sample every k-th frame (default 1)")
    parser.add_argument("--with-z", action="store_true",
                        help="emit relative depth as a fourth component")
    parser.add_argument("--backend", choices=sorted(BACKENDS), default="mediapipe")
    parser.add_argument("--out", required=True)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    job = ExtractionJob(video_path=args.video, video_id=args.video_id,
                        signer_id=args.signer_id, label=args.label,
                        frame_stride=args.stride, with_z=args.with_z)
    try:
        backend = make_backend(args.backend)
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        record = extract(job, backend)
    except (IOError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        backend.close()
    write_records(args.out, [record])
    detected = sum(1 for f in record["frames"]
                   if f["left"] is not None or f["right"] is not None)
    print(f"wrote {len(record['frames'])} frames "
          f"({detected} with a detected hand) to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
