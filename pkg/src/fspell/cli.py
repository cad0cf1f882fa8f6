"""Command-line entry point.

Subcommands cover the whole pipeline:

    fspell synth   --out landmarks.jsonl
    fspell prep    --input landmarks.jsonl --out features.jsonl --report hands.jsonl
    fspell train   --features features.jsonl --checkpoint model.ckpt --log train.jsonl
    fspell decode  --strategy rerank --checkpoint model.ckpt --input features.jsonl --out preds.jsonl
    fspell eval    --predictions preds.jsonl --references landmarks.jsonl --out report.txt
    fspell ablate  --checkpoint model.ckpt --features features.jsonl --out table.txt

Every subcommand takes --config FILE (default: $FSPELL_CONFIG) and repeated
--opt key=value overrides; see config.KEY_TABLE for the key set.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import autodiff as ad
from . import checkpoint as ckpt
from . import landmarks as lm
from . import posenorm
from .config import AppConfig, ConfigError, load_config
from .decoding import (Hypothesis, beam_ctc, autoregressive_decode, decode_hybrid,
                       greedy_ctc, greedy_path_logp, score_hypothesis_lm)
from .losses import ctc_labeling_logp
from .metrics import corpus_report, render_error_table
from .model import encoder_forward
from .synth import generate_synthetic
from .training import evaluate_strategies, split_corpus, train

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file (default: $FSPELL_CONFIG)")
    parser.add_argument("--opt", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true")


def _config_from_args(args, extra: dict[str, str] | None = None) -> AppConfig:
    overrides: dict[str, str] = {}
    for item in args.opt:
        if "=" not in item:
            raise ConfigError(f"--opt expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    overrides.update(extra or {})
    return load_config(args.config, overrides)


def _write_jsonl(path: str, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")))
            fh.write("\n")


def cmd_synth(args) -> int:
    cfg = _config_from_args(args)
    seqs = generate_synthetic(cfg.synth, cfg.model.vocab)
    lm.save_landmark_file(args.out, seqs)
    print(f"wrote {len(seqs)} sequences to {args.out}")
    return 0


def cmd_prep(args) -> int:
    cfg = _config_from_args(args)
    seqs = lm.load_landmark_file(args.input, cfg.model.vocab)
    prepared, report = posenorm.prepare_corpus(seqs)
    posenorm.save_features_file(args.out, prepared)
    if args.report:
        _write_jsonl(args.report, report)
    stats = lm.missing_pose_stats(seqs)
    print(f"prepared {len(prepared)}/{len(seqs)} sequences -> {args.out}")
    print(f"missing-pose histogram (10% bins): {stats}")
    return 0


def cmd_train(args) -> int:
    extra = {"train.seed": str(args.seed)} if args.seed is not None else None
    cfg = _config_from_args(args, extra)
    corpus = posenorm.load_features_file(args.features)

    def hook(epoch: int, params) -> None:
        path = f"{args.checkpoint}.epoch{epoch}"
        ckpt.save_checkpoint(path, params)
        logger.info("checkpoint: %s", path)

    result = train(cfg.train, corpus, checkpoint_hook=hook)
    ckpt.save_checkpoint(args.checkpoint, result.params)
    if args.log:
        _write_jsonl(args.log, result.log)
    last = result.log[-1]
    acc = last["holdout_letter_acc"]
    print(f"trained {cfg.train.epochs} epochs -> {args.checkpoint} "
          f"(final mean loss {last['mean_total']:.4f}, "
          f"holdout acc {'n/a' if acc is None else f'{acc:.3f}'})")
    return 0


def _hyp_record(h: Hypothesis, vocab) -> dict:
    return {
        "letters": vocab.decode(list(h.letters)),
        "ctc_logp": h.ctc_logp if h.ctc_logp > float("-inf") else None,
        "lm_logp": h.lm_logp,
        "length_penalty": h.length_penalty,
        "combined": h.combined,
    }


def cmd_decode(args) -> int:
    extra = {}
    if args.beam_width is not None:
        extra["decode.beam_width"] = str(args.beam_width)
    if args.beta is not None:
        extra["decode.beta"] = str(args.beta)
    if args.gamma is not None:
        extra["decode.gamma"] = str(args.gamma)
    cfg = _config_from_args(args, extra)
    params = ckpt.load_checkpoint(args.checkpoint)
    vocab = params.config.vocab
    corpus = posenorm.load_features_file(args.input)
    dcfg = cfg.decode

    records = []
    with ad.no_grad():
        for pose, _label in corpus:
            if args.strategy == "rerank":
                best, ranked = decode_hybrid(params, pose, dcfg)
                hyps = ranked
            else:
                enc = encoder_forward(params, pose)
                if args.strategy == "greedy":
                    letters = greedy_ctc(enc.emissions)
                    best = Hypothesis(letters=letters, ctc_logp=greedy_path_logp(enc.emissions))
                    hyps = [best]
                elif args.strategy == "beam":
                    hyps = beam_ctc(enc.emissions, dcfg.beam_width)
                    best = hyps[0]
                else:  # autoregressive
                    letters = autoregressive_decode(params, enc.memory, dcfg.max_decode_len)
                    score = ctc_labeling_logp(enc.emissions.data, list(letters), vocab.blank_id)
                    best = Hypothesis(letters=letters, ctc_logp=score,
                                      lm_logp=score_hypothesis_lm(params, enc.memory, letters))
                    hyps = [best]
            records.append({
                "source_id": pose.source_id,
                "prediction": vocab.decode(list(best.letters)),
                "hypotheses": [_hyp_record(h, vocab) for h in hyps],
            })
    _write_jsonl(args.out, records)
    print(f"decoded {len(records)} sequences ({args.strategy}) -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    refs = {s.video_id: s.label for s in lm.load_landmark_file(args.references, cfg.model.vocab)}
    pairs = []
    with open(args.predictions, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            source_id = rec["source_id"]
            if source_id not in refs:
                raise SystemExit(f"no reference for prediction {source_id!r}")
            if refs[source_id] is None:
                raise SystemExit(f"reference {source_id!r} has no label")
            pairs.append((refs[source_id], rec["prediction"]))
    report = corpus_report(pairs)
    text = render_error_table(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def cmd_ablate(args) -> int:
    cfg = _config_from_args(args)
    params = ckpt.load_checkpoint(args.checkpoint)
    corpus = posenorm.load_features_file(args.features)
    if args.split != "all":
        corpus = split_corpus(corpus)[args.split]
    if not corpus:
        raise SystemExit(f"split {args.split!r} is empty")
    table = evaluate_strategies(params, corpus, cfg.decode)
    text = table.render()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fspell",
                                     description="pose-based fingerspelling translation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic landmark corpus")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("prep", help="detect signing hands and normalize")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="hand-decision report (JSONL)")
    _add_common(p)
    p.set_defaults(fn=cmd_prep)

    p = sub.add_parser("train", help="train on a prepared features file")
    p.add_argument("--features", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--log", help="per-epoch training log (JSONL)")
    p.add_argument("--seed", type=int, help="shorthand for --opt train.seed=N")
    _add_common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("decode", help="decode a prepared features file")
    p.add_argument("--strategy", choices=("greedy", "beam", "autoregressive", "rerank"),
                   default="rerank")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--beam-width", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    _add_common(p)
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("eval", help="score predictions against references")
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="compare decoding strategies")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(fn=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except (ConfigError, lm.SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
