import json

import numpy as np
import pytest

from fspell.checkpoint import load_checkpoint
from fspell.cli import main

TINY_CFG = """
model.d_model = 16
model.n_heads = 2
model.n_enc_layers = 1
model.n_dec_layers = 1
model.ffn_dim = 32
model.max_frames = 64
model.dropout = 0.0
model.letters = abcd
train.epochs = 3
train.lr = 0.0005
train.seed = 3
synth.n_words = 40
synth.word_len_range = 1,3
synth.frames_per_letter_range = 2,3
synth.noise_sigma = 0.004
synth.seed = 12
"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full synth -> prep -> train -> decode run shared by the tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.cfg"
    cfg.write_text(TINY_CFG)
    paths = {
        "cfg": str(cfg),
        "landmarks": str(root / "lm.jsonl"),
        "features": str(root / "feats.jsonl"),
        "report": str(root / "hands.jsonl"),
        "ckpt": str(root / "model.ckpt"),
        "log": str(root / "train.jsonl"),
        "preds": str(root / "preds.jsonl"),
        "eval": str(root / "eval.txt"),
        "table": str(root / "table.txt"),
    }
    assert main(["synth", "--config", paths["cfg"], "--out", paths["landmarks"]]) == 0
    assert main(["prep", "--config", paths["cfg"], "--input", paths["landmarks"],
                 "--out", paths["features"], "--report", paths["report"]]) == 0
    assert main(["train", "--config", paths["cfg"], "--features", paths["features"],
                 "--checkpoint", paths["ckpt"], "--log", paths["log"]]) == 0
    assert main(["decode", "--config", paths["cfg"], "--strategy", "rerank",
                 "--checkpoint", paths["ckpt"], "--input", paths["features"],
                 "--out", paths["preds"]]) == 0
    return paths


def test_prep_outputs_schema(pipeline):
    with open(pipeline["features"]) as fh:
        records = [json.loads(l) for l in fh]
    assert len(records) == 40
    first = records[0]
    assert set(first) == {"source_id", "label", "kept_fraction", "features"}
    assert len(first["features"][0]) == 42
    with open(pipeline["report"]) as fh:
        report = [json.loads(l) for l in fh]
    assert all(set(r) == {"video_id", "signer_id", "per_video_pick", "voted_pick"}
               for r in report)
    assert all(r["voted_pick"] == "right" for r in report)


def test_train_log_schema(pipeline):
    with open(pipeline["log"]) as fh:
        records = [json.loads(l) for l in fh]
    assert [r["epoch"] for r in records] == [1, 2, 3]
    for r in records:
        assert set(r) == {"epoch", "mean_ctc", "mean_ce", "mean_mse",
                          "mean_total", "holdout_letter_acc", "skipped"}


def test_decode_output_schema(pipeline):
    with open(pipeline["preds"]) as fh:
        records = [json.loads(l) for l in fh]
    assert len(records) == 40
    rec = records[0]
    assert set(rec) == {"source_id", "prediction", "hypotheses"}
    hyp = rec["hypotheses"][0]
    assert set(hyp) == {"letters", "ctc_logp", "lm_logp", "length_penalty", "combined"}
    assert isinstance(hyp["ctc_logp"], float)
    assert rec["prediction"] == rec["hypotheses"][0]["letters"]


def test_decode_strategies_emit_expected_hypothesis_fields(pipeline, tmp_path):
    for strategy, lm_filled in (("greedy", False), ("beam", False),
                                ("autoregressive", True)):
        out = tmp_path / f"{strategy}.jsonl"
        assert main(["decode", "--config", pipeline["cfg"], "--strategy", strategy,
                     "--checkpoint", pipeline["ckpt"], "--input", pipeline["features"],
                     "--out", str(out)]) == 0
        with open(out) as fh:
            rec = json.loads(fh.readline())
        hyp = rec["hypotheses"][0]
        assert (hyp["lm_logp"] is not None) == lm_filled


def test_eval_report(pipeline):
    assert main(["eval", "--config", pipeline["cfg"],
                 "--predictions", pipeline["preds"],
                 "--references", pipeline["landmarks"],
                 "--out", pipeline["eval"]]) == 0
    text = open(pipeline["eval"]).read()
    assert "Error Count" in text and "Letter accuracy" in text


def test_ablate_table(pipeline):
    assert main(["ablate", "--config", pipeline["cfg"],
                 "--checkpoint", pipeline["ckpt"],
                 "--features", pipeline["features"],
                 "--split", "all", "--out", pipeline["table"]]) == 0
    text = open(pipeline["table"]).read()
    assert text.startswith("Decoding Strategy")
    assert "re-ranking" in text


def test_decode_flags_override_config(pipeline, tmp_path):
    out = tmp_path / "beam1.jsonl"
    assert main(["decode", "--config", pipeline["cfg"], "--strategy", "beam",
                 "--beam-width", "1", "--checkpoint", pipeline["ckpt"],
                 "--input", pipeline["features"], "--out", str(out)]) == 0
    with open(out) as fh:
        rec = json.loads(fh.readline())
    assert len(rec["hypotheses"]) == 1


def test_checkpoint_loadable_and_sized(pipeline):
    params = load_checkpoint(pipeline["ckpt"])
    assert params.config.d_model == 16
    assert np.isfinite(params.flat).all()


def test_missing_reference_is_an_error(pipeline, tmp_path):
    preds = tmp_path / "preds.jsonl"
    preds.write_text('{"source_id": "nope", "prediction": "a", "hypotheses": []}\n')
    with pytest.raises(SystemExit):
        main(["eval", "--config", pipeline["cfg"], "--predictions", str(preds),
              "--references", pipeline["landmarks"]])


def test_config_error_returns_nonzero(tmp_path):
    out = tmp_path / "x.jsonl"
    assert main(["synth", "--opt", "bogus.key=1", "--out", str(out)]) == 1
