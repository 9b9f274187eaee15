import json

import numpy as np
import pytest

from orars.cli import main
from orars.dataset import load_dataset
from orars.experiment import ExperimentConfig, cross_validate
from orars.nn import TrainConfig

FAST = ["--epochs", "2", "--pairs-per-utterance", "5"]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "corpus.jsonl"
    assert main(["synth", "--out", str(path), "--n-utterances", "40", "--phonemes", "5",
                 "--t-min", "4", "--t-max", "10", "--seed", "3"]) == 0
    return path


def _rows(text):
    return [line.split(", ") for line in text.strip().splitlines()]


class TestSynthAndFeatures:
    def test_synth_writes_dataset(self, corpus):
        d = load_dataset(corpus)
        assert len(d) == 40 and d.phoneme_count == 5

    def test_extract_features(self, corpus, capsys):
        assert main(["extract-features", "--dataset", str(corpus)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 41
        assert lines[0].split(",")[:3] == ["id", "score", "f0"]
        assert len(lines[1].split(",")) == 2 + 5 + 2 * 4

    def test_pca_project(self, corpus, capsys):
        assert main(["pca-project", "--dataset", str(corpus)]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "id,score,pc1,pc2" and len(lines) == 41


class TestTrainScore:
    @pytest.mark.parametrize("algorithm", ["nnr", "orars_rank", "orars_anchor"])
    def test_train_then_score(self, corpus, tmp_path, capsys, algorithm):
        ckpt = tmp_path / "m.ckpt"
        extra = ["--M", "6"] if algorithm == "orars_anchor" else []
        assert main(["train", "--dataset", str(corpus), "--algorithm", algorithm,
                     "--out", str(ckpt)] + FAST + extra) == 0
        capsys.readouterr()
        assert main(["score", "--model", str(ckpt), "--input", str(corpus),
                     "--train-ref", str(corpus)]) == 0
        rows = _rows(capsys.readouterr().out)
        assert len(rows) == 40
        assert all(0.0 <= float(s) <= 5.0 for _, s in rows)

    def test_rank_model_needs_reference(self, corpus, tmp_path, capsys):
        ckpt = tmp_path / "m.ckpt"
        main(["train", "--dataset", str(corpus), "--out", str(ckpt)] + FAST)
        assert main(["score", "--model", str(ckpt), "--input", str(corpus)]) == 2
        assert "--train-ref" in capsys.readouterr().err


class TestEvaluate:
    def test_predictions(self, corpus, tmp_path, capsys):
        d = load_dataset(corpus)
        pred = tmp_path / "p.csv"
        pred.write_text("".join(f"{u.id}, {u.score}\n" for u in d))
        out = tmp_path / "r.json"
        assert main(["evaluate", "--dataset", str(corpus), "--predictions", str(pred),
                     "--json", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["mae"] == 0 and rep["pcc"] == pytest.approx(1)
        assert "PCC" in capsys.readouterr().out

    def test_missing_prediction(self, corpus, tmp_path, capsys):
        pred = tmp_path / "p.csv"
        pred.write_text("u0000, 3.0\n")
        assert main(["evaluate", "--dataset", str(corpus), "--predictions", str(pred)]) != 0
        assert "no prediction" in capsys.readouterr().err

    @pytest.mark.parametrize("method", ["leave_one_out", "pairwise"])
    def test_inter_rater(self, corpus, capsys, method):
        assert main(["evaluate", "--dataset", str(corpus), "--inter-rater",
                     "--method", method]) == 0
        assert "SCC" in capsys.readouterr().out


class TestCrossValidate:
    def test_report(self, corpus, tmp_path, capsys):
        out, preds = tmp_path / "cv.json", tmp_path / "cv.csv"
        assert main(["cross-validate", "--dataset", str(corpus), "--algorithm", "gop_mean",
                     "--folds", "4", "--out", str(out), "--predictions-out", str(preds)]) == 0
        rec = json.loads(out.read_text())
        assert rec["report"]["mae"] is None and rec["report"]["n"] == 40
        assert len(preds.read_text().splitlines()) == 40
        assert "fold 4" in capsys.readouterr().out

    def test_repeat_is_byte_identical(self, corpus, tmp_path):
        args = ["cross-validate", "--dataset", str(corpus), "--algorithm", "nnr",
                "--folds", "2"] + FAST
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) != 0
        assert "usage" in capsys.readouterr().err

    def test_no_subcommand(self, capsys):
        assert main([]) != 0

    def test_help(self, capsys):
        assert main(["--help"]) == 0
        out = capsys.readouterr().out
        for cmd in ("synth", "extract-features", "train", "score", "evaluate",
                    "cross-validate", "pca-project"):
            assert cmd in out

    def test_subcommand_help_lists_flags(self, capsys):
        assert main(["train", "--help"]) == 0
        out = capsys.readouterr().out
        assert "--lr" in out and "--epochs" in out and "--algorithm" in out

    def test_missing_file_is_one_line(self, tmp_path, capsys):
        assert main(["extract-features", "--dataset", str(tmp_path / "nope.jsonl")]) == 1
        err = capsys.readouterr().err
        assert "Traceback" not in err and len(err.strip().splitlines()) == 1

    def test_malformed_dataset(self, tmp_path, capsys):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"format_version":1,"phoneme_count":3}\n{"id": "a"}\n')
        assert main(["extract-features", "--dataset", str(p)]) == 1
        assert "Traceback" not in capsys.readouterr().err

    def test_corrupt_checkpoint(self, corpus, tmp_path, capsys):
        p = tmp_path / "m.ckpt"
        p.write_text("{not json")
        assert main(["score", "--model", str(p), "--input", str(corpus)]) == 1
        assert "Traceback" not in capsys.readouterr().err


class TestConfigFile:
    def test_defaults_and_override(self, tmp_path, capsys):
        out = tmp_path / "c.jsonl"
        cfg = tmp_path / "synth.cfg"
        cfg.write_text(f"# small corpus\nout = {out}\nn-utterances = 7\nphonemes = 3\n"
                       "t-min = 2\nt-max = 4\n")
        assert main(["synth", "--config", str(cfg)]) == 0
        assert len(load_dataset(out)) == 7
        assert main(["synth", "--config", str(cfg), "--n-utterances", "9"]) == 0
        d = load_dataset(out)
        assert len(d) == 9 and d.phoneme_count == 3

    def test_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = blue\n")
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "x")]) != 0
        assert "colour" in capsys.readouterr().err


def test_cross_validate_matches_library(corpus, tmp_path):
    out = tmp_path / "cv.json"
    assert main(["cross-validate", "--dataset", str(corpus), "--algorithm", "orars_rank",
                 "--folds", "2", "--seed", "3", "--out", str(out)] + FAST) == 0
    cfg = ExperimentConfig(algorithm="orars_rank", folds=2, seed=3,
                           train=TrainConfig(epochs=2, pairs_per_utterance=5))
    lib = cross_validate(cfg, load_dataset(corpus)).report.to_dict()
    assert json.loads(out.read_text())["report"] == lib
