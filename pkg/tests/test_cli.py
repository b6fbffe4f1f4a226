import csv
import json
import re

import numpy as np
import pytest

from drillsound.cli import main, read_config_file

SUBCOMMANDS = ["synth", "augment", "featurize", "train", "evaluate", "predict", "ablate", "compare-aug"]
FAST = ["--epochs", "1", "--patience", "1", "--seed", "1"]


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_help_exits_zero(command, capsys):
    assert main([command, "--help"]) == 0
    assert "usage:" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["synth", "--out", "x", "--bogus"]) == 2
    assert main([]) == 2


def test_pipeline_error_exits_one(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["featurize", "--in", str(tmp_path / "empty"), "--out", str(tmp_path / "f")]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: ")
    (tmp_path / "junk.dfdm").write_bytes(b"nope")
    assert main(["predict", str(tmp_path / "junk.dfdm"), str(tmp_path / "missing.wav")]) == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# synth settings\nout = %s\nn-per-class = 2\nduration_ms = 20.83\nseed = 5\n" % (tmp_path / "a"))
    assert read_config_file(cfg)["n_per_class"] == "2"
    assert main(["synth", "--config", str(cfg)]) == 0
    assert len(list((tmp_path / "a").glob("*.wav"))) == 6
    echo = (tmp_path / "a" / "config.txt").read_text()
    assert "seed = 5" in echo and "n_per_class = 2" in echo
    assert main(["synth", "--config", str(cfg), "--n-per-class", "1", "--out", str(tmp_path / "b")]) == 0
    assert len(list((tmp_path / "b").glob("*.wav"))) == 3


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(root / "raw"), "--n-per-class", "4", "--duration-ms", "20.83"]) == 0
    assert main(["augment", "--in", str(root / "raw"), "--out", str(root / "aug")]) == 0
    assert main(["featurize", "--in", str(root / "aug"), "--out", str(root / "feat")]) == 0
    return root


def test_synth_augment_featurize_outputs(corpus):
    assert len(list((corpus / "raw").glob("*.wav"))) == 12
    names = sorted(p.name for p in (corpus / "aug").glob("*.wav"))
    assert len(names) == 36 and "Broken_000_shift.wav" in names
    with open(corpus / "feat" / "manifest.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 36
    assert {r["source_id"] for r in rows if r["file"].startswith("Normal_001")} == {"Normal_001"}


def test_train_evaluate_predict(corpus, capsys):
    out = corpus / "run"
    assert main(["train", "--data", str(corpus / "feat"), "--out", str(out)] + FAST) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["seed"] == 1 and summary["cli_config"]["epochs"] == 1
    assert (out / "history.csv").read_text().startswith("epoch,")

    assert main(["evaluate", "--model", str(out / "model.dfdm"), "--data", str(corpus / "feat"),
                 "--all", "--out", str(out / "eval.json")]) == 0
    assert json.loads((out / "eval.json").read_text())["metrics"]["macro_avg"]["support"] == 36

    capsys.readouterr()
    assert main(["predict", str(out / "model.dfdm"), str(corpus / "raw" / "Normal_000.wav")]) == 0
    line = capsys.readouterr().out.strip()
    m = re.fullmatch(r"label=(Broken|Normal|Other) p=\[([^\]]+)\] att=\[([^\]]+)\]", line)
    assert m, line
    probs = [float(v) for v in m.group(2).split(",")]
    att = [float(v) for v in m.group(3).split(",")]
    assert len(probs) == 3 and abs(sum(probs) - 1) < 1e-3
    assert len(att) == 25 and abs(sum(att) - 1) < 1e-2
    assert m.group(1) == ["Broken", "Normal", "Other"][int(np.argmax(probs))]


def test_ablate_and_compare_aug(corpus):
    table = corpus / "ablation.csv"
    assert main(["ablate", "--data", str(corpus / "feat"), "--seeds", "1", "--out", str(table)] + FAST) == 0
    with open(table) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert table.with_suffix(".config.txt").exists()

    cmp_out = corpus / "aug.csv"
    assert main(["compare-aug", "--original", str(corpus / "raw"), "--augmented", str(corpus / "feat"),
                 "--out", str(cmp_out), "--split-mode", "grouped"] + FAST) == 0
    with open(cmp_out) as fh:
        assert len(list(csv.DictReader(fh))) == 2
