import json

import numpy as np
import pandas as pd
import pytest

from conftest import two_class_data
from qdaphase.classify import load_model, predict_batch
from qdaphase.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from qdaphase.realdata import REPORT_COLUMNS

IMPOSSIBLE = "p=1000\ndelta=0.7\nzeta=0.5\ntheta=0.45\nalpha=0.45\nbeta=1.8\ngamma=0.6\n"
SIGNAL = "p=20\ndelta=0.8\nzeta=0.3\ntheta=0.25\nalpha=0.2\nbeta=1.2\ngamma=0.6\nseed=4\n"


@pytest.fixture
def params_file(tmp_path):
    def make(text, name="params.txt"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return make


@pytest.fixture
def corpus_csv(tmp_path):
    data = two_class_data(30, 20, 6, shift=0.8, seed=1)
    frame = pd.DataFrame(data.X, columns=[f"g{j}" for j in range(6)])
    frame.insert(0, "label", np.where(data.y == 1, "tumour", "normal"))
    frame.insert(0, "id", [f"s{i}" for i in range(data.n)])
    path = tmp_path / "corpus.csv"
    frame.to_csv(path, index=False)
    return path


def test_regions_prints_verdict_and_reasons(params_file, capsys):
    assert main(["regions", "--config", str(params_file(IMPOSSIBLE))]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Impossible"
    assert len(lines) > 1
    assert all(line.startswith("  ") for line in lines[1:])


def test_common_flags_before_or_after_the_command(params_file, capsys):
    path = str(params_file(IMPOSSIBLE))
    assert main(["--seed", "3", "regions", "--config", path]) == EXIT_OK
    assert main(["regions", "--config", path, "--seed", "3", "-v"]) == EXIT_OK


def test_usage_errors(params_file, capsys):
    assert main(["transmogrify"]) == EXIT_USAGE
    assert main(["regions"]) == EXIT_USAGE
    assert main(["regions", "--config", str(params_file("p=1000\n"))]) == EXIT_USAGE
    assert main(["regions", "--config", str(params_file(IMPOSSIBLE)), "--threads", "0"]) == EXIT_USAGE


def test_missing_parameter_file(tmp_path, capsys):
    assert main(["regions", "--config", str(tmp_path / "absent.txt")]) == EXIT_DATA


def test_simulate_is_reproducible(tmp_path, params_file, capsys):
    config = str(params_file(SIGNAL))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", config, "--n", "40", "--out", str(first)]) == EXIT_OK
    assert main(["simulate", "--config", config, "--n", "40", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    frame = pd.read_csv(first)
    assert list(frame.columns) == ["label"] + [f"x{j + 1}" for j in range(20)]
    assert len(frame) == 40
    assert set(frame["label"]) == {0, 1}


def test_simulate_seed_flag_overrides_the_file(tmp_path, params_file, capsys):
    config = str(params_file(SIGNAL))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["simulate", "--config", config, "--n", "40", "--out", str(a)])
    main(["simulate", "--config", config, "--n", "40", "--out", str(b), "--seed", "5"])
    assert a.read_bytes() != b.read_bytes()


def test_fit_then_predict(tmp_path, corpus_csv, capsys):
    model_path = tmp_path / "model"
    assert main(["fit", "--data", str(corpus_csv), "--id-column", "id", "--variant", "Algorithm2",
                 "--t", "0.1", "--C", "0", "--L", "5", "--out", str(model_path)]) == EXIT_OK
    saved = tmp_path / "model.npz"
    assert saved.exists()

    out = tmp_path / "pred.csv"
    assert main(["predict", "--data", str(corpus_csv), "--id-column", "id", "--label-column", "label",
                 "--model", str(saved), "--out", str(out)]) == EXIT_OK
    predictions = pd.read_csv(out)
    assert list(predictions.columns) == ["id", "label", "score"]
    assert predictions["id"].tolist()[:2] == ["s0", "s1"]

    features = pd.read_csv(corpus_csv).drop(columns=["id", "label"]).to_numpy(dtype=float)
    labels, scores = predict_batch(load_model(saved), features)
    assert predictions["label"].tolist() == labels.tolist()
    assert np.allclose(predictions["score"].to_numpy(), scores.total, rtol=1e-15, atol=0.0)


def test_fit_variant_needing_a_matrix(tmp_path, corpus_csv, capsys):
    assert main(["fit", "--data", str(corpus_csv), "--id-column", "id", "--variant", "QDAfs",
                 "--out", str(tmp_path / "m")]) == EXIT_USAGE


def test_missing_files_exit_with_data_error(tmp_path, corpus_csv, capsys):
    assert main(["fit", "--data", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "m")]) == EXIT_DATA
    assert main(["predict", "--data", str(corpus_csv), "--model", str(tmp_path / "absent.npz"),
                 "--out", str(tmp_path / "p.csv")]) == EXIT_DATA
    assert "error:" in capsys.readouterr().err


def test_bench_writes_report(tmp_path, corpus_csv, capsys):
    settings = tmp_path / "settings"
    settings.mkdir()
    (settings / "settings.json").write_text(json.dumps({"bench": {
        "q_grid": [0.5, 1.0], "screen_pairs": [[0.1, 5]], "t_step": 0.5, "c_max": 3}}), encoding="utf-8")
    report = tmp_path / "bench.csv"
    assert main(["bench", "--data", str(corpus_csv), "--id-column", "id", "--splits", "2",
                 "--settings", str(settings), "--seed", "1", "--out", str(report)]) == EXIT_OK
    frame = pd.read_csv(report)
    assert list(frame.columns) == REPORT_COLUMNS
    assert len(frame) == 4
    out = capsys.readouterr().out
    assert "QDA wins" in out and "LDA wins" in out
