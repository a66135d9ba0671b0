import csv
import json

import pytest

from prefmodel.cli import EXIT_OK, EXIT_USAGE, build_parser, main, resolve_config
from prefmodel.learners import TrainedModel


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("logs")
    assert main(["simulate", "--seed", "5", "--games-per-pair", "1", "--out", str(out)]) == EXIT_OK
    return out


def test_simulate_writes_pairs(data_dir, capsys):
    assert len(list(data_dir.glob("*.csv"))) == 30
    assert len(list(data_dir.glob("*.json"))) == 30


def test_featurize(data_dir, tmp_path, capsys):
    code = main(["featurize", "--data", str(data_dir), "--out", str(tmp_path), "--stride", "50",
                 "--preference", "culture", "--preference", "gold"])
    assert code == EXIT_OK
    assert sorted(p.name for p in tmp_path.iterdir()) == ["features_culture.csv", "features_gold.csv"]
    with open(tmp_path / "features_culture.csv") as fh:
        header = next(csv.reader(fh))
    assert len(header) == 128 + 3
    assert "x 128 features" in capsys.readouterr().out


def test_sample_counts(data_dir, tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["sample", "--data", str(data_dir), "--preference", "culture", "--stride", "100",
                 "--test-fraction", "0.1", "--perc", "0.5", "--out", str(out)]) == EXIT_OK
    assert "culture: matches=30 test=3 remainder=27 sampled=13" in capsys.readouterr().out
    split = json.loads(out.read_text())["culture"]
    assert set(split["test"]).isdisjoint(split["remainder"])


def test_train_writes_model(data_dir, tmp_path):
    out = tmp_path / "m.json"
    assert main(["train", "--data", str(data_dir), "--preference", "military", "--learner", "nb",
                 "--stride", "20", "--perc", "1", "--out", str(out)]) == EXIT_OK
    model = TrainedModel.from_json(out.read_text())
    assert model.kind == "naive_bayes"


def test_tune_one_fold(data_dir, tmp_path, capsys):
    code = main(["tune", "--data", str(data_dir), "--learner", "svm", "--preference", "military",
                 "--k", "3", "--fold", "0", "--stride", "20", "--perc", "1", "--out", str(tmp_path)])
    assert code in (0, 3)
    rows = list(csv.reader(open(tmp_path / "grid_military_fold0.csv")))
    assert rows[0] == ["c_exp", "g_exp", "accuracy", "wall_time"]
    assert len(rows) == 111
    assert "110 grid evaluations" in capsys.readouterr().out


def test_tune_rejects_other_learners(data_dir, tmp_path):
    assert main(["tune", "--data", str(data_dir), "--learner", "nb", "--out", str(tmp_path)]) == EXIT_USAGE


def test_evaluate_writes_reports(data_dir, tmp_path):
    code = main(["evaluate", "--data", str(data_dir), "--preference", "military", "--learner", "nb",
                 "--learner", "adaboost", "--param", "rounds=5", "--k", "3", "--perc", "1", "--stride", "20",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "reports.json").read_text())
    assert [r["learner"] for r in payload["reports"]] == ["naive_bayes", "adaboost"]
    assert payload["config"]["params"]["adaboost"] == {"rounds": 5}
    assert "jobs" not in payload["config"]
    rollup = (tmp_path / "rollup.csv").read_text().splitlines()
    assert rollup[0].startswith("preference,majority_class,naive_bayes (rmse)")
    assert rollup[1].startswith("military,")


def test_characterize_rows(data_dir, tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert main(["characterize", "--data", str(data_dir), "--indicator", "culture", "--transform", "root5",
                 "--agents", "hatshepsut", "alexander", "--out", str(out)]) == EXIT_OK
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["indicator", "agent", "interval", "result", "r_squared", "b0", "b1", "confidence"]
    assert [r[1] for r in rows[1:]] == ["hatshepsut", "alexander"]
    assert rows[1][0] == "root5(Culture)" and rows[1][-1] == "99%"
    assert rows[1][6].count("(±") == 1
    assert "b1 separated" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--bogus", "--out", "x"],
        ["featurize", "--data", "/no/such/dir", "--out", "x"],
        ["evaluate", "--data", ".", "--out", "x", "--mode", "sideways"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_unknown_param_is_usage_error(data_dir, tmp_path):
    argv = ["evaluate", "--data", str(data_dir), "--learner", "nb", "--param", "depth=3", "--out", str(tmp_path)]
    assert main(argv) == EXIT_USAGE


def test_train_needs_single_target(data_dir, tmp_path):
    assert main(["train", "--data", str(data_dir), "--learner", "nb", "--out", str(tmp_path / "m")]) == EXIT_USAGE


def test_config_precedence(tmp_path, monkeypatch):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"seed": 3, "k": 5, "learners": ["nb"]}))
    parser = build_parser()
    monkeypatch.setenv("PREFMODEL_SEED", "11")
    cfg = resolve_config(parser.parse_args(["evaluate", "--data", ".", "--out", "o", "--config", str(cfg_file), "--k", "4"]))
    assert (cfg.seed, cfg.k, cfg.learners) == (3, 4, ["naive_bayes"])
    cfg = resolve_config(parser.parse_args(["evaluate", "--data", ".", "--out", "o"]))
    assert cfg.seed == 11
