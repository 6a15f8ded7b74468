import csv
import json

import numpy as np
import pytest
import yaml

from mtdispatch import cli, oracle
from mtdispatch.cli import main, read_front
from mtdispatch.scenario import save_scenario

COMMON = ["--pop-size", "8", "--runs", "2", "--quiet"]


@pytest.fixture(scope="module")
def electric_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scn") / "electric.yaml"
    save_scenario(oracle.micro_scenarios()["electric"].scenario, path)
    return path


def metric_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_zero_generation_batch_writes_every_artifact(tmp_path):
    code = main(["run", "--generations", "0", "--output-dir", str(tmp_path), *COMMON])
    assert code in (cli.EXIT_OK, cli.EXIT_INFEASIBLE)
    out = tmp_path / "mmde-ekt-anm"
    cfg = yaml.safe_load((out / "config.yaml").read_text())
    assert cfg["pop_size"] == 8 and cfg["generations"] == 0 and "scenario" in cfg
    for k in range(2):
        F, cv, X = read_front(out / f"run_{k:03d}" / "front.csv")
        assert X.shape[1] == 432 and len(F) == len(cv) >= 1
        with open(out / f"run_{k:03d}" / "schedule.csv") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 25 and len(rows[0]) == 19
    rows = metric_rows(out / "metrics.csv")
    assert [(r["algorithm"], r["metric"]) for r in rows] == [("mmde-ekt-anm", "IGD"), ("mmde-ekt-anm", "HV")]
    plot = json.loads((out / "plot_data.json").read_text())
    assert len(plot["series"]) == 2


def test_feasible_batch_exits_zero_and_reruns_identically(tmp_path, electric_file):
    args = ["run", "--scenario", str(electric_file), "--generations", "30", "--seed", "5", *COMMON]
    assert main([*args, "--output-dir", str(tmp_path / "a")]) == cli.EXIT_OK
    assert main([*args, "--output-dir", str(tmp_path / "b")]) == cli.EXIT_OK
    for k in range(2):
        name = f"mmde-ekt-anm/run_{k:03d}/front.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = metric_rows(tmp_path / "a" / "mmde-ekt-anm" / "metrics.csv")
    assert all(int(r["runs"]) == 2 for r in rows)


def test_front_csv_round_trip(tmp_path, electric_file):
    main(["run", "--scenario", str(electric_file), "--generations", "5", "--output-dir", str(tmp_path), *COMMON])
    F, cv, X = read_front(tmp_path / "mmde-ekt-anm" / "run_000" / "front.csv")
    problem = cli.DispatchProblem(oracle.micro_scenarios()["electric"].scenario)
    F2, cv2 = problem.evaluate(X)
    np.testing.assert_allclose(F2, F, rtol=1e-6)
    np.testing.assert_allclose(cv2, cv, atol=1e-6)


def test_compare_self_and_sole_contributor(tmp_path, electric_file, capsys):
    main(["run", "--scenario", str(electric_file), "--generations", "20", "--output-dir", str(tmp_path), *COMMON])
    batch = str(tmp_path / "mmde-ekt-anm")
    capsys.readouterr()
    assert main(["compare", batch, batch, "--out", str(tmp_path / "cmp.csv")]) == cli.EXIT_OK
    rows = metric_rows(tmp_path / "cmp.csv")
    assert len(rows) == 4
    assert {k: v for k, v in rows[0].items()} == rows[2] and rows[1] == rows[3]
    # a lone single-run batch is its own reference
    solo = tmp_path / "solo"
    main(["run", "--scenario", str(electric_file), "--generations", "20", "--output-dir", str(solo),
          "--pop-size", "8", "--runs", "1", "--quiet"])
    assert main(["compare", str(solo / "mmde-ekt-anm"), "--out", str(tmp_path / "solo.csv")]) == cli.EXIT_OK
    igd_row = metric_rows(tmp_path / "solo.csv")[0]
    assert float(igd_row["mean"]) == 0.0


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "--pop-size", "2", "--output-dir", str(tmp_path)]) == cli.EXIT_USAGE
    assert "pop_size" in capsys.readouterr().err
    assert main(["run", "--scenario", str(tmp_path / "missing.yaml"), "--output-dir", str(tmp_path)]) == cli.EXIT_USAGE
    assert main(["compare", str(tmp_path)]) == cli.EXIT_USAGE
    assert main(["no-such-command"]) == cli.EXIT_USAGE


def test_infeasible_batch_exits_two(tmp_path):
    s = oracle.micro_scenarios()["electric"].scenario
    s.p_load = s.p_load * 10  # beyond grid + wind + solar capacity
    path = tmp_path / "overloaded.yaml"
    save_scenario(s, path)
    code = main(["run", "--scenario", str(path), "--generations", "0", "--pop-size", "4",
                 "--runs", "1", "--quiet", "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_INFEASIBLE


def test_output_dir_from_environment(tmp_path, monkeypatch, electric_file):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    main(["run", "--scenario", str(electric_file), "--generations", "0", "--pop-size", "4", "--runs", "1", "--quiet"])
    assert (tmp_path / "env" / "mmde-ekt-anm" / "metrics.csv").exists()
    # an explicit flag still wins
    main(["run", "--scenario", str(electric_file), "--generations", "0", "--pop-size", "4", "--runs", "1", "--quiet",
          "--output-dir", str(tmp_path / "flag")])
    assert (tmp_path / "flag" / "mmde-ekt-anm" / "metrics.csv").exists()


def test_config_file_and_flag_precedence(tmp_path, electric_file):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"pop_size": 6, "generations": 0, "runs": 1, "algorithm": "mmde-ekt"}))
    main(["run", "--config", str(cfg), "--scenario", str(electric_file), "--pop-size", "5", "--quiet",
          "--output-dir", str(tmp_path)])
    written = yaml.safe_load((tmp_path / "mmde-ekt" / "config.yaml").read_text())
    assert written["pop_size"] == 5 and written["algorithm"] == "mmde-ekt"


def test_oracle_subcommand(tmp_path, capsys):
    assert main(["oracle", "electric", "--out", str(tmp_path)]) == cli.EXIT_OK
    assert "electric: grid" in capsys.readouterr().out
    table = np.loadtxt(tmp_path / "electric_front.csv", delimiter=",", skiprows=1, ndmin=2)
    assert table.shape[1] == 2 + 18


def test_validate_scenario(electric_file, tmp_path, capsys):
    assert main(["validate-scenario", str(electric_file)]) == cli.EXIT_OK
    assert "T=1" in capsys.readouterr().out
    bad = tmp_path / "bad.yaml"
    bad.write_text("T: 3\n")
    assert main(["validate-scenario", str(bad)]) == cli.EXIT_USAGE
