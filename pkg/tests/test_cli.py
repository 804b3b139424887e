import csv
import json

import pytest

from identifiability.cli import COMMANDS, main


def small_config(tmp_path, **overrides):
    cfg = {
        "model": {"name": "linear_gaussian", "settings": {"m": 3, "n": 20}},
        "estimator": {"n_outer": 200, "n_inner": 6, "seed": 1},
        "sobol": {"n_samples": 256},
        "convergence": {"replicates": 3, "n_outer_values": [20, 40], "n_inner_fixed": 5,
                        "n_inner_values": [2, 5], "n_outer_fixed": 40},
        "posterior": {"n_steps": 2000, "adaptation_start": 200},
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), *extra])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_every_command_csv_is_byte_deterministic(tmp_path, command):
    cfg = small_config(tmp_path)
    assert run(command, cfg, tmp_path / "a") == 0
    assert run(command, cfg, tmp_path / "b") == 0
    # JSON files also record wall-clock timings, so only CSVs are compared
    files = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert files
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_identify_csv_and_json_agree(tmp_path):
    assert run("identify", small_config(tmp_path), tmp_path) == 0
    rows = read_rows(tmp_path / "gains.csv")
    payload = json.loads((tmp_path / "gains.json").read_text())
    assert [r["parameter"] for r in rows] == ["theta1", "theta2", "theta3"]
    assert rows[0]["n_outer"] == "200" and rows[0]["n_inner"] == "6"
    values = [float(r["gain"]) for r in rows]
    assert values == [g["gain"] for g in payload["gains"]]


def test_depend_writes_upper_triangle(tmp_path):
    assert run("depend", small_config(tmp_path), tmp_path) == 0
    rows = read_rows(tmp_path / "dependence.csv")
    pairs = [(r["parameter_i"], r["parameter_j"]) for r in rows]
    assert pairs == [("theta1", "theta2"), ("theta1", "theta3"), ("theta2", "theta3")]


def test_seed_override_changes_results(tmp_path):
    cfg = small_config(tmp_path)
    run("identify", cfg, tmp_path / "a")
    run("identify", cfg, tmp_path / "b", "--seed", "2")
    assert read_rows(tmp_path / "a" / "gains.csv") != read_rows(tmp_path / "b" / "gains.csv")


def test_workers_do_not_change_output(tmp_path):
    cfg = small_config(tmp_path)
    run("identify", cfg, tmp_path / "a")
    run("identify", cfg, tmp_path / "b", "--workers", "2")
    assert read_rows(tmp_path / "a" / "gains.csv") == read_rows(tmp_path / "b" / "gains.csv")


def test_single_parameter_model(tmp_path):
    cfg = small_config(tmp_path, model={"name": "linear", "settings": {"matrix": [[1.0], [0.5]]}})
    assert run("identify", cfg, tmp_path) == 0
    assert len(read_rows(tmp_path / "gains.csv")) == 1
    assert run("depend", cfg, tmp_path) == 0
    assert read_rows(tmp_path / "dependence.csv") == []


def test_missing_config_exits_with_config_error(tmp_path):
    assert run("identify", tmp_path / "nope.json", tmp_path) == 2


def test_unknown_field_is_rejected(tmp_path):
    cfg = small_config(tmp_path, estimator={"n_outer": 10, "bogus": 1})
    assert run("identify", cfg, tmp_path) == 2


def test_invalid_value_is_rejected(tmp_path):
    cfg = small_config(tmp_path, estimator={"n_outer": 1})
    assert run("identify", cfg, tmp_path) == 2


def test_oracle_check_needs_linear_model(tmp_path):
    cfg = small_config(tmp_path, model={"name": "methane_2step"})
    assert run("oracle-check", cfg, tmp_path) == 2


def test_runtime_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("identify", small_config(tmp_path), blocker / "out") == 3


def test_prior_mismatch_is_config_error(tmp_path):
    cfg = small_config(tmp_path, prior={"a": {"mean": 0.0, "variance": 1.0}})
    assert run("identify", cfg, tmp_path) == 2


def test_bundled_config_by_name(tmp_path):
    from identifiability.config import bundled_configs, load_config

    assert {"linear_gaussian.json", "methane.json"} <= set(bundled_configs())
    assert load_config("linear_gaussian").estimator.n_outer == 10_000
