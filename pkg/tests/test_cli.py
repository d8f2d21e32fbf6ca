import json

import numpy as np
import pytest

from longhorizon.cli import main

BASE_CONFIG = {
    "seed": 19,
    "data": {
        "simulate": {
            "n_units": 600,
            "n_historical": 600,
            "k_actions": 2,
            "dim_x": 3,
            "dim_s": 2,
        }
    },
    "evaluation": {"test_fraction": 0.25, "bootstrap_replicates": 200, "level": 0.95},
    "bts": {"replicates": 8, "floor": 0.02, "ceiling": 0.95},
}


def _write_config(tmp_path, overrides=None, name="config.json"):
    config = json.loads(json.dumps(BASE_CONFIG))
    if overrides:
        config.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def test_run_produces_manifest_and_artifacts(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "run"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for key in (
        "surrogate_model",
        "imputations_csv",
        "policy",
        "evaluation",
        "bts_assignment",
        "evaluation_figure",
    ):
        assert key in manifest["artifacts"]
    evaluation = json.loads((out / "evaluation.json").read_text())
    assert evaluation["estimator"] == "dr"
    assert evaluation["B"] == 200
    assert "treat_none_baseline" in evaluation
    assert evaluation["ci"][0] <= evaluation["point"] <= evaluation["ci"][1]
    assert "dropped_replicates" in evaluation and "n_effective" in evaluation


def test_run_twice_byte_identical_numeric_outputs(tmp_path):
    cfg = _write_config(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
    for name in ("evaluation.json", "imputations.csv", "bts_assignment.csv", "policy.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_missing_csv_reports_path_before_compute(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        overrides={
            "data": {
                "historical_csv": str(tmp_path / "nope.csv"),
                "experimental_csv": str(tmp_path / "nope2.csv"),
                "covariates": [["x1", "float"]],
                "surrogates": [["s1", "float"]],
            }
        },
    )
    code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 3
    assert "nope.csv" in capsys.readouterr().err


def test_invalid_config_exit_code(tmp_path, capsys):
    cfg = _write_config(tmp_path, overrides={"evaluation": {"test_fraction": 2.0}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    missing = tmp_path / "missing.json"
    assert main(["run", "--config", str(missing)]) == 2


def test_simulate_then_csv_backed_pipeline(tmp_path):
    cfg = _write_config(tmp_path)
    simdir = tmp_path / "sim"
    assert main(["simulate", "--config", str(cfg), "--out", str(simdir)]) == 0
    assert (simdir / "ground_truth.csv").exists()
    header = (simdir / "ground_truth.csv").read_text().splitlines()[0]
    assert header == "unit_id,y_a0,y_a1,oracle_action"

    csv_config = _write_config(
        tmp_path,
        overrides={
            "data": {
                "historical_csv": str(simdir / "historical.csv"),
                "experimental_csv": str(simdir / "experimental.csv"),
                "covariates": [["x1", "float"], ["x2", "float"], ["x3", "float"],
                                ["segment", "categorical"]],
                "surrogates": [["s1", "float"], ["s2", "float"]],
                "k_actions": 2,
            }
        },
        name="csv_config.json",
    )
    out = tmp_path / "csvrun"
    assert main(["run", "--config", str(csv_config), "--out", str(out)]) == 0
    assert (out / "evaluation.json").exists()


def test_stage_isolation_file_roundtrip_matches_in_process(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "stages"
    assert main(["fit-surrogate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["impute", "--config", str(cfg), "--out", str(out)]) == 0

    from longhorizon.cli import RunConfig, _load_datasets
    from longhorizon.seeds import derive_seed
    from longhorizon.surrogate import fit_surrogate_index, impute

    run_cfg = RunConfig(json.loads(cfg.read_text()), out_override=str(out))
    historical, experimental, _sim = _load_datasets(run_cfg)
    model = fit_surrogate_index(
        historical,
        run_cfg.surrogate_spec(),
        tuning_seed=derive_seed(run_cfg.seed, "surrogate-tuning"),
    )
    expected = impute(model, experimental)
    from longhorizon.cli import _read_outcome_csv

    got = _read_outcome_csv(out / "imputations.csv")
    np.testing.assert_array_equal(got, expected)  # full-precision serialization

    # learned policy from the file equals the in-process one
    assert (
        main(
            [
                "learn-policy",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--outcomes",
                str(out / "imputations.csv"),
            ]
        )
        == 0
    )
    from longhorizon.cli import _learn
    from longhorizon.policy import load_policy, policy_assign

    in_process = _learn(run_cfg, experimental, expected, "learn")
    from_file = load_policy(out / "policy.json")
    np.testing.assert_array_equal(
        policy_assign(from_file, experimental.features).probs,
        policy_assign(in_process, experimental.features).probs,
    )


def test_evaluate_treat_none_baseline_semantics(tmp_path):
    cfg = _write_config(
        tmp_path,
        overrides={
            "evaluation": {
                "test_fraction": 0.25,
                "bootstrap_replicates": 200,
                "level": 0.9,
                "estimator": "hajek",
            }
        },
    )
    out = tmp_path / "eval"
    out.mkdir()
    assert main(["impute", "--config", str(cfg), "--out", str(out)]) == 3
    assert main(["fit-surrogate", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["impute", "--config", str(cfg), "--out", str(out)]) == 0
    assert (
        main(
            [
                "evaluate",
                "--config",
                str(cfg),
                "--out",
                str(out),
                "--outcomes",
                str(out / "imputations.csv"),
                "--policy",
                "treat_none",
            ]
        )
        == 0
    )
    evaluation = json.loads((out / "evaluation.json").read_text())
    # Hajek under the treat-none target weights only control units equally
    from longhorizon.cli import RunConfig, _load_datasets, _read_outcome_csv

    run_cfg = RunConfig(json.loads(cfg.read_text()), out_override=str(out))
    _hist, experimental, _sim = _load_datasets(run_cfg)
    outcomes = _read_outcome_csv(out / "imputations.csv")
    control = experimental.actions == 0
    w = 1.0 / experimental.observed_propensity()[control]
    expected = float(np.sum(w * outcomes[control]) / np.sum(w))
    assert evaluation["point"] == pytest.approx(expected, rel=1e-12)
    assert evaluation["point"] == pytest.approx(
        evaluation["treat_none_baseline"]["point"], rel=1e-12
    )
    assert (out / "evaluation.png").exists()


def test_validate_power_diagnose_emit_csv_and_figures(tmp_path):
    cfg = _write_config(
        tmp_path,
        overrides={
            "validate": {
                "simulate": {
                    "n_units": 1500,
                    "n_historical": 1500,
                    "dim_x": 3,
                    "horizon_windows": 4,
                },
                "horizons": [1, 2, 4],
                "bootstrap_replicates": 150,
            },
            "power": {
                "n_units": 4000,
                "q_grid": [0.02],
                "tau_grid": [0.0, 0.5],
                "n_reps": 40,
            },
        },
    )
    for sub, files in (
        ("validate", ["validation_report.csv", "validation_panels.png", "validation_sets.png"]),
        ("power", ["power.csv", "power.png"]),
        ("diagnose", ["shift_report.csv", "shift_report.png", "bias_bound.json"]),
    ):
        out = tmp_path / sub
        assert main([sub, "--config", str(cfg), "--out", str(out)]) == 0
        for name in files:
            assert (out / name).exists(), (sub, name)


def test_seed_override_changes_outputs(tmp_path):
    cfg = _write_config(tmp_path)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["run", "--config", str(cfg), "--out", str(out1), "--seed", "1"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2), "--seed", "2"]) == 0
    a = (out1 / "imputations.csv").read_bytes()
    b = (out2 / "imputations.csv").read_bytes()
    assert a != b
