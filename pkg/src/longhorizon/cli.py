"""Command-line orchestration of the full targeting loop.

Subcommands: run, simulate, fit-surrogate, impute, learn-policy, evaluate,
bts-assign, validate, power, diagnose. Every stage derives its RNG from
the master seed through a hash chain, so a config plus seed fully
determines every emitted number. Floats are serialized at full round-trip
precision.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import ExperimentalDataset, HistoricalDataset, load_csv, save_csv
from .errors import ConfigError, DataError, LongHorizonError, NumericError
from .explore import (
    BtsConfig,
    PolicyPipeline,
    bts_policy,
    export_assignment_csv,
)
from .learners import LearnerSpec, default_spec_grid
from .ope import (
    PolicySnapshot,
    bootstrap_ci,
    fit_crossfit_outcome_model,
)
from .policy import (
    Policy,
    dr_scores,
    learn_policy_binary,
    learn_policy_multi,
    load_policy,
    policy_assign,
    save_policy,
)
from .seeds import derive_seed
from .sim import (
    DgpConfig,
    PowerConfig,
    generate,
    power_simulation,
    validation_experiment,
)
from .surrogate import SurrogateModel, ate_bias_bound, covariate_shift_report, fit_surrogate_index, impute

DEFAULT_SURROGATE_SPEC = {"family": "ridge_linear", "hyperparameters": {"l2_penalty": 0.0}}
DEFAULT_OUTCOME_SPEC = {"family": "ridge_linear", "hyperparameters": {"l2_penalty": 1e-8}}
DEFAULT_CLASSIFIER_SPEC = {"family": "cart_tree", "hyperparameters": {"depth": 3}}


def _threads() -> int:
    raw = os.environ.get("LONGHORIZON_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"LONGHORIZON_THREADS must be an integer, got {raw!r}") from None


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_json(path: Path, payload: dict) -> str:
    partial = path.with_suffix(path.suffix + ".partial")
    with open(partial, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(partial, path)
    return str(path)


def _write_outcome_csv(path: Path, values: np.ndarray, column: str = "outcome") -> str:
    partial = path.with_suffix(path.suffix + ".partial")
    with open(partial, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit_id", column])
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v))])
    os.replace(partial, path)
    return str(path)


def _read_outcome_csv(path, column: str = "outcome") -> np.ndarray:
    table = load_csv(path, [("unit_id", "int"), (column, "float")])
    order = np.argsort(table.column("unit_id"), kind="stable")
    return table.column(column)[order]


def _spec_from(config: dict | None, fallback: dict) -> LearnerSpec:
    return LearnerSpec.from_dict(config if config else fallback)


class RunConfig:
    """Validated view over the pipeline JSON document."""

    def __init__(self, raw: dict, seed_override=None, out_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = raw
        self.seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
        out = out_override or raw.get("out", "longhorizon_out")
        self.out_dir = Path(out)
        self.data = raw.get("data", {})
        self.surrogate = raw.get("surrogate", {})
        self.outcome_model = raw.get("outcome_model", {})
        self.policy = raw.get("policy", {})
        self.evaluation = raw.get("evaluation", {})
        self.bts = raw.get("bts", {})
        split = float(self.evaluation.get("test_fraction", 0.2))
        if not 0.0 < split < 1.0:
            raise ConfigError(f"test_fraction must be in (0, 1), got {split}")

    def surrogate_spec(self):
        if self.surrogate.get("tune"):
            return default_spec_grid("regression", seed=derive_seed(self.seed, "tune"))
        return _spec_from(self.surrogate.get("spec"), DEFAULT_SURROGATE_SPEC)

    def outcome_spec(self) -> LearnerSpec:
        return _spec_from(self.outcome_model.get("spec"), DEFAULT_OUTCOME_SPEC)

    def classifier_spec(self) -> LearnerSpec:
        return _spec_from(self.policy.get("classifier"), DEFAULT_CLASSIFIER_SPEC)


def _schema_from_config(pairs) -> list:
    out = []
    for entry in pairs:
        name, kind = entry
        out.append((str(name), str(kind)))
    return out


def _load_datasets(cfg: RunConfig):
    """Returns (historical, experimental, sim_or_none)."""
    data = cfg.data
    if "simulate" in data:
        sim = generate(DgpConfig(**{**data["simulate"], "seed": derive_seed(cfg.seed, "sim")}))
        return sim.historical, sim.experiment, sim
    for key in ("historical_csv", "experimental_csv", "covariates", "surrogates"):
        if key not in data:
            raise ConfigError(f"data config missing {key!r}")
    for key in ("historical_csv", "experimental_csv"):
        if not Path(data[key]).exists():
            raise DataError(f"{key} points at a missing file: {data[key]}")
    cov = _schema_from_config(data["covariates"])
    sur = _schema_from_config(data["surrogates"])
    k = int(data.get("k_actions", 2))
    action_col = data.get("action_column", "a")
    outcome_col = data.get("outcome_column", "y")
    p_cols = [(f"p{a}", "float") for a in range(k)]

    hist_tab = load_csv(data["historical_csv"], cov + sur + [(outcome_col, "float")])
    historical = HistoricalDataset(
        features=hist_tab.select([n for n, _ in cov]),
        surrogates=hist_tab.select([n for n, _ in sur]),
        outcomes=hist_tab.column(outcome_col),
    )
    exp_tab = load_csv(
        data["experimental_csv"], cov + sur + [(action_col, "int")] + p_cols
    )
    experimental = ExperimentalDataset(
        features=exp_tab.select([n for n, _ in cov]),
        actions=exp_tab.column(action_col),
        surrogates=exp_tab.select([n for n, _ in sur]),
        propensities=np.column_stack([exp_tab.column(f"p{a}") for a in range(k)]),
        k_actions=k,
    )
    historical.check_compatible(experimental)
    return historical, experimental, None


def _save_csv_atomic(table, path: Path) -> str:
    partial = path.with_suffix(path.suffix + ".partial")
    save_csv(table, partial)
    os.replace(partial, path)
    return str(path)


def _experimental_to_csv(exp: ExperimentalDataset, path: Path) -> str:
    from .data import Table

    extra = Table(
        [("unit_id", "int", np.arange(exp.n_units)), ("a", "int", exp.actions)]
        + [(f"p{a}", "float", exp.propensities[:, a]) for a in range(exp.k_actions)]
    )
    return _save_csv_atomic(exp.features.hstack(exp.surrogates).hstack(extra), path)


def _historical_to_csv(hist: HistoricalDataset, path: Path) -> str:
    from .data import Table

    table = hist.features.hstack(hist.surrogates).hstack(
        Table(
            [
                ("unit_id", "int", np.arange(hist.n_units)),
                ("y", "float", hist.outcomes),
            ]
        )
    )
    return _save_csv_atomic(table, path)


def _split_indices(n: int, test_fraction: float, seed: int):
    order = np.random.default_rng(derive_seed(seed, "split")).permutation(n)
    n_test = int(round(test_fraction * n))
    n_test = min(max(n_test, 1), n - 1)
    return order[n_test:], order[:n_test]


def _feature_view(exp: ExperimentalDataset, names) -> ExperimentalDataset:
    """Dataset with the covariates restricted to ``names`` (None keeps all)."""
    if not names:
        return exp
    return ExperimentalDataset(
        features=exp.features.select(list(names)),
        actions=exp.actions,
        surrogates=exp.surrogates,
        propensities=exp.propensities,
        k_actions=exp.k_actions,
    )


def _learn(cfg: RunConfig, exp, outcomes, seed_label: str) -> Policy:
    # the outcome model and the policy classifier may see different
    # covariate subsets; both default to all covariates
    mu = fit_crossfit_outcome_model(
        _feature_view(exp, cfg.outcome_model.get("features")),
        outcomes,
        cfg.outcome_spec(),
        int(cfg.outcome_model.get("n_folds", 3)),
        derive_seed(cfg.seed, seed_label, "folds"),
    )
    scores = dr_scores(exp, outcomes, mu)
    classifier_features = exp.features
    if cfg.policy.get("features"):
        classifier_features = exp.features.select(list(cfg.policy["features"]))
    if exp.k_actions == 2:
        return learn_policy_binary(scores, classifier_features, cfg.classifier_spec())
    return learn_policy_multi(scores, classifier_features, cfg.classifier_spec())


def _evaluate_against_baseline(cfg: RunConfig, exp, outcomes, snapshot) -> dict:
    """DR (or configured) value of the target and the treat-none baseline."""
    estimator = cfg.evaluation.get("estimator", "dr")
    B = int(cfg.evaluation.get("bootstrap_replicates", 1000))
    level = float(cfg.evaluation.get("level", 0.95))
    mu = None
    if estimator == "dr":
        mu = fit_crossfit_outcome_model(
            exp,
            outcomes,
            cfg.outcome_spec(),
            int(cfg.outcome_model.get("n_folds", 3)),
            derive_seed(cfg.seed, "evaluate", "folds"),
        )
    baseline = PolicySnapshot.constant(0, exp.n_units, exp.k_actions)
    target_est = bootstrap_ci(
        estimator, exp, outcomes, snapshot, B=B, level=level,
        seed=derive_seed(cfg.seed, "evaluate", "target"), mu=mu,
    )
    baseline_est = bootstrap_ci(
        estimator, exp, outcomes, baseline, B=B, level=level,
        seed=derive_seed(cfg.seed, "evaluate", "baseline"), mu=mu,
    )
    report = target_est.to_dict()  # estimator, point, ci, n_effective, dropped
    report.update(
        {
            "B": B,
            "level": level,
            "treat_none_baseline": baseline_est.to_dict(),
            "difference_point": target_est.point - baseline_est.point,
            "note": "imputed outcomes are treated as fixed data once produced",
        }
    )
    return report, {"target policy": target_est, "treat none": baseline_est}


def run_pipeline(cfg: RunConfig) -> dict:
    """Impute, learn, evaluate, and export the exploration assignment."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "config_hash": _config_hash(cfg.raw),
        "seed": cfg.seed,
        "versions": {"longhorizon": __version__, "numpy": np.__version__},
        "artifacts": {},
        "timings_s": {},
        "threads": _threads(),
    }
    stage = "data"
    try:
        t0 = time.perf_counter()
        historical, experimental, sim = _load_datasets(cfg)
        if sim is not None:
            manifest["artifacts"]["experimental_csv"] = _experimental_to_csv(
                experimental, out / "experimental.csv"
            )
            manifest["artifacts"]["historical_csv"] = _historical_to_csv(
                historical, out / "historical.csv"
            )
            sim.export_ground_truth_csv(out / "ground_truth.csv")
            manifest["artifacts"]["ground_truth_csv"] = str(out / "ground_truth.csv")
            manifest["artifacts"]["realized_outcomes_csv"] = _write_outcome_csv(
                out / "realized_outcomes.csv", sim.realized_outcomes
            )
        manifest["timings_s"][stage] = time.perf_counter() - t0

        stage = "surrogate"
        t0 = time.perf_counter()
        model = fit_surrogate_index(
            historical,
            cfg.surrogate_spec(),
            folds_for_tuning=int(cfg.surrogate.get("tuning_folds", 3)),
            include_covariates=bool(cfg.surrogate.get("include_covariates", True)),
            tuning_seed=derive_seed(cfg.seed, "surrogate-tuning"),
        )
        manifest["artifacts"]["surrogate_model"] = _write_json(
            out / "surrogate_model.json", model.to_dict()
        )
        manifest["timings_s"][stage] = time.perf_counter() - t0

        stage = "impute"
        t0 = time.perf_counter()
        imputed = impute(model, experimental)
        manifest["artifacts"]["imputations_csv"] = _write_outcome_csv(
            out / "imputations.csv", imputed
        )
        manifest["timings_s"][stage] = time.perf_counter() - t0

        stage = "learn-policy"
        t0 = time.perf_counter()
        train_idx, test_idx = _split_indices(
            experimental.n_units,
            float(cfg.evaluation.get("test_fraction", 0.2)),
            cfg.seed,
        )
        policy = _learn(cfg, experimental.take(train_idx), imputed[train_idx], "learn")
        save_policy(policy, out / "policy.json")
        manifest["artifacts"]["policy"] = str(out / "policy.json")
        manifest["timings_s"][stage] = time.perf_counter() - t0

        stage = "evaluate"
        t0 = time.perf_counter()
        exp_test = experimental.take(test_idx)
        snapshot = policy_assign(policy, exp_test.features)
        evaluation, estimates = _evaluate_against_baseline(
            cfg, exp_test, imputed[test_idx], snapshot
        )
        evaluation["n_test_units"] = int(test_idx.size)
        manifest["artifacts"]["evaluation"] = _write_json(
            out / "evaluation.json", evaluation
        )
        from .figures import save_evaluation_bars

        manifest["artifacts"]["evaluation_figure"] = save_evaluation_bars(
            estimates, out / "evaluation.png", title="policy value (imputed outcome)"
        )
        manifest["timings_s"][stage] = time.perf_counter() - t0

        stage = "bts-assign"
        t0 = time.perf_counter()
        bts_cfg = BtsConfig(
            replicates=int(cfg.bts.get("replicates", 100)),
            floor=float(cfg.bts.get("floor", 0.02)),
            ceiling=float(cfg.bts.get("ceiling", 0.98)),
            seed=derive_seed(cfg.seed, "bts"),
        )
        pipeline = PolicyPipeline(
            outcome_spec=cfg.outcome_spec(),
            classifier_spec=cfg.classifier_spec(),
            n_folds=int(cfg.outcome_model.get("n_folds", 3)),
        )
        snapshot = bts_policy(experimental, imputed, pipeline, bts_cfg)
        sampler = np.random.default_rng(derive_seed(cfg.seed, "bts-sample"))
        sampled = (
            sampler.random(experimental.n_units)[:, None]
            > np.cumsum(snapshot.probs, axis=1)
        ).sum(axis=1)
        sampled = np.minimum(sampled, experimental.k_actions - 1)
        export_assignment_csv(
            out / "bts_assignment.csv", snapshot, sampled, bts_cfg.seed
        )
        manifest["artifacts"]["bts_assignment"] = str(out / "bts_assignment.csv")
        manifest["timings_s"][stage] = time.perf_counter() - t0
    except LongHorizonError as err:
        raise type(err)(f"stage {stage!r} failed: {err}") from err

    _write_json(cfg.out_dir / "manifest.json", manifest)
    return manifest


# ---------------------------------------------------------------- subcommands


def _cmd_run(cfg: RunConfig, args) -> int:
    manifest = run_pipeline(cfg)
    print(f"pipeline complete; manifest at {cfg.out_dir / 'manifest.json'}")
    for name, path in manifest["artifacts"].items():
        print(f"  {name}: {path}")
    return 0


def _cmd_simulate(cfg: RunConfig, args) -> int:
    if "simulate" not in cfg.data:
        raise ConfigError("simulate needs a data.simulate block")
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    historical, experimental, sim = _load_datasets(cfg)
    paths = [
        _experimental_to_csv(experimental, cfg.out_dir / "experimental.csv"),
        _historical_to_csv(historical, cfg.out_dir / "historical.csv"),
    ]
    sim.export_ground_truth_csv(cfg.out_dir / "ground_truth.csv")
    paths.append(str(cfg.out_dir / "ground_truth.csv"))
    paths.append(
        _write_outcome_csv(cfg.out_dir / "realized_outcomes.csv", sim.realized_outcomes)
    )
    for p in paths:
        print(p)
    return 0


def _cmd_fit_surrogate(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    historical, _experimental, _sim = _load_datasets(cfg)
    model = fit_surrogate_index(
        historical,
        cfg.surrogate_spec(),
        folds_for_tuning=int(cfg.surrogate.get("tuning_folds", 3)),
        include_covariates=bool(cfg.surrogate.get("include_covariates", True)),
        tuning_seed=derive_seed(cfg.seed, "surrogate-tuning"),
    )
    path = _write_json(cfg.out_dir / "surrogate_model.json", model.to_dict())
    print(path)
    print(f"in-sample r_squared: {model.r_squared!r} on {model.n_train} rows")
    return 0


def _cmd_impute(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _historical, experimental, _sim = _load_datasets(cfg)
    model_path = Path(args.model or cfg.out_dir / "surrogate_model.json")
    if not model_path.exists():
        raise DataError(
            f"surrogate model not found at {model_path}; run fit-surrogate first "
            "or pass --model"
        )
    with open(model_path, "r", encoding="utf-8") as fh:
        model = SurrogateModel.from_dict(json.load(fh))
    values = impute(model, experimental)
    print(_write_outcome_csv(cfg.out_dir / "imputations.csv", values))
    return 0


def _outcomes_for(cfg: RunConfig, args, experimental, sim) -> np.ndarray:
    if args.outcomes:
        return _read_outcome_csv(args.outcomes)
    source = cfg.evaluation.get("outcomes_csv")
    if source:
        return _read_outcome_csv(source)
    if sim is not None:
        return impute(
            fit_surrogate_index(
                sim.historical,
                cfg.surrogate_spec(),
                tuning_seed=derive_seed(cfg.seed, "surrogate-tuning"),
            ),
            experimental,
        )
    raise ConfigError(
        "no outcomes available: pass --outcomes or set evaluation.outcomes_csv"
    )


def _cmd_learn_policy(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    historical, experimental, sim = _load_datasets(cfg)
    outcomes = _outcomes_for(cfg, args, experimental, sim)
    if outcomes.size != experimental.n_units:
        raise DataError("outcome vector does not align with the experimental units")
    policy = _learn(cfg, experimental, outcomes, "learn")
    save_policy(policy, cfg.out_dir / "policy.json")
    print(str(cfg.out_dir / "policy.json"))
    return 0


def _resolve_policy(args, experimental) -> PolicySnapshot:
    name = args.policy or "treat_none"
    if name == "treat_none":
        return PolicySnapshot.constant(0, experimental.n_units, experimental.k_actions)
    if name.startswith("treat_all"):
        action = 1 if name == "treat_all" else int(name.split(":", 1)[1])
        return PolicySnapshot.constant(
            action, experimental.n_units, experimental.k_actions
        )
    policy = load_policy(name)
    return policy_assign(policy, experimental.features)


def _cmd_evaluate(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _historical, experimental, sim = _load_datasets(cfg)
    outcomes = _outcomes_for(cfg, args, experimental, sim)
    snapshot = _resolve_policy(args, experimental)
    evaluation, estimates = _evaluate_against_baseline(
        cfg, experimental, outcomes, snapshot
    )
    evaluation["policy"] = args.policy or "treat_none"
    path = _write_json(cfg.out_dir / "evaluation.json", evaluation)
    from .figures import save_evaluation_bars

    fig_path = save_evaluation_bars(estimates, cfg.out_dir / "evaluation.png")
    print(path)
    print(fig_path)
    return 0


def _cmd_bts_assign(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _historical, experimental, sim = _load_datasets(cfg)
    outcomes = _outcomes_for(cfg, args, experimental, sim)
    bts_cfg = BtsConfig(
        replicates=int(cfg.bts.get("replicates", 100)),
        floor=float(cfg.bts.get("floor", 0.02)),
        ceiling=float(cfg.bts.get("ceiling", 0.98)),
        seed=derive_seed(cfg.seed, "bts"),
    )
    pipeline = PolicyPipeline(
        outcome_spec=cfg.outcome_spec(),
        classifier_spec=cfg.classifier_spec(),
        n_folds=int(cfg.outcome_model.get("n_folds", 3)),
    )
    snapshot = bts_policy(experimental, outcomes, pipeline, bts_cfg)
    sampler = np.random.default_rng(derive_seed(cfg.seed, "bts-sample"))
    sampled = (
        sampler.random(experimental.n_units)[:, None]
        > np.cumsum(snapshot.probs, axis=1)
    ).sum(axis=1)
    sampled = np.minimum(sampled, experimental.k_actions - 1)
    path = cfg.out_dir / "bts_assignment.csv"
    export_assignment_csv(path, snapshot, sampled, bts_cfg.seed)
    print(str(path))
    return 0


def _cmd_validate(cfg: RunConfig, args) -> int:
    block = cfg.raw.get("validate", {})
    sim_block = dict(block.get("simulate", cfg.data.get("simulate", {})))
    if not sim_block:
        raise ConfigError("validate needs a validate.simulate (or data.simulate) block")
    sim_block.setdefault("horizon_windows", 6)
    sim_block["seed"] = derive_seed(cfg.seed, "validate-sim")
    dgp = DgpConfig(**sim_block)
    horizons = block.get("horizons") or list(range(1, dgp.horizon_windows + 1))
    report = validation_experiment(
        dgp,
        horizons,
        test_fraction=float(cfg.evaluation.get("test_fraction", 0.2)),
        bootstrap_replicates=int(block.get("bootstrap_replicates", 400)),
        level=float(cfg.evaluation.get("level", 0.95)),
        seed=derive_seed(cfg.seed, "validate"),
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.out_dir / "validation_report.csv"
    report.write_csv(csv_path)
    from .figures import save_validation_panels, save_validation_sets

    panels = save_validation_panels(report, cfg.out_dir / "validation_panels.png")
    sets = save_validation_sets(report, cfg.out_dir / "validation_sets.png")
    print(str(csv_path))
    print(panels)
    print(sets)
    return 0


def _cmd_power(cfg: RunConfig, args) -> int:
    block = cfg.raw.get("power", {})
    n = int(block.get("n_units", 20000))
    rng = np.random.default_rng(derive_seed(cfg.seed, "power-population"))
    if "risk_csv" in block:
        table = load_csv(block["risk_csv"], [("risk", "float"), ("y0", "float")])
        risk = table.column("risk")
        y0 = table.column("y0")
    else:
        risk = np.clip(
            rng.beta(float(block.get("beta_a", 1.2)), float(block.get("beta_b", 12.0)), size=n),
            1e-4,
            1 - 1e-4,
        )
        y0 = (rng.random(n) < risk).astype(np.float64)
    q_grid = block.get("q_grid", [0.01, 0.02])
    tau_grid = block.get("tau_grid", [0.0, 0.1, 0.2, 0.3, 0.5])
    cells = []
    for q in q_grid:
        for tau in tau_grid:
            cells.append(
                power_simulation(
                    y0,
                    risk,
                    PowerConfig(
                        q=float(q),
                        tau_effect=float(tau),
                        n_reps=int(block.get("n_reps", 100)),
                        alpha=float(block.get("alpha", 0.05)),
                        assignment=block.get("assignment", "design"),
                    ),
                    seed=derive_seed(cfg.seed, "power", q),
                )
            )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.out_dir / "power.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["q", "tau_effect", "power", "mean_att", "true_att", "n_treated_mean"])
        for cell in cells:
            writer.writerow(
                [
                    repr(cell.config.q),
                    repr(cell.config.tau_effect),
                    repr(cell.power),
                    repr(cell.mean_att),
                    repr(cell.true_att),
                    repr(cell.n_treated_mean),
                ]
            )
    from .figures import save_power_curves

    fig_path = save_power_curves(cells, cfg.out_dir / "power.png")
    print(str(csv_path))
    print(fig_path)
    return 0


def _cmd_diagnose(cfg: RunConfig, args) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    historical, experimental, _sim = _load_datasets(cfg)
    shift = covariate_shift_report(historical.features, experimental.features)
    shift_path = cfg.out_dir / "shift_report.csv"
    shift.write_csv(shift_path)
    from .figures import save_shift_ranges

    fig_path = save_shift_ranges(shift, cfg.out_dir / "shift_report.png")
    paths = [str(shift_path), fig_path]
    if experimental.k_actions == 2:
        bound = ate_bias_bound(historical, experimental)
        paths.append(_write_json(cfg.out_dir / "bias_bound.json", bound.to_dict()))
    for p in paths:
        print(p)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "simulate": _cmd_simulate,
    "fit-surrogate": _cmd_fit_surrogate,
    "impute": _cmd_impute,
    "learn-policy": _cmd_learn_policy,
    "evaluate": _cmd_evaluate,
    "bts-assign": _cmd_bts_assign,
    "validate": _cmd_validate,
    "power": _cmd_power,
    "diagnose": _cmd_diagnose,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longhorizon",
        description="surrogate-index imputation, off-policy evaluation and "
        "optimization, and bootstrap-Thompson exploration",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        if name in ("learn-policy", "evaluate", "bts-assign"):
            p.add_argument(
                "--outcomes",
                default=None,
                help="CSV of per-unit outcomes (unit_id, outcome); defaults to "
                "evaluation.outcomes_csv or fresh imputations",
            )
        if name == "evaluate":
            p.add_argument(
                "--policy",
                default=None,
                help="policy JSON path, or treat_none / treat_all / treat_all:<a>",
            )
        if name == "impute":
            p.add_argument("--model", default=None, help="surrogate model JSON path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        print(f"config not found: {args.config}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as err:
        print(f"config is not valid JSON: {err}", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig(raw, seed_override=args.seed, out_override=args.out)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 4
    except (TypeError, KeyError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
