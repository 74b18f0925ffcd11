"""Command-line experiment driver.

Subcommands: simulate, recover, bounds-sweep, kernel-check, grid-init,
match.  Every run writes a manifest with the resolved options next to its
outputs; data files are written atomically and are byte-identical across
runs with the same config and seed.  Exit codes: 0 success, 2 config error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    general_bound_basic,
    general_bound_pairwise,
    linearization_sweep,
    two_scatterer_bound,
    write_sweep_csv,
)
from .config import ConfigError, ExperimentConfig, load_config
from .kernel import KernelProfile, check_regions, uniform_norm_estimates
from .measures import DiscreteMeasure
from .metrics import match_measures
from .refine import foldy_forward, grid_initialization, run_pipeline
from .sampling import MeasurementPlan, ObservationVector, add_noise, build_plan
from .scatter import (
    SingularSystemError,
    apply_born_operator,
    apply_foldy_operator,
    far_field_constant,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, data: dict) -> None:
    _atomic_write(path, json.dumps(data, sort_keys=True, indent=1) + "\n")


def _write_manifest(out: Path, command: str, config: ExperimentConfig, extra: dict | None = None) -> None:
    import matplotlib
    import scipy

    manifest = {
        "command": command,
        "config": config.resolved(),
        "versions": {
            "scatrec": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    _write_json(out / "manifest.json", manifest)


def _noise_per_entry(cfg: ExperimentConfig) -> float:
    # noise_std is the standard deviation per (un-normalized) far-field
    # sample; observation vectors carry the 1/sqrt(m) normalization
    return cfg.noise_std / math.sqrt(cfg.m)


def _relative(a: float, b: float) -> float | None:
    return a / b if b > 0 else None


def cmd_simulate(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    truth = cfg.truth_config()
    if truth is None:
        raise ConfigError("config invalid at 'truth': required by simulate")
    plan = build_plan(cfg.m, cfg.kappa, cfg.d, cfg.seed)
    y_clean = ObservationVector(apply_foldy_operator(truth, plan), 0.0)
    y_noisy = add_noise(y_clean, _noise_per_entry(cfg), cfg.noise_seed)
    y_noisy.noise_std = cfg.noise_std  # record the per-sample convention

    y_born = apply_born_operator(truth.as_measure(), plan)
    lin_l2 = float(np.linalg.norm(y_clean.values - y_born))
    lin_sup = float(np.max(np.abs(y_clean.values - y_born))) * math.sqrt(cfg.m)
    noise_l2 = float(np.linalg.norm(y_noisy.values - y_clean.values))
    const = far_field_constant(cfg.kappa)
    report: dict = {
        "linearization_l2": lin_l2,
        "linearization_l2_physical": lin_l2 * const,
        "linearization_sup": lin_sup,
        "linearization_sup_physical": lin_sup * const,
        "linearization_relative": _relative(lin_l2, y_clean.norm()),
        "noise_l2": noise_l2,
        "noise_relative": _relative(noise_l2, y_clean.norm()),
        "lambda_b_guidance": (lin_l2 + noise_l2) / math.sqrt(truth.s),
        "bounds": {},
    }
    if truth.s == 2:
        rep = two_scatterer_bound(truth, cfg.kappa)
        report["bounds"]["two_scatterer"] = {
            "alpha": rep.alpha,
            "bound_physical": rep.bound,
            "valid": rep.valid,
        }
    if truth.s >= 2:
        for name, fn in (("general_basic", general_bound_basic), ("general_pairwise", general_bound_pairwise)):
            rep = fn(truth, cfg.kappa)
            report["bounds"][name] = {
                "alpha": rep.alpha,
                "bound_physical": rep.bound,
                "valid": rep.valid,
            }

    _atomic_write(out / "plan.json", plan.to_json(indent=1) + "\n")
    _atomic_write(out / "observations_clean.json", y_clean.to_json(indent=1) + "\n")
    _atomic_write(out / "observations_noisy.json", y_noisy.to_json(indent=1) + "\n")
    _atomic_write(out / "truth.json", truth.as_measure().to_json(indent=1) + "\n")
    _write_json(out / "simulate_report.json", report)
    from .plots import plot_measures, plot_observations

    plot_observations(out / "frequencies.png", plan.frequencies, cfg.kappa)
    plot_measures(out / "truth.png", cfg.domain, truth=truth.as_measure(), title="ground truth")
    _write_manifest(out, "simulate", cfg)
    rel = report["linearization_relative"]
    print(f"simulate: m={cfg.m} linearization l2 {lin_l2:.6g} " f"({'' if rel is None else f'{rel:.1%} relative'})")
    if report["noise_relative"] is not None:
        print(f"simulate: relative l2 noise level {report['noise_relative']:.1%}")
    print(f"simulate: lambda_b guidance (perturbation norm / sqrt(s)) = {report['lambda_b_guidance']:.4g}")
    return EXIT_OK


def _load_observations(path: str) -> ObservationVector:
    return ObservationVector.from_json(Path(path).read_text())


def _load_plan(cfg: ExperimentConfig, plan_path: str | None) -> MeasurementPlan:
    if plan_path:
        plan = MeasurementPlan.from_json(Path(plan_path).read_text())
        if plan.d != cfg.d or abs(plan.kappa - cfg.kappa) > 1e-12 * cfg.kappa:
            raise ConfigError(
                f"plan {plan_path} has d={plan.d}, kappa={plan.kappa} but the config "
                f"declares d={cfg.d}, kappa={cfg.kappa}"
            )
        return plan
    return build_plan(cfg.m, cfg.kappa, cfg.d, cfg.seed)


def _match_block(cfg: ExperimentConfig, estimate: DiscreteMeasure, plan, y) -> dict | None:
    truth = cfg.truth_config()
    if truth is None:
        return None
    radius = float(cfg.raw.get("match_radius", 0.5 / cfg.kappa))
    report = match_measures(truth.as_measure(), estimate, radius)
    if not estimate.is_empty:
        residual = foldy_forward(estimate.amplitudes, estimate.locations, plan) - y
        report.relative_residual = float(np.linalg.norm(residual) / max(1e-300, np.linalg.norm(y)))
    return report.to_dict()


def cmd_recover(cfg: ExperimentConfig, out: Path, observations: str, plan_path: str | None, threads: int) -> int:
    plan = _load_plan(cfg, plan_path)
    y = _load_observations(observations)
    if y.m != plan.m:
        raise ConfigError(f"observations have {y.m} entries but the plan has m={plan.m}")
    result = run_pipeline(plan, y.values, cfg.domain, cfg.sfw_options(), cfg.refine_options())
    _atomic_write(out / "linear_estimate.json", result.linear.to_json(indent=1) + "\n")
    _atomic_write(out / "nonlinear_estimate.json", result.nonlinear.to_json(indent=1) + "\n")
    result.sfw_trace.write_csv(out / "trace.csv")
    summary = {
        "sfw_converged": result.sfw_trace.converged,
        "sfw_outer_iterations": result.sfw_trace.n_outer,
        "linear_atoms": result.linear.n_atoms,
        "nonlinear_atoms": result.nonlinear.n_atoms,
        "objective_foldy_linear": result.refine_objective_start,
        "objective_foldy_nonlinear": result.refine_objective_end,
    }
    match = _match_block(cfg, result.nonlinear, plan, y.values)
    if match is not None:
        summary["match_nonlinear"] = match
        summary["match_linear"] = _match_block(cfg, result.linear, plan, y.values)
        _write_json(out / "match_report.json", match)
    _write_json(out / "recover_report.json", summary)
    truth = cfg.truth_config()
    from .plots import plot_measures

    plot_measures(
        out / "recovery.png",
        cfg.domain,
        truth=truth.as_measure() if truth else None,
        linear=result.linear,
        nonlinear=result.nonlinear,
        title="recovered measures",
    )
    _write_manifest(out, "recover", cfg)
    print(
        f"recover: linear {result.linear.n_atoms} atoms, nonlinear {result.nonlinear.n_atoms} atoms, "
        f"objective {result.refine_objective_start:.6g} -> {result.refine_objective_end:.6g}"
    )
    return EXIT_OK


def cmd_bounds_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    sweep_cfg = cfg.raw.get("bounds_sweep")
    if sweep_cfg is None:
        raise ConfigError("config invalid at 'bounds_sweep': required by bounds-sweep")
    deltas = sweep_cfg["deltas"]
    if isinstance(deltas, dict):
        deltas = {float(k): list(v) for k, v in deltas.items()}
    rows = linearization_sweep(
        kappas=[float(k) for k in sweep_cfg["kappas"]],
        deltas=deltas,
        trials=int(sweep_cfg.get("trials", 20)),
        seed=cfg.seed,
        n_dirs=int(sweep_cfg.get("n_dirs", 100)),
        threads=threads,
    )
    write_sweep_csv(rows, out / "sweep.csv")
    from .plots import plot_sweep

    plot_sweep(out / "sweep.png", rows)
    _write_manifest(out, "bounds-sweep", cfg)
    n_dominated = sum(1 for r in rows if not np.isfinite(r.bound) or r.empirical_mean <= r.bound)
    print(f"bounds-sweep: {len(rows)} rows, dominance holds on {n_dominated}/{len(rows)}")
    return EXIT_OK


def cmd_kernel_check(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    opts = cfg.raw.get("kernel_check", {})
    profile = KernelProfile(d=cfg.d, kappa=cfg.kappa)
    report = check_regions(
        profile,
        s_max=float(opts.get("s_max", 200.0)),
        n_near=int(opts.get("n_near", 1000)),
        n_far=int(opts.get("n_far", 1000)),
    )
    payload = report.to_dict()
    payload["uniform_norm_estimates"] = uniform_norm_estimates(
        profile, s_max=float(opts.get("s_max", 200.0))
    )
    _write_json(out / "kernel_check.json", payload)
    from .plots import plot_kernel

    plot_kernel(out / "kernel.png", profile, report)
    _write_manifest(out, "kernel-check", cfg)
    print(
        f"kernel-check: near curvature {report.min_near_curvature:.4f} (>= {report.near_threshold}), "
        f"far value {report.max_far_value:.4f} (<= {report.far_threshold}), "
        f"{'PASS' if report.passed else 'FAIL'}"
    )
    return EXIT_OK


def cmd_grid_init(cfg: ExperimentConfig, out: Path, observations: str, plan_path: str | None, threads: int) -> int:
    grid_cfg = cfg.raw.get("grid_init")
    if grid_cfg is None:
        raise ConfigError("config invalid at 'grid_init': required by grid-init")
    plan = _load_plan(cfg, plan_path)
    y = _load_observations(observations)
    estimate = grid_initialization(plan, y.values, cfg.domain, int(grid_cfg["grid_side"]), cfg.refine_options())
    _atomic_write(out / "grid_estimate.json", estimate.to_json(indent=1) + "\n")
    summary = {"grid_side": int(grid_cfg["grid_side"]), "atoms": estimate.n_atoms}
    match = _match_block(cfg, estimate, plan, y.values)
    if match is not None:
        summary["match"] = match
        _write_json(out / "match_report.json", match)
    _write_json(out / "grid_init_report.json", summary)
    truth = cfg.truth_config()
    from .plots import plot_measures

    plot_measures(
        out / "grid_init.png",
        cfg.domain,
        truth=truth.as_measure() if truth else None,
        nonlinear=estimate,
        title=f"grid initialization {grid_cfg['grid_side']}x{grid_cfg['grid_side']}",
    )
    _write_manifest(out, "grid-init", cfg)
    print(f"grid-init: {grid_cfg['grid_side']}^{cfg.d} start -> {estimate.n_atoms} atoms")
    return EXIT_OK


def cmd_match(truth_path: str, estimate_path: str, radius: float, out: Path) -> int:
    truth = DiscreteMeasure.from_json(Path(truth_path).read_text())
    estimate = DiscreteMeasure.from_json(Path(estimate_path).read_text())
    report = match_measures(truth, estimate, radius)
    _write_json(out / "match_report.json", report.to_dict())
    print(
        f"match: {report.n_matched} matched, {report.unmatched_truth} truth / "
        f"{report.unmatched_estimate} estimate unmatched, position rmse {report.position_rmse}"
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scatrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config JSON")
            p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")

    p = sub.add_parser("simulate", help="generate a plan and observation vectors from a truth config")
    common(p)
    p = sub.add_parser("recover", help="run the two-step recovery on observations")
    common(p)
    p.add_argument("--observations", required=True, help="observation vector JSON")
    p.add_argument("--plan", default=None, help="plan JSON (default: rebuild from config)")
    p = sub.add_parser("bounds-sweep", help="empirical linearization error against the bounds")
    common(p)
    p = sub.add_parser("kernel-check", help="near/far-region kernel diagnostics")
    common(p)
    p = sub.add_parser("grid-init", help="nonlinear descent from a regular-grid initialization")
    common(p)
    p.add_argument("--observations", required=True, help="observation vector JSON")
    p.add_argument("--plan", default=None, help="plan JSON (default: rebuild from config)")
    p = sub.add_parser("match", help="assignment-based comparison of two measure JSON files")
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--radius", type=float, default=0.5)
    common(p, needs_config=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "match":
            return cmd_match(args.truth, args.estimate, args.radius, out)
        cfg = load_config(args.config).with_seed(args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.threads)
        if args.command == "recover":
            return cmd_recover(cfg, out, args.observations, args.plan, args.threads)
        if args.command == "bounds-sweep":
            return cmd_bounds_sweep(cfg, out, args.threads)
        if args.command == "kernel-check":
            return cmd_kernel_check(cfg, out, args.threads)
        if args.command == "grid-init":
            return cmd_grid_init(cfg, out, args.observations, args.plan, args.threads)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularSystemError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
