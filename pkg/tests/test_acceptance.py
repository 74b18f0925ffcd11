"""Acceptance gate: one test per criterion, each printing a pass/fail line
with its runtime against the stated budget.  Run with `pytest -v -s
tests/test_acceptance.py` to see the per-criterion lines."""

import json
import math
import time
from pathlib import Path

import numpy as np

from scatrec import blasso as bl
from scatrec import bounds as bd
from scatrec import kernel as kn
from scatrec import refine as rf
from scatrec import sampling as sp
from scatrec import scatter as sc
from scatrec.cli import main as cli_main
from scatrec.measures import Box, DiscreteMeasure

from oracles import neumann_series_solve, two_scatterer_far_field


class Criterion:
    def __init__(self, number: int, label: str, budget_s: float):
        self.number = number
        self.label = label
        self.budget_s = budget_s
        self.t0 = time.perf_counter()

    def done(self):
        elapsed = time.perf_counter() - self.t0
        print(f"\n[criterion {self.number:2d}] PASS  {self.label}  ({elapsed:.2f}s < {self.budget_s:.0f}s)")
        assert elapsed < self.budget_s, f"criterion {self.number} exceeded its runtime budget"


def uniform_direction(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def test_criterion_01_single_scatterer_exactness():
    crit = Criterion(1, "single-scatterer: Foldy equals Born to 1e-14", 1.0)
    rng = np.random.default_rng(101)
    for _ in range(100):
        d = int(rng.integers(2, 4))
        kappa = float(rng.uniform(0.2, 5.0))
        plan = sp.build_plan(int(rng.integers(5, 30)), kappa, d, seed=int(rng.integers(1 << 16)))
        cfg = sc.ScattererConfig(
            d=d,
            amplitudes=[complex(rng.normal(), rng.normal())],
            locations=[rng.normal(size=d)],
        )
        vf = sc.apply_foldy_operator(cfg, plan)
        vb = sc.apply_born_operator(cfg.as_measure(), plan)
        assert np.linalg.norm(vf - vb) <= 1e-14 * np.linalg.norm(vb)
    crit.done()


def test_criterion_02_neumann_oracle_equivalence():
    crit = Criterion(2, "Foldy solve matches the 80-term Neumann series to 1e-10", 5.0)
    rng = np.random.default_rng(202)
    checked = 0
    while checked < 100:
        d = int(rng.integers(2, 4))
        s = int(rng.integers(2, 7))
        locs = rng.uniform(-3, 3, size=(s, d))
        dist = np.linalg.norm(locs[:, None] - locs[None, :], axis=-1)
        np.fill_diagonal(dist, np.inf)
        if dist.min() < 0.5:
            continue
        amps = rng.normal(size=s) + 1j * rng.normal(size=s)
        cfg = sc.ScattererConfig(d=d, amplitudes=amps, locations=locs)
        alpha = bd.general_bound_basic(cfg, 1.0).alpha
        if alpha > 0.5:
            cfg = sc.ScattererConfig(d=d, amplitudes=amps * (0.45 / alpha), locations=locs)
        theta = uniform_direction(rng, d)
        u = sc.foldy_solve(cfg, 1.0, theta).values
        ref = neumann_series_solve(cfg, 1.0, theta, terms=80)
        assert np.linalg.norm(u - ref) <= 1e-10 * np.linalg.norm(ref)
        checked += 1
    crit.done()


def test_criterion_03_two_scatterer_closed_form():
    crit = Criterion(3, "two-scatterer far field matches the inverted 2x2 oracle to 1e-12", 5.0)
    rng = np.random.default_rng(303)
    checked = 0
    while checked < 1000:
        d = int(rng.integers(2, 4))
        kappa = float(rng.uniform(0.3, 2.5))
        locs = rng.uniform(-2, 2, size=(2, d))
        if np.linalg.norm(locs[0] - locs[1]) < 0.4:
            continue
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        cfg = sc.ScattererConfig(d=d, amplitudes=amps, locations=locs)
        if bd.two_scatterer_bound(cfg, kappa).alpha > 0.8:
            continue
        theta = uniform_direction(rng, d)
        xhat = uniform_direction(rng, d)
        pair = sp.DirectionPair(incident=theta, observation=xhat)
        oracle = two_scatterer_far_field(cfg, kappa, theta, xhat)
        assert abs(sc.far_field_foldy(cfg, kappa, pair) - oracle) <= 1e-12
        checked += 1
    crit.done()


DOMINANCE_DELTAS = {
    0.1: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
    1.0: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
    10.0: [64.0, 96.0, 128.0, 192.0],
}
STRONG_COUPLING_DELTAS = {10.0: [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]}


def test_criterion_04_bound_dominance_and_trend():
    crit = Criterion(4, "empirical error dominated by the bound; non-increasing in the separation", 120.0)
    rows = bd.linearization_sweep(
        kappas=[0.1, 1.0, 10.0], deltas=DOMINANCE_DELTAS, trials=20, seed=12345, n_dirs=100
    )
    for row in rows:
        assert row.n_failures == 0
        assert row.alpha < 1.0, f"grid row kappa={row.kappa} delta={row.delta} left the valid regime"
        assert row.empirical_mean <= row.bound * (1 + 1e-10)
    for kappa in (0.1, 1.0, 10.0):
        sub = [r for r in rows if r.kappa == kappa]
        inversions = sum(
            1 for a, b in zip(sub, sub[1:]) if b.empirical_mean > a.empirical_mean * 1.001
        )
        assert inversions <= 1, f"kappa={kappa}: {inversions} trend inversions"
    crit.done()


def test_criterion_05_strong_coupling_regime():
    crit = Criterion(5, "alpha > 1: error within 25% of the naive norm sum on average", 60.0)
    rows = bd.linearization_sweep(
        kappas=[10.0], deltas=STRONG_COUPLING_DELTAS, trials=20, seed=777, n_dirs=100
    )
    deviations = []
    for row in rows:
        assert row.alpha > 1.0
        norm_sum = row.norm_foldy_mean + row.norm_born_mean
        deviations.append(abs(row.empirical_mean - norm_sum) / norm_sum)
    assert float(np.mean(deviations)) <= 0.25
    crit.done()


def test_criterion_06_sampling_pushforward():
    crit = Criterion(6, "pushforward identity at 1e-12 over 1e5 samples; ball moment within 1%", 10.0)
    for d in (2, 3):
        kappa = 1.4
        omegas = sp.sample_ball(100_000, kappa, d, seed=606)
        xhat = np.empty_like(omegas)
        theta = np.empty_like(omegas)
        for k, omega in enumerate(omegas):
            pair = sp.directions_from_frequency(omega, kappa, d)
            xhat[k] = pair.observation
            theta[k] = pair.incident
        gap = np.max(np.abs(kappa * (xhat - theta) - omegas))
        assert gap <= 1e-12
        moment = float(np.mean((np.linalg.norm(omegas, axis=1) / (2 * kappa)) ** 2))
        assert abs(moment - d / (d + 2)) <= 0.01 * (d / (d + 2))
    crit.done()


def test_criterion_07_kernel_constants():
    crit = Criterion(7, "kernel limits, closed-form derivatives, region constants, MC check", 60.0)
    for d in (2, 3):
        prof = kn.KernelProfile(d=d, kappa=1.0)
        assert kn.rho(prof, 0.0) == 1.0
        h = 1e-4
        fd2 = (kn.rho(prof, 2 * h) - 2 * kn.rho(prof, h) + kn.rho(prof, 0.0)) / h**2
        assert abs(fd2 - (-1.0 / (d + 2))) <= 1e-6
        h = 1e-5
        for s in np.linspace(0.1, 100.0, 120):
            s = float(s)
            fd1 = (kn.rho(prof, s + h) - kn.rho(prof, s - h)) / (2 * h)
            assert abs(fd1 - kn.rho_d1(prof, s)) <= 1e-6
            fd2 = (kn.rho(prof, s + h) - 2 * kn.rho(prof, s) + kn.rho(prof, s - h)) / h**2
            assert abs(fd2 - kn.rho_d2(prof, s)) <= 1e-5
            h3 = 1e-3
            fd3 = (
                kn.rho(prof, s + 2 * h3)
                - 2 * kn.rho(prof, s + h3)
                + 2 * kn.rho(prof, s - h3)
                - kn.rho(prof, s - 2 * h3)
            ) / (2 * h3**3)
            assert abs(fd3 - kn.rho_d3(prof, s)) <= 1e-6
        report = kn.check_regions(prof, s_max=200.0, n_near=1000, n_far=1000)
        assert report.min_near_curvature >= 0.6
        assert report.max_far_value <= 0.93
        # defining integral via Monte Carlo, within 3 standard errors
        rng = np.random.default_rng(70 + d)
        omega = sp.sample_ball(100_000, prof.kappa, d, seed=700 + d)
        x = rng.normal(size=d)
        x2 = x + rng.normal(size=d) * 0.4
        vals = np.real(np.exp(1j * omega @ (x - x2)))
        se = float(np.std(vals)) / math.sqrt(len(vals))
        assert abs(kn.kernel_eval(prof, x, x2) - float(np.mean(vals))) <= 3 * se
    crit.done()


def test_criterion_08_gradient_correctness():
    crit = Criterion(8, "adjoint gradient matches central differences to 1e-5", 30.0)
    rng = np.random.default_rng(808)
    h = 1e-6
    for d in (2, 3):
        for s in (1, 2, 3, 5):
            plan = sp.build_plan(15, 1.2, d, seed=10 * d + s)
            y = rng.normal(size=plan.m) + 1j * rng.normal(size=plan.m)
            lam = 0.2
            for _ in range(20):
                while True:
                    locs = rng.uniform(-2, 2, size=(s, d))
                    if s == 1:
                        break
                    dist = np.linalg.norm(locs[:, None] - locs[None, :], axis=-1)
                    np.fill_diagonal(dist, np.inf)
                    if dist.min() > 0.6:
                        break
                amps = rng.normal(size=s) + 1j * rng.normal(size=s)
                amps = amps / np.abs(amps) * rng.uniform(0.3, 1.5, size=s)
                ga, gx = rf.gradient_foldy(amps, locs, plan, y, lam)
                j = int(rng.integers(s))
                for part in range(2):
                    da = np.zeros(s, complex)
                    da[j] = h if part == 0 else 1j * h
                    fd = (
                        rf.objective_foldy(amps + da, locs, plan, y, lam)
                        - rf.objective_foldy(amps - da, locs, plan, y, lam)
                    ) / (2 * h)
                    assert abs(ga[j, part] - fd) <= 1e-5 * max(abs(fd), 1e-4)
                c = int(rng.integers(d))
                dx = np.zeros((s, d))
                dx[j, c] = h
                fd = (
                    rf.objective_foldy(amps, locs + dx, plan, y, lam)
                    - rf.objective_foldy(amps, locs - dx, plan, y, lam)
                ) / (2 * h)
                assert abs(gx[j, c] - fd) <= 1e-5 * max(abs(fd), 1e-4)
    crit.done()


def test_criterion_09_sfw_contract():
    crit = Criterion(9, "SFW: monotone objective and certificate below the exit level", 120.0)
    rng = np.random.default_rng(909)
    domain = Box(d=2, side=5.0)
    for trial in range(10):
        plan = sp.build_plan(40, 1.0, 2, seed=900 + trial)
        s = int(rng.integers(1, 4))
        while True:
            locs = rng.uniform(-1.8, 1.8, size=(s, 2))
            if s == 1:
                break
            dist = np.linalg.norm(locs[:, None] - locs[None, :], axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() > 0.8:
                break
        amps = rng.normal(size=s) + 1j * rng.normal(size=s)
        amps = amps / np.abs(amps) * rng.uniform(0.5, 1.5, size=s)
        y = sc.apply_born_operator(DiscreteMeasure(2, amps, locs), plan)
        opts = bl.SfwOptions(lambda_b=0.05)
        measure, trace = bl.sfw_solve(plan, y, domain, opts)
        assert trace.converged
        scale = max(1.0, abs(trace.objectives[0]))
        assert all(b <= a + 1e-9 * scale for a, b in zip(trace.objectives, trace.objectives[1:]))
        residual = y - sc.apply_born_operator(measure, plan)
        n_dense = 161
        dense = bl._grid_nodes(domain, n_dense, 2)
        eta_max = float(np.max(np.abs(bl.certificate_eval(plan, residual, dense))))
        h = domain.side / (n_dense - 1)
        slack = (
            0.5
            * (h * math.sqrt(2) / 2) ** 2
            * (2 * plan.kappa) ** 2
            * float(np.sum(np.abs(residual)))
            / math.sqrt(plan.m)
        )
        assert eta_max <= opts.lambda_b * (1 + opts.epsilon) + slack
    crit.done()


def test_criterion_10_two_scatterer_recovery():
    crit = Criterion(10, "noiseless two-scatterer recovery: 2 atoms, RMSEs below 0.05", 120.0)
    domain = Box(d=2, side=5.0)
    plan = sp.build_plan(20, 1.0, 2, seed=0)  # the documented seed
    truth_amps = np.array([1.0 + 0j, 1.0 + 0j])
    truth_locs = np.array([[-1.0, 0.0], [1.0, 0.0]])  # separation 2
    truth = sc.ScattererConfig(d=2, amplitudes=truth_amps, locations=truth_locs, domain=domain)
    y = sc.apply_foldy_operator(truth, plan)
    result = rf.run_pipeline(
        plan, y, domain, bl.SfwOptions(lambda_b=0.5), rf.RefineOptions(lambda_f=1e-3)
    )
    estimate = result.nonlinear
    assert estimate.n_atoms == 2
    order = np.argsort(estimate.locations[:, 0])
    pos_rmse = float(np.sqrt(np.mean(np.sum((estimate.locations[order] - truth_locs) ** 2, axis=1))))
    amp_rmse = float(np.sqrt(np.mean(np.abs(estimate.amplitudes[order] - truth_amps) ** 2)))
    assert pos_rmse <= 0.05
    assert amp_rmse <= 0.05
    crit.done()


def test_criterion_11_nine_scatterer_improvement():
    crit = Criterion(11, "nine scatterers with noise: nonlinear step improves the fit", 600.0)
    config_path = Path(__file__).parent.parent / "src" / "scatrec" / "configs" / "nine_scatterers.json"
    cfg = json.loads(config_path.read_text())
    domain = Box(d=2, side=cfg["domain_side"])
    truth = sc.ScattererConfig(
        d=2,
        amplitudes=np.array(cfg["truth"]["amplitudes"], dtype=complex),
        locations=np.array(cfg["truth"]["locations"], dtype=float),
        domain=domain,
    )
    plan = sp.build_plan(cfg["m"], cfg["kappa"], 2, seed=cfg["seed"])
    y_clean = sc.apply_foldy_operator(truth, plan)
    y_born = sc.apply_born_operator(truth.as_measure(), plan)
    lin_relative = float(np.linalg.norm(y_clean - y_born) / np.linalg.norm(y_clean))
    print(f"\n[criterion 11] linearization relative l2 error of the shipped config: {lin_relative:.1%}")
    y = sp.add_noise(
        sp.ObservationVector(y_clean, 0.0),
        cfg["noise_std"] / math.sqrt(cfg["m"]),
        seed=cfg["seed"] + 1000,
    )
    result = rf.run_pipeline(
        plan,
        y.values,
        domain,
        bl.SfwOptions(lambda_b=cfg["lambda_b"]),
        rf.RefineOptions(lambda_f=cfg["lambda_f"]),
    )
    assert not result.linear.is_empty
    assert not result.nonlinear.is_empty
    assert result.refine_objective_end <= result.refine_objective_start + 1e-12
    res_lin = np.linalg.norm(
        rf.foldy_forward(result.linear.amplitudes, result.linear.locations, plan) - y.values
    )
    res_nl = np.linalg.norm(
        rf.foldy_forward(result.nonlinear.amplitudes, result.nonlinear.locations, plan) - y.values
    )
    assert res_nl <= res_lin + 1e-12
    crit.done()


def test_criterion_12_determinism(tmp_path):
    crit = Criterion(12, "identical config + seed give byte-identical data files", 60.0)
    cfg = {
        "schema_version": 1,
        "d": 2,
        "kappa": 1.0,
        "m": 15,
        "seed": 3,
        "domain_side": 5.0,
        "noise_std": 0.1,
        "lambda_b": 0.5,
        "lambda_f": 0.001,
        "truth": {"amplitudes": [1.0], "locations": [[0.3, -0.4]]},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outputs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert cli_main(["simulate", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (
            cli_main(
                [
                    "recover",
                    "--config",
                    str(cfg_path),
                    "--observations",
                    str(out / "observations_noisy.json"),
                    "--out",
                    str(out / "rec"),
                ]
            )
            == 0
        )
        files = {}
        for p in sorted(out.rglob("*")):
            if p.suffix in {".json", ".csv"} and p.name != "manifest.json":
                files[p.relative_to(out).as_posix()] = p.read_bytes()
        outputs.append(files)
    assert outputs[0].keys() == outputs[1].keys()
    for key in outputs[0]:
        assert outputs[0][key] == outputs[1][key], f"output differs across runs: {key}"
    crit.done()
