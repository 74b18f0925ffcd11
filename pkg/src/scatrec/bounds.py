"""Bounds on the error committed by linearizing the Foldy far field to the
Born approximation, and empirical sweeps probing their tightness.

All bounds and empirical errors in this module are on the physical far-field
scale (they carry the kappa^2 / (4 pi) prefactor).  The sampled l2 error
sqrt(mean_k |u_foldy - u_born|^2) is dominated by the sup-norm bounds, so
dominance holds row by row whenever the coupling parameter alpha is below 1.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .scatter import (
    ScattererConfig,
    SingularSystemError,
    far_field_constant,
    green,
    phi_envelope,
)


@dataclass
class BoundReport:
    """One linearization-error bound evaluation."""

    alpha: float
    beta_abs: float
    bound: float
    valid: bool
    empirical_sup: float | None = None


@dataclass
class SweepRow:
    kappa: float
    delta: float
    empirical_mean: float
    bound: float
    alpha: float
    n_failures: int
    norm_foldy_mean: float
    norm_born_mean: float


def two_scatterer_bound(cfg: ScattererConfig, kappa: float) -> BoundReport:
    """Closed-form bound for exactly two scatterers.

    alpha = kappa^2 |G(x1, x2)| sqrt(|a1| |a2|); the bound is finite only for
    alpha < 1.
    """
    if cfg.s != 2:
        raise ValueError(f"two_scatterer_bound requires s = 2, got s = {cfg.s}")
    a1, a2 = np.abs(cfg.amplitudes)
    g_abs = abs(green(cfg.locations[0], cfg.locations[1], kappa, cfg.d))
    alpha = kappa * kappa * g_abs * math.sqrt(a1 * a2)
    if alpha >= 1.0:
        return BoundReport(alpha=alpha, beta_abs=alpha, bound=math.inf, valid=False)
    bound = (
        far_field_constant(kappa)
        * (2.0 * alpha / (1.0 - alpha * alpha))
        * (alpha * (a1 + a2) / 2.0 + math.sqrt(a1 * a2))
    )
    return BoundReport(alpha=alpha, beta_abs=alpha, bound=bound, valid=True)


def _general_alpha(cfg: ScattererConfig, kappa: float) -> float:
    abs_a = np.abs(cfg.amplitudes)
    max_leave_one_out = float(np.max(np.sum(abs_a) - abs_a))
    return kappa * kappa * phi_envelope(cfg.min_separation(), kappa, cfg.d) * max_leave_one_out


def general_bound_basic(cfg: ScattererConfig, kappa: float) -> BoundReport:
    """Neumann-series bound: (kappa^2/4pi) ||a||_1 alpha / (1 - alpha) with
    alpha = kappa^2 phi(Delta) max_i ||a_{-i}||_1."""
    if cfg.s < 2:
        raise ValueError("general bounds require s >= 2")
    alpha = _general_alpha(cfg, kappa)
    if alpha >= 1.0:
        return BoundReport(alpha=alpha, beta_abs=math.nan, bound=math.inf, valid=False)
    bound = far_field_constant(kappa) * cfg.as_measure().total_variation() * alpha / (1.0 - alpha)
    return BoundReport(alpha=alpha, beta_abs=math.nan, bound=bound, valid=True)


def general_bound_pairwise(cfg: ScattererConfig, kappa: float) -> BoundReport:
    """Finer bound separating first-order pair interactions from the
    higher-order Neumann tail."""
    if cfg.s < 2:
        raise ValueError("general bounds require s >= 2")
    alpha = _general_alpha(cfg, kappa)
    if alpha >= 1.0:
        return BoundReport(alpha=alpha, beta_abs=math.nan, bound=math.inf, valid=False)
    abs_a = np.abs(cfg.amplitudes)
    pair_sum = 0.0
    for i in range(cfg.s):
        for j in range(i + 1, cfg.s):
            dist = float(np.linalg.norm(cfg.locations[i] - cfg.locations[j]))
            pair_sum += abs_a[i] * abs_a[j] * kappa * kappa * phi_envelope(dist, kappa, cfg.d)
    tail = float(np.sum(abs_a)) * alpha * alpha / (1.0 - alpha)
    bound = far_field_constant(kappa) * (tail + 2.0 * pair_sum)
    return BoundReport(alpha=alpha, beta_abs=math.nan, bound=bound, valid=True)


def _uniform_sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sampled_far_fields(
    cfg: ScattererConfig, kappa: float, n_dirs: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Physical Foldy and Born far fields over i.i.d. uniform direction
    pairs (one factorization shared by all incident directions)."""
    rng = np.random.default_rng(seed)
    theta = _uniform_sphere(n_dirs, cfg.d, rng)
    xhat = _uniform_sphere(n_dirs, cfg.d, rng)
    kappa2 = kappa * kappa

    s = cfg.s
    M = np.eye(s, dtype=complex)
    for i in range(s):
        for j in range(s):
            if i != j:
                M[i, j] -= kappa2 * green(cfg.locations[i], cfg.locations[j], kappa, cfg.d) * cfg.amplitudes[j]
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularSystemError(f"singular Foldy system in far-field sampling (cond ~ {cond:.3e})")

    B = np.exp(1j * kappa * cfg.locations @ theta.T)  # (s, n)
    U = np.linalg.solve(M, B)
    E = np.exp(-1j * kappa * cfg.locations @ xhat.T)  # (s, n)
    const = far_field_constant(kappa)
    ff_foldy = const * (cfg.amplitudes[:, None] * U * E).sum(axis=0)
    ff_born = const * (cfg.amplitudes[:, None] * B * E).sum(axis=0)
    return ff_foldy, ff_born


def linearization_stats(
    cfg: ScattererConfig, kappa: float, n_dirs: int, seed: int
) -> tuple[float, float, float]:
    """Sampled l2 linearization error and the norms of both far fields.

    Directions are i.i.d. uniform on the sphere, independently for the
    incident and observation side.  Values are on the physical far-field
    scale: error = sqrt(mean_k |u_foldy_k - u_born_k|^2).
    """
    ff_foldy, ff_born = _sampled_far_fields(cfg, kappa, n_dirs, seed)
    return (
        float(np.sqrt(np.mean(np.abs(ff_foldy - ff_born) ** 2))),
        float(np.sqrt(np.mean(np.abs(ff_foldy) ** 2))),
        float(np.sqrt(np.mean(np.abs(ff_born) ** 2))),
    )


def empirical_linearization_error(
    cfg: ScattererConfig, kappa: float, n_dirs: int, seed: int
) -> float:
    """Sampled l2 norm of the linearization error over uniformly drawn
    direction pairs."""
    return linearization_stats(cfg, kappa, n_dirs, seed)[0]


def with_empirical_sup(
    report: BoundReport, cfg: ScattererConfig, kappa: float, n_dirs: int, seed: int
) -> BoundReport:
    """Attach the sampled sup-norm linearization error to a bound report.

    The sup over direction pairs is the quantity the bounds control, so a
    valid report always dominates it.
    """
    ff_foldy, ff_born = _sampled_far_fields(cfg, kappa, n_dirs, seed)
    report.empirical_sup = float(np.max(np.abs(ff_foldy - ff_born)))
    return report


def _sweep_row(
    kappa: float,
    delta: float,
    trials: int,
    seed_seq: np.random.SeedSequence,
    n_dirs: int,
) -> SweepRow:
    errors, nf, nb = [], [], []
    failures = 0
    bound = math.nan
    alpha = math.nan
    children = seed_seq.spawn(trials)
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        x1 = rng.uniform(-1.0, 1.0, size=2)
        e = _uniform_sphere(1, 2, rng)[0]
        cfg = ScattererConfig(
            d=2,
            amplitudes=np.array([1.0 + 0.0j, 1.0 + 0.0j]),
            locations=np.stack([x1, x1 + delta * e]),
        )
        report = two_scatterer_bound(cfg, kappa)
        bound = report.bound
        alpha = report.alpha
        dir_seed = int(rng.integers(0, 2**63 - 1))
        try:
            err, n_f, n_b = linearization_stats(cfg, kappa, n_dirs, dir_seed)
        except SingularSystemError:
            failures += 1
            continue
        errors.append(err)
        nf.append(n_f)
        nb.append(n_b)
    return SweepRow(
        kappa=kappa,
        delta=delta,
        empirical_mean=float(np.mean(errors)) if errors else math.nan,
        bound=bound,
        alpha=alpha,
        n_failures=failures,
        norm_foldy_mean=float(np.mean(nf)) if nf else math.nan,
        norm_born_mean=float(np.mean(nb)) if nb else math.nan,
    )


def linearization_sweep(
    kappas: list[float],
    deltas: list[float] | dict[float, list[float]],
    trials: int,
    seed: int,
    n_dirs: int = 100,
    threads: int = 1,
) -> list[SweepRow]:
    """Average linearization error over random two-scatterer configurations
    with unit amplitudes, against the matching closed-form bound.

    ``deltas`` is either one grid for every kappa or a per-kappa mapping.
    Each trial draws x1 uniformly in [-1, 1]^2 and x2 = x1 + delta * e with e
    uniform on the circle.
    """
    tasks = []
    for kappa in kappas:
        grid = deltas[kappa] if isinstance(deltas, dict) else deltas
        for delta in grid:
            tasks.append((kappa, delta))
    seqs = np.random.SeedSequence(seed).spawn(len(tasks))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(
                    lambda args: _sweep_row(args[0][0], args[0][1], trials, args[1], n_dirs),
                    zip(tasks, seqs),
                )
            )
    else:
        rows = [_sweep_row(k, dl, trials, sq, n_dirs) for (k, dl), sq in zip(tasks, seqs)]
    return rows


# the on-disk report keeps exactly these columns; the far-field norm means
# live only on SweepRow (used by the strong-coupling comparison)
SWEEP_FIELDS = ["kappa", "delta", "empirical_mean", "bound", "alpha", "n_failures"]


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_FIELDS)
        for row in rows:
            writer.writerow([repr(getattr(row, f)) for f in SWEEP_FIELDS])
