"""The linear recovery step: total-variation regularized least squares over
measures, solved by sliding Frank-Wolfe.

One outer iteration evaluates the dual certificate on the residual, inserts
the location where its modulus peaks, re-fits the amplitudes by a convex
complex LASSO on the fixed support, then locally slides amplitudes and
locations together.  Iterations stop once the certificate peak falls below
lambda_b * (1 + epsilon).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .measures import Box, DiscreteMeasure
from .sampling import MeasurementPlan
from .scatter import apply_born_operator, born_matrix

logger = logging.getLogger(__name__)

_MODULUS_FLOOR = 1e-12  # lower clamp for atom moduli in the sliding step


@dataclass
class SfwOptions:
    """Solver knobs for the sliding Frank-Wolfe loop.

    ``grid_points_per_axis = None`` derives the insertion grid from the
    certificate bandwidth: spacing min(side/64, pi/(8 kappa)).
    ``prune_threshold = None`` resolves to 1e-8 * ||y||_2 at run time and
    ``merge_radius = None`` to 1e-2 * side / max(1, kappa).
    """

    lambda_b: float
    epsilon: float = 1e-2
    grid_points_per_axis: int | None = None
    max_outer_iters: int = 50
    lasso_tol: float = 1e-12
    lasso_max_iters: int = 5000
    slide_tol: float = 1e-8
    slide_max_iters: int = 500
    prune_threshold: float | None = None
    merge_radius: float | None = None

    def __post_init__(self):
        if self.lambda_b <= 0:
            raise ValueError("lambda_b must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        for name in ("max_outer_iters", "lasso_max_iters", "slide_max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class SfwTrace:
    """Per-outer-iteration record of the solver state."""

    objectives: list[float] = field(default_factory=list)
    certificate_peaks: list[float] = field(default_factory=list)
    atom_counts: list[int] = field(default_factory=list)
    converged: bool = False
    n_outer: int = 0

    def record(self, objective: float, peak: float, n_atoms: int) -> None:
        self.objectives.append(objective)
        self.certificate_peaks.append(peak)
        self.atom_counts.append(n_atoms)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "objective", "certificate_peak", "n_atoms"])
            for i, (obj, peak, n) in enumerate(
                zip(self.objectives, self.certificate_peaks, self.atom_counts)
            ):
                writer.writerow([i, repr(obj), repr(peak), n])


def blasso_objective(
    measure: DiscreteMeasure, plan: MeasurementPlan, y: np.ndarray, lambda_b: float
) -> float:
    residual = apply_born_operator(measure, plan) - y
    return 0.5 * float(np.sum(np.abs(residual) ** 2)) + lambda_b * measure.total_variation()


def certificate_eval(plan: MeasurementPlan, residual: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Dual certificate eta(x) = (1/sqrt(m)) sum_k residual_k e^{i omega_k . x}.

    Accepts a single point (d,) or a batch (n, d); returns complex values of
    matching shape.  This is the adjoint of the Born operator applied to the
    residual, under the real part of the complex pairing.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    vals = np.exp(1j * pts @ plan.frequencies.T) @ residual / math.sqrt(plan.m)
    return vals[0] if single else vals


def _certificate_gradient(plan: MeasurementPlan, residual: np.ndarray, x: np.ndarray) -> np.ndarray:
    # gradient of eta at a single point: (1/sqrt(m)) sum_k residual_k (i omega_k) e^{i omega_k . x}
    phases = np.exp(1j * plan.frequencies @ np.asarray(x, dtype=float))
    return (1j * plan.frequencies * (residual * phases)[:, None]).sum(axis=0) / math.sqrt(plan.m)


def default_grid_count(domain: Box, kappa: float) -> int:
    spacing = min(domain.side / 64.0, math.pi / (8.0 * kappa))
    n = int(math.ceil(domain.side / spacing)) + 1
    # memory guardrail: keep the full grid below ~2M nodes
    while n**domain.d > 2_097_152:
        n = max(2, n - 1)
    return n


def _grid_nodes(domain: Box, n: int, d: int) -> np.ndarray:
    axis = np.linspace(domain.lo, domain.hi, n)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def find_new_atom(
    plan: MeasurementPlan, residual: np.ndarray, domain: Box, opts: SfwOptions
) -> np.ndarray:
    """Approximate argmax of |eta| over the domain: coarse grid scan followed
    by bounded local ascent from the best node."""
    n = opts.grid_points_per_axis or default_grid_count(domain, plan.kappa)
    nodes = _grid_nodes(domain, n, plan.d)
    best_val = -1.0
    best_node = nodes[0]
    chunk = 1 << 14
    for start in range(0, nodes.shape[0], chunk):
        batch = nodes[start : start + chunk]
        vals = np.abs(certificate_eval(plan, residual, batch))
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_node = batch[k]

    def neg_sq(x):
        eta = certificate_eval(plan, residual, x)
        grad = _certificate_gradient(plan, residual, x)
        return -abs(eta) ** 2, -2.0 * np.real(np.conj(eta) * grad)

    res = minimize(
        neg_sq,
        best_node,
        jac=True,
        method="L-BFGS-B",
        bounds=[(domain.lo, domain.hi)] * plan.d,
        options={"maxiter": opts.slide_max_iters, "gtol": opts.slide_tol, "ftol": 1e-16},
    )
    if res.fun <= -best_val**2:
        return np.asarray(res.x, dtype=float)
    return np.asarray(best_node, dtype=float)


def soft_threshold(z: np.ndarray, tau: float) -> np.ndarray:
    """Complex soft-thresholding: z * max(0, 1 - tau/|z|)."""
    mags = np.abs(z)
    scale = np.maximum(0.0, 1.0 - tau / np.maximum(mags, 1e-300))
    return z * scale


def lasso_weights(
    plan: MeasurementPlan,
    locations: np.ndarray,
    y: np.ndarray,
    lambda_b: float,
    opts: SfwOptions,
    a0: np.ndarray | None = None,
) -> np.ndarray:
    """Minimize 0.5 ||A a - y||^2 + lambda ||a||_1 over complex amplitudes on
    a fixed support, by accelerated proximal gradient (FISTA)."""
    locations = np.asarray(locations, dtype=float).reshape(-1, plan.d)
    n = locations.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex)
    A = born_matrix(locations, plan)
    lipschitz = float(np.linalg.norm(A, 2)) ** 2
    if lipschitz == 0.0:
        return np.zeros(n, dtype=complex)
    step = 1.0 / lipschitz

    def objective(a):
        return 0.5 * float(np.sum(np.abs(A @ a - y) ** 2)) + lambda_b * float(np.sum(np.abs(a)))

    a = np.zeros(n, dtype=complex) if a0 is None else np.asarray(a0, dtype=complex).copy()
    z = a.copy()
    t = 1.0
    f_prev = objective(a)
    for it in range(opts.lasso_max_iters):
        grad = A.conj().T @ (A @ z - y)
        a_next = soft_threshold(z - step * grad, step * lambda_b)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = a_next + (t - 1.0) / t_next * (a_next - a)
        a, t = a_next, t_next
        f = objective(a)
        if abs(f_prev - f) < opts.lasso_tol * max(1.0, abs(f_prev)):
            return a
        f_prev = f
    logger.warning("lasso_weights reached the iteration cap (%d); returning best iterate", opts.lasso_max_iters)
    return a


def _polar_pack(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.concatenate([np.maximum(np.abs(a), _MODULUS_FLOOR), np.angle(a), x.ravel()])


def _polar_unpack(theta: np.ndarray, n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    mods = theta[:n]
    phases = theta[n : 2 * n]
    x = theta[2 * n :].reshape(n, d)
    return mods * np.exp(1j * phases), x


def slide_linear(
    a: np.ndarray,
    x: np.ndarray,
    plan: MeasurementPlan,
    y: np.ndarray,
    lambda_b: float,
    domain: Box,
    opts: SfwOptions,
) -> tuple[np.ndarray, np.ndarray]:
    """Joint local descent on amplitudes and locations of the BLASSO
    objective.  Amplitudes are parameterized in polar form (modulus clamped
    at a small floor) so that the l1 term is smooth; returns the input if no
    descent is achieved."""
    a = np.asarray(a, dtype=complex).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1, plan.d)
    n, d = a.shape[0], plan.d
    if n == 0:
        return a, x
    sqrt_m = math.sqrt(plan.m)

    def objective_grad(theta):
        amps, locs = _polar_unpack(theta, n, d)
        A = born_matrix(locs, plan)
        residual = A @ amps - y
        f = 0.5 * float(np.sum(np.abs(residual) ** 2)) + lambda_b * float(np.sum(theta[:n]))
        g = A.conj().T @ residual  # correlation of columns with the residual
        phase = np.exp(1j * theta[n : 2 * n])
        grad_mod = np.real(np.conj(g) * phase) + lambda_b
        grad_phase = -np.imag(np.conj(g) * amps)
        # location gradient: d/dx_i of 0.5||r||^2 with dA[k,i]/dx_i = -i omega_k A[k,i]
        weighted = np.conj(residual)[:, None] * A  # (m, n)
        h = np.einsum("kn,kd->nd", weighted, plan.frequencies)  # sum_k conj(r_k) A_ki omega_k
        grad_x = np.real(-1j * amps[:, None] * h)
        return f, np.concatenate([grad_mod, grad_phase, grad_x.ravel()])

    theta0 = _polar_pack(a, x)
    f0 = objective_grad(theta0)[0]
    bounds = (
        [(_MODULUS_FLOOR, None)] * n
        + [(None, None)] * n
        + [(domain.lo, domain.hi)] * (n * d)
    )
    res = minimize(
        objective_grad,
        theta0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": opts.slide_max_iters, "gtol": opts.slide_tol, "ftol": 1e-16},
    )
    if res.fun > f0:
        return a, x
    amps, locs = _polar_unpack(res.x, n, d)
    return amps, locs


def prune_and_merge(
    measure: DiscreteMeasure, prune_threshold: float, merge_radius: float
) -> DiscreteMeasure:
    """Drop atoms with modulus at or below the threshold and merge clusters
    of atoms within the merge radius (amplitudes summed, location the
    modulus-weighted centroid).  Merging can cancel amplitudes, so tiny atoms
    are pruned again afterwards."""

    def prune(m: DiscreteMeasure) -> DiscreteMeasure:
        keep = np.abs(m.amplitudes) > prune_threshold
        return DiscreteMeasure(m.d, m.amplitudes[keep], m.locations[keep])

    measure = prune(measure)
    n = measure.n_atoms
    if n > 1 and merge_radius > 0:
        dist = np.linalg.norm(
            measure.locations[:, None, :] - measure.locations[None, :, :], axis=-1
        )
        adjacency = dist <= merge_radius
        labels = -np.ones(n, dtype=int)
        n_clusters = 0
        for i in range(n):
            if labels[i] >= 0:
                continue
            stack = [i]
            labels[i] = n_clusters
            while stack:
                j = stack.pop()
                for k in np.nonzero(adjacency[j])[0]:
                    if labels[k] < 0:
                        labels[k] = n_clusters
                        stack.append(int(k))
            n_clusters += 1
        if n_clusters < n:
            amps = np.zeros(n_clusters, dtype=complex)
            locs = np.zeros((n_clusters, measure.d))
            for c in range(n_clusters):
                members = labels == c
                amps[c] = np.sum(measure.amplitudes[members])
                weights = np.abs(measure.amplitudes[members])
                total = np.sum(weights)
                if total == 0.0:
                    weights = np.ones(int(np.sum(members)))
                    total = float(weights.sum())
                locs[c] = (weights[:, None] * measure.locations[members]).sum(axis=0) / total
            measure = DiscreteMeasure(measure.d, amps, locs)
    return prune(measure)


def sfw_solve(
    plan: MeasurementPlan, y: np.ndarray, domain: Box, opts: SfwOptions
) -> tuple[DiscreteMeasure, SfwTrace]:
    """Run the sliding Frank-Wolfe loop until the certificate stopping test
    fires or the outer-iteration cap is reached."""
    y = np.asarray(y, dtype=complex).reshape(-1)
    prune_threshold = (
        opts.prune_threshold
        if opts.prune_threshold is not None
        else 1e-8 * float(np.linalg.norm(y))
    )
    merge_radius = (
        opts.merge_radius
        if opts.merge_radius is not None
        else 1e-2 * domain.side / max(1.0, plan.kappa)
    )
    measure = DiscreteMeasure.empty(plan.d)
    trace = SfwTrace()
    threshold = opts.lambda_b * (1.0 + opts.epsilon)

    for n_iter in range(opts.max_outer_iters):
        residual = y - apply_born_operator(measure, plan)
        x_star = find_new_atom(plan, residual, domain, opts)
        peak = abs(certificate_eval(plan, residual, x_star))
        if peak <= threshold and n_iter >= 1:
            trace.converged = True
            trace.n_outer = n_iter
            trace.record(blasso_objective(measure, plan, y, opts.lambda_b), peak, measure.n_atoms)
            return measure, trace

        locations = (
            np.vstack([measure.locations, x_star[None, :]])
            if not measure.is_empty
            else x_star[None, :]
        )
        warm = np.concatenate([measure.amplitudes, [0.0 + 0.0j]]) if not measure.is_empty else None
        amps = lasso_weights(plan, locations, y, opts.lambda_b, opts, a0=warm)
        keep = np.abs(amps) > 0.0
        amps, locations = amps[keep], locations[keep]
        amps, locations = slide_linear(amps, locations, plan, y, opts.lambda_b, domain, opts)
        measure = prune_and_merge(
            DiscreteMeasure(plan.d, amps, locations), prune_threshold, merge_radius
        )
        if measure.n_atoms != amps.shape[0] and not measure.is_empty:
            # support changed structurally; re-fit amplitudes on it
            refit = lasso_weights(
                plan, measure.locations, y, opts.lambda_b, opts, a0=measure.amplitudes
            )
            measure = prune_and_merge(
                DiscreteMeasure(plan.d, refit, measure.locations), prune_threshold, merge_radius
            )
        trace.record(blasso_objective(measure, plan, y, opts.lambda_b), peak, measure.n_atoms)

    trace.converged = False
    trace.n_outer = opts.max_outer_iters
    logger.warning("sfw_solve reached the outer-iteration cap (%d)", opts.max_outer_iters)
    return measure, trace
