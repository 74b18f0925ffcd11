"""The nonlinear recovery step: local descent of the Foldy-model data-fit
objective, initialized with the linear estimate.

The objective is J(a, x) = 0.5 ||F(a, x) - y||^2 + lambda_f ||a||_1 where
F is the normalized Foldy measurement map.  Its gradient is exact: the Foldy
solve is differentiated implicitly, reusing the LU factorization of the
system matrix for one extra transposed solve shared by all directions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import minimize

from .blasso import SfwOptions, SfwTrace, sfw_solve
from .measures import Box, DiscreteMeasure
from .sampling import MeasurementPlan
from .scatter import (
    CONDITION_LIMIT,
    SingularSystemError,
    green_radial,
    green_radial_derivative,
)

logger = logging.getLogger(__name__)

_L1_SMOOTHING = 1e-12  # delta in sum sqrt(re^2 + im^2 + delta^2)


@dataclass
class RefineOptions:
    """Knobs for the nonlinear descent."""

    lambda_f: float
    grad_tol: float = 1e-8
    max_iters: int = 1000
    amplitude_floor: float = 1e-6

    def __post_init__(self):
        if self.lambda_f <= 0:
            raise ValueError("lambda_f must be positive")
        if self.grad_tol <= 0 or self.max_iters < 1 or self.amplitude_floor < 0:
            raise ValueError("invalid refine options")


@dataclass
class PipelineResult:
    linear: DiscreteMeasure
    nonlinear: DiscreteMeasure
    sfw_trace: SfwTrace
    refine_objective_start: float
    refine_objective_end: float


class _FoldyWorkspace:
    """Forward solve plus everything the adjoint gradient reuses.

    With ``strict=True`` a badly conditioned system raises
    SingularSystemError (the public-API contract).  Descent loops use
    ``strict=False``: near-coincident atoms make the objective blow up
    finitely instead, so the line search backs off on its own.
    """

    def __init__(self, a: np.ndarray, x: np.ndarray, plan: MeasurementPlan, strict: bool = True):
        self.a = np.asarray(a, dtype=complex).reshape(-1)
        self.x = np.asarray(x, dtype=float).reshape(-1, plan.d)
        self.plan = plan
        s, d = self.a.shape[0], plan.d
        kappa = plan.kappa
        kappa2 = kappa * kappa

        diffs = self.x[:, None, :] - self.x[None, :, :]  # (s, s, d)
        dist = np.linalg.norm(diffs, axis=-1)
        off = ~np.eye(s, dtype=bool)
        if s > 1 and np.min(dist[off]) == 0.0:
            raise SingularSystemError("coinciding scatterer locations in Foldy solve")
        G = np.zeros((s, s), dtype=complex)
        Gp = np.zeros((s, s), dtype=complex)
        for i in range(s):
            for j in range(s):
                if i == j:
                    continue
                G[i, j] = green_radial(dist[i, j], kappa, d)
                Gp[i, j] = green_radial_derivative(dist[i, j], kappa, d)
        self.G, self.Gp = G, Gp
        with np.errstate(invalid="ignore", divide="ignore"):
            self.unit = np.where(dist[..., None] > 0, diffs / np.maximum(dist, 1e-300)[..., None], 0.0)

        M = np.eye(s, dtype=complex) - kappa2 * G * self.a[None, :]
        if strict:
            cond = np.linalg.cond(M)
            if not np.isfinite(cond) or cond > CONDITION_LIMIT:
                raise SingularSystemError(
                    f"Foldy system numerically singular (cond ~ {cond:.3e}) for s={s}, kappa={kappa}"
                )
        self.lu = lu_factor(M)
        self.B = np.exp(1j * kappa * self.x @ plan.theta.T)  # (s, m) incident field
        self.U = lu_solve(self.lu, self.B)  # (s, m) excitations
        self.E = np.exp(-1j * kappa * self.x @ plan.xhat.T)  # (s, m) observation phases
        self.forward = (self.a[:, None] * self.U * self.E).sum(axis=0) / math.sqrt(plan.m)

    def gradient(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Complex amplitude cogradients and real location gradients of the
        data-fit term 0.5 ||forward - y||^2.

        Returns (ga, gx): ga[j] is the holomorphic derivative coefficient so
        that dF = Re(ga[j] da_j); gx[j] is the real gradient w.r.t. x_j.
        """
        plan = self.plan
        s, d, m = self.a.shape[0], plan.d, plan.m
        kappa = plan.kappa
        kappa2 = kappa * kappa
        sqrt_m = math.sqrt(m)
        r = self.forward - np.asarray(y, dtype=complex).reshape(-1)
        rbar = np.conj(r)

        C = (self.a[:, None] * self.E) / sqrt_m  # (s, m): v_k = sum_i C[i,k] U[i,k]-style seed
        W = lu_solve(self.lu, C, trans=1)  # transposed solve, shared by all directions

        # amplitude part: dv_k/da_j = U_jk E_kj / sqrt(m) + kappa^2 U_jk (G^T W)_jk
        S = self.G.T @ W  # (s, m)
        ga = ((self.E / sqrt_m + kappa2 * S) * self.U * rbar[None, :]).sum(axis=1)

        # location part, three contributions
        # (i) observation phase: -i kappa a_j U_jk E_kj xhat_k
        coeff_obs = (rbar[None, :] * self.a[:, None] * self.U * self.E)  # (s, m)
        gx = np.real(-1j * kappa / sqrt_m * coeff_obs @ plan.xhat)
        # (ii) incident field through b: +i kappa W_jk b_jk theta_k
        coeff_inc = rbar[None, :] * W * self.B
        gx += np.real(1j * kappa * coeff_inc @ plan.theta)
        # (iii) interaction matrix: kappa^2 w^T dT u with
        # dT_ij = Gp_ij (unit_ij . (dx_i - dx_j)) a_j  (i != j)
        if s > 1:
            P = np.einsum("km,jm->kj", W * rbar[None, :], self.U)  # sum_m W_km rbar_m U_jm
            coupling = self.Gp * self.a[None, :] * P  # (s, s): row i, col j term
            # atom l gains +sum_j coupling[l, j] unit_lj  and  -sum_i coupling[i, l] unit_il
            gx += kappa2 * np.real(
                np.einsum("lj,ljd->ld", coupling, self.unit)
                - np.einsum("il,ild->ld", coupling, self.unit)
            )
        return ga, gx


def foldy_forward(a: np.ndarray, x: np.ndarray, plan: MeasurementPlan) -> np.ndarray:
    """Normalized Foldy measurements for amplitudes a and locations x."""
    return _FoldyWorkspace(a, x, plan).forward


def objective_foldy(
    a: np.ndarray, x: np.ndarray, plan: MeasurementPlan, y: np.ndarray, lambda_f: float
) -> float:
    """0.5 ||F(a, x) - y||^2 + lambda_f ||a||_1 (exact l1 term)."""
    forward = foldy_forward(a, x, plan)
    residual = forward - np.asarray(y, dtype=complex).reshape(-1)
    a = np.asarray(a, dtype=complex)
    return 0.5 * float(np.sum(np.abs(residual) ** 2)) + lambda_f * float(np.sum(np.abs(a)))


def gradient_foldy(
    a: np.ndarray, x: np.ndarray, plan: MeasurementPlan, y: np.ndarray, lambda_f: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradient of objective_foldy.

    Amplitudes are treated as real pairs: the first return value has shape
    (s, 2) with the derivatives w.r.t. (Re a_j, Im a_j); the second has shape
    (s, d).  Requires every |a_j| > 0 (the l1 term is differentiable there).
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    if np.any(np.abs(a) == 0.0):
        raise ValueError("gradient_foldy requires nonzero amplitudes")
    ws = _FoldyWorkspace(a, x, plan)
    ga, gx = ws.gradient(y)
    mags = np.abs(a)
    grad_re = np.real(ga) + lambda_f * np.real(a) / mags
    grad_im = -np.imag(ga) + lambda_f * np.imag(a) / mags
    return np.stack([grad_re, grad_im], axis=1), gx


def _pack(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.concatenate([np.real(a), np.imag(a), np.asarray(x, dtype=float).ravel()])


def _unpack(theta: np.ndarray, n: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    return theta[:n] + 1j * theta[n : 2 * n], theta[2 * n :].reshape(n, d)


def refine_measure(
    measure: DiscreteMeasure,
    plan: MeasurementPlan,
    y: np.ndarray,
    domain: Box,
    opts: RefineOptions,
) -> DiscreteMeasure:
    """Local descent of the Foldy objective from the given measure.

    Complex amplitudes are optimized over real/imaginary parts with a smooth
    l1 surrogate (smoothing 1e-12); atoms whose modulus lands at the
    amplitude floor are removed at exit.  Returns the input measure if the
    descent fails to decrease the objective.
    """
    if measure.is_empty:
        raise ValueError("refine_measure requires a nonempty measure")
    y = np.asarray(y, dtype=complex).reshape(-1)
    n, d = measure.n_atoms, measure.d
    delta_sq = _L1_SMOOTHING**2

    def objective_grad(theta):
        amps, locs = _unpack(theta, n, d)
        try:
            ws = _FoldyWorkspace(amps, locs, plan, strict=False)
            forward = ws.forward
        except (SingularSystemError, np.linalg.LinAlgError, ValueError):
            return 1e100, np.zeros_like(theta)
        if not np.all(np.isfinite(forward.view(float))):
            return 1e100, np.zeros_like(theta)
        residual = forward - y
        smooth_mags = np.sqrt(np.real(amps) ** 2 + np.imag(amps) ** 2 + delta_sq)
        f = 0.5 * float(np.sum(np.abs(residual) ** 2)) + opts.lambda_f * float(np.sum(smooth_mags))
        ga, gx = ws.gradient(y)
        grad_re = np.real(ga) + opts.lambda_f * np.real(amps) / smooth_mags
        grad_im = -np.imag(ga) + opts.lambda_f * np.imag(amps) / smooth_mags
        grad = np.concatenate([grad_re, grad_im, gx.ravel()])
        if not (np.isfinite(f) and np.all(np.isfinite(grad))):
            return 1e100, np.zeros_like(theta)
        return f, grad

    theta0 = _pack(measure.amplitudes, measure.locations)
    f0 = objective_grad(theta0)[0]
    bounds = [(None, None)] * (2 * n) + [(domain.lo, domain.hi)] * (n * d)
    res = minimize(
        objective_grad,
        theta0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": opts.max_iters, "gtol": opts.grad_tol, "ftol": 1e-16},
    )
    if res.fun > f0:
        logger.warning("nonlinear descent failed to improve the objective; keeping the input")
        return measure.copy()
    amps, locs = _unpack(res.x, n, d)
    keep = np.abs(amps) > opts.amplitude_floor
    return DiscreteMeasure(d, amps[keep], locs[keep])


def grid_initialization(
    plan: MeasurementPlan,
    y: np.ndarray,
    domain: Box,
    grid_side: int,
    opts: RefineOptions,
) -> DiscreteMeasure:
    """Run the nonlinear descent from atoms on a regular grid of cell centers
    with uniform small amplitudes (1e-2 each)."""
    if grid_side < 2:
        raise ValueError("grid_side must be >= 2")
    h = domain.side / grid_side
    axis = domain.lo + h * (0.5 + np.arange(grid_side))
    grids = np.meshgrid(*([axis] * plan.d), indexing="ij")
    locations = np.stack([g.ravel() for g in grids], axis=1)
    amplitudes = np.full(locations.shape[0], 1e-2, dtype=complex)
    init = DiscreteMeasure(plan.d, amplitudes, locations)
    return refine_measure(init, plan, y, domain, opts)


def run_pipeline(
    plan: MeasurementPlan,
    y: np.ndarray,
    domain: Box,
    sfw_opts: SfwOptions,
    refine_opts: RefineOptions,
) -> PipelineResult:
    """Linear step (sliding Frank-Wolfe) followed by the nonlinear descent
    initialized with its output."""
    linear, trace = sfw_solve(plan, y, domain, sfw_opts)
    if linear.is_empty:
        empty = DiscreteMeasure.empty(plan.d)
        half_ysq = 0.5 * float(np.sum(np.abs(np.asarray(y)) ** 2))
        return PipelineResult(linear, empty, trace, half_ysq, half_ysq)
    j_start = objective_foldy(linear.amplitudes, linear.locations, plan, y, refine_opts.lambda_f)
    nonlinear = refine_measure(linear, plan, y, domain, refine_opts)
    if nonlinear.is_empty:
        j_end = 0.5 * float(np.sum(np.abs(np.asarray(y)) ** 2))
    else:
        j_end = objective_foldy(
            nonlinear.amplitudes, nonlinear.locations, plan, y, refine_opts.lambda_f
        )
    return PipelineResult(linear, nonlinear, trace, j_start, j_end)
