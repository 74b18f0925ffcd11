"""Forward models for point scatterers: Green functions, the Foldy-Lax
system, far-field patterns, and the sampled measurement operators.

Two conventions coexist on purpose:

* ``far_field_foldy`` / ``far_field_born`` return the physical far-field
  amplitude, which carries the kappa^2 / (4 pi) prefactor.
* ``apply_foldy_operator`` / ``apply_born_operator`` return the normalized
  measurement vectors used by the recovery pipeline; the prefactor is divided
  out so that the Born map coincides exactly with (1/sqrt(m)) times the
  Fourier transform of the measure at the sampled frequencies.  With this
  normalization the Born columns have unit l2 norm, which is the scale at
  which the regularization parameters and noise levels of the shipped
  experiment configs are meaningful.

The two scales differ by the constant FAR_FIELD_CONSTANT = kappa^2 / (4 pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .measures import Box, DiscreteMeasure
from .sampling import DirectionPair, MeasurementPlan
from .specialfn import EULER_GAMMA, hankel1_0, hankel1_1

CONDITION_LIMIT = 1e12


class SingularSystemError(RuntimeError):
    """The Foldy-Lax system is numerically singular for a configuration."""


def far_field_constant(kappa: float) -> float:
    """The physical prefactor kappa^2 / (4 pi) of the far-field pattern."""
    return kappa * kappa / (4.0 * math.pi)


@dataclass
class ScattererConfig:
    """Ground truth: s point scatterers with complex amplitudes."""

    d: int
    amplitudes: np.ndarray
    locations: np.ndarray
    domain: Box | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        self.locations = np.asarray(self.locations, dtype=float).reshape(-1, self.d)
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.s < 1:
            raise ValueError("at least one scatterer is required")
        if self.locations.shape[0] != self.s:
            raise ValueError("amplitude and location counts differ")
        if np.any(self.amplitudes == 0):
            raise ValueError("all amplitudes must be nonzero")
        diffs = self.locations[:, None, :] - self.locations[None, :, :]
        dist = np.linalg.norm(diffs, axis=-1)
        np.fill_diagonal(dist, np.inf)
        if np.min(dist) == 0.0:
            raise ValueError("scatterer locations must be pairwise distinct")
        if self.domain is not None and not self.domain.contains(self.locations):
            raise ValueError("a scatterer location lies outside the declared domain")

    @property
    def s(self) -> int:
        return self.amplitudes.shape[0]

    def min_separation(self) -> float:
        if self.s == 1:
            return math.inf
        diffs = self.locations[:, None, :] - self.locations[None, :, :]
        dist = np.linalg.norm(diffs, axis=-1)
        np.fill_diagonal(dist, np.inf)
        return float(np.min(dist))

    def as_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.d, self.amplitudes.copy(), self.locations.copy())


@dataclass
class FoldySolution:
    """Excitation coefficients solving the Foldy-Lax system."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)


def green(p: np.ndarray, q: np.ndarray, kappa: float, d: int) -> complex:
    """Green function of the Helmholtz equation with wavenumber kappa."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    r = float(np.linalg.norm(p - q))
    if r == 0.0:
        raise ValueError("green is singular at coinciding points")
    return green_radial(r, kappa, d)


def green_radial(r: float, kappa: float, d: int) -> complex:
    if r <= 0.0:
        raise ValueError("distance must be positive")
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    if d == 2:
        return 0.25j * hankel1_0(kappa * r)
    return np.exp(1j * kappa * r) / (4.0 * math.pi * r)


def green_radial_derivative(r: float, kappa: float, d: int) -> complex:
    """d/dr of the radial Green function (needed for location gradients)."""
    if r <= 0.0:
        raise ValueError("distance must be positive")
    if d == 2:
        # (i/4) d/dr H0(kappa r) = -(i kappa / 4) H1(kappa r)
        return -0.25j * kappa * hankel1_1(kappa * r)
    return np.exp(1j * kappa * r) * (1j * kappa * r - 1.0) / (4.0 * math.pi * r * r)


def phi_envelope(t: float, kappa: float, d: int) -> float:
    """Non-increasing envelope of |G|: |G(x, y)| <= phi(|x - y|)."""
    if t <= 0.0:
        raise ValueError("phi_envelope requires t > 0")
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    if d == 2:
        u = kappa * t
        small = math.sqrt(1.0 + (4.0 / math.pi**2) * (EULER_GAMMA + math.log(0.5 * u)) ** 2)
        large = math.sqrt(2.0 / (math.pi * u))
        return 0.25 * min(small, large)
    if d == 3:
        return 1.0 / (4.0 * math.pi * t)
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def foldy_matrix(cfg: ScattererConfig, kappa: float) -> np.ndarray:
    """The s x s interaction matrix: zero diagonal, entry (i, j) equal to
    G(x_i, x_j) a_j."""
    s = cfg.s
    T = np.zeros((s, s), dtype=complex)
    for i in range(s):
        for j in range(s):
            if i == j:
                continue
            T[i, j] = green(cfg.locations[i], cfg.locations[j], kappa, cfg.d) * cfg.amplitudes[j]
    return T


def _system_matrix(cfg: ScattererConfig, kappa: float) -> np.ndarray:
    return np.eye(cfg.s, dtype=complex) - kappa * kappa * foldy_matrix(cfg, kappa)


def _checked_factorization(cfg: ScattererConfig, kappa: float):
    M = _system_matrix(cfg, kappa)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularSystemError(
            f"Foldy system numerically singular (cond ~ {cond:.3e}) for "
            f"s={cfg.s}, kappa={kappa}, min separation {cfg.min_separation():.4g}"
        )
    return lu_factor(M)


def _incident_field(cfg: ScattererConfig, kappa: float, thetas: np.ndarray) -> np.ndarray:
    # (s, n_dirs) matrix of plane-wave values exp(i kappa theta . x_i)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    return np.exp(1j * kappa * cfg.locations @ thetas.T)


def foldy_solve(cfg: ScattererConfig, kappa: float, theta: np.ndarray) -> FoldySolution:
    """Solve (Id - kappa^2 T) u = u_in(x) for one incident direction."""
    lu = _checked_factorization(cfg, kappa)
    b = _incident_field(cfg, kappa, theta)[:, 0]
    return FoldySolution(values=lu_solve(lu, b))


def far_field_foldy(cfg: ScattererConfig, kappa: float, pair: DirectionPair) -> complex:
    """Physical far-field pattern of the Foldy-Lax model at one direction pair."""
    u = foldy_solve(cfg, kappa, pair.incident).values
    phases = np.exp(-1j * kappa * cfg.locations @ np.asarray(pair.observation, dtype=float))
    return far_field_constant(kappa) * complex(np.sum(cfg.amplitudes * u * phases))


def far_field_born(cfg: ScattererConfig, kappa: float, pair: DirectionPair) -> complex:
    """Physical far-field pattern in the Born approximation."""
    diff = np.asarray(pair.observation, dtype=float) - np.asarray(pair.incident, dtype=float)
    phases = np.exp(-1j * kappa * cfg.locations @ diff)
    return far_field_constant(kappa) * complex(np.sum(cfg.amplitudes * phases))


def born_matrix(locations: np.ndarray, plan: MeasurementPlan) -> np.ndarray:
    """The m x n sampled Fourier matrix A[k, i] = exp(-i omega_k . x_i) / sqrt(m).

    Columns have unit l2 norm; multiplying by an amplitude vector gives the
    normalized Born measurements of the corresponding discrete measure.
    """
    locations = np.asarray(locations, dtype=float).reshape(-1, plan.d)
    return np.exp(-1j * plan.frequencies @ locations.T) / math.sqrt(plan.m)


def apply_born_operator(measure: DiscreteMeasure, plan: MeasurementPlan) -> np.ndarray:
    """Normalized Born measurements of a discrete measure: component k is
    (1/sqrt(m)) * sum_i a_i exp(-i omega_k . x_i)."""
    if measure.is_empty:
        return np.zeros(plan.m, dtype=complex)
    return born_matrix(measure.locations, plan) @ measure.amplitudes


def foldy_operator_entries(
    amplitudes: np.ndarray, locations: np.ndarray, plan: MeasurementPlan
) -> np.ndarray:
    """Normalized Foldy measurements for amplitudes/locations given directly.

    Entry k is (1/sqrt(m)) * sum_i a_i u_i^(k) exp(-i kappa xhat_k . x_i),
    where u^(k) solves the Foldy system for incident direction theta_k.  The
    system matrix does not depend on k, so one factorization serves all
    right-hand sides.
    """
    cfg = ScattererConfig(d=plan.d, amplitudes=amplitudes, locations=locations)
    kappa = plan.kappa
    lu = _checked_factorization(cfg, kappa)
    B = _incident_field(cfg, kappa, plan.theta)  # (s, m)
    U = lu_solve(lu, B)  # (s, m)
    E = np.exp(-1j * kappa * cfg.locations @ plan.xhat.T)  # (s, m)
    return (cfg.amplitudes[:, None] * U * E).sum(axis=0) / math.sqrt(plan.m)


def apply_foldy_operator(cfg: ScattererConfig, plan: MeasurementPlan) -> np.ndarray:
    """Normalized Foldy measurements of a scatterer configuration."""
    return foldy_operator_entries(cfg.amplitudes, cfg.locations, plan)
