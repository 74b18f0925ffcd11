"""Independent reference implementations used as test oracles.

These deliberately avoid the production code paths: Bessel values come from
extended-precision ascending series, the two-scatterer far field from the
explicitly inverted 2x2 system, and the Foldy solve from a truncated Neumann
series.
"""

from __future__ import annotations

import numpy as np
from mpmath import mp

# the ascending series at x = 200 cancels ~90 digits; keep a wide margin
mp.dps = 160


def bessel_j_series(nu: float, x: float, terms: int = 400) -> float:
    """Ascending power series in 60-digit arithmetic."""
    nu_mp = mp.mpf(nu)
    x_mp = mp.mpf(x)
    if x_mp == 0:
        return 1.0 if nu == 0 else 0.0
    half = x_mp / 2
    term = half**nu_mp / mp.gamma(nu_mp + 1)
    total = term
    q = half * half
    for p in range(1, terms):
        term *= -q / (p * (p + nu_mp))
        total += term
        if abs(term) < mp.mpf(10) ** (-45) * abs(total):
            break
    return float(total)


def bessel_y0_series(x: float, terms: int = 400) -> float:
    """Y0 through the standard log series with Euler's constant."""
    x_mp = mp.mpf(x)
    tau = x_mp * x_mp / 4
    total = mp.mpf(0)
    term = mp.mpf(1)
    harmonic = mp.mpf(0)
    for p in range(1, terms):
        term *= tau / p
        harmonic += mp.mpf(1) / p
        piece = term / mp.factorial(p) * harmonic
        total += piece if p % 2 == 1 else -piece
        if abs(piece) < mp.mpf(10) ** (-45):
            break
    j0 = mp.mpf(bessel_j_series(0.0, x))
    # recompute j0 at full precision for the product
    j0 = mp.besselj(0, x_mp)
    return float((2 / mp.pi) * ((mp.log(x_mp / 2) + mp.euler) * j0 + total))


def hankel1_0_series(x: float) -> complex:
    return complex(bessel_j_series(0.0, x), bessel_y0_series(x))


def two_scatterer_far_field(cfg, kappa: float, incident: np.ndarray, observation: np.ndarray) -> complex:
    """Far field from the explicitly inverted two-scatterer system."""
    from scatrec.scatter import far_field_constant, green

    a1, a2 = cfg.amplitudes
    x1, x2 = cfg.locations
    G = green(x1, x2, kappa, cfg.d)
    beta_sq = kappa**4 * G * G * a1 * a2
    e1 = np.exp(1j * kappa * np.dot(incident, x1))
    e2 = np.exp(1j * kappa * np.dot(incident, x2))
    h1 = np.exp(-1j * kappa * np.dot(observation, x1))
    h2 = np.exp(-1j * kappa * np.dot(observation, x2))
    return far_field_constant(kappa) * (
        a1 * h1 * (e1 + kappa**2 * G * a2 * e2) + a2 * h2 * (e2 + kappa**2 * G * a1 * e1)
    ) / (1.0 - beta_sq)


def neumann_series_solve(cfg, kappa: float, theta: np.ndarray, terms: int = 80) -> np.ndarray:
    """Truncated Neumann series for the Foldy system."""
    from scatrec.scatter import foldy_matrix

    T = foldy_matrix(cfg, kappa)
    b = np.exp(1j * kappa * cfg.locations @ np.asarray(theta, dtype=float))
    acc = b.copy()
    term = b.copy()
    for _ in range(terms):
        term = kappa * kappa * (T @ term)
        acc += term
    return acc


def lasso_normal_equations(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dense least-squares solution (the lambda -> 0 limit of the LASSO)."""
    return np.linalg.solve(A.conj().T @ A, A.conj().T @ y)
