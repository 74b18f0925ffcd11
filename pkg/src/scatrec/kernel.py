"""Autocorrelation kernel of the ball-uniform frequency sampling and the
diagnostics that back the recovery guarantees.

With frequencies uniform in B(0, 2 kappa), the kernel is radial:
K(x, x') = rho(|x - x'| / sigma) with sigma = 1 / (2 kappa) and
rho(s) = (2/s)^(d/2) Gamma(d/2 + 1) J_{d/2}(s).  This module evaluates rho
and its first three derivatives in closed form, the induced Fisher-type
metric, operator norms of the kernel's covariant derivatives, the
near/far-region constants, and coarse advisories for separation and
measurement counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specialfn import bessel_j, gamma_half_integer


@dataclass(frozen=True)
class KernelProfile:
    """Dimension and length scale of the sampling kernel."""

    d: int
    kappa: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")

    @property
    def sigma(self) -> float:
        return 1.0 / (2.0 * self.kappa)

    @property
    def curvature_at_zero(self) -> float:
        """-rho''(0) = 1 / (d + 2)."""
        return 1.0 / (self.d + 2.0)


@dataclass
class RegionCheckReport:
    """Numerical verification of the near/far-region kernel constants."""

    d: int
    min_near_curvature: float
    max_far_value: float
    near_threshold: float
    far_threshold: float
    s_max: float
    n_near: int
    n_far: int

    @property
    def near_ok(self) -> bool:
        return self.min_near_curvature >= self.near_threshold

    @property
    def far_ok(self) -> bool:
        return self.max_far_value <= self.far_threshold

    @property
    def passed(self) -> bool:
        return self.near_ok and self.far_ok

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "min_near_curvature": self.min_near_curvature,
            "max_far_value": self.max_far_value,
            "near_threshold": self.near_threshold,
            "far_threshold": self.far_threshold,
            "near_ok": self.near_ok,
            "far_ok": self.far_ok,
            "passed": self.passed,
            "grids": {"s_max": self.s_max, "n_near": self.n_near, "n_far": self.n_far},
        }


NEAR_CURVATURE_THRESHOLD = 0.6
FAR_VALUE_THRESHOLD = 0.93
NEAR_RADIUS = 1.0 / math.sqrt(5.0)  # in the Fisher metric


def _prefactor(d: int, s: float) -> float:
    gamma = gamma_half_integer(d / 2.0 + 1.0)
    return (2.0 / s) ** (d / 2.0) * gamma


def rho(profile: KernelProfile, s: float) -> float:
    """rho(s) = (2/s)^(d/2) Gamma(d/2+1) J_{d/2}(s); rho(0) = 1."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 1.0
    return _prefactor(profile.d, s) * bessel_j(profile.d / 2.0, s)


def rho_d1(profile: KernelProfile, s: float) -> float:
    """rho'(s) = -(2/s)^(d/2) Gamma(d/2+1) J_{d/2+1}(s); rho'(0) = 0."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    return -_prefactor(profile.d, s) * bessel_j(profile.d / 2.0 + 1.0, s)


def rho_d2(profile: KernelProfile, s: float) -> float:
    """rho''(s) = (2/s)^(d/2) Gamma(d/2+1) (J_{d/2+2}(s) - J_{d/2+1}(s)/s);
    rho''(0) = -1/(d+2)."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return -1.0 / (profile.d + 2.0)
    nu = profile.d / 2.0
    return _prefactor(profile.d, s) * (bessel_j(nu + 2.0, s) - bessel_j(nu + 1.0, s) / s)


def rho_d3(profile: KernelProfile, s: float) -> float:
    """rho'''(s) = (2/s)^(d/2) Gamma(d/2+1) (-J_{d/2+3}(s) + (3/s) J_{d/2+2}(s));
    rho'''(0) = 0."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    nu = profile.d / 2.0
    return _prefactor(profile.d, s) * (-bessel_j(nu + 3.0, s) + 3.0 / s * bessel_j(nu + 2.0, s))


def kernel_eval(profile: KernelProfile, x: np.ndarray, x2: np.ndarray) -> float:
    """K(x, x') = rho(2 kappa |x - x'|)."""
    t = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    return rho(profile, 2.0 * profile.kappa * float(np.linalg.norm(t)))


def fisher_distance(profile: KernelProfile, x: np.ndarray, x2: np.ndarray) -> float:
    """Kernel-induced distance sqrt(-rho''(0)) * |x - x'| / sigma."""
    t = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    return math.sqrt(profile.curvature_at_zero) * float(np.linalg.norm(t)) / profile.sigma


def covariant_norms(profile: KernelProfile, x: np.ndarray, x2: np.ndarray) -> tuple[float, float, float]:
    """Operator norms of the kernel's covariant derivatives at (x, x').

    Returns (k00, k10, k11_upper): |K|, the metric-normalized gradient norm
    |rho'(u)| / sqrt(-rho''(0)), and the displayed upper bound on the
    (1,1) norm (which also equals the (2,0) norm).  Coincident points use
    the s -> 0 limits.
    """
    t = np.asarray(x, dtype=float) - np.asarray(x2, dtype=float)
    u = 2.0 * profile.kappa * float(np.linalg.norm(t))
    c0 = profile.curvature_at_zero
    if u < 1e-14:
        return 1.0, 0.0, 1.0
    k00 = abs(rho(profile, u))
    k10 = abs(rho_d1(profile, u)) / math.sqrt(c0)
    ratio = rho_d1(profile, u) / u
    k11 = (abs(ratio) + abs(rho_d2(profile, u) - ratio)) / c0
    return k00, k10, k11


def check_regions(
    profile: KernelProfile,
    s_max: float = 200.0,
    n_near: int = 1000,
    n_far: int = 1000,
    n_directions: int = 17,
) -> RegionCheckReport:
    """Scan the normalized curvature on the near region and |rho| on the far
    region against the constants 0.6 and 0.93.

    Near region: Fisher distance at most 1/sqrt(5), i.e. s in
    (0, sqrt(d+2)/sqrt(5)]; the quantity is -K02[v, v] / |v|^2 in the metric
    normalization, minimized over sampled directions v (parameterized by the
    cosine between v and x - x').  Far region: s >= 2/sqrt(5), the grid
    includes the left endpoint where the supremum is attained.
    """
    if s_max < 10:
        raise ValueError("s_max must be at least 10")
    c0 = profile.curvature_at_zero
    s_near_max = math.sqrt(profile.d + 2.0) / math.sqrt(5.0)
    near_grid = np.linspace(s_near_max / n_near, s_near_max, n_near)
    cos_grid = np.linspace(0.0, 1.0, n_directions)
    min_curv = math.inf
    for s in near_grid:
        radial = -rho_d1(profile, s) / s
        second = -rho_d2(profile, s)
        for c in cos_grid:
            c2 = c * c
            q = ((1.0 - c2) * radial + c2 * second) / c0
            min_curv = min(min_curv, q)

    far_left = 2.0 / math.sqrt(5.0)
    far_grid = np.linspace(far_left, s_max, n_far)
    max_far = max(abs(rho(profile, float(s))) for s in far_grid)
    return RegionCheckReport(
        d=profile.d,
        min_near_curvature=float(min_curv),
        max_far_value=float(max_far),
        near_threshold=NEAR_CURVATURE_THRESHOLD,
        far_threshold=FAR_VALUE_THRESHOLD,
        s_max=float(s_max),
        n_near=n_near,
        n_far=n_far,
    )


def uniform_norm_estimates(
    profile: KernelProfile, s_max: float = 200.0, n_grid: int = 2000
) -> dict:
    """Numeric suprema of the covariant-derivative operator norms.

    Scans the closed-form expressions over a logarithmic grid in s (plus the
    coincidence limit); the (2,0) norm equals the (1,1) norm.  These are
    grid estimates of the uniform bounds, not analytic suprema.
    """
    if s_max <= 1:
        raise ValueError("s_max must exceed 1")
    c0 = profile.curvature_at_zero
    grid = np.logspace(-3, math.log10(s_max), n_grid)
    b00, b10, b11 = 1.0, 0.0, 1.0  # coincidence limits
    for s in grid:
        s = float(s)
        b00 = max(b00, abs(rho(profile, s)))
        b10 = max(b10, abs(rho_d1(profile, s)) / math.sqrt(c0))
        ratio = rho_d1(profile, s) / s
        b11 = max(b11, (abs(ratio) + abs(rho_d2(profile, s) - ratio)) / c0)
    return {"B00": b00, "B10": b10, "B11": b11, "B20": b11, "s_max": float(s_max), "n_grid": n_grid}


def advisory(
    profile: KernelProfile,
    s: int,
    constant_sep: float = 1.0,
    constant_m: float = 1.0,
    rho_fail: float = 0.5,
) -> dict:
    """Scaling advisories for the minimal separation and measurement counts.

    The theory hides absolute constants; they are user inputs (default 1).
    Log factors are floored at 1 so that the formulas degrade gracefully for
    tiny s or kappa.  Returns delta_min (separation), m_min_stable (stable
    recovery) and m_min_support (exact support recovery).
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if not 0.0 < rho_fail < 1.0:
        raise ValueError("rho_fail must lie in (0, 1)")
    kappa = profile.kappa
    d = profile.d

    def flog(v: float) -> float:
        return max(1.0, math.log(v))

    delta_min = constant_sep * s ** (2.0 / (d + 1.0)) / kappa
    m_stable = constant_m * s * (flog(s) * flog(s / rho_fail) + flog(s * kappa / rho_fail))
    m_support = constant_m * s**1.5 * flog(kappa / rho_fail)
    return {
        "delta_min": delta_min,
        "m_min_stable": int(math.ceil(m_stable)),
        "m_min_support": int(math.ceil(m_support)),
    }
