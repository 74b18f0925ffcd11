"""Measurement design: uniform frequencies in the ball of radius 2*kappa and
the direction pairs realizing them as far-field acquisitions.

Frequencies omega are drawn i.i.d. uniform in B(0, 2 kappa); each omega is
realized by an (observation, incident) direction pair (xhat, theta) on the
unit sphere with kappa * (xhat - theta) = omega.  All randomness comes from
numpy's default PCG64 generator seeded explicitly, so plans are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PUSHFORWARD_TOL = 1e-12


@dataclass(frozen=True)
class DirectionPair:
    """One incident direction and the matching observation direction."""

    incident: np.ndarray
    observation: np.ndarray

    def __post_init__(self):
        inc = np.asarray(self.incident, dtype=float)
        obs = np.asarray(self.observation, dtype=float)
        object.__setattr__(self, "incident", inc)
        object.__setattr__(self, "observation", obs)
        for name, v in (("incident", inc), ("observation", obs)):
            if abs(np.linalg.norm(v) - 1.0) > PUSHFORWARD_TOL:
                raise ValueError(f"{name} direction is not unit norm: |v| = {np.linalg.norm(v)}")


@dataclass
class MeasurementPlan:
    """m far-field acquisitions: frequencies and their direction pairs."""

    d: int
    kappa: float
    m: int
    seed: int
    frequencies: np.ndarray  # (m, d)
    xhat: np.ndarray  # (m, d) observation directions
    theta: np.ndarray  # (m, d) incident directions

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float).reshape(self.m, self.d)
        self.xhat = np.asarray(self.xhat, dtype=float).reshape(self.m, self.d)
        self.theta = np.asarray(self.theta, dtype=float).reshape(self.m, self.d)
        self.validate()

    def validate(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        radii = np.linalg.norm(self.frequencies, axis=1)
        if np.any(radii > 2.0 * self.kappa * (1.0 + 1e-12)):
            raise ValueError("a frequency lies outside the ball of radius 2*kappa")
        gap = self.kappa * (self.xhat - self.theta) - self.frequencies
        worst = float(np.max(np.abs(gap))) if self.m else 0.0
        if worst > PUSHFORWARD_TOL:
            raise ValueError(f"direction pairs do not realize the frequencies: gap {worst:.3e}")
        for name, dirs in (("xhat", self.xhat), ("theta", self.theta)):
            norms = np.linalg.norm(dirs, axis=1)
            if np.any(np.abs(norms - 1.0) > PUSHFORWARD_TOL):
                raise ValueError(f"{name} contains non-unit directions")

    def pair(self, k: int) -> DirectionPair:
        return DirectionPair(incident=self.theta[k], observation=self.xhat[k])

    @property
    def pairs(self) -> list[DirectionPair]:
        return [self.pair(k) for k in range(self.m)]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "kappa": float(self.kappa),
            "m": self.m,
            "seed": self.seed,
            "frequencies": [[float(c) for c in w] for w in self.frequencies],
            "pairs": [
                {
                    "xhat": [float(c) for c in xh],
                    "theta": [float(c) for c in th],
                }
                for xh, th in zip(self.xhat, self.theta)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementPlan":
        pairs = data["pairs"]
        return cls(
            d=int(data["d"]),
            kappa=float(data["kappa"]),
            m=int(data["m"]),
            seed=int(data["seed"]),
            frequencies=np.array(data["frequencies"], dtype=float),
            xhat=np.array([p["xhat"] for p in pairs], dtype=float),
            theta=np.array([p["theta"] for p in pairs], dtype=float),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "MeasurementPlan":
        return cls.from_dict(json.loads(text))


@dataclass
class ObservationVector:
    """The complex data vector (1/sqrt(m)-normalized far-field samples)."""

    values: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(-1)
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dict(self) -> dict:
        return {
            "noise_std": float(self.noise_std),
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObservationVector":
        vals = np.array([complex(re, im) for re, im in data["values"]], dtype=complex)
        return cls(values=vals, noise_std=float(data["noise_std"]))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ObservationVector":
        return cls.from_dict(json.loads(text))


def sample_ball(m: int, kappa: float, d: int, seed: int) -> np.ndarray:
    """m i.i.d. uniform samples in the open ball of radius 2*kappa in R^d.

    Radius via (2 kappa) U^(1/d), direction via a normalized Gaussian vector.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((m, d))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = 2.0 * kappa * rng.random(m) ** (1.0 / d)
    return directions / norms * radii[:, None]


def _orthonormal_completion(unit: np.ndarray) -> np.ndarray:
    # deterministic unit vector orthogonal to `unit`: Gram-Schmidt against the
    # standard basis vector with the smallest component along `unit`
    j = int(np.argmin(np.abs(unit)))
    e = np.zeros_like(unit)
    e[j] = 1.0
    v = e - np.dot(e, unit) * unit
    return v / np.linalg.norm(v)


def directions_from_frequency(omega: np.ndarray, kappa: float, d: int) -> DirectionPair:
    """Direction pair (xhat, theta) with kappa*(xhat - theta) = omega.

    In the plane, with omega = r e^(i t), xhat = e^(i (t + phi)) and
    theta = -e^(i (t - phi)) where cos(phi) = r / (2 kappa).  In dimension 3
    the same construction is rotated into the plane spanned by omega and a
    deterministic orthogonal completion.  omega = 0 uses angle 0 (d=2) and
    the first basis vector (d=3) by convention.
    """
    omega = np.asarray(omega, dtype=float).reshape(d)
    r = float(np.linalg.norm(omega))
    if r > 2.0 * kappa * (1.0 + 1e-12):
        raise ValueError(f"|omega| = {r} exceeds 2*kappa = {2 * kappa}")
    c = min(r / (2.0 * kappa), 1.0)
    phi = np.arccos(c)
    if d == 2:
        t = np.arctan2(omega[1], omega[0]) if r > 0.0 else 0.0
        xhat = np.array([np.cos(t + phi), np.sin(t + phi)])
        theta = -np.array([np.cos(t - phi), np.sin(t - phi)])
    else:
        unit = omega / r if r > 0.0 else np.array([1.0, 0.0, 0.0])
        perp = _orthonormal_completion(unit)
        s = np.sin(phi)
        xhat = c * unit + s * perp
        theta = -c * unit + s * perp
    return DirectionPair(incident=theta, observation=xhat)


def build_plan(m: int, kappa: float, d: int, seed: int) -> MeasurementPlan:
    """Sample m frequencies uniformly in B(0, 2 kappa) and realize each one
    by a direction pair."""
    freqs = sample_ball(m, kappa, d, seed)
    xhat = np.empty((m, d))
    theta = np.empty((m, d))
    for k in range(m):
        pair = directions_from_frequency(freqs[k], kappa, d)
        xhat[k] = pair.observation
        theta[k] = pair.incident
    return MeasurementPlan(d=d, kappa=kappa, m=m, seed=seed, frequencies=freqs, xhat=xhat, theta=theta)


def add_noise(y: ObservationVector, sigma: float, seed: int) -> ObservationVector:
    """Add i.i.d. Gaussian noise of standard deviation sigma to the real and
    imaginary part of every entry.  sigma = 0 returns the data unchanged."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return ObservationVector(values=y.values.copy(), noise_std=0.0)
    rng = np.random.default_rng(seed)
    noise = sigma * (rng.standard_normal(y.m) + 1j * rng.standard_normal(y.m))
    return ObservationVector(values=y.values + noise, noise_std=sigma)
