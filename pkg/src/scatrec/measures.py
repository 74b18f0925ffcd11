"""Discrete measures (weighted point sets) and the rectangular domain box."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned open box (-side/2, side/2)^d."""

    d: int
    side: float

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.side <= 0:
            raise ValueError(f"box side must be positive, got {self.side}")

    @property
    def lo(self) -> float:
        return -0.5 * self.side

    @property
    def hi(self) -> float:
        return 0.5 * self.side

    def contains(self, points: np.ndarray, tol: float = 0.0) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all(np.abs(pts) <= 0.5 * self.side + tol))



@dataclass
class DiscreteMeasure:
    """A finite sum of weighted Dirac masses: amplitudes are complex,
    locations live in R^d."""

    d: int
    amplitudes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    locations: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        self.locations = np.asarray(self.locations, dtype=float).reshape(-1, self.d)
        if self.locations.shape[0] != self.amplitudes.shape[0]:
            raise ValueError(
                f"{self.amplitudes.shape[0]} amplitudes but {self.locations.shape[0]} locations"
            )

    @property
    def n_atoms(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.n_atoms == 0

    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))

    def copy(self) -> "DiscreteMeasure":
        return DiscreteMeasure(self.d, self.amplitudes.copy(), self.locations.copy())

    @classmethod
    def empty(cls, d: int) -> "DiscreteMeasure":
        return cls(d, np.zeros(0, dtype=complex), np.zeros((0, d)))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "atoms": [
                {
                    "re": float(a.real),
                    "im": float(a.imag),
                    "location": [float(c) for c in x],
                }
                for a, x in zip(self.amplitudes, self.locations)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        d = int(data["d"])
        atoms = data.get("atoms", [])
        amps = np.array([complex(a["re"], a["im"]) for a in atoms], dtype=complex)
        locs = np.array([a["location"] for a in atoms], dtype=float).reshape(-1, d)
        return cls(d, amps, locs)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(text))
