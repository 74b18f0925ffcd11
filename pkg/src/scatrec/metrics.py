"""Assignment-based comparison of a recovered measure against the truth."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .measures import DiscreteMeasure


@dataclass
class MatchReport:
    """Injective matching between truth atoms and estimate atoms within a
    cutoff radius, with RMSEs over the matched pairs."""

    pairing: list[tuple[int, int]] = field(default_factory=list)
    position_rmse: float | None = None
    amplitude_rmse: float | None = None
    unmatched_truth: int = 0
    unmatched_estimate: int = 0
    relative_residual: float | None = None
    radius: float = 0.0

    @property
    def n_matched(self) -> int:
        return len(self.pairing)

    def to_dict(self) -> dict:
        return {
            "pairing": [[int(i), int(j)] for i, j in self.pairing],
            "position_rmse": self.position_rmse,
            "amplitude_rmse": self.amplitude_rmse,
            "unmatched_truth": self.unmatched_truth,
            "unmatched_estimate": self.unmatched_estimate,
            "relative_residual": self.relative_residual,
            "radius": self.radius,
        }


def match_measures(
    truth: DiscreteMeasure, estimate: DiscreteMeasure, radius: float
) -> MatchReport:
    """Minimum-cost injective assignment between atoms, restricted to pairs
    within the given radius; cost is the position distance."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    nt, ne = truth.n_atoms, estimate.n_atoms
    if nt == 0 or ne == 0:
        return MatchReport(
            pairing=[], unmatched_truth=nt, unmatched_estimate=ne, radius=radius
        )
    dist = np.linalg.norm(
        truth.locations[:, None, :] - estimate.locations[None, :, :], axis=-1
    )
    # forbid out-of-radius pairs with a cost large enough that the solver
    # never prefers them over leaving atoms unmatched
    big = 1e6 * (radius + float(dist.max()))
    cost = np.where(dist <= radius, dist, big)
    rows, cols = linear_sum_assignment(cost)
    pairing = [(int(i), int(j)) for i, j in zip(rows, cols) if dist[i, j] <= radius]
    if pairing:
        idx_t = [i for i, _ in pairing]
        idx_e = [j for _, j in pairing]
        pos_rmse = float(np.sqrt(np.mean(dist[idx_t, idx_e] ** 2)))
        amp_err = truth.amplitudes[idx_t] - estimate.amplitudes[idx_e]
        amp_rmse = float(np.sqrt(np.mean(np.abs(amp_err) ** 2)))
    else:
        pos_rmse = None
        amp_rmse = None
    return MatchReport(
        pairing=pairing,
        position_rmse=pos_rmse,
        amplitude_rmse=amp_rmse,
        unmatched_truth=nt - len(pairing),
        unmatched_estimate=ne - len(pairing),
        radius=radius,
    )
