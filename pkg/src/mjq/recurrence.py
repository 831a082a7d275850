"""Single-step maps of the workload recurrence.

Pure, deterministic reference implementations: the multiserver-job
update, its single-demand (Kiefer-Wolfowitz) specialization, and the
saturated pile update. The hot loops in `mjq._kernels` perform the same
float operations in the same order; these functions are the readable
ground truth they are tested against.

Workload vectors are plain 1-d float64 arrays, sorted ascending, with
non-negative entries (per-server remaining-busy times in seconds).
Component indices in the math are 1-based (W^alpha is `w[alpha - 1]`).
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DemandError",
    "JobMark",
    "PileVector",
    "l_vector",
    "sync_map",
    "mjsre_step",
    "kw_step",
    "pile_step",
    "renormalize",
    "check_workload",
]


class DemandError(ValueError):
    """Job demand outside 1..s for the given server count."""


class JobMark(NamedTuple):
    """One job's server demand, service time and following inter-arrival."""

    alpha: int
    sigma: float
    tau: float


@dataclass(frozen=True)
class PileVector:
    """Saturated workload with a running normalization shift.

    The true pile component i is ``values[i] + offset``; the offset keeps
    float magnitudes bounded over long saturated runs.
    """

    values: np.ndarray
    offset: float = 0.0

    @property
    def sup(self) -> float:
        """Sup-norm of the true pile."""
        return float(self.values[-1]) + self.offset


def _check_alpha(alpha: int, s: int) -> None:
    if not 1 <= alpha <= s:
        raise DemandError(f"demand {alpha} exceeds capacity (1..{s})")


def check_workload(w: np.ndarray) -> np.ndarray:
    """Validate and return a workload vector (sorted, non-negative)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("workload must be a non-empty 1-d vector")
    if np.any(w < 0.0):
        raise ValueError("workload components must be non-negative")
    if np.any(np.diff(w) < 0.0):
        raise ValueError("workload vector must be sorted ascending")
    return w


def l_vector(alpha: int, s: int) -> np.ndarray:
    """Load indicator: 1 in positions 1..alpha, 0 elsewhere."""
    _check_alpha(alpha, s)
    out = np.zeros(s)
    out[:alpha] = 1.0
    return out


def sync_map(alpha: int, w: np.ndarray) -> np.ndarray:
    """Raise the first alpha components to w[alpha]: services of a job
    spanning alpha servers can only start once all of them are free."""
    _check_alpha(alpha, len(w))
    return np.maximum(w, w[alpha - 1])


def mjsre_step(w: np.ndarray, mark: JobMark) -> np.ndarray:
    """One arrival: synchronize, add the load to the alpha least-loaded
    servers, let tau elapse, clamp at zero, reorder ascending."""
    s = len(w)
    _check_alpha(mark.alpha, s)
    out = sync_map(mark.alpha, w) + mark.sigma * l_vector(mark.alpha, s)
    out -= mark.tau
    np.maximum(out, 0.0, out=out)
    out.sort(kind="stable")
    return out


def kw_step(w: np.ndarray, sigma: float, tau: float) -> np.ndarray:
    """Single-demand specialization: the classic ordered-vector update
    for jobs that take exactly one server."""
    return mjsre_step(w, JobMark(1, sigma, tau))


def pile_step(h: PileVector, alpha: int, sigma: float) -> PileVector:
    """Saturated update: same as mjsre_step with tau = 0 and no clamp
    needed. The offset is untouched; renormalize separately."""
    _check_alpha(alpha, len(h.values))
    out = sync_map(alpha, h.values).copy()
    out[:alpha] += sigma
    out.sort(kind="stable")
    return PileVector(out, h.offset)


def renormalize(h: PileVector) -> PileVector:
    """Shift values down by their minimum and bank it in the offset;
    the true pile is unchanged."""
    shift = float(h.values[0])
    return PileVector(h.values - shift, h.offset + shift)
