"""Extensions of the recurrence: specific-server demands, multiple
resource types, and the random-assignment (RA) comparison system.

Only the step maps, forward iteration and the RA stability estimator are
provided; the sampling/metrics pipeline stays on the base model.
"""

import math
from dataclasses import dataclass
from typing import FrozenSet, List, Optional, Tuple

import numpy as np

from .backends import get_backend
from .randomness import Scenario, StreamKey
from .recurrence import DemandError, JobMark, PileVector, mjsre_step
from .stability import (DEFAULT_RENORM_PERIOD, StabilityEstimate,
                        default_epsilon)

__all__ = ["SpecificDemand", "MultiWorkload", "MultiDemand", "smjsre_step",
           "mmjsre_step", "ra_pile_step", "ra_gamma"]


@dataclass(frozen=True)
class SpecificDemand:
    """alpha unspecified servers plus a set of required server positions
    (1-based, matching the ordered-vector indexing)."""

    alpha: int
    subset: FrozenSet[int] = frozenset()

    def validate(self, s: int) -> None:
        if self.alpha < 0:
            raise DemandError("unspecified demand must be >= 0")
        if self.alpha + len(self.subset) > s:
            raise DemandError(
                f"demand {self.alpha}+{len(self.subset)} exceeds {s} servers")
        if self.subset and not all(1 <= i <= s for i in self.subset):
            raise DemandError("subset positions must lie in 1..s")
        if self.alpha == 0 and not self.subset:
            raise DemandError("demand must be positive")


def smjsre_step(w: np.ndarray, d: SpecificDemand, sigma: float,
                tau: float) -> np.ndarray:
    """Specific-resource update: the job seizes its required positions
    and the alpha lowest-indexed free positions, all synchronized to the
    latest of them. With an empty subset this is exactly mjsre_step."""
    s = len(w)
    d.validate(s)
    if not d.subset:
        return mjsre_step(w, JobMark(d.alpha, sigma, tau))
    in_s = np.zeros(s, dtype=bool)
    in_s[[i - 1 for i in d.subset]] = True
    k = np.cumsum(~in_s)  # non-subset positions up to i, inclusive
    taken = in_s | (~in_s & (k <= d.alpha))
    w_hat = w[in_s].max()
    if d.alpha > 0:
        i_star = int(np.nonzero(k == d.alpha)[0][0])
        w_hat = max(w_hat, w[i_star])
    out = np.where(taken, w_hat + sigma, w) - tau
    np.maximum(out, 0.0, out=out)
    out.sort(kind="stable")
    return out


MultiWorkload = List[np.ndarray]
MultiDemand = Tuple[int, ...]


def mmjsre_step(mw: MultiWorkload, d: MultiDemand, sigma: float,
                tau: float) -> MultiWorkload:
    """Multi-resource update: all seized components synchronize to the
    largest per-type release time among types with positive demand;
    zero-demand types only age. With one type this is mjsre_step."""
    if len(d) != len(mw):
        raise DemandError("demand and workload type counts differ")
    if all(a == 0 for a in d):
        raise DemandError("at least one type demand must be positive")
    m = -math.inf
    for wt, a in zip(mw, d):
        if a < 0 or a > len(wt):
            raise DemandError(f"type demand {a} outside 0..{len(wt)}")
        if a > 0:
            m = max(m, wt[a - 1])
    out = []
    for wt, a in zip(mw, d):
        nt = wt.astype(np.float64, copy=True)
        if a > 0:
            nt[:a] = m + sigma
        nt -= tau
        np.maximum(nt, 0.0, out=nt)
        nt.sort(kind="stable")
        out.append(nt)
    return out


def ra_pile_step(h: PileVector, alpha: int, sigma: float,
                 key: StreamKey) -> PileVector:
    """Random-assignment pile update: the job lands on a uniform random
    size-alpha subset of servers instead of the least-loaded ones. The
    vector is identity-indexed and NOT reordered."""
    s = len(h.values)
    if not 1 <= alpha <= s:
        raise DemandError(f"demand {alpha} exceeds capacity (1..{s})")
    k = get_backend()
    perm = np.arange(s)
    for t in range(alpha):
        u = k.uniform(key.seed, key.replica, key.job_index,
                      3, t)  # substream 3: subset draws
        j = t + int(u * (s - t))
        perm[t], perm[j] = perm[j], perm[t]
    chosen = perm[:alpha]
    values = h.values.copy()
    values[chosen] = values[chosen].max() + sigma
    return PileVector(values, h.offset)


def ra_gamma(scenario: Scenario, replica: int = 0,
             epsilon: Optional[float] = None, ell0: int = 100_000,
             ell_max: int = 1 << 28, *, seed: int = 0,
             renorm_period: int = DEFAULT_RENORM_PERIOD
             ) -> StabilityEstimate:
    """Pile growth rate under random assignment, with the same doubling
    milestone scheme as the FCFS estimator."""
    if epsilon is None:
        epsilon = default_epsilon(scenario)
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not 1 <= ell0 <= ell_max:
        raise ValueError("need 1 <= ell0 <= ell_max")
    k = get_backend()
    cum, calphas, kinds, params, _, _ = scenario.pack
    values = np.zeros(scenario.servers)
    perm = np.arange(scenario.servers, dtype=np.int64)
    offset = 0.0
    history = []
    n_done = 0
    ell = ell0
    gamma_prev = math.inf
    converged = False
    while True:
        offset = k.ra_pile_run(seed, replica, values, perm, offset, n_done,
                               ell, renorm_period, cum, calphas, kinds,
                               params)
        n_done = ell
        gamma = (float(values.max()) + offset) / ell
        history.append((ell, gamma))
        if abs(gamma - gamma_prev) <= epsilon:
            converged = True
            break
        gamma_prev = gamma
        if 2 * ell > ell_max:
            break
        ell *= 2
    return StabilityEstimate(gamma, ell, epsilon, converged, history,
                             replica)
