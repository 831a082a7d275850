"""Stability boundary estimation from saturated-pile growth rates.

Feeding the recurrence with all inter-arrivals forced to zero yields the
pile; its sup-norm grows linearly at a deterministic rate gamma, and the
system is stable exactly for arrival rates below 1/gamma. The estimator
never consumes inter-arrival draws, so the boundary is insensitive to the
arrival law by construction.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .backends import get_backend
from .randomness import Scenario, ScenarioError, lambda_ideal, mean_work

__all__ = ["StabilityEstimate", "estimate_gamma", "gamma_global_cycle",
           "saturated_waste", "DEFAULT_RENORM_PERIOD"]

DEFAULT_RENORM_PERIOD = 1 << 16


@dataclass(frozen=True)
class StabilityEstimate:
    """Growth-rate estimate with its full iterate history, so users can
    judge convergence themselves (the subadditive limit carries no
    computable error bound in general)."""

    gamma: float
    ell_used: int
    epsilon: float
    converged: bool
    history: List[Tuple[int, float]]
    replica: int = 0
    stderr: Optional[float] = None

    @property
    def lambda_c(self) -> float:
        return 1.0 / self.gamma


def default_epsilon(scenario: Scenario) -> float:
    """1% relative accuracy target on the boundary."""
    return 0.01 / lambda_ideal(scenario)


def estimate_gamma(scenario: Scenario, replica: int = 0,
                   epsilon: Optional[float] = None, ell0: int = 100_000,
                   ell_max: int = 1 << 28, *, seed: int = 0,
                   renorm_period: int = DEFAULT_RENORM_PERIOD
                   ) -> StabilityEstimate:
    """Run the pile over a doubling schedule of job counts until two
    consecutive milestone estimates of sup|H|/n differ by <= epsilon."""
    if epsilon is None:
        epsilon = default_epsilon(scenario)
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not 1 <= ell0 <= ell_max:
        raise ValueError("need 1 <= ell0 <= ell_max")
    k = get_backend()
    cum, calphas, kinds, params, _, _ = scenario.pack
    values = np.zeros(scenario.servers)
    offset = 0.0
    history: List[Tuple[int, float]] = []
    n_done = 0
    ell = ell0
    gamma_prev = math.inf
    converged = False
    while True:
        offset = k.pile_run(seed, replica, values, offset, n_done, ell,
                            renorm_period, cum, calphas, kinds, params)
        n_done = ell
        gamma = (float(values[-1]) + offset) / ell
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


def gamma_global_cycle(scenario: Scenario, replica: int = 0,
                       cycles: int = 100_000, *,
                       seed: int = 0) -> StabilityEstimate:
    """Cycle estimator for scenarios with a class demanding all servers:
    gamma = p_g * E[pile sup over one regeneration cycle]. Each cycle
    opens with a global job and ends just before the next one."""
    g = scenario.global_class_index()
    if g < 0:
        raise ScenarioError(
            "cycle estimator needs a class demanding all servers")
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    k = get_backend()
    cum, calphas, kinds, params, _, _ = scenario.pack
    p_g = scenario.classes[g].probability
    sups, _ = k.cycle_sups(seed, replica, cycles, 1, g, scenario.servers,
                           cum, calphas, kinds, params)
    gamma = p_g * float(np.mean(sups))
    stderr = p_g * float(np.std(sups, ddof=1)) / math.sqrt(cycles)
    return StabilityEstimate(gamma, cycles, 0.0, True,
                             [(cycles, gamma)], replica, stderr=stderr)


def saturated_waste(scenario: Scenario, gamma: float) -> float:
    """Mean servers idle at saturation: in saturated steady state one job
    enters per gamma seconds, so busy servers average E[alpha*sigma]/gamma
    and the rest is waste."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return scenario.servers - mean_work(scenario) / gamma
