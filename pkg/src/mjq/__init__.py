"""Simulation and analysis of FCFS multiserver-job queues.

Jobs demand several servers at once and are admitted strictly in arrival
order; the per-server workload evolves by a stochastic recurrence on an
ordered vector. The package draws stationary workload samples by a
backward coupling scheme, estimates the stability boundary from
saturated growth rates, computes job- and time-average metrics, and
cross-checks everything against an event-list simulator.
"""

__version__ = "0.1.0"

from .backends import get_backend
from .des import TimeAverages, coupling_check, des_run, des_saturated
from .generalizations import (MultiDemand, MultiWorkload, SpecificDemand,
                              mmjsre_step, ra_gamma, ra_pile_step,
                              smjsre_step)
from .metrics import (ClassStats, MetricReport, PalmSample, palm_samples,
                      summarize, system_time, waiting_time,
                      waste_estimators)
from .randomness import (ArrivalProcess, BoundedPareto, Deterministic,
                         ErlangK, Exponential, HyperExp2, JobClass,
                         Scenario, ScenarioError, StreamKey, dist_mean,
                         dist_variance, lambda_ideal, mean_work, sample_job)
from .recurrence import (DemandError, JobMark, PileVector, kw_step,
                         l_vector, mjsre_step, pile_step, renormalize,
                         sync_map)
from .sampling import (SpsResult, Trajectory, backward_sps, batch_sps,
                       batch_sps_arrays, forward_run, run_window)
from .stability import (StabilityEstimate, estimate_gamma,
                        gamma_global_cycle, saturated_waste)

__all__ = [
    "__version__",
    "get_backend",
    # recurrence
    "DemandError", "JobMark", "PileVector", "l_vector", "sync_map",
    "mjsre_step", "kw_step", "pile_step", "renormalize",
    # randomness
    "ScenarioError", "Deterministic", "Exponential", "ErlangK", "HyperExp2",
    "BoundedPareto", "ArrivalProcess", "JobClass", "Scenario", "StreamKey",
    "sample_job", "dist_mean", "dist_variance", "mean_work", "lambda_ideal",
    # sampling
    "SpsResult", "Trajectory", "run_window", "backward_sps", "batch_sps",
    "batch_sps_arrays", "forward_run",
    # stability
    "StabilityEstimate", "estimate_gamma", "gamma_global_cycle",
    "saturated_waste",
    # metrics
    "PalmSample", "ClassStats", "MetricReport", "waiting_time",
    "system_time", "waste_estimators", "summarize", "palm_samples",
    # des
    "TimeAverages", "des_run", "des_saturated", "coupling_check",
    # generalizations
    "SpecificDemand", "MultiWorkload", "MultiDemand", "smjsre_step",
    "mmjsre_step", "ra_pile_step", "ra_gamma",
]
