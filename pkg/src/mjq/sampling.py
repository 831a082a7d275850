"""Backward sub-perfect sampling, forward trajectories and batching.

The backward scheme evaluates the workload at time 0 started empty at
job -ell, doubling ell until two consecutive evaluations coincide
componentwise. Coincidence is a stopping heuristic, not a coupling
certificate: the sequence of evaluations is componentwise non-decreasing,
so the returned vector is always a componentwise lower bound of a perfect
stationary sample.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backends import get_backend
from .randomness import Scenario
from .recurrence import check_workload

__all__ = ["SpsResult", "Trajectory", "run_window", "backward_sps",
           "batch_sps", "batch_sps_arrays", "forward_run",
           "DEFAULT_ELL0", "DEFAULT_ELL_MAX"]

DEFAULT_ELL0 = 10_000
DEFAULT_ELL_MAX = 2 ** 24


@dataclass(frozen=True)
class SpsResult:
    """One backward sample: the workload lower bound, the sequence length
    at the final evaluation, and whether the doubling scheme stopped by
    coincidence (converged) or by hitting ell_max."""

    workload: np.ndarray
    ell_final: int
    doublings: int
    converged: bool
    replica: int


@dataclass(frozen=True)
class Trajectory:
    """Per-job records of a forward run."""

    replica: int
    alphas: np.ndarray
    sigmas: np.ndarray
    taus: np.ndarray
    waits: np.ndarray
    workload_final: np.ndarray
    workloads: Optional[np.ndarray] = None  # (n_jobs, s) when recorded

    @property
    def arrival_times(self) -> np.ndarray:
        t = np.empty(len(self.taus))
        t[0] = 0.0
        np.cumsum(self.taus[:-1], out=t[1:])
        return t


def run_window(scenario: Scenario, replica: int, n1: int, n2: int,
               w_init: np.ndarray, *, seed: int = 0,
               chunk: int = 1 << 22) -> np.ndarray:
    """Workload at the arrival of job -n2 starting from w_init at the
    arrival of job -n1 (marks -n1 .. -(n2+1) applied oldest first).

    Long windows are processed as chained sub-windows; by the composition
    law this changes nothing.
    """
    if not n1 >= n2 >= 0:
        raise ValueError("need n1 >= n2 >= 0")
    w = check_workload(w_init)
    if len(w) != scenario.servers:
        raise ValueError("workload length must equal the server count")
    k = get_backend()
    hi = n1
    while hi > n2:
        lo = max(n2, hi - chunk)
        w = k.window(seed, replica, hi, lo, w, *scenario.pack)
        hi = lo
    return w


def batch_sps_arrays(scenario: Scenario, replicas: int,
                     ell0: int = DEFAULT_ELL0,
                     ell_max: int = DEFAULT_ELL_MAX,
                     workers: int = 1, *, seed: int = 0):
    """Array-level batch sampler: returns (workloads (R, s), ell_final,
    doublings, converged) indexed by replica. Output is identical for any
    worker count."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if not 1 <= ell0 <= ell_max:
        raise ValueError("need 1 <= ell0 <= ell_max")
    k = get_backend()
    s = scenario.servers
    out_w = np.empty((replicas, s), dtype=np.float64)
    out_ell = np.empty(replicas, dtype=np.int64)
    out_doub = np.empty(replicas, dtype=np.int64)
    out_conv = np.zeros(replicas, dtype=np.bool_)
    pack = scenario.pack

    def work(lo, hi):
        k.sps_range(seed, lo, hi, ell0, ell_max, *pack,
                    out_w[lo:hi], out_ell[lo:hi], out_doub[lo:hi],
                    out_conv[lo:hi])

    workers = max(1, int(workers))
    if workers == 1:
        work(0, replicas)
    else:
        bounds = np.linspace(0, replicas, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(work, int(lo), int(hi))
                       for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            for f in futures:
                f.result()
    return out_w, out_ell, out_doub, out_conv


def batch_sps(scenario: Scenario, replicas: int, ell0: int = DEFAULT_ELL0,
              ell_max: int = DEFAULT_ELL_MAX, workers: int = 1, *,
              seed: int = 0) -> list:
    """Independent SpsResults for replicas 0..replicas-1."""
    out_w, out_ell, out_doub, out_conv = batch_sps_arrays(
        scenario, replicas, ell0, ell_max, workers, seed=seed)
    return [SpsResult(out_w[r], int(out_ell[r]), int(out_doub[r]),
                      bool(out_conv[r]), r) for r in range(replicas)]


def backward_sps(scenario: Scenario, replica: int, ell0: int = DEFAULT_ELL0,
                 ell_max: int = DEFAULT_ELL_MAX, *,
                 seed: int = 0) -> SpsResult:
    """One backward sub-perfect sample (see module docstring)."""
    if not 1 <= ell0 <= ell_max:
        raise ValueError("need 1 <= ell0 <= ell_max")
    k = get_backend()
    s = scenario.servers
    out_w = np.empty((1, s))
    out_ell = np.empty(1, dtype=np.int64)
    out_doub = np.empty(1, dtype=np.int64)
    out_conv = np.zeros(1, dtype=np.bool_)
    k.sps_range(seed, replica, replica + 1, ell0, ell_max, *scenario.pack,
                out_w, out_ell, out_doub, out_conv)
    return SpsResult(out_w[0], int(out_ell[0]), int(out_doub[0]),
                     bool(out_conv[0]), replica)


def forward_run(scenario: Scenario, replica: int, n_jobs: int,
                w0: Optional[np.ndarray] = None, *, seed: int = 0,
                record_workloads: bool = False) -> Trajectory:
    """Iterate the recurrence forward over jobs 0..n_jobs-1 from w0
    (empty system by default), recording each job's waiting time before
    its own mark is applied. Warm-start with an SPS workload to skip the
    transient."""
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    if w0 is None:
        w0 = np.zeros(scenario.servers)
    else:
        w0 = check_workload(w0)
        if len(w0) != scenario.servers:
            raise ValueError("workload length must equal the server count")
    k = get_backend()
    waits, alphas, sigmas, taus, w_final, wl = k.forward(
        seed, replica, n_jobs, w0, *scenario.pack, record_workloads)
    return Trajectory(replica, alphas, sigmas, taus, waits, w_final,
                      wl if record_workloads else None)
