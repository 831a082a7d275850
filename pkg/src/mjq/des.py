"""Event-list reference simulator of the FCFS multiserver-job queue.

The scheduler admits waiting jobs in arrival order at every departure,
stopping at the first job whose demand does not fit; no later job may
overtake it. This simulator computes the same waiting times as the
recurrence by a completely different route, making it the exactness
oracle for the recurrence kernels and the baseline for performance
comparisons.
"""

import heapq
from collections import deque
from dataclasses import dataclass

import numpy as np

from .backends import get_backend
from .randomness import Scenario
from .sampling import Trajectory, forward_run

__all__ = ["TimeAverages", "des_run", "des_saturated", "coupling_check"]


@dataclass(frozen=True)
class TimeAverages:
    """Time-averaged occupancy over the simulated horizon."""

    horizon: float
    busy_servers: float
    idle_servers: float
    hol_idle_servers: float  # idle servers counted against a blocked head
    jobs_in_system: float


class _Core:
    """Shared event loop; arrivals come either from the stream (open
    system) or all at time zero (saturated)."""

    def __init__(self, s):
        self.s = s
        self.busy = 0
        self.in_system = 0
        self.queue = deque()
        self.departures = []  # (time, seq, alpha)
        self.now = 0.0
        self.elapsed = 0.0  # horizon before the current clock origin
        self.seq = 0
        # integrals over time
        self.int_busy = 0.0
        self.int_hol = 0.0
        self.int_jobs = 0.0

    def advance(self, t):
        dt = t - self.now
        if dt > 0.0:
            self.int_busy += dt * self.busy
            self.int_jobs += dt * self.in_system
            if self.queue:
                head_alpha = self.queue[0][1]
                self.int_hol += dt * min(self.s - self.busy, head_alpha)
            self.now = t

    def admit(self, waits):
        while self.queue and self.busy + self.queue[0][1] <= self.s:
            n, alpha, sigma, t_arr = self.queue.popleft()
            waits[n] = self.now - t_arr
            self.busy += alpha
            self.seq += 1
            heapq.heappush(self.departures, (self.now + sigma, self.seq,
                                             alpha))

    def pop_departure(self):
        t, _, alpha = heapq.heappop(self.departures)
        self.advance(t)
        self.busy -= alpha
        self.in_system -= 1

    def rebase(self):
        """Move the clock origin to `now` while the system is empty.

        Event times and waits are differences of clock values, so
        resetting the origin at every empty instant keeps float
        magnitudes at the busy-period scale and stops round-off from
        accumulating across busy periods (the recurrence state is
        exactly zero at these instants for the same reason)."""
        self.elapsed += self.now
        self.now = 0.0

    def averages(self):
        t = self.elapsed + self.now
        if t <= 0.0:
            return TimeAverages(0.0, 0.0, float(self.s), 0.0, 0.0)
        busy = self.int_busy / t
        return TimeAverages(t, busy, self.s - busy, self.int_hol / t,
                            self.int_jobs / t)


def des_run(scenario: Scenario, replica: int, n_jobs: int, *,
            seed: int = 0):
    """Simulate jobs 0..n_jobs-1 from the empty state on the same mark
    stream as forward_run. Departures coinciding with an arrival are
    processed first, matching the recurrence's view of the workload.
    Returns the trajectory and time averages up to the last departure."""
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    k = get_backend()
    alphas, sigmas, taus = k.gen_marks(seed, replica, 0, n_jobs,
                                       *scenario.pack)
    waits = np.empty(n_jobs)
    core = _Core(scenario.servers)
    t_arr = 0.0
    for n in range(n_jobs):
        while core.departures and core.departures[0][0] <= t_arr:
            core.pop_departure()
            core.admit(waits)
        core.advance(t_arr)
        if core.in_system == 0:
            core.rebase()
            t_arr = 0.0
        core.in_system += 1
        core.queue.append((n, int(alphas[n]), float(sigmas[n]), t_arr))
        core.admit(waits)
        t_arr += float(taus[n])
    while core.departures:
        core.pop_departure()
        core.admit(waits)
    traj = Trajectory(replica, alphas, sigmas, taus, waits,
                      workload_final=np.zeros(scenario.servers))
    return traj, core.averages()


def des_saturated(scenario: Scenario, replica: int, n_jobs: int, *,
                  seed: int = 0) -> TimeAverages:
    """All n_jobs present at time zero: measures occupancy of the
    saturated system over its makespan, independent of the pile
    recursion."""
    if n_jobs < 1:
        raise ValueError("n_jobs must be >= 1")
    k = get_backend()
    cum, calphas, kinds, params, akind, aparams = scenario.pack
    alphas, sigmas, _ = k.gen_marks(seed, replica, 1, n_jobs + 1,
                                    cum, calphas, kinds, params,
                                    akind, aparams)
    waits = np.empty(n_jobs)
    core = _Core(scenario.servers)
    core.in_system = n_jobs
    for n in range(n_jobs):
        core.queue.append((n, int(alphas[n]), float(sigmas[n]), 0.0))
    core.admit(waits)
    while core.departures:
        core.pop_departure()
        core.admit(waits)
    return core.averages()


def coupling_check(scenario: Scenario, replica: int, n_jobs: int, *,
                   seed: int = 0) -> float:
    """Max |wait_DES - wait_recurrence| over identical streams from the
    empty state; the two are computations of the same quantity."""
    traj_des, _ = des_run(scenario, replica, n_jobs, seed=seed)
    traj_sre = forward_run(scenario, replica, n_jobs, seed=seed)
    return float(np.max(np.abs(traj_des.waits - traj_sre.waits)))
