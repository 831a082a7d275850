"""Scenario description and reproducible mark generation.

Jobs are drawn from a counter-based stream: a mark is a pure function of
(scenario, StreamKey), so job -n of any replica is addressable without
generating its predecessors. Class choice, service draw and inter-arrival
draw use three separate substreams under one job index, so changing the
arrival law never perturbs the (alpha, sigma) sequence.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import _kernels
from .backends import get_backend
from .recurrence import JobMark

__all__ = [
    "ScenarioError",
    "Deterministic",
    "Exponential",
    "ErlangK",
    "HyperExp2",
    "BoundedPareto",
    "ArrivalProcess",
    "JobClass",
    "Scenario",
    "StreamKey",
    "sample_job",
    "dist_mean",
    "dist_variance",
    "lambda_ideal",
]


class ScenarioError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class Deterministic:
    value: float

    def _pack(self):
        if self.value < 0:
            raise ScenarioError("deterministic value must be >= 0")
        return _kernels.KIND_DET, (self.value, 0.0, 0.0)


@dataclass(frozen=True)
class Exponential:
    mean: float

    def _pack(self):
        if self.mean <= 0:
            raise ScenarioError("exponential mean must be > 0")
        return _kernels.KIND_EXP, (self.mean, 0.0, 0.0)


@dataclass(frozen=True)
class ErlangK:
    k: int
    mean: float

    def _pack(self):
        if self.k < 1 or self.k != int(self.k):
            raise ScenarioError("erlang k must be a positive integer")
        if self.mean <= 0:
            raise ScenarioError("erlang mean must be > 0")
        return _kernels.KIND_ERLANG, (float(self.k), self.mean, 0.0)


@dataclass(frozen=True)
class HyperExp2:
    mean_long: float
    mean_short: float
    p_long: float

    def _pack(self):
        if self.mean_long <= 0 or self.mean_short <= 0:
            raise ScenarioError("hyperexponential phase means must be > 0")
        if not 0.0 < self.p_long < 1.0:
            raise ScenarioError("p_long must be in (0, 1)")
        return _kernels.KIND_HYPER2, (self.mean_long, self.mean_short,
                                      self.p_long)


@dataclass(frozen=True)
class BoundedPareto:
    x_min: float
    x_max: float
    shape: float

    def _pack(self):
        if not 0.0 < self.x_min < self.x_max:
            raise ScenarioError("bounded Pareto needs 0 < x_min < x_max")
        if self.shape <= 0:
            raise ScenarioError("bounded Pareto shape must be > 0")
        return _kernels.KIND_BPARETO, (self.x_min, self.x_max, self.shape)


ServiceDistribution = Union[Deterministic, Exponential, ErlangK,
                            HyperExp2, BoundedPareto]


@dataclass(frozen=True)
class ArrivalProcess:
    """Renewal arrivals: rate in jobs/second plus the family of the
    inter-arrival law ('poisson', 'deterministic' or 'erlang')."""

    rate: float
    family: str = "poisson"
    k: int = 1

    def interarrival(self) -> ServiceDistribution:
        mean = 1.0 / self.rate
        if self.family == "poisson":
            return Exponential(mean)
        if self.family == "deterministic":
            return Deterministic(mean)
        if self.family == "erlang":
            return ErlangK(self.k, mean)
        raise ScenarioError(f"unknown arrival family {self.family!r}")

    def _pack(self):
        if self.rate <= 0:
            raise ScenarioError("arrival rate must be > 0")
        return self.interarrival()._pack()


@dataclass(frozen=True)
class JobClass:
    demand: int
    probability: float
    service: ServiceDistribution


@dataclass(frozen=True)
class Scenario:
    servers: int
    classes: Sequence[JobClass]
    arrival: ArrivalProcess
    name: str = ""
    _packed: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.servers < 1:
            raise ScenarioError("server count must be >= 1")
        if not self.classes:
            raise ScenarioError("at least one job class is required")
        total = 0.0
        for c in self.classes:
            if not 1 <= c.demand <= self.servers:
                raise ScenarioError(
                    f"class demand {c.demand} outside 1..{self.servers}")
            if not 0.0 < c.probability <= 1.0:
                raise ScenarioError("class probabilities must be in (0, 1]")
            total += c.probability
        if abs(total - 1.0) > 1e-12:
            raise ScenarioError(
                f"class probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "_packed", self._build_pack())

    def _build_pack(self):
        c = len(self.classes)
        cum = np.cumsum([jc.probability for jc in self.classes])
        cum[-1] = 1.0
        calphas = np.array([jc.demand for jc in self.classes], dtype=np.int64)
        kinds = np.empty(c, dtype=np.int64)
        params = np.empty((c, 3), dtype=np.float64)
        for i, jc in enumerate(self.classes):
            kinds[i], params[i] = jc.service._pack()
        akind, aparams = self.arrival._pack()
        return (cum, calphas, kinds, params, np.int64(akind),
                np.array(aparams, dtype=np.float64))

    @property
    def pack(self):
        """Numeric arrays consumed by the kernels."""
        return self._packed

    @property
    def rate(self) -> float:
        return self.arrival.rate

    def with_rate(self, rate: float) -> "Scenario":
        """Same job mix under a different arrival rate."""
        arr = ArrivalProcess(rate, self.arrival.family, self.arrival.k)
        return Scenario(self.servers, self.classes, arr, self.name)

    def global_class_index(self) -> int:
        """Index of the class demanding all servers, or -1."""
        for i, jc in enumerate(self.classes):
            if jc.demand == self.servers:
                return i
        return -1


class StreamKey(NamedTuple):
    """Address of one job's randomness; identical keys give identical
    draws, distinct keys are statistically independent."""

    seed: int
    replica: int
    job_index: int


def sample_job(scenario: Scenario, key: StreamKey) -> JobMark:
    """The mark of the job addressed by `key`: class chosen with the
    scenario probabilities, service from that class's law, inter-arrival
    from the arrival process."""
    k = get_backend()
    alpha, sigma, tau = k.sample_mark(key.seed, key.replica, key.job_index,
                                      *scenario.pack)
    return JobMark(int(alpha), float(sigma), float(tau))


def dist_mean(d: ServiceDistribution) -> float:
    """Analytic mean."""
    if isinstance(d, Deterministic):
        return d.value
    if isinstance(d, Exponential):
        return d.mean
    if isinstance(d, ErlangK):
        return d.mean
    if isinstance(d, HyperExp2):
        return d.p_long * d.mean_long + (1.0 - d.p_long) * d.mean_short
    if isinstance(d, BoundedPareto):
        a, lo, hi = d.shape, d.x_min, d.x_max
        norm = 1.0 - (lo / hi) ** a
        if a == 1.0:
            return lo * math.log(hi / lo) / norm
        return (a * lo ** a / norm) * (lo ** (1 - a) - hi ** (1 - a)) / (a - 1)
    raise ScenarioError(f"unknown distribution {d!r}")


def _second_moment(d: ServiceDistribution) -> float:
    if isinstance(d, Deterministic):
        return d.value ** 2
    if isinstance(d, Exponential):
        return 2.0 * d.mean ** 2
    if isinstance(d, ErlangK):
        return d.mean ** 2 * (d.k + 1) / d.k
    if isinstance(d, HyperExp2):
        return 2.0 * (d.p_long * d.mean_long ** 2
                      + (1.0 - d.p_long) * d.mean_short ** 2)
    if isinstance(d, BoundedPareto):
        a, lo, hi = d.shape, d.x_min, d.x_max
        norm = 1.0 - (lo / hi) ** a
        if a == 2.0:
            return 2.0 * lo ** 2 * math.log(hi / lo) / norm
        return (a * lo ** a / norm) * (hi ** (2 - a) - lo ** (2 - a)) / (2 - a)
    raise ScenarioError(f"unknown distribution {d!r}")


def dist_variance(d: ServiceDistribution) -> float:
    """Analytic variance."""
    m = dist_mean(d)
    return _second_moment(d) - m * m


def mean_work(scenario: Scenario) -> float:
    """Mean server-seconds brought per job: sum of p * alpha * E[sigma]."""
    return sum(c.probability * c.demand * dist_mean(c.service)
               for c in scenario.classes)


def lambda_ideal(scenario: Scenario) -> float:
    """Stability boundary if no servers were ever wasted by head-of-line
    blocking: s / (sum of p * alpha * E[sigma])."""
    return scenario.servers / mean_work(scenario)
