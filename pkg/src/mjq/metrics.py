"""Job-observer and system-level metrics from stationary samples.

A stationary workload sample paired with an independently drawn tagged
job mark yields the job-observer quantities directly: the tagged job
waits until its alpha0-th least-loaded server frees up. Time-average
quantities (waste, mean jobs in system) follow by Palm inversion, i.e.
multiplying job averages by the arrival rate.
"""

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .backends import get_backend
from .randomness import Scenario

__all__ = ["PalmSample", "ClassStats", "MetricReport", "waiting_time",
           "system_time", "waste_estimators", "summarize", "palm_samples"]


@dataclass(frozen=True)
class PalmSample:
    """A stationary workload sample plus the tagged job-0 mark, drawn
    independently of the backward window (job indices >= 1)."""

    workload: np.ndarray
    alpha0: int
    sigma0: float
    tau0: float
    replica: int = 0


def waiting_time(p: PalmSample) -> float:
    """Time until the alpha0 least-loaded servers are all free."""
    return float(p.workload[p.alpha0 - 1])


def system_time(p: PalmSample) -> float:
    """Waiting time plus the tagged job's own service."""
    return waiting_time(p) + p.sigma0


def palm_samples(scenario: Scenario, workloads: np.ndarray, *,
                 seed: int = 0, replicas: Optional[Sequence[int]] = None
                 ) -> List[PalmSample]:
    """Pair each stationary workload with its replica's job-0 mark."""
    k = get_backend()
    pack = scenario.pack
    if replicas is None:
        replicas = range(len(workloads))
    out = []
    for row, r in zip(workloads, replicas):
        alpha, sigma, tau = k.sample_mark(seed, r, 0, *pack)
        out.append(PalmSample(row, int(alpha), float(sigma), float(tau), r))
    return out


def waste_estimators(samples: Sequence[PalmSample],
                     lam: float) -> Tuple[float, float]:
    """Mean servers idle (total, and due to head-of-line blocking only).

    Synchronizing the tagged job's alpha0 least-loaded servers idles
    server i on [W^i, W^alpha0]; that whole gap is charged to the job
    that creates it, so the head-of-line waste rate is lambda times the
    mean gap (no truncation - each idle-while-blocked second belongs to
    exactly one job's gap). Plain idleness is the time left in the
    tagged inter-arrival [0, tau] after a server's workload profile has
    drained: past W^alpha0 + sigma0 for the synchronized servers, past
    W^i for the rest. During those stretches no job is waiting, so the
    two terms partition all idle time.
    """
    if not samples:
        raise ValueError("need at least one sample")
    idle_plain = 0.0
    idle_hol = 0.0
    for p in samples:
        w = p.workload
        a = p.alpha0
        tau = p.tau0
        wa = w[a - 1]
        tail = np.minimum(w[a:], tau)
        idle_hol += wa * a - float(w[:a].sum())
        idle_plain += (a * (tau - min(wa + p.sigma0, tau))
                       + (len(w) - a) * tau - float(tail.sum()))
    n = len(samples)
    return lam * (idle_hol + idle_plain) / n, lam * idle_hol / n


@dataclass(frozen=True)
class ClassStats:
    demand: int  # 0 means overall
    count: int
    mean: Optional[float] = None
    variance: Optional[float] = None
    ci_half: Optional[float] = None
    percentiles: Dict[float, float] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricReport:
    confidence: float
    overall_wait: ClassStats
    overall_system: ClassStats
    per_class_wait: List[ClassStats]
    waste: Optional[float] = None
    waste_hol: Optional[float] = None
    mean_jobs: Optional[float] = None
    histograms: Optional[Dict[int, dict]] = None

    def rows(self) -> List[dict]:
        """Flat tabular form: one row per class per metric."""
        out = []

        def emit(metric, st):
            out.append({
                "metric": metric, "demand": st.demand, "count": st.count,
                "mean": st.mean, "variance": st.variance,
                "ci_half": st.ci_half,
                **{f"p{int(q) if float(q).is_integer() else q}": v
                   for q, v in st.percentiles.items()},
            })

        emit("waiting_time", self.overall_wait)
        emit("system_time", self.overall_system)
        for st in self.per_class_wait:
            emit("waiting_time", st)
        for name in ("waste", "waste_hol", "mean_jobs"):
            v = getattr(self, name)
            if v is not None:
                out.append({"metric": name, "demand": 0, "count": None,
                            "mean": v, "variance": None, "ci_half": None})
        return out


def _nearest_rank(sorted_x: np.ndarray, q: float) -> float:
    idx = max(0, math.ceil(q / 100.0 * len(sorted_x)) - 1)
    return float(sorted_x[idx])


def _stats(x: np.ndarray, demand: int, z: float,
           percentiles: Sequence[float]) -> ClassStats:
    n = len(x)
    if n == 0:
        return ClassStats(demand, 0)
    mean = float(np.mean(x))
    if n < 2:
        return ClassStats(demand, n, mean)
    var = float(np.var(x, ddof=1))
    ci = z * math.sqrt(var / n)
    xs = np.sort(x)
    pct = {float(q): _nearest_rank(xs, q) for q in percentiles}
    return ClassStats(demand, n, mean, var, ci, pct)


def _histogram(x: np.ndarray, width: float) -> dict:
    hi = float(x.max()) + width
    edges = np.arange(0.0, hi + width, width)
    counts, edges = np.histogram(x, bins=edges)
    density = counts / (len(x) * width)
    xs = np.sort(x)
    return {
        "edges": edges,
        "density": density,
        "tail_p99": _nearest_rank(xs, 99.0),
        "max": float(xs[-1]),
    }


def summarize(samples: Sequence[PalmSample], classes=None,
              confidence: float = 0.99,
              percentiles: Sequence[float] = (50.0, 90.0, 99.0), *,
              arrival_rate: Optional[float] = None,
              histogram_bin_width: Optional[float] = None) -> MetricReport:
    """Means, variances, nearest-rank percentiles and CLT confidence
    intervals, overall and partitioned by the tagged job's demand.

    `classes` (a scenario's class list) only fixes which demands get a
    row; demands with zero samples are reported with count 0 and absent
    statistics. Waste and mean-jobs need the arrival rate.
    """
    if not samples:
        raise ValueError("need at least one sample")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    waits = np.array([waiting_time(p) for p in samples])
    systems = waits + np.array([p.sigma0 for p in samples])
    alphas = np.array([p.alpha0 for p in samples])

    demands = sorted({c.demand for c in classes} if classes is not None
                     else set(alphas.tolist()))
    per_class = [_stats(waits[alphas == d], d, z, percentiles)
                 for d in demands]
    overall_wait = _stats(waits, 0, z, percentiles)
    overall_system = _stats(systems, 0, z, percentiles)

    waste = waste_hol = mean_jobs = None
    if arrival_rate is not None:
        waste, waste_hol = waste_estimators(samples, arrival_rate)
        mean_jobs = arrival_rate * float(np.mean(systems))

    histograms = None
    if histogram_bin_width is not None:
        histograms = {d: _histogram(waits[alphas == d], histogram_bin_width)
                      for d in demands if np.any(alphas == d)}
        histograms[0] = _histogram(waits, histogram_bin_width)

    return MetricReport(confidence, overall_wait, overall_system, per_class,
                        waste, waste_hol, mean_jobs, histograms)
