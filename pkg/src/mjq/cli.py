"""Command-line front end: scenario loading, experiment orchestration
and result emission.

Commands: sps, stability, forward, des, metrics, compare-ra. Results go
to stdout or --output as CSV (tabular) or JSON (structured); a JSON run
manifest (seed, config echo, versions, wall clock) accompanies every
file output. Exit codes: 0 success, 2 configuration error, 3
non-convergence (unless --allow-nonconverged), 4 runtime error.
"""

import argparse
import csv
import io
import json
import os
import platform
import sys
import time

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__
from .backends import get_backend
from .des import des_run
from .generalizations import ra_gamma
from .metrics import palm_samples, summarize
from .randomness import (ArrivalProcess, BoundedPareto, Deterministic,
                         ErlangK, Exponential, HyperExp2, JobClass, Scenario,
                         ScenarioError, lambda_ideal)
from .sampling import (DEFAULT_ELL0, DEFAULT_ELL_MAX, batch_sps_arrays,
                       forward_run)
from .stability import (estimate_gamma, gamma_global_cycle, saturated_waste)

__all__ = ["load_scenario", "main"]

_ENV_WORKERS = "MJQ_WORKERS"

_SERVICE_FAMILIES = {
    "deterministic": (Deterministic, ("value",)),
    "exponential": (Exponential, ("mean",)),
    "erlang": (ErlangK, ("k", "mean")),
    "hyperexp2": (HyperExp2, ("mean_long", "mean_short", "p_long")),
    "bounded_pareto": (BoundedPareto, ("x_min", "x_max", "shape")),
}


def _service_from_table(tbl, where):
    if not isinstance(tbl, dict) or "family" not in tbl:
        raise ScenarioError(f"{where}: service needs a 'family' key")
    family = tbl["family"]
    if family not in _SERVICE_FAMILIES:
        raise ScenarioError(
            f"{where}: unknown service family {family!r} "
            f"(expected one of {sorted(_SERVICE_FAMILIES)})")
    cls, fields = _SERVICE_FAMILIES[family]
    missing = [f for f in fields if f not in tbl]
    if missing:
        raise ScenarioError(f"{where}: service missing {missing}")
    extra = set(tbl) - set(fields) - {"family"}
    if extra:
        raise ScenarioError(f"{where}: unknown service keys {sorted(extra)}")
    return cls(**{f: tbl[f] for f in fields})


def load_scenario(path: str) -> Scenario:
    """Parse and validate a TOML scenario file.

    Class probabilities off from 1 by at most 1e-9 are renormalized;
    larger deviations are rejected.
    """
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ScenarioError(f"{path}: parse error: {e}") from e
    for key in ("servers", "classes", "arrival"):
        if key not in doc:
            raise ScenarioError(f"{path}: missing top-level key {key!r}")
    arr = doc["arrival"]
    if "rate" not in arr:
        raise ScenarioError(f"{path}: arrival needs a 'rate' key")
    arrival = ArrivalProcess(arr["rate"], arr.get("family", "poisson"),
                             arr.get("k", 1))
    classes = []
    total = 0.0
    for i, c in enumerate(doc["classes"]):
        where = f"{path}: classes[{i}]"
        for key in ("demand", "probability", "service"):
            if key not in c:
                raise ScenarioError(f"{where}: missing key {key!r}")
        total += c["probability"]
        classes.append((c["demand"], c["probability"],
                        _service_from_table(c["service"], where)))
    if abs(total - 1.0) > 1e-9:
        raise ScenarioError(
            f"{path}: class probabilities sum to {total!r}, expected 1")
    job_classes = [JobClass(d, p / total, svc) for d, p, svc in classes]
    return Scenario(doc["servers"], job_classes, arrival,
                    doc.get("name", os.path.basename(path)))


def _parse_args(argv):
    p = argparse.ArgumentParser(
        prog="mjq",
        description="FCFS multiserver-job queue simulation and analysis")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario TOML file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--rate", type=float, default=None,
                        help="override the scenario arrival rate")
        sp.add_argument("--output", default=None,
                        help="output file (default: stdout)")
        sp.add_argument("--format", choices=("tabular", "structured"),
                        default="tabular")
        sp.add_argument("--manifest", default=None,
                        help="manifest file (default: <output>.manifest.json)")
        sp.add_argument("--allow-nonconverged", action="store_true")

    def sps_opts(sp):
        sp.add_argument("--replicas", type=int, default=10_000)
        sp.add_argument("--ell0", type=int, default=DEFAULT_ELL0)
        sp.add_argument("--ell-max", type=int, default=DEFAULT_ELL_MAX)
        sp.add_argument("--workers", type=int,
                        default=int(os.environ.get(_ENV_WORKERS, "1")))

    sp = sub.add_parser("sps", help="backward stationary samples")
    common(sp)
    sps_opts(sp)

    sp = sub.add_parser("metrics", help="waiting/system time statistics "
                        "from backward samples")
    common(sp)
    sps_opts(sp)
    sp.add_argument("--confidence", type=float, default=0.99)
    sp.add_argument("--percentiles", default="50,90,99",
                    help="comma-separated percentile levels")
    sp.add_argument("--histogram-bin", type=float, default=None,
                    help="export waiting-time histograms with this bin width")

    sp = sub.add_parser("stability", help="stability boundary estimate")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=None,
                    help="absolute tolerance on gamma "
                    "(default: 1%% relative)")
    sp.add_argument("--ell0", type=int, default=100_000)
    sp.add_argument("--ell-max", type=int, default=1 << 28)
    sp.add_argument("--replica", type=int, default=0)
    sp.add_argument("--method", choices=("direct", "cycle"),
                    default="direct")
    sp.add_argument("--cycles", type=int, default=100_000,
                    help="regeneration cycles for --method cycle")

    sp = sub.add_parser("forward", help="forward trajectory")
    common(sp)
    sp.add_argument("--n-jobs", type=int, default=10_000)
    sp.add_argument("--replica", type=int, default=0)

    sp = sub.add_parser("des", help="event-list simulation")
    common(sp)
    sp.add_argument("--n-jobs", type=int, default=10_000)
    sp.add_argument("--replica", type=int, default=0)

    sp = sub.add_parser("compare-ra", help="FCFS vs random-assignment "
                        "stability boundaries")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--ell0", type=int, default=100_000)
    sp.add_argument("--ell-max", type=int, default=1 << 28)
    sp.add_argument("--replica", type=int, default=0)

    return p.parse_args(argv)


def _positive(args, names):
    for n in names:
        v = getattr(args, n.replace("-", "_"))
        if v is not None and v <= 0:
            raise ScenarioError(f"--{n} must be positive, got {v}")


def _cmd_sps(args, scenario):
    _positive(args, ("replicas", "ell0", "ell-max", "workers"))
    w, ell, doub, conv = batch_sps_arrays(
        scenario, args.replicas, args.ell0, args.ell_max, args.workers,
        seed=args.seed)
    samples = palm_samples(scenario, w, seed=args.seed)
    rows = [{"replica": p.replica, "converged": bool(conv[i]),
             "ell_final": int(ell[i]), "doublings": int(doub[i]),
             "alpha0": p.alpha0,
             "waiting_time": float(p.workload[p.alpha0 - 1]),
             "system_time": float(p.workload[p.alpha0 - 1]) + p.sigma0}
            for i, p in enumerate(samples)]
    return rows, bool(conv.all())


def _cmd_metrics(args, scenario):
    _positive(args, ("replicas", "ell0", "ell-max", "workers"))
    if args.histogram_bin is not None and args.histogram_bin <= 0:
        raise ScenarioError("--histogram-bin must be positive")
    pct = [float(x) for x in args.percentiles.split(",") if x.strip()]
    w, _, _, conv = batch_sps_arrays(
        scenario, args.replicas, args.ell0, args.ell_max, args.workers,
        seed=args.seed)
    samples = palm_samples(scenario, w, seed=args.seed)
    report = summarize(samples, scenario.classes, args.confidence, pct,
                       arrival_rate=scenario.rate,
                       histogram_bin_width=args.histogram_bin)
    return report.rows(), bool(conv.all())


def _stability_rows(est, scenario):
    rows = [{"quantity": "gamma", "value": est.gamma,
             "ell": est.ell_used, "converged": est.converged},
            {"quantity": "lambda_c", "value": est.lambda_c,
             "ell": est.ell_used, "converged": est.converged},
            {"quantity": "lambda_ideal", "value": lambda_ideal(scenario),
             "ell": None, "converged": None},
            {"quantity": "saturated_waste",
             "value": saturated_waste(scenario, est.gamma),
             "ell": None, "converged": None}]
    if est.stderr is not None:
        rows.append({"quantity": "gamma_stderr", "value": est.stderr,
                     "ell": est.ell_used, "converged": None})
    for ell, g in est.history:
        rows.append({"quantity": "gamma_iterate", "value": g, "ell": ell,
                     "converged": None})
    return rows


def _cmd_stability(args, scenario):
    _positive(args, ("ell0", "ell-max", "cycles"))
    if args.epsilon is not None and args.epsilon <= 0:
        raise ScenarioError("--epsilon must be positive")
    if args.method == "cycle":
        est = gamma_global_cycle(scenario, args.replica, args.cycles,
                                 seed=args.seed)
    else:
        est = estimate_gamma(scenario, args.replica, args.epsilon,
                             args.ell0, args.ell_max, seed=args.seed)
    return _stability_rows(est, scenario), est.converged


def _cmd_forward(args, scenario):
    _positive(args, ("n-jobs",))
    traj = forward_run(scenario, args.replica, args.n_jobs, seed=args.seed)
    rows = [{"job_index": n, "alpha": int(traj.alphas[n]),
             "sigma": float(traj.sigmas[n]), "tau": float(traj.taus[n]),
             "waiting_time": float(traj.waits[n])}
            for n in range(args.n_jobs)]
    return rows, True


def _cmd_des(args, scenario):
    _positive(args, ("n-jobs",))
    traj, avg = des_run(scenario, args.replica, args.n_jobs, seed=args.seed)
    rows = [{"job_index": n, "alpha": int(traj.alphas[n]),
             "sigma": float(traj.sigmas[n]), "tau": float(traj.taus[n]),
             "waiting_time": float(traj.waits[n])}
            for n in range(args.n_jobs)]
    rows.append({"job_index": None, "alpha": None, "sigma": None,
                 "tau": None, "waiting_time": None,
                 "horizon": avg.horizon, "busy_servers": avg.busy_servers,
                 "idle_servers": avg.idle_servers,
                 "hol_idle_servers": avg.hol_idle_servers,
                 "jobs_in_system": avg.jobs_in_system})
    return rows, True


def _cmd_compare_ra(args, scenario):
    _positive(args, ("ell0", "ell-max"))
    if args.epsilon is not None and args.epsilon <= 0:
        raise ScenarioError("--epsilon must be positive")
    fcfs = estimate_gamma(scenario, args.replica, args.epsilon,
                          args.ell0, args.ell_max, seed=args.seed)
    ra = ra_gamma(scenario, args.replica, args.epsilon,
                  args.ell0, args.ell_max, seed=args.seed)
    rows = []
    for label, est in (("fcfs", fcfs), ("ra", ra)):
        rows.append({"policy": label, "gamma": est.gamma,
                     "lambda_c": est.lambda_c, "ell": est.ell_used,
                     "converged": est.converged})
    rows.append({"policy": "ra_lt_fcfs",
                 "gamma": None, "lambda_c": None, "ell": None,
                 "converged": bool(ra.lambda_c < fcfs.lambda_c)})
    return rows, fcfs.converged and ra.converged


_COMMANDS = {
    "sps": _cmd_sps,
    "metrics": _cmd_metrics,
    "stability": _cmd_stability,
    "forward": _cmd_forward,
    "des": _cmd_des,
    "compare-ra": _cmd_compare_ra,
}


def _emit_tabular(rows):
    header = []
    for r in rows:
        for k in r:
            if k not in header:
                header.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, restval="")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    raise TypeError(f"not JSON serializable: {type(o)!r}")


def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__,
           "mjq": __version__}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:
        out["numba"] = None
    return out


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.rate is not None:
            if args.rate <= 0:
                raise ScenarioError("--rate must be positive")
            scenario = scenario.with_rate(args.rate)
    except OSError as e:
        print(f"mjq: {e}", file=sys.stderr)
        return 2
    except ScenarioError as e:
        print(f"mjq: {e}", file=sys.stderr)
        return 2

    t0 = time.monotonic()
    try:
        rows, converged = _COMMANDS[args.command](args, scenario)
    except ScenarioError as e:
        print(f"mjq: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"mjq: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"mjq: {args.command} failed: {e}", file=sys.stderr)
        return 4
    wall = time.monotonic() - t0

    if args.format == "tabular":
        text = _emit_tabular(rows)
    else:
        text = json.dumps({"command": args.command, "rows": rows},
                          indent=2, default=_json_default) + "\n"

    manifest = {
        "command": args.command,
        "scenario_file": os.path.abspath(args.scenario),
        "scenario_name": scenario.name,
        "backend": get_backend().name,
        "config": {k: v for k, v in vars(args).items()
                   if k not in ("output", "manifest")},
        "versions": _versions(),
        "wall_clock_seconds": wall,
        "converged": converged,
    }

    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
        manifest_path = args.manifest or args.output + ".manifest.json"
    else:
        sys.stdout.write(text)
        manifest_path = args.manifest
    if manifest_path:
        with open(manifest_path, "w") as fh:
            json.dump(manifest, fh, indent=2, default=_json_default)
            fh.write("\n")

    if not converged and not args.allow_nonconverged:
        print("mjq: run did not converge (pass --allow-nonconverged to "
              "accept)", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
