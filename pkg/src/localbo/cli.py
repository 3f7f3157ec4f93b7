"""Experiment runner.

Each subcommand is a pure function of (config, base seed) to CSV bytes on
disk: trial seeds are derived by hashing, parallel workers only change wall
time, and every float is serialized with 17 significant digits.  A
manifest.json records the config echo, seed, package versions and timing.

Config files are INI-style with one flat section per experiment; `--set
key=value` overrides individual keys.  Exit codes: 0 success, 2 config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import baselines, design as design_mod, optimizer, sampler
from .gp import ConditioningError, Dataset, GpModel, GpPosterior
from .kernels import StationaryKernel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    """Invalid configuration; message names the offending field."""


# ---------------------------------------------------------------------------
# Configuration

DEFAULTS = {
    "fig1": {
        "dims": "1,5,10",
        "sigmas": "0,0.05",
        "trials": "10",
        "budget": "1000",
        "kernel": "rbf",
        "lengthscale": "1.0",
        "outputscale": "1.0",
        "features": "4096",
        "methods": "local_bo,gp_ucb,random",
        "box_scale": "5.0",
        "ucb_starts": "5",
        "ucb_iters": "10",
        "acq_random": "0",
        "acq_iters": "0",
        "smooth_points": "2000",
        "grad_tol": "1e-6",
    },
    "error_function": {
        "kernel": "matern25",
        "sigma": "0.2",
        "d_fixed": "10",
        "b_sweep": "20,50,100,200,500",
        "b_fixed": "500",
        "d_sweep": "5,10,20,40",
        "lengthscale": "1.0",
        "max_iters": "150",
        "n_random": "2",
    },
    "rate_check": {
        "kernel": "rbf",
        "d": "5",
        "lengthscale": "1.0",
        "t_noiseless": "100",
        "seeds_noiseless": "20",
        "sigma_noisy": "0.05",
        "schedules_noisy": "linear_dt,quadratic_dt2",
        "budget_noisy": "2000",
        "seeds_noisy": "10",
        "gap_margin": "5.0",
        "features": "4096",
        "smooth_points": "2000",
    },
    "restarts": {
        "d": "5",
        "path_seeds": "5",
        "restarts": "20",
        "budget_per_restart": "400",
        "kernel": "rbf",
        "lengthscale": "1.0",
        "start_halfwidth": "3.0",
        "features": "4096",
        "smooth_points": "2000",
    },
    "subgradient": {
        "objectives": "relu,l1,quadratic",
        "sigma": "0.01",
        "ns": "2,4,5,6,10",
        "lengthscale": "0.3",
    },
    "bound_tables": {
        "kernels": "rbf,matern25",
        "dims": "1,2,5,10",
        "ms": "1,2,5,10,100",
        "sigmas": "0,0.05,0.2,1",
        "hs": "0.05,0.1,0.2,0.5",
    },
}

FULL_OVERRIDES = {
    "fig1": {"dims": "1,5,10,20,30,50", "sigmas": "0,0.05,0.2", "trials": "50",
             "budget": "5000"},
    "restarts": {"restarts": "100", "path_seeds": "10"},
}


def load_config(experiment: str, path: str | None, overrides, full: bool) -> dict:
    cfg = dict(DEFAULTS[experiment])
    if full and experiment in FULL_OVERRIDES:
        cfg.update(FULL_OVERRIDES[experiment])
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        if parser.has_section(experiment):
            for key, val in parser.items(experiment):
                if key not in cfg:
                    raise ConfigError(
                        f"[{experiment}] has no key {key!r} "
                        f"(known: {', '.join(sorted(cfg))})"
                    )
                cfg[key] = val
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, val = item.partition("=")
        if key not in cfg:
            raise ConfigError(
                f"unknown key {key!r} for {experiment} "
                f"(known: {', '.join(sorted(cfg))})"
            )
        cfg[key] = val
    return cfg


def _ints(cfg, key):
    try:
        vals = [int(v) for v in cfg[key].split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected integers, got {cfg[key]!r}") from exc
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def _floats(cfg, key):
    try:
        vals = [float(v) for v in cfg[key].split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{key}: expected numbers, got {cfg[key]!r}") from exc
    if not vals:
        raise ConfigError(f"{key}: empty list")
    return vals


def _int(cfg, key, minimum=None):
    try:
        val = int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from exc
    if minimum is not None and val < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {val}")
    return val


def _float(cfg, key):
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {cfg[key]!r}") from exc


def derive_seed(base: int, experiment: str, d, sigma, trial) -> int:
    """Stable per-trial seed; adding trials never reshuffles existing ones."""
    key = f"{base}|{experiment}|{d}|{sigma}|{trial}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


# ---------------------------------------------------------------------------
# CSV / manifest plumbing


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_manifest(out_dir: Path, command, cfg, seed, outputs, t0):
    versions = {"python": sys.version.split()[0]}
    for pkg in ("numpy", "scipy", "torch"):
        try:
            versions[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            pass
    record = {
        "command": command,
        "config": cfg,
        "seed": seed,
        "versions": versions,
        "outputs": outputs,
        "wall_time_s": round(time.time() - t0, 3),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)


def _run_tasks(worker, tasks, jobs):
    """Map worker over tasks, optionally in parallel; order preserved."""
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks))


def _loglog_slope(xs, ys) -> float:
    xs = np.log(np.asarray(xs, dtype=float))
    ys = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# fig1


def _fig1_task(task):
    cfg, method, d, sigma, trial, base_seed = task
    seed = derive_seed(base_seed, "fig1", d, sigma, trial)
    kern = StationaryKernel(
        cfg["kernel"], _float(cfg, "lengthscale"), _float(cfg, "outputscale")
    )
    path = sampler.draw_path(kern, d, _int(cfg, "features", 1), seed)
    fn = sampler.TestFunction(sampler.PATH, noise_sd=sigma, path=path)
    budget = _int(cfg, "budget", 1)
    s_out = math.sqrt(kern.outputscale)
    halfwidth = _float(cfg, "box_scale") * math.sqrt(d)
    lo, hi = -halfwidth * np.ones(d), halfwidth * np.ones(d)

    if method == "local_bo":
        L = optimizer.estimate_smoothness(
            path, n_points=_int(cfg, "smooth_points", 10), seed=seed + 1
        )
        run_cfg = optimizer.RunConfig(
            T=budget,
            budget_n=budget,
            L=L,
            schedule=optimizer.BatchSchedule(optimizer.D_PLUS_ONE),
            x1=np.zeros(d),
            mode=optimizer.BFGS_HANDOFF if sigma == 0 else optimizer.GRADIENT_DESCENT,
            seed=seed,
            grad_tol=_float(cfg, "grad_tol"),
            acq=design_mod.MinimizerConfig(
                n_random=_int(cfg, "acq_random", 0),
                max_iters=_int(cfg, "acq_iters", 0),
                seed=seed,
            ),
        )
        trace = optimizer.run_local_bo(fn, GpModel(kern, noise_sd=sigma), run_cfg)
        centers = np.array([r.x for r in trace.records])
        final = float(np.min(fn.values(centers)))
        if sigma == 0:
            final = min(final, trace.y_best)
    elif method == "gp_ucb":
        trace = baselines.run_gp_ucb(
            fn,
            GpModel(kern, noise_sd=sigma),
            budget,
            lo,
            hi,
            seed=seed,
            n_starts=_int(cfg, "ucb_starts", 1),
            n_iters=_int(cfg, "ucb_iters", 1),
        )
        X = np.array([r.x for r in trace.records])
        final = float(np.min(fn.values(X)))
    elif method == "random":
        trace = baselines.run_random_search(fn, budget, lo, hi, seed=seed)
        X = np.array([r.x for r in trace.records])
        final = float(np.min(fn.values(X)))
    else:
        raise ConfigError(f"methods: unknown method {method!r}")
    _, log10_n = baselines.equivalent_grid_size(final, s_out)
    return [
        "fig1-v1",
        method,
        d,
        sigma,
        trial,
        final,
        log10_n,
        trace.n_total,
        seed,
    ]


def cmd_fig1(cfg, out_dir: Path, base_seed: int, jobs: int):
    dims = _ints(cfg, "dims")
    sigmas = _floats(cfg, "sigmas")
    trials = _int(cfg, "trials", 1)
    if any(d < 1 for d in dims):
        raise ConfigError("dims: all entries must be >= 1")
    methods = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    for m in methods:
        if m not in ("local_bo", "gp_ucb", "random"):
            raise ConfigError(f"methods: unknown method {m!r}")
    tasks = [
        (cfg, method, d, sigma, trial, base_seed)
        for method in methods
        for d in dims
        for sigma in sigmas
        for trial in range(trials)
    ]
    rows = _run_tasks(_fig1_task, tasks, jobs)
    rows.sort(key=lambda r: (r[1], r[2], r[3], r[4]))
    header = [
        "schema",
        "method",
        "d",
        "sigma",
        "trial",
        "final_value",
        "log10_grid_size",
        "queries",
        "seed",
    ]
    path = out_dir / "fig1.csv"
    write_csv(path, header, rows)
    return [path.name]


# ---------------------------------------------------------------------------
# error-function


def _error_function_task(task):
    cfg, sweep, d, b, base_seed = task
    sigma = _float(cfg, "sigma")
    kern = StationaryKernel(cfg["kernel"], _float(cfg, "lengthscale"))
    seed = derive_seed(base_seed, "error_function", d, sigma, b)
    ecfg = design_mod.ErrorFunctionConfig(
        n_random=_int(cfg, "n_random", 0),
        max_iters=_int(cfg, "max_iters", 1),
        seed=seed,
    )
    emp = design_mod.error_function_empirical(kern, d, sigma, b, ecfg)
    bound = design_mod.error_bound(kern, d, sigma, b)
    return ["ef-v1", "point", sweep, cfg["kernel"], d, sigma, b, emp, bound, "", ""]


def cmd_error_function(cfg, out_dir: Path, base_seed: int, jobs: int):
    d_fixed = _int(cfg, "d_fixed", 1)
    b_fixed = _int(cfg, "b_fixed", 1)
    tasks = [(cfg, "b", d_fixed, b, base_seed) for b in _ints(cfg, "b_sweep")]
    tasks += [(cfg, "d", d, b_fixed, base_seed) for d in _ints(cfg, "d_sweep")]
    rows = _run_tasks(_error_function_task, tasks, jobs)
    rows.sort(key=lambda r: (r[2], r[4], r[6]))

    # summary rows: fitted log-log slopes of each sweep
    slope_rows = []
    for sweep, xi in (("b", 6), ("d", 4)):
        pts = [r for r in rows if r[2] == sweep]
        xs = [r[xi] for r in pts]
        emp_slope = _loglog_slope(xs, [r[7] for r in pts])
        bnd_slope = _loglog_slope(xs, [r[8] for r in pts])
        slope_rows.append(
            ["ef-v1", "slope", sweep, cfg["kernel"], "", _float(cfg, "sigma"), "",
             "", "", emp_slope, bnd_slope]
        )
    header = [
        "schema",
        "row_type",
        "sweep",
        "kernel",
        "d",
        "sigma",
        "b",
        "empirical",
        "bound",
        "slope_empirical",
        "slope_bound",
    ]
    path = out_dir / "error_function.csv"
    write_csv(path, header, rows + slope_rows)
    return [path.name]


# ---------------------------------------------------------------------------
# rate-check


def _rate_noiseless_task(task):
    cfg, seed_idx, base_seed = task
    d = _int(cfg, "d", 1)
    kern = StationaryKernel(cfg["kernel"], _float(cfg, "lengthscale"))
    seed = derive_seed(base_seed, "rate_check", d, 0.0, seed_idx)
    path = sampler.draw_path(kern, d, _int(cfg, "features", 1), seed)
    fn = sampler.TestFunction(sampler.PATH, noise_sd=0.0, path=path)
    L = optimizer.estimate_smoothness(
        path, n_points=_int(cfg, "smooth_points", 10), seed=seed + 1
    )
    T = _int(cfg, "t_noiseless", 1)
    sched = optimizer.BatchSchedule(optimizer.D_PLUS_ONE)
    run_cfg = optimizer.RunConfig(
        T=T,
        budget_n=T * (d + 1),
        L=L,
        schedule=sched,
        x1=np.zeros(d),
        mode=optimizer.GRADIENT_DESCENT,
        seed=seed,
        grad_tol=0.0,
        acq=design_mod.MinimizerConfig(n_random=0, max_iters=0, seed=seed),
    )
    trace = optimizer.run_local_bo(fn, GpModel(kern), run_cfg)
    gap = float(fn.value(np.zeros(d))) + _float(cfg, "gap_margin") * math.sqrt(
        kern.outputscale
    )
    ref = optimizer.rate_reference("noiseless_rkhs", T, L, gap, sched, d, kern)
    gnorm2 = trace.column("true_grad_norm") ** 2
    running = np.minimum.accumulate(gnorm2)
    return [
        ["rate-v1", cfg["kernel"], 0.0, "d_plus_one", seed_idx, r.t, r.n_cum,
         float(running[i]), float(ref[r.t - 1])]
        for i, r in enumerate(trace.records)
    ]


def _rate_noisy_task(task):
    cfg, sched_kind, seed_idx, base_seed = task
    d = _int(cfg, "d", 1)
    sigma = _float(cfg, "sigma_noisy")
    kern = StationaryKernel(cfg["kernel"], _float(cfg, "lengthscale"))
    seed = derive_seed(base_seed, "rate_check", d, sigma, f"{sched_kind}-{seed_idx}")
    path = sampler.draw_path(kern, d, _int(cfg, "features", 1), seed)
    fn = sampler.TestFunction(sampler.PATH, noise_sd=sigma, path=path)
    L = optimizer.estimate_smoothness(
        path, n_points=_int(cfg, "smooth_points", 10), seed=seed + 1
    )
    budget = _int(cfg, "budget_noisy", 1)
    sched = optimizer.BatchSchedule(sched_kind)
    run_cfg = optimizer.RunConfig(
        T=budget,
        budget_n=budget,
        L=L,
        schedule=sched,
        x1=np.zeros(d),
        mode=optimizer.GRADIENT_DESCENT,
        seed=seed,
        grad_tol=0.0,
        acq=design_mod.MinimizerConfig(n_random=0, max_iters=0, seed=seed),
    )
    trace = optimizer.run_local_bo(fn, GpModel(kern, noise_sd=sigma), run_cfg)
    T_eff = len(trace.records)
    gap = float(fn.value(np.zeros(d))) + _float(cfg, "gap_margin") * math.sqrt(
        kern.outputscale
    )
    ref = optimizer.rate_reference(
        "noisy_general", max(T_eff, 1), L, gap, sched, d, kern, sigma=sigma
    )
    gnorm2 = trace.column("true_grad_norm") ** 2
    running = np.minimum.accumulate(gnorm2)
    return [
        ["rate-v1", cfg["kernel"], sigma, sched_kind, seed_idx, r.t, r.n_cum,
         float(running[i]), float(ref[r.t - 1])]
        for i, r in enumerate(trace.records)
    ]


def cmd_rate_check(cfg, out_dir: Path, base_seed: int, jobs: int):
    tasks0 = [
        (cfg, i, base_seed) for i in range(_int(cfg, "seeds_noiseless", 1))
    ]
    schedules = [s.strip() for s in cfg["schedules_noisy"].split(",") if s.strip()]
    valid = {
        optimizer.CONSTANT,
        optimizer.D_PLUS_ONE,
        optimizer.D_LOG_SQ_T,
        optimizer.LINEAR_DT,
        optimizer.QUADRATIC_DT2,
    }
    for s in schedules:
        if s not in valid:
            raise ConfigError(f"schedules_noisy: unknown schedule {s!r}")
    tasksn = [
        (cfg, s, i, base_seed)
        for s in schedules
        for i in range(_int(cfg, "seeds_noisy", 0))
    ]
    chunks = _run_tasks(_rate_noiseless_task, tasks0, jobs)
    chunks += _run_tasks(_rate_noisy_task, tasksn, jobs)
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r[2], r[3], r[4], r[5]))
    header = [
        "schema",
        "kernel",
        "sigma",
        "schedule",
        "seed_idx",
        "t",
        "n_cum",
        "min_grad_norm_sq",
        "reference",
    ]
    path = out_dir / "rate_check.csv"
    write_csv(path, header, rows)
    return [path.name]


# ---------------------------------------------------------------------------
# restarts


def _restarts_task(task):
    cfg, path_seed, base_seed = task
    d = _int(cfg, "d", 1)
    kern = StationaryKernel(cfg["kernel"], _float(cfg, "lengthscale"))
    seed0 = derive_seed(base_seed, "restarts", d, 0.0, path_seed)
    path = sampler.draw_path(kern, d, _int(cfg, "features", 1), seed0)
    fn = sampler.TestFunction(sampler.PATH, noise_sd=0.0, path=path)
    L = optimizer.estimate_smoothness(
        path, n_points=_int(cfg, "smooth_points", 10), seed=seed0 + 1
    )
    rng = np.random.default_rng(seed0)
    halfwidth = _float(cfg, "start_halfwidth")
    budget = _int(cfg, "budget_per_restart", 1)
    rows = []
    best = np.inf
    for r in range(1, _int(cfg, "restarts", 1) + 1):
        x1 = rng.uniform(-halfwidth, halfwidth, size=d)
        run_cfg = optimizer.RunConfig(
            T=budget,
            budget_n=budget,
            L=L,
            schedule=optimizer.BatchSchedule(optimizer.D_PLUS_ONE),
            x1=x1,
            mode=optimizer.BFGS_HANDOFF,
            seed=seed0 + r,
            acq=design_mod.MinimizerConfig(n_random=0, max_iters=0, seed=seed0 + r),
        )
        trace = optimizer.run_local_bo(fn, GpModel(kern), run_cfg)
        final = trace.y_best
        best = min(best, final)
        rows.append(["restarts-v1", path_seed, r, final, best])
    return rows


def cmd_restarts(cfg, out_dir: Path, base_seed: int, jobs: int):
    tasks = [(cfg, s, base_seed) for s in range(_int(cfg, "path_seeds", 1))]
    chunks = _run_tasks(_restarts_task, tasks, jobs)
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r[1], r[2]))
    header = ["schema", "path_seed", "restart", "final_value", "best_so_far"]
    path = out_dir / "restarts.csv"
    write_csv(path, header, rows)
    return [path.name]


# ---------------------------------------------------------------------------
# subgradient

_SUBGRADIENT_POINTS = {
    "relu": (sampler.RELU_1D, np.array([0.0])),
    "l1": (sampler.L1_NORM, np.array([0.0, 1.0])),
    "quadratic": (sampler.QUADRATIC, np.array([0.0, 1.0])),
}


def _subdiff_distance(objective: str, x0: np.ndarray, g: np.ndarray) -> float:
    """Euclidean distance from g to the subdifferential at x0."""
    if objective == "relu":
        return max(0.0, float(g[0]) - 1.0, -float(g[0]))
    if objective == "l1":
        # at (0, 1): [-1, 1] x {1}
        d1 = max(0.0, abs(float(g[0])) - 1.0)
        return math.hypot(d1, float(g[1]) - 1.0)
    if objective == "quadratic":
        return float(np.linalg.norm(g - x0))
    raise ConfigError(f"objectives: unknown objective {objective!r}")


def _subgradient_task(task):
    cfg, objective, n, base_seed = task
    if objective not in _SUBGRADIENT_POINTS:
        raise ConfigError(f"objectives: unknown objective {objective!r}")
    kind, x0 = _SUBGRADIENT_POINTS[objective]
    d = x0.shape[0]
    sigma = _float(cfg, "sigma")
    seed = derive_seed(base_seed, "subgradient", d, sigma, f"{objective}-{n}")
    rng = np.random.default_rng(seed)
    kern = StationaryKernel("rbf", _float(cfg, "lengthscale"))
    model = GpModel(kern, noise_sd=sigma)
    fn = sampler.TestFunction(kind, noise_sd=sigma)
    des = design_mod.minimize_acquisition(
        model, Dataset.empty(d), x0, n, design_mod.MinimizerConfig(seed=seed), rng
    )
    y = sampler.query_batch(fn, des.Z, rng)
    post = GpPosterior(model, Dataset(des.Z, y))
    g, _ = post.grad(x0)
    g2 = float(g[1]) if d > 1 else ""
    x2 = float(x0[1]) if d > 1 else ""
    dist = _subdiff_distance(objective, x0, g)
    return [
        "subgrad-v1", objective, sigma, n, float(x0[0]), x2, float(g[0]), g2,
        dist, seed,
    ]


def cmd_subgradient(cfg, out_dir: Path, base_seed: int, jobs: int):
    objectives = [o.strip() for o in cfg["objectives"].split(",") if o.strip()]
    tasks = [
        (cfg, o, n, base_seed) for o in objectives for n in _ints(cfg, "ns")
    ]
    rows = _run_tasks(_subgradient_task, tasks, jobs)
    rows.sort(key=lambda r: (r[1], r[3]))
    header = [
        "schema", "objective", "sigma", "n", "x1", "x2", "g1", "g2",
        "dist_subdifferential", "seed",
    ]
    path = out_dir / "subgradient.csv"
    write_csv(path, header, rows)
    return [path.name]


# ---------------------------------------------------------------------------
# bound-tables


def cmd_bound_tables(cfg, out_dir: Path, base_seed: int, jobs: int):
    rows = []
    for family in [k.strip() for k in cfg["kernels"].split(",") if k.strip()]:
        kern = StationaryKernel(family)
        for d in _ints(cfg, "dims"):
            for m in _ints(cfg, "ms"):
                for sigma in _floats(cfg, "sigmas"):
                    for h in _floats(cfg, "hs"):
                        b = 2 * m * d
                        noiseless = design_mod.bound_noiseless(kern, d, b)
                        lam = tay = mat = ""
                        ok = ""
                        if family == "rbf":
                            lam = design_mod.bound_rbf_lambert(d, m, sigma)
                            tay = design_mod.bound_rbf_taylor(d, m, sigma)
                            ok = int(lam <= tay + 1e-12)
                        else:
                            mat = design_mod.bound_matern(d, m, sigma)
                        central = design_mod.central_trace_bound(kern, d, m, h, sigma)
                        forward = design_mod.forward_trace_bound(kern, d, m, h, sigma)
                        rows.append(
                            ["bounds-v1", family, d, m, sigma, h, b, noiseless,
                             lam, tay, mat, central, forward, ok]
                        )
    header = [
        "schema", "kernel", "d", "m", "sigma", "h", "b", "bound_noiseless",
        "bound_lambert", "bound_taylor", "bound_matern", "central_trace_bound",
        "forward_trace_bound", "lambert_le_taylor",
    ]
    path = out_dir / "bound_tables.csv"
    write_csv(path, header, rows)
    return [path.name]


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "fig1": ("fig1", cmd_fig1),
    "error-function": ("error_function", cmd_error_function),
    "rate-check": ("rate_check", cmd_rate_check),
    "restarts": ("restarts", cmd_restarts),
    "subgradient": ("subgradient", cmd_subgradient),
    "bound-tables": ("bound_tables", cmd_bound_tables),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="localbo", description="Run local BO experiments and emit CSVs."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument(
            "--set", action="append", default=[], metavar="K=V",
            help="override a single config key",
        )
        p.add_argument("--out", default="results", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base seed")
        p.add_argument(
            "--full", action="store_true",
            help="use the full-scale experiment grid (hours of compute)",
        )
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    section, fn = COMMANDS[args.command]
    t0 = time.time()
    try:
        cfg = load_config(section, args.config, args.set, args.full)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = fn(cfg, out_dir, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConditioningError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_manifest(out_dir, args.command, cfg, args.seed, outputs, t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
