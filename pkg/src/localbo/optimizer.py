"""The local Bayesian optimization loop.

Each iteration picks a query batch by minimizing the gradient-uncertainty
acquisition, conditions the GP on the new observations, and steps along the
negative posterior mean gradient (optionally projected onto a box, or handed
to BFGS in the noiseless mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import design as design_mod
from . import sampler
from .design import MinimizerConfig, error_bound
from .gp import ConditioningError, Dataset, GpModel, GpPosterior
from .sampler import TestFunction

CONSTANT = "constant"
D_PLUS_ONE = "d_plus_one"
D_LOG_SQ_T = "d_log_sq_t"
LINEAR_DT = "linear_dt"
QUADRATIC_DT2 = "quadratic_dt2"

GRADIENT_DESCENT = "gradient_descent"
BFGS_HANDOFF = "bfgs_handoff"


@dataclass(frozen=True)
class BatchSchedule:
    kind: str
    b: int | None = None  # for constant schedules

    def batch_size(self, t: int, d: int) -> int:
        if self.kind == CONSTANT:
            if self.b is None or self.b < 1:
                raise ValueError("constant schedule needs b >= 1")
            return self.b
        if self.kind == D_PLUS_ONE:
            return d + 1
        if self.kind == D_LOG_SQ_T:
            return max(1, math.ceil(d * math.log(t) ** 2))
        if self.kind == LINEAR_DT:
            return d * t
        if self.kind == QUADRATIC_DT2:
            return d * t * t
        raise ValueError(f"unknown schedule kind {self.kind!r}")


@dataclass
class RunConfig:
    T: int
    budget_n: int
    L: float
    schedule: BatchSchedule
    x1: np.ndarray
    delta: float = 0.1
    domain: tuple[np.ndarray, np.ndarray] | None = None  # (lo, hi)
    mode: str = GRADIENT_DESCENT
    seed: int = 0
    grad_tol: float = 1e-6  # noiseless stopping tolerance
    acq: MinimizerConfig = field(default_factory=MinimizerConfig)
    window_batches: int | None = None  # keep only the last W batches if set

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        self.x1 = np.atleast_1d(np.asarray(self.x1, dtype=float))


@dataclass
class IterRecord:
    t: int
    x: np.ndarray
    b: int
    est_grad: np.ndarray
    trace: float
    n_cum: int
    y_best: float
    C_t: float
    true_grad_norm: float | None = None


@dataclass
class RunTrace:
    records: list[IterRecord] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    error: str | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def n_total(self) -> int:
        return self.records[-1].n_cum if self.records else 0

    @property
    def y_best(self) -> float:
        return self.records[-1].y_best if self.records else np.inf


def project_box(x, lo, hi) -> np.ndarray:
    """Euclidean projection onto the box [lo, hi]: a componentwise clamp."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("box must satisfy lo <= hi componentwise")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def gradient_mapping(x, grad, eta: float, lo, hi) -> np.ndarray:
    """G(x) = (x - proj(x - eta * grad)) / eta; reduces to grad for interior
    steps and never exceeds it in norm."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    x = np.asarray(x, dtype=float)
    return (x - project_box(x - eta * np.asarray(grad, dtype=float), lo, hi)) / eta


def c_t(t: int, delta: float) -> float:
    """Union-bound confidence factor 2 log((pi^2 / 6) (t^2 / delta))."""
    return 2.0 * math.log((math.pi**2 / 6.0) * (t * t / delta))


def estimate_smoothness(
    path: sampler.SamplePath,
    halfwidth: float = 3.0,
    n_points: int = 10_000,
    safety: float = 1.5,
    seed: int = 0,
) -> float:
    """Conservative smoothness constant: max Hessian spectral norm over
    random domain points, inflated by a safety factor."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-halfwidth, halfwidth, size=(n_points, path.d))
    H = path.hessians(X)
    eig = np.linalg.eigvalsh(H)
    return safety * float(np.max(np.abs(eig)))


def run_local_bo(fn: TestFunction, model: GpModel, cfg: RunConfig) -> RunTrace:
    """Run the local BO loop and record one IterRecord per iteration."""
    rng = np.random.default_rng(cfg.seed)
    d = cfg.x1.shape[-1]
    x = cfg.x1.copy()
    data = Dataset.empty(d)
    batch_starts: list[int] = []
    trace = RunTrace(
        meta={
            "mode": cfg.mode,
            "d": d,
            "noise_sd": fn.noise_sd,
            "well_specified": fn.kind == sampler.PATH
            and fn.path.kernel is model.kernel,
        }
    )
    n_cum = 0
    y_best = np.inf
    eta = 1.0 / cfg.L

    # BFGS handoff state
    H_inv = np.eye(d)
    prev_x = None
    prev_g = None

    has_oracle = fn.kind in (sampler.PATH, sampler.QUADRATIC)

    for t in range(1, cfg.T + 1):
        b_t = cfg.schedule.batch_size(t, d)
        b_t = min(b_t, cfg.budget_n - n_cum)
        if b_t < 1:
            break
        try:
            window = data
            if cfg.window_batches is not None and len(batch_starts) > cfg.window_batches:
                start = batch_starts[-cfg.window_batches]
                window = Dataset(data.X[start:], data.y[start:])
            des = design_mod.minimize_acquisition(model, window, x, b_t, cfg.acq, rng)
            y_new = sampler.query_batch(fn, des.Z, rng)
            batch_starts.append(data.n)
            data = data.append(des.Z, y_new)
            n_cum += b_t
            y_best = min(y_best, float(np.min(y_new)))
            window = data
            if cfg.window_batches is not None and len(batch_starts) > cfg.window_batches:
                start = batch_starts[-cfg.window_batches]
                window = Dataset(data.X[start:], data.y[start:])
            post = GpPosterior(model, window)
            g, cov = post.grad(x)
        except ConditioningError as exc:
            trace.error = str(exc)
            break
        rec = IterRecord(
            t=t,
            x=x.copy(),
            b=b_t,
            est_grad=g.copy(),
            trace=float(np.trace(cov)),
            n_cum=n_cum,
            y_best=y_best,
            C_t=c_t(t, cfg.delta),
            true_grad_norm=float(np.linalg.norm(sampler.true_grad(fn, x)))
            if has_oracle
            else None,
        )
        trace.records.append(rec)

        if cfg.mode == BFGS_HANDOFF:
            if fn.noise_sd > 0:
                raise ValueError("BFGS handoff supports the noiseless mode only")
            if np.linalg.norm(g) < cfg.grad_tol:
                break
            if prev_g is not None:
                s = x - prev_x
                yv = g - prev_g
                sy = float(s @ yv)
                if sy > 1e-12:
                    rho = 1.0 / sy
                    I = np.eye(d)
                    V = I - rho * np.outer(s, yv)
                    H_inv = V @ H_inv @ V.T + rho * np.outer(s, s)
            prev_x, prev_g = x.copy(), g.copy()
            p = -H_inv @ g
            if float(p @ g) >= 0:  # safeguard: fall back to steepest descent
                p = -g
                H_inv = np.eye(d)
            x, data, n_cum, y_best = _backtracking_step(
                fn, x, p, g, data, n_cum, y_best, cfg, rng
            )
            if n_cum >= cfg.budget_n:
                break
        else:
            step = x - eta * g
            if cfg.domain is not None:
                step = project_box(step, *cfg.domain)
            x = step
            if fn.noise_sd == 0.0 and np.linalg.norm(g) < cfg.grad_tol:
                break
    return trace


def _backtracking_step(fn, x, p, g, data, n_cum, y_best, cfg, rng):
    """Armijo backtracking on (noiseless) function queries; every evaluation
    counts against the budget and is added to the training data."""
    f0 = sampler.query(fn, x, rng)
    n_cum += 1
    data = data.append(x[None, :], [f0])
    y_best = min(y_best, f0)
    gp = float(g @ p)
    a = 1.0
    for _ in range(25):
        if n_cum >= cfg.budget_n:
            break
        cand = x + a * p
        if cfg.domain is not None:
            cand = project_box(cand, *cfg.domain)
        fc = sampler.query(fn, cand, rng)
        n_cum += 1
        data = data.append(cand[None, :], [fc])
        y_best = min(y_best, fc)
        if fc <= f0 + 1e-4 * a * gp:
            return cand, data, n_cum, y_best
        a *= 0.5
    return x, data, n_cum, y_best


def rate_reference(
    kind: str,
    T: int,
    L: float,
    gap: float,
    schedule: BatchSchedule,
    d: int,
    kernel=None,
    sigma: float = 0.0,
    B: float = 1.0,
    delta: float = 0.1,
) -> np.ndarray:
    """Theoretical right-hand-side curve for min squared gradient norm.

    'noiseless_rkhs': 2 L gap / T + B^2 E(b);
    'noisy_general':  2 L gap / T + (1/T) sum_t C_t E(b_t),
    with E replaced by its analytic upper bound.
    """
    ts = np.arange(1, T + 1)
    base = 2.0 * L * max(gap, 0.0) / ts
    if kind == "noiseless_rkhs":
        bias = np.array(
            [error_bound(kernel, d, 0.0, schedule.batch_size(t, d)) for t in ts]
        )
        return base + B**2 * bias
    if kind == "noisy_general":
        terms = np.array(
            [
                c_t(t, delta) * error_bound(kernel, d, sigma, schedule.batch_size(t, d))
                for t in ts
            ]
        )
        return base + np.cumsum(terms) / ts
    raise ValueError(f"unknown rate reference kind {kind!r}")
