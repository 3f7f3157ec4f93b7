"""Global-method baselines and grid-search order statistics.

GP-UCB is run as a lower-confidence-bound minimizer; random search queries
uniformly.  The expected-extreme bound s sqrt(2 log n) converts objective
values into equivalent grid-search sample counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import kernels, sampler
from .gp import ConditioningError, GpModel
from .optimizer import IterRecord, RunTrace
from .sampler import TestFunction


def expected_extreme_bound(s: float, n: int) -> float:
    """Upper bound s sqrt(2 ln n) on the expected maximum of n (possibly
    correlated) Gaussians with marginal standard deviation s."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if s <= 0:
        raise ValueError("s must be positive")
    return s * math.sqrt(2.0 * math.log(n))


def equivalent_grid_size(v: float, s: float) -> tuple[float, float]:
    """Smallest grid size n whose expected-extreme bound reaches |v|.

    Returns (n, log10 n); n may be astronomically large, hence the log form.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    if v >= 0:
        return 1.0, 0.0
    log_n = v * v / (2.0 * s * s)  # natural log
    log10_n = log_n / math.log(10.0)
    n = math.exp(log_n) if log_n < 700 else math.inf
    return n, log10_n


def default_beta(t: int, d: int, delta: float = 0.1) -> float:
    """Standard UCB confidence schedule 2 ln(d t^2 pi^2 / (6 delta))."""
    return 2.0 * math.log(d * t * t * math.pi**2 / (6.0 * delta))


@dataclass
class _IncrementalGp:
    """GP with O(n^2) per-point Cholesky updates for sequential baselines."""

    model: GpModel

    def __post_init__(self):
        self.X = None
        self.y = None
        self.L = None
        self.alpha = None

    @property
    def n(self) -> int:
        return 0 if self.X is None else self.X.shape[0]

    def add(self, x: np.ndarray, y: float):
        k = self.model.kernel
        s2 = self.model.noise_sd**2 + 1e-8 * k.outputscale
        if self.X is None:
            self.X = x[None, :].copy()
            self.y = np.array([y])
            self.L = np.array([[math.sqrt(k.outputscale + s2)]])
        else:
            kx = kernels.gram(k, self.X, x[None, :])[:, 0]
            l = solve_triangular(self.L, kx, lower=True)
            diag = k.outputscale + s2 - float(l @ l)
            diag = max(diag, 1e-10 * k.outputscale)
            n = self.n
            Lnew = np.zeros((n + 1, n + 1))
            Lnew[:n, :n] = self.L
            Lnew[n, :n] = l
            Lnew[n, n] = math.sqrt(diag)
            self.L = Lnew
            self.X = np.vstack([self.X, x])
            self.y = np.append(self.y, y)
        self.alpha = solve_triangular(
            self.L.T, solve_triangular(self.L, self.y - self.model.mean, lower=True)
        )

    def mean_sd_grad(self, X: np.ndarray):
        """Posterior mean/sd and their gradients at row-stacked points."""
        k = self.model.kernel
        q, d = X.shape
        prior = k.outputscale
        if self.X is None:
            return (
                np.full(q, self.model.mean),
                np.full(q, math.sqrt(prior)),
                np.zeros((q, d)),
                np.zeros((q, d)),
            )
        Kx = kernels.gram(k, self.X, X)  # (n, q)
        V = solve_triangular(self.L, Kx, lower=True)
        mu = self.model.mean + Kx.T @ self.alpha
        var = np.maximum(prior - np.sum(V * V, axis=0), 1e-12)
        sd = np.sqrt(var)
        G = np.stack([kernels.grad1_matrix(k, x, self.X) for x in X])  # (q, d, n)
        dmu = G @ self.alpha
        W = solve_triangular(
            self.L.T, solve_triangular(self.L, Kx, lower=True)
        )  # K^-1 Kx, (n, q)
        dvar = -2.0 * np.einsum("qdn,nq->qd", G, W)
        dsd = dvar / (2.0 * sd)[:, None]
        return mu, sd, dmu, dsd


def _minimize_lcb(gp: _IncrementalGp, beta: float, lo, hi, n_starts, n_iters, rng):
    """Vectorized multi-start projected gradient descent on the LCB."""
    d = lo.shape[0]
    sb = math.sqrt(beta)
    starts = [0.5 * (lo + hi)]
    if gp.X is not None:
        starts.append(gp.X[int(np.argmin(gp.y))])
    while len(starts) < n_starts:
        starts.append(rng.uniform(lo, hi))
    P = np.array(starts[:n_starts])
    mu, sd, dmu, dsd = gp.mean_sd_grad(P)
    val = mu - sb * sd
    lr = np.full(P.shape[0], 0.2 * float(np.min(hi - lo)) / max(1.0, math.sqrt(d)))
    for _ in range(n_iters):
        grad = dmu - sb * dsd
        cand = np.clip(P - lr[:, None] * grad, lo, hi)
        mu_c, sd_c, dmu_c, dsd_c = gp.mean_sd_grad(cand)
        val_c = mu_c - sb * sd_c
        better = val_c < val
        P[better] = cand[better]
        val[better] = val_c[better]
        dmu[better] = dmu_c[better]
        dsd[better] = dsd_c[better]
        lr[~better] *= 0.5
        lr[better] *= 1.1
        if np.all(lr < 1e-8):
            break
    i = int(np.argmin(val))
    return P[i]


def run_gp_ucb(
    fn: TestFunction,
    model: GpModel,
    budget: int,
    lo,
    hi,
    seed: int = 0,
    beta_fn=default_beta,
    n_starts: int = 8,
    n_iters: int = 30,
    delta: float = 0.1,
) -> RunTrace:
    """Sequential LCB minimization over a box; records best-so-far."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.shape[0]
    rng = np.random.default_rng(seed)
    gp = _IncrementalGp(model)
    trace = RunTrace(meta={"method": "gp_ucb", "d": d})
    y_best = np.inf
    for t in range(1, budget + 1):
        beta = beta_fn(t, d, delta) if beta_fn is default_beta else beta_fn(t, d)
        try:
            x = _minimize_lcb(gp, beta, lo, hi, n_starts, n_iters, rng)
            y = sampler.query(fn, x, rng)
            gp.add(x, y)
        except (ConditioningError, np.linalg.LinAlgError) as exc:
            trace.error = str(exc)
            break
        y_best = min(y_best, y)
        trace.records.append(
            IterRecord(
                t=t,
                x=x.copy(),
                b=1,
                est_grad=np.zeros(d),
                trace=0.0,
                n_cum=t,
                y_best=y_best,
                C_t=beta,
            )
        )
    return trace


def run_random_search(
    fn: TestFunction, budget: int, lo, hi, seed: int = 0
) -> RunTrace:
    """budget uniform queries over the box; best-so-far curve recorded."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    d = lo.shape[0]
    rng = np.random.default_rng(seed)
    X = rng.uniform(lo, hi, size=(budget, d))
    y = sampler.query_batch(fn, X, rng)
    best = np.minimum.accumulate(y)
    trace = RunTrace(meta={"method": "random_search", "d": d})
    for t in range(budget):
        trace.records.append(
            IterRecord(
                t=t + 1,
                x=X[t].copy(),
                b=1,
                est_grad=np.zeros(d),
                trace=0.0,
                n_cum=t + 1,
                y_best=float(best[t]),
                C_t=0.0,
            )
        )
    return trace
