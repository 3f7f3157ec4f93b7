"""Query-batch design: the gradient-uncertainty acquisition, differencing
patterns, the empirical error function, and all analytic bounds on it.

The acquisition alpha_trace(x, Z) is the trace of the posterior gradient
covariance at x after fantasizing queries at Z (no labels needed).  The error
function E(d, kernel, sigma, b) is its infimum over all b-point designs with
no other data, which the analytic bounds in this module upper-bound in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as scipy_minimize
from scipy.optimize import minimize_scalar

from . import kernels
from .gp import Dataset, GpModel, GpPosterior
from .kernels import RBF, StationaryKernel

_SQRT5 = math.sqrt(5.0)


# ---------------------------------------------------------------------------
# Designs


@dataclass
class Design:
    """A candidate query batch: b row-stacked points in R^d."""

    Z: np.ndarray
    provenance: str = "random"
    m: int | None = None
    h: float | None = None

    def __post_init__(self):
        self.Z = np.atleast_2d(np.asarray(self.Z, dtype=float))

    @property
    def b(self) -> int:
        return self.Z.shape[0]


def central_design(d: int, m: int, h: float, center=None) -> Design:
    """2md points: m copies of center - h e_i and m copies of center + h e_i."""
    rows = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        rows.extend([-e] * m)
        rows.extend([+e] * m)
    Z = np.array(rows)
    if center is not None:
        Z = Z + np.asarray(center, dtype=float)
    return Design(Z, provenance="central", m=m, h=h)


def forward_design(d: int, m: int, h: float, center=None) -> Design:
    """(d + 1)m points: m copies of center and m copies of center + h e_i."""
    rows = [np.zeros(d)] * m
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        rows.extend([e] * m)
    Z = np.array(rows)
    if center is not None:
        Z = Z + np.asarray(center, dtype=float)
    return Design(Z, provenance="forward", m=m, h=h)


def truncated_axis_design(d: int, b: int, h: float, center=None) -> Design:
    """b rows cycling through {center, center +- h e_i}: a differencing
    pattern usable when b does not factor as 2md.

    Axes are covered breadth-first (+h on every axis, then -h on every axis,
    then repeat) so that b = d + 1 yields a full forward-differencing stencil.
    """
    rows = [np.zeros(d)]
    sign = 1.0
    while len(rows) < b:
        for i in range(d):
            e = np.zeros(d)
            e[i] = sign * h
            rows.append(e)
            if len(rows) == b:
                break
        sign = -sign
    Z = np.array(rows[:b])
    if center is not None:
        Z = Z + np.asarray(center, dtype=float)
    return Design(Z, provenance="axis-truncated", h=h)


@dataclass(frozen=True)
class DifferencingConstants:
    """alpha = phi at lag 2h (central) or h (forward); beta = d_i phi(-h e_i);
    gamma = sigma^2 / m."""

    alpha: float
    beta: float
    gamma: float


def differencing_constants(
    kernel: StationaryKernel, m: int, h: float, sigma: float, scheme: str = "central"
) -> DifferencingConstants:
    lag = 2.0 * h if scheme == "central" else h
    e1 = np.array([lag])
    alpha = float(kernels.eval(kernel, np.zeros(1), e1))
    beta = float(kernels.grad1(kernel, np.array([-h]), np.zeros(1))[0])
    return DifferencingConstants(alpha=alpha, beta=beta, gamma=sigma**2 / m)


# ---------------------------------------------------------------------------
# Acquisition


def alpha_trace(model: GpModel, data: Dataset, x, Z) -> float:
    """Trace of the fantasized posterior gradient covariance at x."""
    if isinstance(Z, Design):
        Z = Z.Z
    return GpPosterior(model, data).fantasized_grad_cov_trace(x, Z)


@dataclass
class MinimizerConfig:
    n_random: int = 3
    tol: float = 1e-8
    max_iters: int = 50
    fd_step_rel: float = 1e-5  # central-difference step, relative to lengthscale
    h_grid: tuple = (0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8)
    h_min_rel: float = 1e-4  # floor on differencing h, relative to lengthscale
    seed: int = 0


def optimal_central_h(kernel: StationaryKernel, m: int, sigma: float) -> float:
    """Step size minimizing the central-design closed-form trace bound."""
    res = minimize_scalar(
        lambda lh: central_trace_bound(kernel, 1, m, math.exp(lh), sigma),
        bounds=(math.log(1e-4), math.log(3.0)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return math.exp(res.x)


def _differencing_inits(kernel, d, b, sigma, cfg, center):
    """Differencing-pattern initializations over a grid of step sizes h."""
    ell = float(np.min(np.atleast_1d(kernel._scale(d))))
    h_default = ell * max(sigma, 0.05) ** 0.5
    h_values = sorted(
        {max(h * ell, cfg.h_min_rel * ell) for h in cfg.h_grid} | {h_default}
    )
    if sigma > 0 and b // (2 * d) >= 1 and math.isclose(kernel.outputscale, 1.0):
        h_values.append(optimal_central_h(kernel, b // (2 * d), sigma))
    out = []
    for h in h_values:
        m = b // (2 * d)
        if m >= 1 and sigma > 0:
            des = central_design(d, m, h, center)
            if des.b < b:
                extra = truncated_axis_design(d, b - des.b, h, center)
                des = Design(np.vstack([des.Z, extra.Z]), "central", m=m, h=h)
            out.append(des)
        else:
            out.append(truncated_axis_design(d, b, h, center))
    return out


def minimize_acquisition(
    model: GpModel,
    data: Dataset,
    x,
    b: int,
    cfg: MinimizerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> Design:
    """Best b-point design found by multi-start local refinement.

    The returned design is never worse than any initialization evaluated.
    """
    if b < 1:
        raise ValueError("batch size must be >= 1")
    cfg = cfg or MinimizerConfig()
    rng = rng or np.random.default_rng(cfg.seed)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    post = GpPosterior(model, data)
    ell = float(np.min(np.atleast_1d(model.kernel._scale(d))))

    def objective(zflat):
        return post.fantasized_grad_cov_trace(x, zflat.reshape(b, d))

    starts = _differencing_inits(model.kernel, d, b, model.noise_sd, cfg, x)
    for _ in range(cfg.n_random):
        starts.append(Design(x + 0.3 * ell * rng.standard_normal((b, d)), "random"))

    best_Z = None
    best_val = np.inf
    # keep only the best differencing init for refinement; all inits still
    # participate in the final min
    refine = []
    diff_best = None
    diff_val = np.inf
    for des in starts:
        val = objective(des.Z.ravel())
        if val < best_val:
            best_val, best_Z = val, des.Z.copy()
        if des.provenance == "random":
            refine.append(des)
        elif val < diff_val:
            diff_val, diff_best = val, des
    if diff_best is not None:
        refine.insert(0, diff_best)

    if cfg.max_iters > 0:
        step = cfg.fd_step_rel * ell

        def num_grad(zflat):
            g = np.empty_like(zflat)
            for i in range(zflat.size):
                zp = zflat.copy()
                zp[i] += step
                zm = zflat.copy()
                zm[i] -= step
                g[i] = (objective(zp) - objective(zm)) / (2.0 * step)
            return g

        for des in refine:
            res = scipy_minimize(
                objective,
                des.Z.ravel(),
                jac=num_grad,
                method="L-BFGS-B",
                options={"maxiter": cfg.max_iters, "ftol": cfg.tol, "gtol": 1e-12},
            )
            if res.fun < best_val:
                best_val, best_Z = res.fun, res.x.reshape(b, d)

    return Design(best_Z, provenance="optimized")


# ---------------------------------------------------------------------------
# Empirical error function (torch-backed minimization)


@dataclass
class ErrorFunctionConfig:
    n_random: int = 2
    max_iters: int = 150
    h_grid: tuple = (0.02, 0.05, 0.1, 0.2, 0.4, 0.8)
    seed: int = 0
    jitter: float = 1e-10


def _torch_trace_objective(kernel: StationaryKernel, d: int, sigma: float, jitter):
    """Returns f(Z) = tr of the gradient covariance at 0 given queries Z,
    as a torch-autograd-differentiable function."""
    import torch

    ls = torch.as_tensor(kernel._scale(d), dtype=torch.float64)
    s2 = float(kernel.outputscale)
    if kernel.family == RBF:
        prior = s2 * float(np.sum(1.0 / kernel._scale(d) ** 2))
    else:
        prior = (5.0 / 3.0) * s2 * float(np.sum(1.0 / kernel._scale(d) ** 2))

    def f(Z):
        U = Z / ls
        diff = U[:, None, :] - U[None, :, :]
        r2 = (diff * diff).sum(-1)
        if kernel.family == RBF:
            K = s2 * torch.exp(-0.5 * r2)
            # grad1 k(0, z_j) = s2 exp(-r^2/2) z_j / ls^2  (in input units)
            rz2 = (U * U).sum(-1)
            G = (s2 * torch.exp(-0.5 * rz2))[:, None] * U / ls  # (b, d)
        else:
            r = torch.sqrt(r2 + 1e-30)
            K = s2 * (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * torch.exp(-_SQRT5 * r)
            rz = torch.sqrt((U * U).sum(-1) + 1e-30)
            G = (
                (5.0 / 3.0)
                * s2
                * (torch.exp(-_SQRT5 * rz) * (1.0 + _SQRT5 * rz))[:, None]
                * U
                / ls
            )
        b = Z.shape[0]
        A = K + (sigma**2 + jitter * s2) * torch.eye(b, dtype=torch.float64)
        L = torch.linalg.cholesky(A)
        W = torch.linalg.solve_triangular(L, G, upper=False)
        return prior - (W * W).sum()

    return f, prior


def error_function_empirical(
    kernel: StationaryKernel,
    d: int,
    sigma: float,
    b: int,
    cfg: ErrorFunctionConfig | None = None,
) -> float:
    """Upper estimate of the error function: minimized gradient-covariance
    trace at the origin over b-point designs (empty training data).

    Differencing initializations guarantee the result is no worse than the
    best closed-form pattern; L-BFGS refinement tightens it further.
    """
    import torch

    if b < 1:
        raise ValueError("batch size must be >= 1")
    cfg = cfg or ErrorFunctionConfig()
    rng = np.random.default_rng(cfg.seed)
    obj, prior = _torch_trace_objective(kernel, d, sigma, cfg.jitter)
    ell = float(np.min(np.atleast_1d(kernel._scale(d))))

    inits = [
        des.Z
        for des in _differencing_inits(
            kernel, d, b, sigma, MinimizerConfig(h_grid=cfg.h_grid), None
        )
    ]
    for _ in range(cfg.n_random):
        inits.append(0.3 * ell * rng.standard_normal((b, d)))

    best = np.inf
    init_vals = []
    for Z0 in inits:
        with torch.no_grad():
            init_vals.append(float(obj(torch.as_tensor(Z0, dtype=torch.float64))))
    best = min(init_vals)
    order = np.argsort(init_vals)

    # refine the two most promising inits plus the first random one
    chosen = list(order[:2])
    if cfg.n_random > 0:
        chosen.append(len(inits) - cfg.n_random)
    for idx in dict.fromkeys(chosen):
        Z = torch.tensor(inits[idx], dtype=torch.float64, requires_grad=True)
        opt = torch.optim.LBFGS(
            [Z],
            max_iter=cfg.max_iters,
            tolerance_grad=1e-12,
            tolerance_change=1e-14,
            line_search_fn="strong_wolfe",
        )

        def closure():
            opt.zero_grad()
            loss = obj(Z)
            loss.backward()
            return loss

        try:
            opt.step(closure)
            with torch.no_grad():
                val = float(obj(Z))
            if np.isfinite(val):
                best = min(best, val)
        except RuntimeError:
            pass  # cholesky breakdown on a degenerate iterate; keep best so far
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# Analytic bounds


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function via Halley iteration."""
    if x < -1.0 / math.e - 1e-12:
        raise ValueError(f"lambert_w0 domain is [-1/e, inf), got {x}")
    x = max(x, -1.0 / math.e)
    if x == 0.0:
        return 0.0
    if x <= -1.0 / math.e + 1e-300:
        return -1.0
    # seeds: series near the branch point, log asymptotics for large x
    if x < -0.3:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    elif x < math.e:
        w = x / math.e
    else:
        w = math.log(x) - math.log(math.log(x))
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            break
    return w


def bound_noiseless(kernel: StationaryKernel, d: int, b: int) -> float:
    """C * max(0, 1 + d - b) with C the max cross-Hessian diagonal at lag 0."""
    if b < 0:
        raise ValueError("batch size must be >= 0")
    return kernels.hessian_diag_max(kernel) * max(0, 1 + d - b)


def bound_rbf_lambert(d: int, m: int, sigma: float) -> float:
    """d (1 + W(-m / (e (m + sigma^2)))) for the unit RBF kernel, b = 2md."""
    if m < 1:
        raise ValueError("m must be >= 1")
    w = lambert_w0(-m / (math.e * (m + sigma**2)))
    return d * max(0.0, 1.0 + w)


def bound_rbf_taylor(d: int, m: int, sigma: float) -> float:
    """Closed-form relaxation d sqrt(2 sigma^2 / (m + sigma^2)) of the
    Lambert bound (first-order Taylor expansion at the branch point)."""
    return d * math.sqrt(2.0 * sigma**2 / (m + sigma**2))


def bound_matern(d: int, m: int, sigma: float) -> float:
    """d ((15/2) sigma m^-1/2 + (70/9) sigma^3/2 m^-3/4) for unit Matern-2.5."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return d * (7.5 * sigma / math.sqrt(m) + (70.0 / 9.0) * sigma**1.5 * m**-0.75)


def error_bound(kernel: StationaryKernel, d: int, sigma: float, b: int) -> float:
    """Best available analytic upper bound on the error function at batch b.

    Falls back to the prior trace when no differencing bound applies.
    """
    prior = kernels.hessian_diag_max(kernel) * d
    if sigma == 0.0:
        return min(prior, bound_noiseless(kernel, d, b))
    m = b // (2 * d)
    if m >= 1:
        if kernel.family == RBF:
            return min(prior, bound_rbf_lambert(d, m, sigma))
        return min(prior, bound_matern(d, m, sigma))
    return prior


def central_trace_bound(
    kernel: StationaryKernel, d: int, m: int, h: float, sigma: float
) -> float:
    """Closed-form bound on the trace for the central differencing design.

    Requires unit outputscale (the eigenvalue computation assumes phi(0) = 1).
    """
    if h <= 0 or m < 1:
        raise ValueError("need h > 0 and m >= 1")
    if not math.isclose(kernel.outputscale, 1.0):
        raise ValueError("closed-form differencing bounds assume unit outputscale")
    c = differencing_constants(kernel, m, h, sigma, scheme="central")
    diag2 = kernels.hessian_diag_max(kernel)  # -d_i^2 phi(0), isotropic
    per_axis = diag2 - 2.0 * c.beta**2 / ((1.0 - c.alpha) + c.gamma)
    return d * per_axis


def forward_trace_bound(
    kernel: StationaryKernel, d: int, m: int, h: float, sigma: float
) -> float:
    """Closed-form bound on the trace for the forward differencing design."""
    if h <= 0 or m < 1:
        raise ValueError("need h > 0 and m >= 1")
    if not math.isclose(kernel.outputscale, 1.0):
        raise ValueError("closed-form differencing bounds assume unit outputscale")
    c = differencing_constants(kernel, m, h, sigma, scheme="forward")
    diag2 = kernels.hessian_diag_max(kernel)
    g = c.gamma
    per_axis = diag2 - (1.0 + g) * c.beta**2 / ((1.0 + g) ** 2 - c.alpha**2)
    return d * per_axis
