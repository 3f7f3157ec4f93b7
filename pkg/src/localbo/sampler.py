"""Differentiable objective functions with noisy query oracles.

Sample paths are weighted random cosine features whose spectral measure
matches the kernel, so a draw behaves like a smooth function with the GP's
covariance.  Analytic objectives (quadratic, l1 norm, 1-d ReLU) cover the
non-differentiable case studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import MATERN25, RBF, StationaryKernel

QUADRATIC = "quadratic"
L1_NORM = "l1"
RELU_1D = "relu"
PATH = "path"


class UndefinedGradientError(ValueError):
    """Gradient requested exactly at a kink of a non-smooth objective."""


@dataclass
class SamplePath:
    """f(x) = sqrt(2 s^2 / M) sum_j w_j cos(omega_j . x + phase_j)."""

    frequencies: np.ndarray  # (M, d)
    phases: np.ndarray  # (M,)
    weights: np.ndarray  # (M,)
    kernel: StationaryKernel
    seed: int

    @property
    def M(self) -> int:
        return self.frequencies.shape[0]

    @property
    def d(self) -> int:
        return self.frequencies.shape[1]

    def _amp(self) -> float:
        return np.sqrt(2.0 * self.kernel.outputscale / self.M)

    def __call__(self, X) -> np.ndarray | float:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        theta = np.atleast_2d(X) @ self.frequencies.T + self.phases  # (n, M)
        vals = self._amp() * (np.cos(theta) @ self.weights)
        return float(vals[0]) if single else vals

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        theta = self.frequencies @ x + self.phases
        return -self._amp() * ((np.sin(theta) * self.weights) @ self.frequencies)

    def hessians(self, X) -> np.ndarray:
        """Analytic Hessians at row-stacked points, shape (n, d, d)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        theta = X @ self.frequencies.T + self.phases  # (n, M)
        coeff = -self._amp() * np.cos(theta) * self.weights  # (n, M)
        return np.einsum("nm,mi,mj->nij", coeff, self.frequencies, self.frequencies)


def draw_path(kernel: StationaryKernel, d: int, M: int = 4096, seed: int = 0) -> SamplePath:
    """Random-feature draw from the kernel's spectral density.

    RBF frequencies are Gaussian with per-axis scale 1/lengthscale;
    Matern-2.5 frequencies are multivariate Student-t with 5 degrees of
    freedom scaled by sqrt(5)/lengthscale.
    """
    if M < 1:
        raise ValueError("feature count must be >= 1")
    rng = np.random.default_rng(seed)
    ls = kernel._scale(d)
    z = rng.standard_normal((M, d)) / ls
    if kernel.family == RBF:
        freqs = z
    elif kernel.family == MATERN25:
        nu2 = 5.0  # 2 * nu degrees of freedom
        u = rng.chisquare(nu2, size=M)
        freqs = z * np.sqrt(nu2 / u)[:, None]
    else:
        raise ValueError(f"unsupported kernel family {kernel.family!r}")
    phases = rng.uniform(0.0, 2.0 * np.pi, size=M)
    weights = rng.standard_normal(M)
    return SamplePath(freqs, phases, weights, kernel, seed)


@dataclass
class TestFunction:
    """An objective with a noisy query oracle."""

    kind: str
    noise_sd: float = 0.0
    path: SamplePath | None = None
    d: int = 1

    def __post_init__(self):
        if self.kind == PATH:
            if self.path is None:
                raise ValueError("kind 'path' requires a SamplePath")
            self.d = self.path.d
        if self.kind == RELU_1D:
            self.d = 1

    def value(self, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == PATH:
            return float(self.path(x))
        if self.kind == QUADRATIC:
            return 0.5 * float(x @ x)
        if self.kind == L1_NORM:
            return float(np.sum(np.abs(x)))
        if self.kind == RELU_1D:
            return float(max(0.0, x[0]))
        raise ValueError(f"unknown objective kind {self.kind!r}")

    def values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == PATH:
            return np.asarray(self.path(X))
        return np.array([self.value(row) for row in X])


def query(fn: TestFunction, x, rng: np.random.Generator) -> float:
    """Noisy observation f(x) + N(0, sigma^2) from the supplied stream."""
    val = fn.value(x)
    if fn.noise_sd > 0.0:
        val += fn.noise_sd * rng.standard_normal()
    return val


def query_batch(fn: TestFunction, X, rng: np.random.Generator) -> np.ndarray:
    vals = fn.values(X)
    if fn.noise_sd > 0.0:
        vals = vals + fn.noise_sd * rng.standard_normal(vals.shape)
    return vals


def true_grad(fn: TestFunction, x) -> np.ndarray:
    """Exact gradient; raises at kinks of the non-smooth objectives."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if fn.kind == PATH:
        return fn.path.grad(x)
    if fn.kind == QUADRATIC:
        return x.copy()
    if fn.kind == L1_NORM:
        if np.any(x == 0.0):
            raise UndefinedGradientError("l1 norm is not differentiable at zero coordinates")
        return np.sign(x)
    if fn.kind == RELU_1D:
        if x[0] == 0.0:
            raise UndefinedGradientError("ReLU is not differentiable at 0")
        return np.array([1.0 if x[0] > 0 else 0.0])
    raise ValueError(f"unknown objective kind {fn.kind!r}")
