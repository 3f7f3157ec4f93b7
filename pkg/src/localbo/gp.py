"""Gaussian process conditioning for function values and gradients.

The posterior covariance never depends on the labels, which is what makes
label-free fantasizing of new query batches possible.  All solves go through
a Cholesky factorization with an escalating jitter ladder; at noise zero this
realizes the pseudoinverse semantics needed for duplicated design rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from . import kernels
from .kernels import StationaryKernel

JITTER_LADDER = (1e-10, 1e-8, 1e-6, 1e-4, 1e-2)


class ConditioningError(RuntimeError):
    """Gram matrix stayed numerically singular after the full jitter ladder."""


@dataclass
class Dataset:
    """Query locations X (n, d) and observed values y (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y must have the same number of rows")

    @classmethod
    def empty(cls, d: int) -> "Dataset":
        return cls(np.zeros((0, d)), np.zeros(0))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def append(self, X_new, y_new) -> "Dataset":
        """New dataset with rows appended; existing rows are preserved."""
        X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
        y_new = np.atleast_1d(np.asarray(y_new, dtype=float))
        return Dataset(np.vstack([self.X, X_new]), np.concatenate([self.y, y_new]))


@dataclass
class GpModel:
    kernel: StationaryKernel
    mean: float = 0.0
    noise_sd: float = 0.0
    jitter: float = 1e-10

    def __post_init__(self):
        if self.noise_sd < 0.0:
            raise ValueError("noise_sd must be nonnegative")


def _chol_with_jitter(K: np.ndarray, scale: float):
    """Lower Cholesky factor of K, escalating jitter until it succeeds."""
    for jit in (0.0,) + tuple(j * scale for j in JITTER_LADDER):
        try:
            return np.linalg.cholesky(K + jit * np.eye(K.shape[0]))
        except np.linalg.LinAlgError:
            continue
    raise ConditioningError(
        f"Gram matrix of size {K.shape[0]} singular after max jitter"
    )


class GpPosterior:
    """Cached factorization of (K + sigma^2 I) for repeated posterior queries."""

    def __init__(self, model: GpModel, data: Dataset):
        self.model = model
        self.data = data
        k = model.kernel
        n = data.n
        if n == 0:
            self.L = None
            self.alpha = None
            return
        K = kernels.gram(k, data.X, data.X) + model.noise_sd**2 * np.eye(n)
        self.L = _chol_with_jitter(K, k.outputscale)
        self.alpha = cho_solve((self.L, True), data.y - model.mean)

    def mean(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.L is None:
            return self.model.mean
        kx = kernels.gram(self.model.kernel, self.data.X, x[None, :])[:, 0]
        return self.model.mean + float(kx @ self.alpha)

    def mean_and_sd(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and standard deviation at row-stacked points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        prior_var = self.model.kernel.outputscale
        if self.L is None:
            return (
                np.full(X.shape[0], self.model.mean),
                np.full(X.shape[0], np.sqrt(prior_var)),
            )
        Kx = kernels.gram(self.model.kernel, self.data.X, X)  # (n, q)
        mu = self.model.mean + Kx.T @ self.alpha
        V = solve_triangular(self.L, Kx, lower=True)
        var = np.maximum(prior_var - np.sum(V * V, axis=0), 0.0)
        return mu, np.sqrt(var)

    def grad(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Posterior gradient mean and covariance at x."""
        x = np.asarray(x, dtype=float)
        k = self.model.kernel
        H0 = kernels.cross_hessian(k, x, x)
        if self.L is None:
            return np.zeros(x.shape[-1]), H0
        G = kernels.grad1_matrix(k, x, self.data.X)  # (d, n)
        mean_grad = G @ self.alpha
        U = solve_triangular(self.L, G.T, lower=True)  # (n, d)
        cov = H0 - U.T @ U
        return mean_grad, cov

    def grad_cov_trace(self, x) -> float:
        _, cov = self.grad(x)
        return float(np.trace(cov))

    def fantasized_grad_cov_trace(self, x, Z) -> float:
        """tr of the gradient covariance after conditioning on Z, label-free.

        Works in the posterior kernel k_D: conditioning on D then Z equals
        conditioning on the union directly.
        """
        x = np.asarray(x, dtype=float)
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        model = self.model
        k = model.kernel
        H0 = kernels.cross_hessian(k, x, x)
        Gz = kernels.grad1_matrix(k, x, Z)  # (d, b)
        Kzz = kernels.gram(k, Z, Z)
        prior_trace = float(np.trace(H0))
        if self.L is None:
            red = 0.0
        else:
            X = self.data.X
            Kxz = kernels.gram(k, X, Z)  # (n, b)
            V = solve_triangular(self.L, Kxz, lower=True)
            Kzz = Kzz - V.T @ V
            Kzz = 0.5 * (Kzz + Kzz.T)
            Gx = kernels.grad1_matrix(k, x, X)  # (d, n)
            U = solve_triangular(self.L, Gx.T, lower=True)  # (n, d)
            Gz = Gz - U.T @ V
            red = float(np.sum(U * U))
        Lz = _chol_with_jitter(
            Kzz + model.noise_sd**2 * np.eye(Z.shape[0]), k.outputscale
        )
        W = solve_triangular(Lz, Gz.T, lower=True)
        return prior_trace - red - float(np.sum(W * W))


def posterior_mean(model: GpModel, data: Dataset, x) -> float:
    return GpPosterior(model, data).mean(x)


def grad_posterior(model: GpModel, data: Dataset, x):
    """Posterior gradient distribution: (mean vector, covariance matrix)."""
    return GpPosterior(model, data).grad(x)


def fantasized_grad_cov_trace(model: GpModel, data: Dataset, x, Z) -> float:
    return GpPosterior(model, data).fantasized_grad_cov_trace(x, Z)
