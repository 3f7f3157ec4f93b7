"""Stationary kernels with analytic derivatives.

Provides the RBF and Matern-2.5 kernels together with the first cross
derivative and the cross-Hessian d^2 k / dx1_i dx2_j needed for gradient
posteriors.  Hyperparameters are fixed at construction; kernel objects are
immutable and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RBF = "rbf"
MATERN25 = "matern25"

_SQRT5 = np.sqrt(5.0)


class KernelInputError(ValueError):
    """Raised on dimension mismatches or invalid hyperparameters."""


@dataclass(frozen=True, eq=False)
class StationaryKernel:
    """A stationary kernel k(x1, x2) = phi(x1 - x2).

    lengthscale may be a positive scalar or a length-d vector (ARD via
    pre-scaling of inputs); outputscale is the prior variance k(x, x).
    """

    family: str
    lengthscale: float | np.ndarray = 1.0
    outputscale: float = 1.0
    _ls: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in (RBF, MATERN25):
            raise KernelInputError(f"unknown kernel family {self.family!r}")
        ls = np.atleast_1d(np.asarray(self.lengthscale, dtype=float))
        if np.any(ls <= 0.0):
            raise KernelInputError("lengthscale must be positive")
        if self.outputscale <= 0.0:
            raise KernelInputError("outputscale must be positive")
        object.__setattr__(self, "_ls", ls)

    def _scale(self, d: int) -> np.ndarray:
        ls = self._ls
        if ls.size == 1:
            return np.full(d, ls[0])
        if ls.size != d:
            raise KernelInputError(
                f"ARD lengthscale has size {ls.size}, expected {d}"
            )
        return ls


def _check_pair(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise KernelInputError(f"dimension mismatch: {x1.shape} vs {x2.shape}")
    return x1, x2


def _matern_parts(u_norm: np.ndarray):
    """exp(-sqrt5 r) and the polynomial 1 + sqrt5 r + 5/3 r^2."""
    e = np.exp(-_SQRT5 * u_norm)
    p = 1.0 + _SQRT5 * u_norm + (5.0 / 3.0) * u_norm**2
    return e, p


def eval(kernel: StationaryKernel, x1, x2) -> float:  # noqa: A001
    """Kernel value k(x1, x2)."""
    x1, x2 = _check_pair(x1, x2)
    u = (x1 - x2) / kernel._scale(x1.shape[-1])
    r2 = np.sum(u * u, axis=-1)
    if kernel.family == RBF:
        return kernel.outputscale * np.exp(-0.5 * r2)
    e, p = _matern_parts(np.sqrt(r2))
    return kernel.outputscale * p * e


def gram(kernel: StationaryKernel, X1, X2) -> np.ndarray:
    """Kernel matrix k(X1, X2) for row-stacked point sets."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X1.shape[1] != X2.shape[1]:
        raise KernelInputError("dimension mismatch between point sets")
    ls = kernel._scale(X1.shape[1])
    U1 = X1 / ls
    U2 = X2 / ls
    r2 = (
        np.sum(U1 * U1, axis=1)[:, None]
        - 2.0 * U1 @ U2.T
        + np.sum(U2 * U2, axis=1)[None, :]
    )
    r2 = np.maximum(r2, 0.0)
    if kernel.family == RBF:
        return kernel.outputscale * np.exp(-0.5 * r2)
    e, p = _matern_parts(np.sqrt(r2))
    return kernel.outputscale * p * e


def grad1(kernel: StationaryKernel, x1, x2) -> np.ndarray:
    """Gradient of k with respect to its first argument, nabla_1 k(x1, x2)."""
    x1, x2 = _check_pair(x1, x2)
    ls = kernel._scale(x1.shape[-1])
    u = (x1 - x2) / ls
    r2 = float(np.sum(u * u))
    if kernel.family == RBF:
        return -kernel.outputscale * np.exp(-0.5 * r2) * u / ls
    r = np.sqrt(r2)
    e = np.exp(-_SQRT5 * r)
    return -(5.0 / 3.0) * kernel.outputscale * e * (1.0 + _SQRT5 * r) * u / ls


def grad1_matrix(kernel: StationaryKernel, x, X) -> np.ndarray:
    """Stacked gradients nabla_1 k(x, X_j), returned as a (d, n) matrix."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d = x.shape[-1]
    ls = kernel._scale(d)
    U = (x[None, :] - X) / ls  # (n, d)
    r2 = np.sum(U * U, axis=1)
    if kernel.family == RBF:
        G = -kernel.outputscale * np.exp(-0.5 * r2)[:, None] * U / ls
    else:
        r = np.sqrt(r2)
        e = np.exp(-_SQRT5 * r)
        G = (
            -(5.0 / 3.0)
            * kernel.outputscale
            * (e * (1.0 + _SQRT5 * r))[:, None]
            * U
            / ls
        )
    return G.T


def cross_hessian(kernel: StationaryKernel, x1, x2) -> np.ndarray:
    """Mixed second derivatives d^2 k / dx1_i dx2_j as a (d, d) matrix.

    Equals -hess(phi) at the lag x1 - x2 and is constant in x at lag zero.
    """
    x1, x2 = _check_pair(x1, x2)
    d = x1.shape[-1]
    ls = kernel._scale(d)
    u = (x1 - x2) / ls
    r2 = float(np.sum(u * u))
    S = np.outer(1.0 / ls, 1.0 / ls)
    if kernel.family == RBF:
        e = np.exp(-0.5 * r2)
        H = kernel.outputscale * e * (np.eye(d) / ls**2 - np.outer(u / ls, u / ls))
        return H
    r = np.sqrt(r2)
    e = np.exp(-_SQRT5 * r)
    # -hess(phi) = (5/3) e^{-sqrt5 r} [(1 + sqrt5 r) I - 5 u u^T] in scaled units
    M = (1.0 + _SQRT5 * r) * np.eye(d) - 5.0 * np.outer(u, u)
    return (5.0 / 3.0) * kernel.outputscale * e * M * S


def hessian_diag_max(kernel: StationaryKernel) -> float:
    """Largest diagonal entry of the cross-Hessian at lag zero."""
    ls = kernel._ls
    inv2 = float(np.max(1.0 / ls**2))
    if kernel.family == RBF:
        return kernel.outputscale * inv2
    return (5.0 / 3.0) * kernel.outputscale * inv2
