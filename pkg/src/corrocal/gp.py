"""Gaussian-process regression with a Matérn-5/2 ARD kernel.

Targets are standardized before fitting; predictions are returned in the
original units. The noise term is a fixed jitter on the standardized scale,
escalated only when the Cholesky factorization fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.stats import norm

from .errors import LinAlgError

SQRT5 = np.sqrt(5.0)


@dataclass
class KernelConfig:
    length_scales: np.ndarray = field(default_factory=lambda: np.full(3, 0.3))
    signal_variance: float = 1.0
    jitter: float = 1e-10
    max_jitter: float = 1e-4
    length_scale_bounds: tuple[float, float] = (1e-3, 20.0)
    variance_bounds: tuple[float, float] = (1e-2, 1e2)


def matern52(X1, X2, length_scales, signal_variance):
    """Matérn-5/2 covariance between the rows of ``X1`` and ``X2``."""
    d = (X1[:, None, :] - X2[None, :, :]) / length_scales
    r = np.sqrt(np.sum(d * d, axis=-1))
    return signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * np.exp(-SQRT5 * r)


def _matern52_grads(X, length_scales, signal_variance):
    """Kernel matrix and its derivatives w.r.t. log length scales and log variance."""
    d = (X[:, None, :] - X[None, :, :]) / length_scales
    d2 = d * d
    r = np.sqrt(np.sum(d2, axis=-1))
    e = np.exp(-SQRT5 * r)
    K = signal_variance * (1.0 + SQRT5 * r + 5.0 / 3.0 * r * r) * e
    common = signal_variance * 5.0 / 3.0 * (1.0 + SQRT5 * r) * e
    dK = [common * d2[..., j] for j in range(X.shape[1])]
    dK.append(K.copy())
    return K, dK


class GaussianProcess:
    """Exact GP posterior over a fixed training set.

    Parameters
    ----------
    X : array, shape (n, d)
        Training inputs, normally in the unit cube.
    y : array, shape (n,)
        Training targets.
    kernel : KernelConfig
        Hyperparameters; ``length_scales`` must have length ``d``.
    """

    def __init__(self, X, y, kernel: KernelConfig):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if len(np.unique(X, axis=0)) < 2:
            raise ValueError("GP needs at least two distinct training points")
        self.X = X
        self.y = y
        self.kernel = kernel
        self.y_mean = float(y.mean())
        self.y_std = float(y.std()) or 1.0
        self._z = (y - self.y_mean) / self.y_std
        self.L, self.jitter = self._factor(
            matern52(X, X, kernel.length_scales, kernel.signal_variance), kernel
        )
        self.alpha = cho_solve((self.L, True), self._z)

    @staticmethod
    def _factor(K, kernel: KernelConfig):
        jitter = kernel.jitter
        n = K.shape[0]
        while jitter <= kernel.max_jitter:
            try:
                return cholesky(K + jitter * np.eye(n), lower=True), jitter
            except np.linalg.LinAlgError:
                jitter = max(10.0 * jitter, 1e-12)
        raise LinAlgError("kernel matrix not positive definite after jitter escalation")

    def predict(self, Xq, return_std: bool = True):
        """Posterior mean (and standard deviation) at query rows ``Xq``."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Ks = matern52(Xq, self.X, self.kernel.length_scales, self.kernel.signal_variance)
        mu = Ks @ self.alpha * self.y_std + self.y_mean
        if not return_std:
            return mu
        v = solve_triangular(self.L, Ks.T, lower=True)
        var = self.kernel.signal_variance - np.sum(v * v, axis=0)
        return mu, np.sqrt(np.maximum(var, 0.0)) * self.y_std

    def log_marginal_likelihood(self) -> float:
        n = len(self._z)
        return float(
            -0.5 * self._z @ self.alpha - np.sum(np.log(np.diag(self.L))) - 0.5 * n * np.log(2 * np.pi)
        )


def _neg_lml_and_grad(log_theta, X, z, jitter):
    d = X.shape[1]
    ls = np.exp(log_theta[:d])
    var = np.exp(log_theta[d])
    K, dK = _matern52_grads(X, ls, var)
    K[np.diag_indices_from(K)] += jitter
    try:
        L = cholesky(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(log_theta)
    alpha = cho_solve((L, True), z)
    Kinv = cho_solve((L, True), np.eye(len(z)))
    nll = 0.5 * z @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * len(z) * np.log(2 * np.pi)
    W = np.outer(alpha, alpha) - Kinv
    grad = np.array([-0.5 * np.sum(W * g) for g in dK])
    return nll, grad


def fit_hyperparameters(X, y, kernel: KernelConfig) -> KernelConfig:
    """Maximize the log marginal likelihood over length scales and signal variance.

    Starts from the current ``kernel`` and from a default isotropic guess;
    returns a new :class:`KernelConfig` with the best optimum found.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    z = (y - y.mean()) / (y.std() or 1.0)
    d = X.shape[1]
    bounds = [tuple(np.log(kernel.length_scale_bounds))] * d + [tuple(np.log(kernel.variance_bounds))]
    starts = [
        np.r_[np.log(kernel.length_scales), np.log(kernel.signal_variance)],
        np.r_[np.full(d, np.log(0.3)), 0.0],
    ]
    best_x, best_f = starts[0], np.inf
    for x0 in starts:
        x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
        res = minimize(_neg_lml_and_grad, x0, args=(X, z, kernel.jitter), jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_f:
            best_x, best_f = res.x, res.fun
    return KernelConfig(
        length_scales=np.exp(best_x[:d]),
        signal_variance=float(np.exp(best_x[d])),
        jitter=kernel.jitter,
        max_jitter=kernel.max_jitter,
        length_scale_bounds=kernel.length_scale_bounds,
        variance_bounds=kernel.variance_bounds,
    )


def gp_fit(X, y, kernel: KernelConfig | None = None, optimize: bool = True) -> GaussianProcess:
    """Fit a GP posterior, optionally refitting the kernel hyperparameters first."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if kernel is None:
        kernel = KernelConfig(length_scales=np.full(X.shape[1], 0.3))
    if optimize:
        kernel = fit_hyperparameters(X, y, kernel)
    return GaussianProcess(X, y, kernel)


def ei_from_moments(mu, sigma, best):
    """Expected improvement of a maximization problem over incumbent ``best``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    improvement = mu - best
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, improvement / sigma, 0.0)
        ei = np.where(
            sigma > 0,
            sigma * norm.pdf(z) + improvement * norm.cdf(z),
            np.maximum(improvement, 0.0),
        )
    return np.maximum(ei, 0.0)


def expected_improvement(posterior: GaussianProcess, Xq, best: float):
    """EI at query rows ``Xq`` under ``posterior``."""
    mu, sigma = posterior.predict(Xq)
    return ei_from_moments(mu, sigma, best)
