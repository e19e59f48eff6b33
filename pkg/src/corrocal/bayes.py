"""Gehlen-parameter identification by Bayesian optimization.

The objective is the negative mean squared error between measured wire
depths and the depths at which the Gehlen model reaches the critical
chloride content. A Gaussian-process surrogate with expected-improvement
acquisition proposes each new parameter set.

The search runs in the unit cube: ``a`` and ``b_e`` map linearly to their
bounds, ``D_t`` maps linearly in log10. A bound with ``lo == hi`` pins that
parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from . import gp
from .errors import ConfigError
from .ingest import CalibrationPoint
from .model import GehlenParameters, ModelHyperparameters, depth_of_content, gehlen_diffusion, depth_from_diffusion

PARAM_NAMES = ("aging_exponent", "d_t", "b_e")
STALL_MODES = ("settled", "improvements", "iterations")


@dataclass(frozen=True)
class ParameterBounds:
    a: tuple[float, float] = (0.1, 0.9)
    d_t: tuple[float, float] = (1e-12, 30e-12)
    b_e: tuple[float, float] = (1000.0, 5200.0)

    def __post_init__(self):
        for name, (lo, hi) in zip(PARAM_NAMES, self.as_list()):
            if not lo <= hi:
                raise ConfigError(f"bounds for {name}: lo must not exceed hi")
        if self.d_t[0] <= 0 or self.a[0] <= 0 or self.b_e[0] <= 0:
            raise ConfigError("all bounds must be positive")
        if self.a[1] >= 1:
            raise ConfigError("aging exponent upper bound must be < 1")

    def as_list(self):
        return [tuple(self.a), tuple(self.d_t), tuple(self.b_e)]

    def lows(self) -> np.ndarray:
        return np.array([b[0] for b in self.as_list()])

    def highs(self) -> np.ndarray:
        return np.array([b[1] for b in self.as_list()])

    def to_dict(self) -> dict:
        return {"a": list(self.a), "d_t": list(self.d_t), "b_e": list(self.b_e)}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterBounds":
        return cls(tuple(d["a"]), tuple(d["d_t"]), tuple(d["b_e"]))

    def from_unit(self, u) -> np.ndarray:
        """Map unit-cube rows to (a, D_t, b_e) rows."""
        u = np.asarray(u, dtype=float)
        lo, hi = self.lows(), self.highs()
        out = lo + u * (hi - lo)
        log_lo, log_hi = np.log10(lo[1]), np.log10(hi[1])
        out[..., 1] = 10.0 ** (log_lo + u[..., 1] * (log_hi - log_lo))
        return out

    def to_unit(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        lo, hi = self.lows(), self.highs()
        span = np.where(hi > lo, hi - lo, 1.0)
        u = (p - lo) / span
        log_lo, log_hi = np.log10(lo[1]), np.log10(hi[1])
        u[..., 1] = (np.log10(p[..., 1]) - log_lo) / (log_hi - log_lo) if log_hi > log_lo else 0.0
        return u


@dataclass(frozen=True)
class BayesOptConfig:
    """Settings of the optimization loop.

    Parameters
    ----------
    n_init : int
        Size of the initial Sobol design.
    max_iter : int
        Maximum number of acquisitions after the initial design.
    stall_window, stall_tol
        Window length and tolerance of the stall rule.
    ei_candidates, ei_restarts
        Global Sobol candidates scored by EI, and how many of the best are
        refined by L-BFGS-B.
    local_candidates, local_scales
        Gaussian perturbations of the incumbent per isotropic scale.
    elite_size, elite_scales
        Perturbations shaped by the covariance of the best ``elite_size``
        points, per scale factor.
    refit_every : int
        Kernel hyperparameters are re-estimated every this many acquisitions.
    surrogate : {"warp", "raw", "sqrt", "log"}
        Transform of the loss that the GP models.
    warp_quantile : float
        Loss quantile at which the warp switches from linear to logarithmic.
    stall_on : {"settled", "improvements", "iterations"}
        Stall rule, see :func:`_stalled`.
    seed : int
        Seed of the design and candidate streams.
    """

    n_init: int = 10
    max_iter: int = 200
    stall_window: int = 4
    stall_tol: float = 1e-12
    ei_candidates: int = 512
    ei_restarts: int = 8
    local_candidates: int = 32
    local_scales: tuple[float, ...] = (0.05, 0.01, 0.002, 4e-4, 1e-4, 2e-5)
    elite_size: int = 8
    elite_scales: tuple[float, ...] = (1.0, 0.3, 0.1, 0.03, 0.01)
    refit_every: int = 5
    surrogate: str = "warp"
    warp_quantile: float = 0.75
    stall_on: str = "settled"
    seed: int = 0

    def __post_init__(self):
        if self.n_init < 2:
            raise ConfigError("n_init must be at least 2")
        if self.stall_window < 2:
            raise ConfigError("stall_window must be at least 2")
        if self.max_iter < 0:
            raise ConfigError("max_iter must be non-negative")
        if self.surrogate not in ("raw", "warp", "sqrt", "log"):
            raise ConfigError("surrogate must be one of raw, warp, sqrt, log")
        if self.stall_on not in STALL_MODES:
            raise ConfigError(f"stall_on must be one of {STALL_MODES}")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["local_scales"] = list(self.local_scales)
        d["elite_scales"] = list(self.elite_scales)
        return d


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of :func:`calibrate`.

    ``objective_trace`` holds every evaluated objective (initial design first);
    ``best_trace`` the running maximum; ``ei_trace`` the acquisition value of
    each proposal.
    """

    best_params: GehlenParameters
    best_objective: float
    objective_trace: list[float]
    best_trace: list[float]
    ei_trace: list[float]
    residuals: list[float]
    stop_reason: str
    n_init: int
    evaluated: list[list[float]] = field(default_factory=list)

    @property
    def mse(self) -> float:
        return -self.best_objective

    def to_dict(self) -> dict:
        return {
            "best_params": self.best_params.to_dict(),
            "best_objective": self.best_objective,
            "mse": self.mse,
            "objective_trace": self.objective_trace,
            "best_trace": self.best_trace,
            "ei_trace": self.ei_trace,
            "residuals": self.residuals,
            "stop_reason": self.stop_reason,
            "n_init": self.n_init,
            "evaluated": self.evaluated,
        }

    def to_json(self, **meta) -> str:
        payload = dict(meta)
        payload["model"] = "gehlen"
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True)


def _point_arrays(points: Sequence[CalibrationPoint]):
    if len(points) == 0:
        raise ValueError("at least one calibration point is required")
    x = np.array([p.x for p in points], dtype=float)
    t = np.array([p.t for p in points], dtype=float)
    temp = np.array([p.temp for p in points], dtype=float)
    return x, t, temp


def predicted_depths(params: GehlenParameters, points, hyper: ModelHyperparameters, c_crit: float) -> np.ndarray:
    _, t, temp = _point_arrays(points)
    return depth_of_content(c_crit, t, params, hyper, temp)


def depth_mse_objective(params: GehlenParameters, points, hyper: ModelHyperparameters, c_crit: float) -> float:
    """Negative mean squared depth error [m²]."""
    x, t, temp = _point_arrays(points)
    x_hat = depth_of_content(c_crit, t, params, hyper, temp)
    return -float(np.mean((x_hat - x) ** 2))


def _batch_objective(points, hyper, c_crit):
    """Negative MSE for rows of (a, D_t, b_e)."""
    x, t, temp = _point_arrays(points)

    def f(P):
        P = np.atleast_2d(P)
        d_eff = gehlen_diffusion(P[:, :1], P[:, 1:2], P[:, 2:3], t[None, :], temp[None, :], hyper)
        x_hat = depth_from_diffusion(c_crit, d_eff, t[None, :], hyper)
        return -np.mean((x_hat - x[None, :]) ** 2, axis=1)

    return f


def _surrogate_targets(y: np.ndarray, transform: str, quantile: float = 0.5) -> np.ndarray:
    """Targets the GP is trained on; monotone in ``y``."""
    if transform == "raw" or np.any(y > 0):
        return y
    loss = -y
    if transform == "sqrt":
        return -np.sqrt(loss)
    if transform == "log":
        return -np.log(loss + max(float(loss.min()), 1e-300))
    tau = max(float(np.quantile(loss, quantile)), 1e-300)
    with np.errstate(divide="ignore"):
        far = tau * (1.0 + np.log(np.maximum(loss, tau) / tau))
    return -np.where(loss <= tau, loss, far)


def _maximize_ei(posterior, best, config: "BayesOptConfig", rng, dim):
    """Maximize EI over quasi-random plus incumbent-local candidates.

    The best ``ei_restarts`` candidates seed bounded L-BFGS-B refinements, so
    every proposal lies in the unit cube without clamping. EI is optimized on
    the standardized target scale, which makes the proposals independent of
    the objective's units; the returned value is in original units.
    """
    cand = qmc.Sobol(dim, scramble=True, seed=rng).random(config.ei_candidates)
    incumbent = posterior.X[np.argmax(posterior.y)]
    local = [
        np.clip(incumbent + scale * rng.standard_normal((config.local_candidates, dim)), 0.0, 1.0)
        for scale in config.local_scales
    ]
    elite = posterior.X[np.argsort(-posterior.y)[: config.elite_size]]
    if config.elite_size >= dim + 1:
        # the best points trace the valley; their covariance orients the local search
        chol = np.linalg.cholesky(np.cov(elite.T) + 1e-12 * np.eye(dim))
        for f in config.elite_scales:
            z = rng.standard_normal((config.local_candidates, dim))
            local.append(np.clip(incumbent + f * z @ chol.T, 0.0, 1.0))
    cand = np.vstack([cand, *local])
    scale = posterior.y_std
    best_z = (best - posterior.y_mean) / scale

    def ei_z(u):
        mu, sd = posterior.predict(u)
        return gp.ei_from_moments((mu - posterior.y_mean) / scale, sd / scale, best_z)

    ei = ei_z(cand)
    order = np.argsort(-ei)
    best_u, best_ei = cand[order[0]], float(ei[order[0]])
    order = order[: config.ei_restarts]

    def neg_ei(u):
        return -float(ei_z(u[None, :])[0])

    for idx in order:
        res = minimize(neg_ei, cand[idx], method="L-BFGS-B", bounds=[(0.0, 1.0)] * dim)
        if np.all(np.isfinite(res.x)) and -res.fun > best_ei:
            best_u, best_ei = np.clip(res.x, 0.0, 1.0), float(-res.fun)
    return best_u, best_ei * scale


def _stalled(best_trace, improvements, config: BayesOptConfig) -> bool:
    """Stall test.

    ``best_trace`` holds the running best after each acquisition (preceded by
    the incumbent of the initial design) and ``improvements`` the successive
    incumbent values. ``stall_on`` selects the rule:

    ``"iterations"``
        the running best spread less than ``stall_tol`` over the last
        ``stall_window`` acquisitions;
    ``"improvements"``
        the last ``stall_window`` incumbent values spread less than
        ``stall_tol``;
    ``"settled"``
        the ``"iterations"`` rule holds and the most recent improvement was
        itself smaller than ``stall_tol``.
    """
    tol, w = config.stall_tol, config.stall_window
    if config.stall_on == "improvements":
        return len(improvements) >= w and max(improvements[-w:]) - min(improvements[-w:]) < tol
    flat = len(best_trace) >= w and best_trace[-1] - best_trace[-w] < tol
    if config.stall_on == "iterations":
        return flat
    return flat and len(improvements) >= 2 and improvements[-1] - improvements[-2] < tol


def maximize(
    f: Callable[[np.ndarray], np.ndarray],
    dim: int,
    config: BayesOptConfig,
) -> tuple[np.ndarray, np.ndarray, list[float], str]:
    """Generic GP/EI maximization of ``f`` over the unit cube.

    ``f`` maps rows of unit-cube points to objective values.

    Returns
    -------
    U : array, shape (n_eval, dim)
        Evaluated points.
    y : array, shape (n_eval,)
        Objective values.
    ei_trace : list of float
        Acquisition value at each proposal.
    stop_reason : {"stalled", "max_iter"}
    """
    rng = np.random.default_rng(config.seed)
    U = rng.random((config.n_init, dim))
    y = np.asarray(f(U), dtype=float)
    kernel = gp.KernelConfig(length_scales=np.full(dim, 0.3))
    ei_trace: list[float] = []
    best_trace = list(np.maximum.accumulate(y))
    improvements = [best_trace[-1]]
    stop_reason = "max_iter"

    for it in range(config.max_iter):
        z = _surrogate_targets(y, config.surrogate, config.warp_quantile)
        if it % config.refit_every == 0:
            kernel = gp.fit_hyperparameters(U, z, kernel)
        posterior = gp.GaussianProcess(U, z, kernel)
        u_next, ei_val = _maximize_ei(posterior, float(z.max()), config, rng, dim)
        y_next = float(np.asarray(f(u_next[None, :]))[0])
        U = np.vstack([U, u_next])
        y = np.append(y, y_next)
        ei_trace.append(ei_val)
        if y_next > best_trace[-1]:
            improvements.append(y_next)
        best_trace.append(max(best_trace[-1], y_next))
        if _stalled(best_trace[config.n_init - 1 :], improvements, config):
            stop_reason = "stalled"
            break
    return U, y, ei_trace, stop_reason


def calibrate(
    points: Sequence[CalibrationPoint],
    bounds: ParameterBounds = ParameterBounds(),
    config: BayesOptConfig = BayesOptConfig(),
    hyper: ModelHyperparameters = ModelHyperparameters(),
    c_crit: float = 1.62,
) -> CalibrationResult:
    """Identify (a, D_t, b_e) maximizing the negative depth MSE.

    Stops when the stall rule selected by ``BayesOptConfig.stall_on`` fires,
    otherwise after ``max_iter`` acquisitions.
    """
    points = list(points)
    batch = _batch_objective(points, hyper, c_crit)
    U, y, ei_trace, stop_reason = maximize(lambda u: batch(bounds.from_unit(u)), 3, config)
    P = bounds.from_unit(U)
    i_best = int(np.argmax(y))
    best = GehlenParameters(*map(float, P[i_best]))
    x, _, _ = _point_arrays(points)
    residuals = (predicted_depths(best, points, hyper, c_crit) - x).tolist()
    return CalibrationResult(
        best_params=best,
        best_objective=float(y[i_best]),
        objective_trace=y.tolist(),
        best_trace=np.maximum.accumulate(y).tolist(),
        ei_trace=ei_trace,
        residuals=residuals,
        stop_reason=stop_reason,
        n_init=config.n_init,
        evaluated=P.tolist(),
    )
