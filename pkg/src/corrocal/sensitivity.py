"""Variance-based (Sobol) sensitivity of the chloride concentration model.

Sampling follows the cross-matrix scheme: two independent quasi-random
matrices ``A`` and ``B`` plus, for every input ``i``, the matrix ``AB_i``
equal to ``A`` with column ``i`` taken from ``B``. First-order indices use
the Saltelli (2010) estimator and total-order indices the Jansen (1999)
estimator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .bayes import PARAM_NAMES, ParameterBounds
from .errors import ConfigError, DegenerateError
from .ingest import CalibrationPoint
from .model import ModelHyperparameters, concentration_from_diffusion, gehlen_diffusion

FLAG_RANGE = (-0.05, 1.05)


def _is_power_of_two(n: int) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def sobol_matrix(n_base: int, dims: int, seed: int | None = 0, scramble: bool = True) -> np.ndarray:
    """First ``n_base`` points of a ``dims``-dimensional Sobol sequence.

    Parameters
    ----------
    n_base : int
        Number of points; must be a power of two so the net is balanced.
    dims : int
        Dimension.
    seed : int, optional
        Seed of the Owen scrambling; ignored when ``scramble`` is False.
    scramble : bool
        Apply randomized scrambling (default).

    Raises
    ------
    ConfigError
        If ``n_base`` is not a power of two.
    """
    if not _is_power_of_two(n_base):
        raise ConfigError(f"n_base must be a power of two, got {n_base}")
    if dims < 1:
        raise ConfigError("dims must be positive")
    engine = qmc.Sobol(dims, scramble=scramble, seed=seed if scramble else None)
    return engine.random_base2(int(np.log2(n_base)))


def cross_matrices(A: np.ndarray, B: np.ndarray) -> list[np.ndarray]:
    """``AB_i``: ``A`` with column ``i`` replaced by column ``i`` of ``B``."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same shape")
    out = []
    for i in range(A.shape[1]):
        AB = A.copy()
        AB[:, i] = B[:, i]
        out.append(AB)
    return out


def saltelli_evaluate(f: Callable[[np.ndarray], np.ndarray], A, B, lows=None, highs=None):
    """Evaluate ``f`` on ``A``, ``B`` and every ``AB_i``.

    ``A`` and ``B`` are unit-cube samples; when ``lows``/``highs`` are given
    they are mapped linearly to those bounds before calling ``f``. ``f``
    receives an ``(n, d)`` array and returns ``n`` outputs.

    Returns
    -------
    y_a, y_b : ndarray
    y_ab : list of ndarray
        One output vector per input dimension.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ValueError("A and B must have the same shape")

    def scale(u):
        if lows is None:
            return u
        lo = np.asarray(lows, dtype=float)
        hi = np.asarray(highs, dtype=float)
        return lo + u * (hi - lo)

    y_a = np.asarray(f(scale(A)), dtype=float)
    y_b = np.asarray(f(scale(B)), dtype=float)
    y_ab = [np.asarray(f(scale(AB)), dtype=float) for AB in cross_matrices(A, B)]
    return y_a, y_b, y_ab


def sobol_indices(y_a, y_b, y_ab: Sequence[np.ndarray], var_rtol: float = 1e-12):
    """First- and total-order Sobol indices from cross-matrix outputs.

    Returns
    -------
    s1, st : ndarray
        Raw estimates per input; may stray slightly outside [0, 1].
    variance : float
        Output variance pooled over ``y_a`` and ``y_b``.

    Raises
    ------
    DegenerateError
        When the output variance vanishes.
    """
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    if any(len(y) != len(y_a) for y in [y_b, *y_ab]):
        raise ValueError("output vectors must have equal length")
    pooled = np.concatenate([y_a, y_b])
    variance = float(np.var(pooled))
    scale = max(float(np.mean(pooled**2)), np.finfo(float).tiny)
    if variance <= var_rtol * scale:
        raise DegenerateError("model output variance is zero; indices are undefined")
    s1 = np.array([np.mean(y_b * (y - y_a)) for y in y_ab]) / variance
    st = np.array([0.5 * np.mean((y_a - y) ** 2) for y in y_ab]) / variance
    return s1, st, variance


def dummy_model(X: np.ndarray) -> np.ndarray:
    """Test function ``2 X1² + X2 + 3 X3³`` on the unit cube."""
    X = np.asarray(X, dtype=float)
    return 2.0 * X[:, 0] ** 2 + X[:, 1] + 3.0 * X[:, 2] ** 3


def dummy_model_moments() -> dict:
    """Closed-form variance and Sobol indices of :func:`dummy_model` on U(0,1)³.

    The model is additive so first- and total-order indices coincide.
    """
    # Var(c X^k) = c² (1/(2k+1) - 1/(k+1)²)
    parts = np.array([4.0 * (1 / 5 - 1 / 9), 1 / 3 - 1 / 4, 9.0 * (1 / 7 - 1 / 16)])
    total = float(parts.sum())
    return {"variance": total, "partial_variances": parts, "s1": parts / total, "st": parts / total}


@dataclass(frozen=True)
class SensitivityConfig:
    n_base: int = 8192
    bounds: ParameterBounds = field(default_factory=ParameterBounds)
    datapoints: tuple[CalibrationPoint, ...] = ()
    seed: int = 0
    scramble: bool = True

    def __post_init__(self):
        if not _is_power_of_two(self.n_base):
            raise ConfigError(f"n_base must be a power of two, got {self.n_base}")

    def to_dict(self) -> dict:
        return {
            "n_base": self.n_base,
            "bounds": self.bounds.to_dict(),
            "datapoints": [{"x": p.x, "t": p.t, "temp": p.temp} for p in self.datapoints],
            "seed": self.seed,
            "scramble": self.scramble,
        }


@dataclass
class SobolResult:
    """Per-run and averaged indices.

    ``variance_sum`` holds ``sum(S1) * Var(Y)`` per run, the additive part of
    the variance; ``variance_ratio`` is that sum over ``Var(Y)`` and equals 1
    only for additive models, so it is reported rather than enforced.
    """

    names: tuple[str, ...]
    s1_runs: np.ndarray
    st_runs: np.ndarray
    variances: np.ndarray
    variance_sum: np.ndarray

    @property
    def s1(self) -> np.ndarray:
        return self.s1_runs.mean(axis=0)

    @property
    def st(self) -> np.ndarray:
        return self.st_runs.mean(axis=0)

    @property
    def s1_clipped(self) -> np.ndarray:
        return np.clip(self.s1, 0.0, 1.0)

    @property
    def st_clipped(self) -> np.ndarray:
        return np.clip(self.st, 0.0, 1.0)

    @property
    def variance_ratio(self) -> np.ndarray:
        return self.variance_sum / self.variances

    @property
    def out_of_range(self) -> np.ndarray:
        """Boolean flag per run and input when a raw index leaves [-0.05, 1.05]."""
        lo, hi = FLAG_RANGE
        bad = lambda s: (s < lo) | (s > hi)
        return bad(self.s1_runs) | bad(self.st_runs)

    def to_dict(self) -> dict:
        named = lambda v: {n: float(x) for n, x in zip(self.names, v)}
        return {
            "names": list(self.names),
            "runs": [
                {
                    "s1": named(s1),
                    "st": named(st),
                    "variance": float(v),
                    "variance_sum": float(vs),
                    "variance_ratio": float(vs / v),
                    "out_of_range": {n: bool(f) for n, f in zip(self.names, flags)},
                }
                for s1, st, v, vs, flags in zip(
                    self.s1_runs, self.st_runs, self.variances, self.variance_sum, self.out_of_range
                )
            ],
            "average": {
                "s1": named(self.s1),
                "st": named(self.st),
                "s1_clipped": named(self.s1_clipped),
                "st_clipped": named(self.st_clipped),
            },
        }

    def to_json(self, **meta) -> str:
        payload = dict(meta)
        payload.update(self.to_dict())
        return json.dumps(payload, indent=2, sort_keys=True)

    def write_csv(self, path) -> None:
        """Long-format table for bar charts: run, parameter, S1, ST."""
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "parameter", "s1", "st"])
            for r, (s1, st) in enumerate(zip(self.s1_runs, self.st_runs)):
                for n, a, b in zip(self.names, s1, st):
                    writer.writerow([r, n, repr(float(a)), repr(float(b))])
            for n, a, b in zip(self.names, self.s1, self.st):
                writer.writerow(["mean", n, repr(float(a)), repr(float(b))])


def _sample(n_base: int, dims: int, seed: int, scramble: bool):
    AB = sobol_matrix(n_base, 2 * dims, seed, scramble)
    return AB[:, :dims], AB[:, dims:]


def analyze(f, n_base: int, dims: int, lows=None, highs=None, seed: int = 0, scramble: bool = True):
    """Sample, evaluate and estimate in one call; returns ``(s1, st, variance)``."""
    A, B = _sample(n_base, dims, seed, scramble)
    return sobol_indices(*saltelli_evaluate(f, A, B, lows, highs))


def concentration_model(point: CalibrationPoint, hyper: ModelHyperparameters):
    """``C(x, t)`` as a function of rows ``(a, D_t, b_e)``."""

    def f(P):
        d_eff = gehlen_diffusion(P[:, 0], P[:, 1], P[:, 2], point.t, point.temp, hyper)
        return concentration_from_diffusion(point.x, d_eff, point.t, hyper)

    return f


def run_analysis(config: SensitivityConfig, hyper: ModelHyperparameters = ModelHyperparameters()) -> SobolResult:
    """Sobol indices of the concentration at each datapoint, plus their average.

    All runs share one sample design; inputs are uniform within
    ``config.bounds`` (``D_t`` linearly, not in log space).
    """
    if not config.datapoints:
        raise ConfigError("at least one datapoint is required")
    dims = len(PARAM_NAMES)
    A, B = _sample(config.n_base, dims, config.seed, config.scramble)
    lows, highs = config.bounds.lows(), config.bounds.highs()
    s1_runs, st_runs, variances = [], [], []
    for point in config.datapoints:
        outputs = saltelli_evaluate(concentration_model(point, hyper), A, B, lows, highs)
        s1, st, var = sobol_indices(*outputs)
        s1_runs.append(s1)
        st_runs.append(st)
        variances.append(var)
    s1_runs = np.array(s1_runs)
    variances = np.array(variances)
    return SobolResult(PARAM_NAMES, s1_runs, np.array(st_runs), variances, s1_runs.sum(axis=1) * variances)
