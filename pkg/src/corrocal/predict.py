"""Time-depth corrosion-front predictions with interval uncertainty.

A model is anything exposing ``diffusion(t, temp)`` in m²/s. The band at
each time is spanned by the corner combinations of critical content and
temperature extremes together with the nominal curve (mean critical
content, cosine temperature).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import DomainError
from .model import (
    SECONDS_PER_DAY,
    CriticalContent,
    GehlenParameters,
    ModelHyperparameters,
    depth_from_diffusion,
    effective_diffusion,
)
from .temperature import CosineTemperatureModel

MODEL_TAGS = ("gehlen", "nn", "rcm_literature")


class DiffusionModel(Protocol):
    tag: str

    def diffusion(self, t, temp) -> np.ndarray: ...


@dataclass(frozen=True)
class GehlenModel:
    params: GehlenParameters
    hyper: ModelHyperparameters = ModelHyperparameters()
    tag: str = "gehlen"

    def diffusion(self, t, temp):
        return effective_diffusion(self.params, self.hyper, t, temp)


@dataclass(frozen=True)
class NetworkModel:
    """Adapter around a trained network (anything with ``diffusion``)."""

    network: object
    tag: str = "nn"

    def diffusion(self, t, temp):
        return self.network.diffusion(t, temp)


def rcm_literature_model(
    d_rcm: float = 17.6e-12,
    aging_exponent: float = 0.3,
    k_t: float = 1.0,
    b_e: float = 4800.0,
    hyper: ModelHyperparameters = ModelHyperparameters(),
) -> GehlenModel:
    """Forward model from a laboratory migration coefficient and literature factors."""
    return GehlenModel(GehlenParameters(aging_exponent, k_t * d_rcm, b_e), hyper, tag="rcm_literature")


def default_time_grid(n: int = 200, start_days: float = 30.0, stop_years: float = 20.0) -> np.ndarray:
    """Log-spaced ages from ``start_days`` to ``stop_years`` (365.25-day years)."""
    return np.geomspace(start_days * SECONDS_PER_DAY, stop_years * 365.25 * SECONDS_PER_DAY, n)


@dataclass(frozen=True)
class PredictionBand:
    times: np.ndarray
    depth_lo: np.ndarray
    depth_mean: np.ndarray
    depth_hi: np.ndarray
    model_tag: str

    @property
    def width(self) -> np.ndarray:
        return self.depth_hi - self.depth_lo

    def contains(self, t, x, rtol: float = 0.0) -> np.ndarray:
        """Whether each ``(t, x)`` lies inside the band, interpolating in log time."""
        lt = np.log(self.times)
        lo = np.interp(np.log(t), lt, self.depth_lo)
        hi = np.interp(np.log(t), lt, self.depth_hi)
        x = np.asarray(x, dtype=float)
        return (x >= lo * (1 - rtol)) & (x <= hi * (1 + rtol))

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_seconds", "depth_lo_m", "depth_mean_m", "depth_hi_m"])
            for row in zip(self.times, self.depth_lo, self.depth_mean, self.depth_hi):
                writer.writerow([repr(float(v)) for v in row])


def _check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be positive and strictly increasing")
    return times


def predict_band(
    model: DiffusionModel,
    hyper: ModelHyperparameters,
    c_crit: CriticalContent,
    temp_bounds: tuple[float, float] | str | None,
    times,
    temp_model: CosineTemperatureModel,
) -> PredictionBand:
    """Depth of the critical content over time with its uncertainty band.

    Parameters
    ----------
    model
        Diffusion model with ``diffusion(t, temp)``.
    c_crit : CriticalContent
        Mean and interval of the critical content.
    temp_bounds : (float, float), None or "nominal"
        Temperature extremes [K]; ``None`` takes the cosine model's range and
        ``"nominal"`` drops temperature uncertainty (corners use ``T(t)``).
    times : array
        Strictly increasing ages [s].
    temp_model : CosineTemperatureModel
        Supplies the nominal temperature of the mean curve.

    Notes
    -----
    For the Gehlen model depth falls with the critical content and rises
    with temperature, so the extremes are (lower C, upper T) and (upper C,
    lower T). The envelope is taken over all four corners and the nominal
    curve so that it also holds for non-monotone models.
    """
    times = _check_grid(times)
    c_crit.check(hyper)
    nominal = temp_model.evaluate(times)
    if isinstance(temp_bounds, str):
        if temp_bounds != "nominal":
            raise DomainError(f"unknown temperature bound mode {temp_bounds!r}")
        temp_series = [nominal]
    else:
        t_lo, t_hi = map(float, temp_model.bounds if temp_bounds is None else temp_bounds)
        if not 0 < t_lo <= t_hi:
            raise DomainError("temperature bounds must satisfy 0 < lower <= upper")
        temp_series = [np.full_like(times, t_lo), np.full_like(times, t_hi)]

    mean = depth_from_diffusion(c_crit.mean, model.diffusion(times, nominal), times, hyper)
    corners = [mean]
    for c in (c_crit.lower, c_crit.upper):
        for temps in temp_series:
            corners.append(depth_from_diffusion(c, model.diffusion(times, temps), times, hyper))
    stack = np.vstack(corners)
    tag = getattr(model, "tag", "gehlen")
    return PredictionBand(times, stack.min(axis=0), mean, stack.max(axis=0), tag)


def effective_diffusion_curve(model: DiffusionModel, times, temp_model=None, temp: float | None = None):
    """``(t, D_eff)`` along the grid at the model temperature or a fixed ``temp``."""
    times = _check_grid(times)
    if temp is not None:
        temps = np.full_like(times, float(temp))
    elif temp_model is not None:
        temps = temp_model.evaluate(times)
    else:
        raise DomainError("need a temperature model or a fixed temperature")
    return times, np.asarray(model.diffusion(times, temps), dtype=float)


def write_diffusion_csv(path, times, d_eff) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "d_eff_m2_per_s"])
        for t, d in zip(times, d_eff):
            writer.writerow([repr(float(t)), repr(float(d))])
