"""Internal concrete temperature as a cosine of concrete age."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FitError, FormatError

SOLAR_YEAR = 31_557_600.0
CELSIUS_OFFSET = 273.15


@dataclass(frozen=True)
class CosineTemperatureModel:
    """``T(t) = amplitude * cos(2 pi (t + phase_shift) / period) + offset`` in Kelvin."""

    amplitude: float
    phase_shift: float
    period: float
    offset: float

    def __post_init__(self):
        if self.amplitude < 0 or self.period <= 0:
            raise DomainError("amplitude must be >= 0 and period > 0")
        if not self.offset > self.amplitude:
            raise DomainError("offset must exceed amplitude so temperatures stay positive")

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return self.amplitude * np.cos(2 * np.pi * (t + self.phase_shift) / self.period) + self.offset

    __call__ = evaluate

    @property
    def bounds(self) -> tuple[float, float]:
        return self.offset - self.amplitude, self.offset + self.amplitude

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "phase_shift": self.phase_shift,
            "period": self.period,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CosineTemperatureModel":
        return cls(float(d["amplitude"]), float(d["phase_shift"]), float(d["period"]), float(d["offset"]))


#: Cosine fit to the internal temperature sensor of the test bridge.
BRIDGE_TEMPERATURE = CosineTemperatureModel(
    amplitude=11.10, phase_shift=2_542_453.44, period=32_407_303.30, offset=284.39
)


@dataclass(frozen=True)
class TemperatureSample:
    t: float
    temp: float

    def __post_init__(self):
        if not self.temp > 0:
            raise DomainError("temperature must be positive Kelvin")


def samples_from_arrays(t, temp, celsius: bool = False) -> list[TemperatureSample]:
    temp = np.asarray(temp, dtype=float) + (CELSIUS_OFFSET if celsius else 0.0)
    return [TemperatureSample(float(a), float(b)) for a, b in zip(np.asarray(t, dtype=float), temp)]


def read_temperature_csv(path) -> list[TemperatureSample]:
    """Read ``t_seconds,temp_celsius`` or ``t_seconds,temp_kelvin`` rows."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "t_seconds" not in fields:
            raise FormatError(f"{path}: missing t_seconds column")
        if "temp_celsius" in fields:
            column, celsius = "temp_celsius", True
        elif "temp_kelvin" in fields:
            column, celsius = "temp_kelvin", False
        else:
            raise FormatError(f"{path}: need temp_celsius or temp_kelvin column")
        t, temp = [], []
        for row in reader:
            try:
                t.append(float(row["t_seconds"]))
                temp.append(float(row[column]))
            except (TypeError, ValueError) as exc:
                raise FormatError(f"{path}: bad row {row}") from exc
    return samples_from_arrays(t, temp, celsius=celsius)


def write_temperature_csv(path, samples: Sequence[TemperatureSample]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_seconds", "temp_kelvin"])
        for s in samples:
            writer.writerow([repr(s.t), repr(s.temp)])


def _residuals(theta, t, y):
    amp, phase, period, offset = theta
    return amp * np.cos(2 * np.pi * (t + phase) / period) + offset - y


def fit_cosine(
    samples: Sequence[TemperatureSample],
    period_guess: float = SOLAR_YEAR,
    n_starts: int = 4,
) -> CosineTemperatureModel:
    """Least-squares cosine fit with multi-start over the phase.

    Levenberg-Marquardt is started from ``n_starts`` phases spread over one
    period. The returned model has non-negative amplitude and a phase shift
    wrapped into ``[0, period)``.

    Raises
    ------
    FitError
        If no start reduces the residual or too few samples are given.
    """
    if len(samples) < 8:
        raise FitError("need at least 8 temperature samples")
    t = np.array([s.t for s in samples], dtype=float)
    y = np.array([s.temp for s in samples], dtype=float)

    mean = float(y.mean())
    amp0 = float(np.sqrt(2.0) * y.std())
    if amp0 == 0.0:
        # constant series: the cosine terms are unidentifiable
        return CosineTemperatureModel(0.0, 0.0, period_guess, mean)

    # the period is an x-scale parameter; fitting it in units of the guess keeps LM well scaled
    t_scaled = t / period_guess
    best = None
    for k in range(n_starts):
        theta0 = np.array([amp0, k / n_starts, 1.0, mean])
        cost0 = 0.5 * np.sum(_residuals(theta0, t_scaled, y) ** 2)
        try:
            sol = least_squares(_residuals, theta0, args=(t_scaled, y), method="lm", xtol=1e-14, ftol=1e-14)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(sol.x)) or sol.cost > cost0 or sol.x[2] <= 0:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise FitError("cosine fit failed from every initialization")

    amp, phase, period, offset = best.x
    phase *= period_guess
    period *= period_guess
    if amp < 0:
        amp, phase = -amp, phase + 0.5 * period
    phase = float(np.mod(phase, period))
    return CosineTemperatureModel(float(amp), phase, float(period), float(offset))
