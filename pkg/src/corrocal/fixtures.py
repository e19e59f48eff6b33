"""Bundled reference data for the test bridge.

Everything the acceptance checks need ships with the package, so they run
offline from a plain checkout.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .ingest import CalibrationPoint, CalibrationSet, CorrosionEvent, assemble_calibration_points, make_event
from .model import CriticalContent, GehlenParameters, ModelHyperparameters
from .temperature import CosineTemperatureModel


@lru_cache(maxsize=None)
def _load() -> dict:
    return json.loads(resources.files("corrocal").joinpath("data/bridge.json").read_text())


def bridge_data() -> dict:
    """A copy of the raw fixture dictionary."""
    return json.loads(json.dumps(_load()))


def data_path(name: str):
    return resources.files("corrocal").joinpath("data", name)


def hyperparameters() -> ModelHyperparameters:
    return ModelHyperparameters(**_load()["hyperparameters"])


def critical_content() -> CriticalContent:
    c = _load()["critical_content"]
    return CriticalContent(c["mean"], c["lower"], c["upper"])


def temperature_model() -> CosineTemperatureModel:
    return CosineTemperatureModel.from_dict(_load()["temperature_model"])


def bridge_events() -> list[CorrosionEvent]:
    """The five wire failures; failure time is onset plus the 24-day lead."""
    d = _load()
    lead = d["lead_time_s"]
    return [
        make_event(w["wire_id"], w["x"], w["onset_t"] + lead, lead, table_temp=w["table_temp_c"] + 273.15)
        for w in d["wires"]
    ]


def bridge_exclusions() -> dict[str, str]:
    return dict(_load()["exclusions"])


def calibration_set(exclude: bool = True) -> CalibrationSet:
    """Calibration points of the bridge, first wire excluded by default."""
    exclusions = bridge_exclusions() if exclude else {}
    points, _ = assemble_calibration_points(bridge_events(), temperature_model(), exclusions)
    return points


def sanity_parameters() -> GehlenParameters:
    return GehlenParameters.from_dict(_load()["sanity"]["true_params"])


def sanity_calibration_set() -> CalibrationSet:
    """Calibration points whose depths were generated by the sanity parameters."""
    real = calibration_set()
    depths = _load()["sanity"]["depths"]
    return CalibrationSet([CalibrationPoint(x, p.t, p.temp) for x, p in zip(depths, real.points)])


def literature_parameters() -> GehlenParameters:
    """RCM test coefficient with literature aging and temperature factors (k_t = 1)."""
    r = _load()["rcm_literature"]
    return GehlenParameters(r["aging_exponent"], r["k_t"] * r["d_rcm"], r["b_e"])


def synthetic_sensor_samples(step_days: float = 7.0, baseline: float = 2.0, open_circuit: float = 1e6):
    """Weekly resistance series with one open-circuit jump per wire.

    The jump sample sits exactly at each wire's failure time, so ingesting
    the series reproduces the bundled events. Baseline resistance carries a
    small deterministic ripple.
    """
    from .ingest import ResistanceSample
    from .model import SECONDS_PER_DAY

    events = bridge_events()
    end = max(e.failure_time for e in events) + 60 * SECONDS_PER_DAY
    grid = np.arange(step_days * SECONDS_PER_DAY, end, step_days * SECONDS_PER_DAY)
    samples = []
    for k, e in enumerate(events):
        t = np.union1d(grid, [e.failure_time])
        ripple = 0.02 * np.sin(2 * np.pi * t / (30 * SECONDS_PER_DAY) + k)
        r = np.where(t >= e.failure_time, open_circuit, baseline + ripple)
        samples.extend(ResistanceSample(float(a), float(b), e.wire_id, e.wire_depth) for a, b in zip(t, r))
    return samples


def synthetic_temperature_samples(years: float = 6.0, step_days: float = 7.0):
    """Weekly samples of the bridge cosine temperature model."""
    from .model import SECONDS_PER_DAY
    from .temperature import samples_from_arrays

    t = np.arange(0.0, years * 365.25 * SECONDS_PER_DAY, step_days * SECONDS_PER_DAY)
    return samples_from_arrays(t, temperature_model().evaluate(t))
