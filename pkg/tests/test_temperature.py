import numpy as np
import pytest

from corrocal.errors import DomainError, FitError, FormatError
from corrocal.temperature import (
    BRIDGE_TEMPERATURE,
    CosineTemperatureModel,
    TemperatureSample,
    fit_cosine,
    read_temperature_csv,
    samples_from_arrays,
    write_temperature_csv,
)

WEEK = 7 * 86400.0
YEAR = 365.25 * 86400.0


def weekly(model, years=6.0, shift=0.0):
    t = np.arange(0.0, years * YEAR, WEEK) + shift
    return t, model(t)


def test_bridge_model_extremes():
    assert BRIDGE_TEMPERATURE(-2_542_453.44) == pytest.approx(295.49, abs=1e-12)
    lo, hi = BRIDGE_TEMPERATURE.bounds
    assert (lo, hi) == pytest.approx((273.29, 295.49), abs=1e-12)
    t = np.linspace(0, 3e8, 100001)
    y = BRIDGE_TEMPERATURE(t)
    assert y.min() >= lo - 1e-12 and y.max() <= hi + 1e-12


def test_zero_amplitude_is_constant():
    m = CosineTemperatureModel(0.0, 123.0, 3e7, 280.0)
    assert np.all(m(np.linspace(0, 1e8, 50)) == 280.0)


@pytest.mark.parametrize("args", [(-1.0, 0.0, 3e7, 280.0), (1.0, 0.0, 0.0, 280.0), (300.0, 0.0, 3e7, 280.0)])
def test_model_invariants(args):
    with pytest.raises(DomainError):
        CosineTemperatureModel(*args)


def test_sample_invariant():
    with pytest.raises(DomainError):
        TemperatureSample(0.0, -3.0)


def test_noiseless_fit_recovers_model():
    t, y = weekly(BRIDGE_TEMPERATURE)
    fit = fit_cosine(samples_from_arrays(t, y))
    rmse = np.sqrt(np.mean((fit(t) - y) ** 2))
    assert rmse < 1e-6
    assert fit.amplitude == pytest.approx(11.10, rel=1e-6)
    assert fit.offset == pytest.approx(284.39, rel=1e-9)
    assert fit.period == pytest.approx(32_407_303.30, rel=1e-6)
    assert fit.phase_shift == pytest.approx(2_542_453.44, rel=1e-5)


def test_noisy_fit_within_standard_error():
    # least-squares standard errors: offset sigma/sqrt(n), amplitude sigma*sqrt(2/n)
    sigma, n = 0.5, 500
    t = np.linspace(0, 6 * YEAR, n)
    amp_err, off_err = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        y = BRIDGE_TEMPERATURE(t) + sigma * rng.standard_normal(n)
        fit = fit_cosine(samples_from_arrays(t, y))
        amp_err.append(abs(fit.amplitude - 11.10))
        off_err.append(abs(fit.offset - 284.39))
    bound = 3 * sigma / np.sqrt(n)
    assert np.median(amp_err) <= bound
    assert np.median(off_err) <= bound
    assert np.max(off_err) <= bound * 1.5


def test_constant_series():
    samples = samples_from_arrays(np.arange(20) * WEEK, np.full(20, 281.0))
    fit = fit_cosine(samples)
    assert fit.amplitude == 0.0
    assert fit.offset == 281.0


def test_too_few_samples():
    with pytest.raises(FitError):
        fit_cosine(samples_from_arrays(np.arange(5) * WEEK, np.full(5, 281.0)))


def test_fit_not_worse_than_start():
    t, y = weekly(BRIDGE_TEMPERATURE, years=2.0)
    fit = fit_cosine(samples_from_arrays(t, y))
    start = CosineTemperatureModel(np.sqrt(2) * y.std(), 0.0, 31_557_600.0, y.mean())
    assert np.sum((fit(t) - y) ** 2) <= np.sum((start(t) - y) ** 2)


def test_time_shift_changes_only_phase():
    t, y = weekly(BRIDGE_TEMPERATURE)
    base = fit_cosine(samples_from_arrays(t, y))
    shift = 4.1e6
    shifted = fit_cosine(samples_from_arrays(t + shift, y))
    assert shifted.amplitude == pytest.approx(base.amplitude, rel=1e-6)
    assert shifted.period == pytest.approx(base.period, rel=1e-6)
    assert shifted.offset == pytest.approx(base.offset, rel=1e-9)
    dphase = np.mod(base.phase_shift - shifted.phase_shift - shift, base.period)
    assert min(dphase, base.period - dphase) < 1.0


def test_csv_roundtrip_kelvin_and_celsius(tmp_path):
    t, y = weekly(BRIDGE_TEMPERATURE, years=1.0)
    path = tmp_path / "temp.csv"
    write_temperature_csv(path, samples_from_arrays(t, y))
    back = read_temperature_csv(path)
    assert [s.temp for s in back] == list(y)
    celsius = tmp_path / "celsius.csv"
    celsius.write_text("t_seconds,temp_celsius\n0,10.0\n60,11.5\n")
    assert [s.temp for s in read_temperature_csv(celsius)] == pytest.approx([283.15, 284.65])


def test_csv_format_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t_seconds,temperature\n0,10\n")
    with pytest.raises(FormatError):
        read_temperature_csv(bad)
    bad.write_text("t_seconds,temp_kelvin\n0,abc\n")
    with pytest.raises(FormatError):
        read_temperature_csv(bad)
