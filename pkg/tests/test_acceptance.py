"""Acceptance criteria.

Each criterion prints one ``PASS`` or ``FAIL`` line and then asserts. Run
with ``pytest tests/test_acceptance.py -v`` or directly as a script
(``python tests/test_acceptance.py``) for the summary lines alone.
"""

from __future__ import annotations

import sys
import time

import mpmath
import numpy as np
import pytest

from corrocal import bayes, fixtures, nn, predict, profile, sensitivity, temperature
from corrocal.model import (
    CriticalContent,
    GehlenParameters,
    concentration,
    depth_of_content,
    mass_percent_to_kg_per_m3,
    nacl_mass_fraction_to_chloride,
)
from corrocal.special import erf, erf_inv

YEAR = 365.25 * 86400.0


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# criteria: each returns (passed, detail) -----------------------------------


def criterion_01():
    hyper, tm = fixtures.hyperparameters(), fixtures.temperature_model()
    t = np.array([55_194_877.0, 102_827_181.0, 157_826_993.0, 253_131_439.0])
    expected = np.array([0.01705657, 0.02125531, 0.02872792, 0.03388954])
    x, dt = _timed(lambda: depth_of_content(1.62, t, fixtures.sanity_parameters(), hyper, tm.evaluate(t)))
    err = float(np.max(np.abs(x - expected)))
    return err <= 1e-5 and dt < 1.0, f"max |x - x_calc| = {err:.2e} m, {dt * 1e3:.1f} ms"


def criterion_02():
    pts = fixtures.sanity_calibration_set().points
    r, dt = _timed(lambda: bayes.calibrate(pts, hyper=fixtures.hyperparameters()))
    p, true = r.best_params, fixtures.sanity_parameters()
    ok = (
        abs(p.aging_exponent - true.aging_exponent) <= 0.02
        and abs(p.d_t / true.d_t - 1) <= 0.05
        and abs(p.b_e / true.b_e - 1) <= 0.05
        and r.stop_reason == "stalled"
        and dt < 60
    )
    return ok, (
        f"a={p.aging_exponent:.5f} D_t={p.d_t:.5e} b_e={p.b_e:.2f} stop={r.stop_reason} "
        f"after {len(r.objective_trace)} evaluations, {dt:.1f} s"
    )


def criterion_03():
    hyper, b = fixtures.hyperparameters(), bayes.ParameterBounds()
    pts = fixtures.calibration_set().points
    r = bayes.calibrate(pts, b, hyper=hyper, c_crit=1.62)
    p = r.best_params
    inside = all(lo <= v <= hi for v, (lo, hi) in zip(p.as_array(), b.as_list()))
    x = np.array([q.x for q in pts])
    t = np.array([q.t for q in pts])
    temp = np.array([q.temp for q in pts])
    x_calc = depth_of_content(1.62, t, p, hyper, temp)
    table = bool(np.all(np.round(x_calc, 3) == np.round(x, 3)))
    ok = r.mse <= 2.5e-7 and inside and table
    return ok, (
        f"MSE={r.mse:.3e} m^2, a={p.aging_exponent:.4f} D_t={p.d_t:.4e} b_e={p.b_e:.1f}, "
        f"x_calc={np.round(x_calc, 5).tolist()}"
    )


def criterion_04():
    # arbitrary-precision oracle, independent of the library under test
    x = np.linspace(-4, 4, 4001)
    with mpmath.workdps(30):
        oracle = np.array([float(mpmath.erf(v)) for v in x])
    e1 = float(np.max(np.abs(erf(x) - oracle)))
    y = np.linspace(-3, 3, 20001)
    e2 = float(np.max(np.abs(erf_inv(erf(y)) - y)))
    return e1 <= 1e-10 and e2 <= 1e-9, f"erf error {e1:.2e}, erf_inv round trip {e2:.2e}"


def criterion_05():
    rng = np.random.default_rng(5)
    hyper = fixtures.hyperparameters()
    worst = 0.0
    for _ in range(1000):
        p = GehlenParameters(rng.uniform(0.1, 0.9), 10 ** rng.uniform(-12, np.log10(30e-12)), rng.uniform(1000, 5200))
        c = rng.uniform(0.05, 0.95) * hyper.c_surface
        t = 10 ** rng.uniform(6.5, 9.5)
        temp = rng.uniform(270, 300)
        x = depth_of_content(c, t, p, hyper, temp)
        worst = max(worst, abs(float(concentration(x, t, p, hyper, temp)) / c - 1))
    return worst <= 1e-9, f"max relative error {worst:.2e} over 1000 draws"


def criterion_06():
    s1, st, _ = sensitivity.analyze(sensitivity.dummy_model, 8192, 3)
    order = lambda s: bool(s[2] > s[0] > s[1])
    total = float(s1.sum())
    ok = order(s1) and order(st) and 0.9 <= total <= 1.05
    return ok, f"S1={np.round(s1, 4).tolist()} ST={np.round(st, 4).tolist()} sum S1={total:.4f}"


def criterion_07():
    cfg = sensitivity.SensitivityConfig(n_base=8192, datapoints=tuple(fixtures.calibration_set().points))
    r, dt = _timed(lambda: sensitivity.run_analysis(cfg, fixtures.hyperparameters()))
    a, d_t, b_e = r.s1
    ok = a > d_t > b_e and b_e < 0.05 and abs(a - 0.643) <= 0.10 and abs(d_t - 0.351) <= 0.10 and dt < 30
    return ok, f"averaged S1 a={a:.4f} D_t={d_t:.4f} b_e={b_e:.4f}, {dt:.2f} s"


def criterion_08():
    hyper = fixtures.hyperparameters()
    pts = fixtures.calibration_set().points
    net = nn.train(pts, hyper, 1.62)
    c = nn.predicted_content(net, pts, hyper)
    content_ok = bool(np.all(np.abs(c - 1.62) <= 0.01 * 1.62))

    rng = np.random.default_rng(8)
    norm = nn.JointNormalizer.fit([p.t for p in pts], [p.temp for p in pts])
    worst = 0.0
    h = 1e-5
    for _ in range(10):
        theta = nn.NetworkParameters.init(int(rng.integers(1 << 30))).flatten()
        theta = theta + 0.5 * rng.standard_normal(theta.size)
        theta[-1] = -12.0 + 0.3 * rng.standard_normal()
        params = nn.NetworkParameters.unflatten(theta)
        g = nn.grad(params, norm, pts, hyper, 1.62)
        fd = np.empty_like(theta)
        for i in range(theta.size):
            up, dn = theta.copy(), theta.copy()
            up[i] += h
            dn[i] -= h
            fd[i] = (
                nn.nn_loss(nn.NetworkParameters.unflatten(up), norm, pts, hyper, 1.62)
                - nn.nn_loss(nn.NetworkParameters.unflatten(dn), norm, pts, hyper, 1.62)
            ) / (2 * h)
        scale = np.maximum(np.abs(fd), 1e-6 * np.abs(fd).max())
        worst = max(worst, float(np.max(np.abs(g - fd) / scale)))
    ok = net.converged and content_ok and worst <= 1e-4
    return ok, (
        f"converged={net.converged} after {net.epochs} epochs, C={np.round(c, 5).tolist()}, "
        f"gradient rel err {worst:.1e}"
    )


def criterion_09():
    cl = float(nacl_mass_fraction_to_chloride(0.03, 1000.0))
    m = float(mass_percent_to_kg_per_m3(0.6, 270.0))
    return abs(cl - 18.19) <= 0.01 and m == 1.62, f"3 % NaCl -> {cl:.4f} kg/m^3, 0.6 M% -> {m!r} kg/m^3"


def criterion_10():
    ref = fixtures.temperature_model()
    t = np.arange(0.0, 6 * YEAR, 7 * 86400.0)
    fit = temperature.fit_cosine(temperature.samples_from_arrays(t, ref.evaluate(t)))
    ea = abs(fit.amplitude / ref.amplitude - 1)
    eo = abs(fit.offset / ref.offset - 1)
    ep = abs(fit.period / ref.period - 1)
    ok = ea <= 1e-3 and eo <= 1e-3 and ep <= 5e-3
    return ok, f"relative errors amplitude {ea:.1e}, offset {eo:.1e}, period {ep:.1e}"


def criterion_11():
    depths = 0.0025 + 0.005 * np.arange(12)
    t = 20 * YEAR
    clean = profile.profile_model(depths, 3.0, 0.5e-12, t)
    r = profile.fit_profile(profile.ChlorideProfile(depths, clean, t))
    e_c, e_d = abs(r.c_s / 3.0 - 1), abs(r.d_eff / 0.5e-12 - 1)
    noisy_c, noisy_d, r2 = [], [], []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        f = profile.fit_profile(profile.ChlorideProfile(depths, clean * (1 + 0.05 * rng.standard_normal(12)), t))
        noisy_c.append(abs(f.c_s / 3.0 - 1))
        noisy_d.append(abs(f.d_eff / 0.5e-12 - 1))
        r2.append(f.r_squared)
    mc, md, mr = np.median(noisy_c), np.median(noisy_d), np.median(r2)
    ok = e_c <= 5e-3 and e_d <= 5e-3 and mc <= 0.10 and md <= 0.10 and mr > 0.9
    return ok, (
        f"noiseless errors C_S {e_c:.1e}, D {e_d:.1e}; 5 % noise medians C_S {mc:.3f}, D {md:.3f}, R^2 {mr:.4f}"
    )


def criterion_12():
    hyper, tm = fixtures.hyperparameters(), fixtures.temperature_model()
    pts = fixtures.calibration_set().points
    model = predict.GehlenModel(bayes.calibrate(pts, hyper=hyper).best_params, hyper)
    grid = predict.default_time_grid()
    band = predict.predict_band(model, hyper, CriticalContent(1.62, 0.54, 5.4), None, grid, tm)
    inside = band.contains([p.t for p in pts], [p.x for p in pts])
    flat = predict.predict_band(model, hyper, CriticalContent(1.62, 1.62, 1.62), "nominal", grid, tm)
    width = float(np.max(flat.width))
    ok = bool(inside.all()) and width == 0.0
    return ok, f"{int(inside.sum())}/4 points inside the band, collapsed max width {width:.1e} m"


CRITERIA = [
    (1, "sanity forward depths", criterion_01),
    (2, "sanity optimizer recovery with stall stop", criterion_02),
    (3, "real four-point calibration", criterion_03),
    (4, "special functions", criterion_04),
    (5, "forward/inverse round trip", criterion_05),
    (6, "Sobol dummy oracle", criterion_06),
    (7, "Sobol on the Gehlen model", criterion_07),
    (8, "network training and gradient", criterion_08),
    (9, "unit conversions", criterion_09),
    (10, "temperature fit self-consistency", criterion_10),
    (11, "profile fit recovery", criterion_11),
    (12, "prediction band", criterion_12),
]


def _line(number, name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({name}): {detail}"


@pytest.mark.parametrize("number,name,fn", CRITERIA, ids=[f"criterion_{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(number, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, name, fn in CRITERIA:
        ok, detail = fn()
        failures += not ok
        print(_line(number, name, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
