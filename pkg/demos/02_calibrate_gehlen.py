"""Approach A: Bayesian optimization of the Gehlen parameters.

First the optimizer is checked on synthetic depths generated from known
parameters, which it must recover. It then calibrates progressively on
the first k = 1..4 wire-sensor events, as new failures would arrive in
service. Parameters are weakly identified from few points, so the early
fits wander before settling.
"""

from corrocal import bayes, fixtures

hyper = fixtures.hyperparameters()

sanity = bayes.calibrate(fixtures.sanity_calibration_set().points, hyper=hyper)
p = sanity.best_params
print("clean-data recovery (true a = 0.2, D_t = 2e-12, b_e = 2050):")
print(f"  a = {p.aging_exponent:.5f}  D_t = {p.d_t:.5e}  b_e = {p.b_e:.2f}  "
      f"stop = {sanity.stop_reason} after {len(sanity.objective_trace)} evaluations")

points = fixtures.calibration_set().points
print("\nprogressive calibration on the bridge events (C_crit = 1.62 kg/m³):")
for k in range(1, len(points) + 1):
    r = bayes.calibrate(points[:k], hyper=hyper)
    p = r.best_params
    print(f"  k = {k}: a = {p.aging_exponent:.4f}  D_t = {p.d_t:.4e}  b_e = {p.b_e:7.1f}  "
          f"RMS depth error = {r.mse ** 0.5 * 1000:.3f} mm  ({r.stop_reason})")
