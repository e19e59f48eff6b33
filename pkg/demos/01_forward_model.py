"""Forward model: from parameters to corrosion-front depths.

The chloride front reaches the steel once the concentration at the steel
depth climbs to the critical content. This script evaluates the forward
model for the clean-data parameters (a = 0.2, D_t = 2e-12 m²/s,
b_e = 2050 K), prints the depths at the four wire-failure ages and a
concentration profile, and inverts one depth back to a time.
"""

import numpy as np

from corrocal import fixtures
from corrocal.model import concentration, depth_of_content, gehlen_depth_function, time_to_depth

hyper = fixtures.hyperparameters()
temps = fixtures.temperature_model()
params = fixtures.sanity_parameters()
print(f"hyperparameters: {hyper}")
print(f"temperature model: {temps.to_dict()}  range {temps.bounds[0]:.2f} to {temps.bounds[1]:.2f} K")

t = np.array([55_194_877.0, 102_827_181.0, 157_826_993.0, 253_131_439.0])
x = depth_of_content(1.62, t, params, hyper, temps.evaluate(t))
print("\nage [d]   T [K]    depth of 1.62 kg/m³ [m]")
for ti, xi in zip(t, x):
    print(f"{ti / 86400:7.0f}  {temps.evaluate(ti):7.2f}  {xi:.8f}")

print("\nprofile after the last age:")
depths = np.linspace(0.0, 0.06, 7)
c = concentration(depths, t[-1], params, hyper, temps.evaluate(t[-1]))
for d, ci in zip(depths, c):
    print(f"  x = {d * 1000:4.0f} mm   C = {ci:6.3f} kg/m³")

t_hit = time_to_depth(0.02, 1.62, gehlen_depth_function(params, hyper, temps), (30 * 86400.0, 50 * 365.25 * 86400.0))
print(f"\nthe 1.62 kg/m³ front first reaches 20 mm after {t_hit / 86400:.0f} days")
