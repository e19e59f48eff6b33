"""Approach B: a small network for the effective diffusion coefficient.

A 2-10-10-1 rectifier network maps (age, temperature) to log10 D_eff and
is trained with Adam against the same depth loss as approach A. With
four points and 151 weights it interpolates the data rather than learning
a physical law, so predictions far from the calibration ages should be
read with care.
"""

import numpy as np

from corrocal import fixtures, nn

hyper = fixtures.hyperparameters()
points = fixtures.calibration_set().points
net = nn.train(points, hyper, 1.62)
print(f"converged = {net.converged} after {net.epochs} epochs, final loss {net.final_loss:.3e} m²")

content = nn.predicted_content(net, points, hyper)
depths = nn.predicted_depths(net, points, 1.62, hyper)
print("\n  x [m]   t [d]   D_eff [m²/s]   C(x, t) [kg/m³]   depth of 1.62 [m]")
for p, c, d in zip(points, content, depths):
    print(f"  {p.x:.3f}  {p.t / 86400:6.0f}   {net.diffusion(p.t, p.temp):.4e}      {c:.5f}          {d:.5f}")

ages = np.array([1, 5, 10, 20]) * 365.25 * 86400
print("\nextrapolated D_eff at 283 K:", ", ".join(f"{d:.2e}" for d in net.diffusion(ages, 283.0)))
