"""Where will the front be in twenty years?

Both calibrated models are projected over 20 years with the critical
content uncertain in [0.54, 5.4] kg/m³ and temperature between the
seasonal extremes. A laboratory migration coefficient with literature
aging and temperature factors gives a third, uncalibrated curve. Plot-ready
CSVs are written to the directory given as the first argument (default
``demo_output``).
"""

import sys
from pathlib import Path

import numpy as np

from corrocal import bayes, fixtures, nn, predict

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(parents=True, exist_ok=True)
hyper, temps, c_crit = fixtures.hyperparameters(), fixtures.temperature_model(), fixtures.critical_content()
points = fixtures.calibration_set().points

models = [
    predict.GehlenModel(bayes.calibrate(points, hyper=hyper).best_params, hyper),
    predict.NetworkModel(nn.train(points, hyper, 1.62)),
    predict.rcm_literature_model(hyper=hyper),
]
grid = predict.default_time_grid()
year = 365.25 * 86400
for model in models:
    band = predict.predict_band(model, hyper, c_crit, None, grid, temps)
    band.write_csv(out / f"band_{model.tag}.csv")
    predict.write_diffusion_csv(out / f"d_eff_{model.tag}.csv", *predict.effective_diffusion_curve(model, grid, temps))
    inside = band.contains([p.t for p in points], [p.x for p in points])
    i10 = np.searchsorted(grid, 10 * year)
    print(f"{model.tag:15s} depth at 10 years: {band.depth_mean[i10] * 1000:5.1f} mm "
          f"[{band.depth_lo[i10] * 1000:5.1f}, {band.depth_hi[i10] * 1000:5.1f}]  "
          f"events inside band: {int(inside.sum())}/{len(points)}")
print(f"\nCSV files written to {out}/")
