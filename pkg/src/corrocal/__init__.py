"""Calibration and prediction of chloride-induced reinforcement corrosion.

Submodules
----------
model        error-function diffusion solution and Gehlen diffusivity
temperature  cosine internal-temperature model and its fit
ingest       wire-sensor resistance jumps to calibration points
bayes        Gehlen parameters by Gaussian-process Bayesian optimization
nn           neural-network surrogate of the effective diffusivity
sensitivity  Sobol indices by cross-matrix sampling
profile      drilling-dust profile regression
predict      time-depth bands and diffusivity curves
cli          command-line front end
"""

__version__ = "0.1.0"
