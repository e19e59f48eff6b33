"""Closed-form chloride transport.

Chloride ingress is described by the error-function solution of Fick's second
law with a time- and temperature-dependent effective diffusion coefficient.
All quantities use SI units internally: seconds, metres, Kelvin, kg/m³ and
m²/s.

The Gehlen form of the effective diffusion coefficient is

.. math::

    D_{eff}(t, T) = \\exp\\left(b_e\\left(\\frac{1}{T_{ref}} - \\frac{1}{T}\\right)\\right)
                    D_t \\left(\\frac{t_0}{t}\\right)^a

and the concentration profile is

.. math::

    C(x, t) = C_{S,\\Delta x}\\left[1 - \\mathrm{erf}\\left(\\frac{x - \\Delta x}
              {2\\sqrt{D_{eff}(t)\\,t}}\\right)\\right].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, DomainError
from .special import erf_inv, erfc

SECONDS_PER_DAY = 86_400.0
MOLAR_MASS_NACL = 58.44  # g/mol
MOLAR_MASS_CL = 35.45  # g/mol
NACL_SATURATION = 0.26  # mass fraction, room temperature


@dataclass(frozen=True)
class ModelHyperparameters:
    """Fixed model constants.

    Parameters
    ----------
    delta_x : float
        Depth of the convection zone [m].
    c_surface : float
        Chloride concentration at ``delta_x`` [kg/m³].
    t_ref_age : float
        Reference concrete age ``t0`` [s].
    temp_ref : float
        Reference temperature [K].
    """

    delta_x: float = 0.0
    c_surface: float = 18.19
    t_ref_age: float = 2.419e6
    temp_ref: float = 293.15

    def __post_init__(self):
        if not (self.c_surface > 0 and self.t_ref_age > 0 and self.temp_ref > 0):
            raise DomainError("c_surface, t_ref_age and temp_ref must be positive")
        if not self.delta_x >= 0:
            raise DomainError("delta_x must be non-negative")


@dataclass(frozen=True)
class GehlenParameters:
    """Identified parameters of the Gehlen diffusion model.

    ``d_t`` is the product of the transfer parameter and the RCM migration
    coefficient; the two factors are not separately identifiable.
    """

    aging_exponent: float
    d_t: float
    b_e: float

    def __post_init__(self):
        vals = (self.aging_exponent, self.d_t, self.b_e)
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise DomainError(f"Gehlen parameters must be finite and positive, got {vals}")
        if not self.aging_exponent < 1:
            raise DomainError("aging_exponent must be < 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.aging_exponent, self.d_t, self.b_e])

    def to_dict(self) -> dict:
        return {"aging_exponent": self.aging_exponent, "d_t": self.d_t, "b_e": self.b_e}

    @classmethod
    def from_dict(cls, d: dict) -> "GehlenParameters":
        return cls(float(d["aging_exponent"]), float(d["d_t"]), float(d["b_e"]))


@dataclass(frozen=True)
class CriticalContent:
    """Critical chloride content with its uncertainty interval [kg/m³]."""

    mean: float = 1.62
    lower: float = 0.54
    upper: float = 5.4

    def __post_init__(self):
        if not 0 < self.lower <= self.mean <= self.upper:
            raise DomainError("critical content must satisfy 0 < lower <= mean <= upper")

    def check(self, hyper: ModelHyperparameters) -> None:
        if not self.upper < hyper.c_surface:
            raise DomainError("critical content upper bound must be below c_surface")


def gehlen_diffusion(aging_exponent, d_t, b_e, t, temp, hyper: ModelHyperparameters):
    """Vectorized Gehlen effective diffusion coefficient [m²/s].

    All parameter and state arguments broadcast against each other.
    """
    t = np.asarray(t, dtype=float)
    temp = np.asarray(temp, dtype=float)
    if np.any(t <= 0) or np.any(temp <= 0):
        raise DomainError("time and temperature must be positive")
    k_e = np.exp(b_e * (1.0 / hyper.temp_ref - 1.0 / temp))
    aging = (hyper.t_ref_age / t) ** aging_exponent
    return k_e * d_t * aging


def effective_diffusion(params: GehlenParameters, hyper: ModelHyperparameters, t, temp):
    """Effective diffusion coefficient for one parameter set."""
    return gehlen_diffusion(params.aging_exponent, params.d_t, params.b_e, t, temp, hyper)


def concentration_from_diffusion(x, d_eff, t, hyper: ModelHyperparameters):
    """Chloride concentration at depth ``x`` given ``D_eff(t)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < hyper.delta_x):
        raise DomainError("depth lies inside the convection zone (x < delta_x)")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("time must be positive")
    arg = (x - hyper.delta_x) / (2.0 * np.sqrt(d_eff * t))
    # erfc keeps relative precision deep in the profile where erf rounds to 1
    return hyper.c_surface * erfc(arg)


def depth_from_diffusion(c_target, d_eff, t, hyper: ModelHyperparameters):
    """Depth where the concentration equals ``c_target`` given ``D_eff(t)``."""
    c_target = np.asarray(c_target, dtype=float)
    if np.any(c_target <= 0) or np.any(c_target >= hyper.c_surface):
        raise DomainError("target content must lie in (0, c_surface)")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("time must be positive")
    return hyper.delta_x + 2.0 * erf_inv(1.0 - c_target / hyper.c_surface) * np.sqrt(d_eff * t)


def concentration(x, t, params: GehlenParameters, hyper: ModelHyperparameters, temp):
    """Chloride concentration [kg/m³] at depth ``x`` [m] and age ``t`` [s]."""
    d_eff = effective_diffusion(params, hyper, t, temp)
    return concentration_from_diffusion(x, d_eff, t, hyper)


def depth_of_content(c_target, t, params: GehlenParameters, hyper: ModelHyperparameters, temp):
    """Depth [m] at which the chloride content reaches ``c_target``."""
    d_eff = effective_diffusion(params, hyper, t, temp)
    return depth_from_diffusion(c_target, d_eff, t, hyper)


def time_to_depth(
    x: float,
    c_target: float,
    depth_at: Callable[[float, float], float],
    t_bracket: tuple[float, float],
    rtol: float = 1e-6,
    max_iter: int = 200,
    n_scan: int = 512,
) -> float:
    """First age at which the ``c_target`` front reaches depth ``x``.

    Under a seasonal temperature the front depth oscillates, so the bracket
    is first scanned on ``n_scan`` log-spaced ages for the earliest sign
    change, which is then refined by bisection.

    Parameters
    ----------
    x : float
        Target depth [m].
    c_target : float
        Chloride content that defines the front [kg/m³].
    depth_at : callable
        ``depth_at(c_target, t)`` returning the front depth at age ``t``.
        Use :func:`gehlen_depth_function` for the Gehlen model.
    t_bracket : (float, float)
        Search interval [s].

    Raises
    ------
    BracketError
        If the front never reaches ``x`` within the bracket or the front is
        already beyond ``x`` at its start.
    """
    lo, hi = float(t_bracket[0]), float(t_bracket[1])
    if not 0 < lo < hi:
        raise BracketError("bracket must satisfy 0 < lo < hi")
    grid = np.geomspace(lo, hi, max(n_scan, 2))
    f = np.array([depth_at(c_target, t) - x for t in grid])
    if f[0] >= 0:
        if f[0] == 0:
            return lo
        raise BracketError(f"front is already beyond {x} m at the start of the bracket")
    crossed = np.flatnonzero(f >= 0)
    if crossed.size == 0:
        raise BracketError(f"depth {x} m is not reached within [{lo}, {hi}] s")
    j = crossed[0]
    lo, hi = grid[j - 1], grid[j]
    if f[j] == 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if depth_at(c_target, mid) - x < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * mid:
            break
    return 0.5 * (lo + hi)


def gehlen_depth_function(params: GehlenParameters, hyper: ModelHyperparameters, temp_model):
    """Build ``depth_at(c, t)`` for :func:`time_to_depth` from a temperature model."""

    def depth_at(c_target, t):
        return float(depth_of_content(c_target, t, params, hyper, temp_model.evaluate(t)))

    return depth_at


def nacl_mass_fraction_to_chloride(w, solution_density: float = 1000.0):
    """Chloride ion concentration [kg/m³] of a NaCl solution of mass fraction ``w``."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0) or np.any(w >= NACL_SATURATION):
        raise DomainError("NaCl mass fraction must lie in [0, saturation)")
    if solution_density <= 0:
        raise DomainError("solution density must be positive")
    return w * solution_density * (MOLAR_MASS_CL / MOLAR_MASS_NACL)


def mass_percent_to_kg_per_m3(m_pct, cement_content: float = 270.0):
    """Convert chloride in % of cement mass to kg per m³ of concrete."""
    m_pct = np.asarray(m_pct, dtype=float)
    if np.any(m_pct < 0):
        raise DomainError("mass percentage must be non-negative")
    if cement_content <= 0:
        raise DomainError("cement content must be positive")
    return m_pct / 100.0 * cement_content


def kg_per_m3_to_mass_percent(c, cement_content: float = 270.0):
    """Inverse of :func:`mass_percent_to_kg_per_m3`."""
    if cement_content <= 0:
        raise DomainError("cement content must be positive")
    return np.asarray(c, dtype=float) / cement_content * 100.0
