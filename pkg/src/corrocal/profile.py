"""Regression of surface content and diffusivity from drilling-dust profiles.

Fits ``C(x) = C_S [1 - erf(x / (2 sqrt(D t)))]`` to layered chloride
contents by nonlinear least squares with ``D`` searched in log10.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .errors import DataError, DomainError, FitError, FormatError
from .model import mass_percent_to_kg_per_m3

DEFAULT_LOG10_D_STARTS = (-14.0, -13.0, -12.0, -11.0)
LOG10_D_BOUNDS = (-18.0, -7.0)


@dataclass(frozen=True)
class ChlorideProfile:
    """Layer midpoints [m], contents [kg/m³] and exposure age [s].

    Layers shallower than ``exclusion_depth`` are ignored by the fit.
    """

    depths: np.ndarray
    contents: np.ndarray
    exposure_age: float
    exclusion_depth: float = 0.0
    cement_content: float = 270.0

    def __post_init__(self):
        depths = np.asarray(self.depths, dtype=float)
        contents = np.asarray(self.contents, dtype=float)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "contents", contents)
        if depths.ndim != 1 or depths.shape != contents.shape:
            raise DomainError("depths and contents must be 1-D and equally long")
        if np.any(np.diff(depths) <= 0):
            raise DomainError("depths must be strictly increasing")
        if np.any(depths < 0) or np.any(contents < 0) or not np.all(np.isfinite(contents)):
            raise DomainError("depths and contents must be finite and non-negative")
        if not self.exposure_age > 0:
            raise DomainError("exposure age must be positive")

    @classmethod
    def from_mass_percent(cls, depths, m_pct, exposure_age, exclusion_depth=0.0, cement_content=270.0):
        """Build a profile from contents given as mass-% of cement."""
        contents = mass_percent_to_kg_per_m3(np.asarray(m_pct, dtype=float), cement_content)
        return cls(depths, contents, exposure_age, exclusion_depth, cement_content)

    @property
    def mask(self) -> np.ndarray:
        return self.depths >= self.exclusion_depth

    def metadata(self) -> dict:
        return {
            "exposure_age": self.exposure_age,
            "exclusion_depth": self.exclusion_depth,
            "cement_content": self.cement_content,
        }


@dataclass(frozen=True)
class ProfileFitResult:
    c_s: float
    d_eff: float
    r_squared: float
    n_used: int
    cost: float
    at_bound: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def profile_model(x, c_s, d_eff, t):
    return c_s * (1.0 - erf(np.asarray(x, dtype=float) / (2.0 * np.sqrt(d_eff * t))))


def _residuals(theta, x, y, t):
    return profile_model(x, theta[0], 10.0 ** theta[1], t) - y


def fit_profile(profile: ChlorideProfile, log10_d_starts=DEFAULT_LOG10_D_STARTS, min_layers: int = 4) -> ProfileFitResult:
    """Least-squares fit of ``(C_S, D_eff)``.

    For every start of ``log10 D`` the surface content is initialized from its
    closed-form optimum (the model is linear in ``C_S``); the best converged
    solution is returned.

    Raises
    ------
    DataError
        If fewer than ``min_layers`` layers remain after exclusion.
    FitError
        If every start fails or the data carry no depth information.
    """
    mask = profile.mask
    x = profile.depths[mask]
    y = profile.contents[mask]
    if x.size == 0:
        raise DataError("all layers are excluded")
    if x.size < min_layers:
        raise DataError(f"need at least {min_layers} layers after exclusion, got {x.size}")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(y**2))):
        raise FitError("constant profile: diffusivity is not identifiable")

    t = profile.exposure_age
    lo, hi = LOG10_D_BOUNDS
    best = None
    for log_d in log10_d_starts:
        shape = profile_model(x, 1.0, 10.0**log_d, t)
        denom = float(shape @ shape)
        c0 = float(shape @ y) / denom if denom > 0 else float(y.max())
        theta0 = np.array([max(c0, 1e-6), log_d])
        cost0 = 0.5 * float(np.sum(_residuals(theta0, x, y, t) ** 2))
        try:
            sol = least_squares(
                _residuals, theta0, args=(x, y, t), bounds=([0.0, lo], [np.inf, hi]), x_scale=[max(c0, 1.0), 1.0],
                xtol=1e-14, ftol=1e-14, gtol=1e-14,
            )
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(sol.x)) or sol.cost > cost0:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None:
        raise FitError("profile fit failed from every start")

    c_s, log_d = best.x
    r2 = 1.0 - 2.0 * best.cost / ss_tot
    at_bound = bool(np.isclose(log_d, lo, atol=1e-6) or np.isclose(log_d, hi, atol=1e-6))
    return ProfileFitResult(float(c_s), float(10.0**log_d), float(r2), int(x.size), float(best.cost), at_bound)


def read_profile_csv(path, metadata: dict | None = None) -> ChlorideProfile:
    """Read a profile CSV plus its metadata.

    The CSV holds ``depth_m,chloride_kg_per_m3`` or ``depth_m,chloride_mpct``.
    Metadata (``exposure_age`` [s], optional ``exclusion_depth`` [m] and
    ``cement_content`` [kg/m³]) defaults to the sidecar ``<path>.json``.
    """
    path = Path(path)
    if metadata is None:
        sidecar = path.with_suffix(".json")
        if not sidecar.exists():
            raise FileNotFoundError(f"{sidecar}: metadata sidecar not found")
        metadata = json.loads(sidecar.read_text())
    if "exposure_age" not in metadata:
        raise FormatError(f"{path}: metadata lacks exposure_age")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "depth_m" not in fields:
            raise FormatError(f"{path}: missing depth_m column")
        if "chloride_kg_per_m3" in fields:
            column, mpct = "chloride_kg_per_m3", False
        elif "chloride_mpct" in fields:
            column, mpct = "chloride_mpct", True
        else:
            raise FormatError(f"{path}: need chloride_kg_per_m3 or chloride_mpct column")
        try:
            rows = [(float(r["depth_m"]), float(r[column])) for r in reader]
        except (TypeError, ValueError) as exc:
            raise FormatError(f"{path}: {exc}") from exc
    depths, values = (np.array(v) for v in zip(*rows)) if rows else (np.array([]), np.array([]))
    kw = dict(
        exposure_age=float(metadata["exposure_age"]),
        exclusion_depth=float(metadata.get("exclusion_depth", 0.0)),
        cement_content=float(metadata.get("cement_content", 270.0)),
    )
    if mpct:
        return ChlorideProfile.from_mass_percent(depths, values, **kw)
    return ChlorideProfile(depths, values, **kw)


def write_profile_csv(path, profile: ChlorideProfile) -> None:
    """Write the profile in kg/m³ with its JSON sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth_m", "chloride_kg_per_m3"])
        for d, c in zip(profile.depths, profile.contents):
            writer.writerow([repr(float(d)), repr(float(c))])
    path.with_suffix(".json").write_text(json.dumps(profile.metadata(), indent=2, sort_keys=True))
