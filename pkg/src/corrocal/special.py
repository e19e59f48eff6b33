"""Error function and its inverse with explicit domain handling."""

import numpy as np
from scipy import special

from .errors import DomainError


def erf(x):
    """Error function, elementwise."""
    return special.erf(x)


def erfc(x):
    """Complementary error function ``1 - erf(x)`` without cancellation."""
    return special.erfc(x)


def erf_inv(p):
    """Inverse error function on the open interval (-1, 1).

    Raises
    ------
    DomainError
        If any ``|p| >= 1`` or ``p`` is not finite. In the chloride model this
        signals a critical content outside ``(0, c_surface)``.
    """
    p_arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p_arr)) or np.any(np.abs(p_arr) >= 1.0):
        raise DomainError("erf_inv argument must satisfy |p| < 1")
    return special.erfinv(p)
