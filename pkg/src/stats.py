"""Normal quantiles and sample quantiles.

normal_ppf is Acklam's rational approximation of the inverse standard
normal CDF (relative error below 1.15e-9 over (0, 1)), vectorized with
numpy. normal_quantile polishes the scalar result with one Halley step
against math.erfc, which brings it to double precision.
"""

import logging
import math
from typing import Union

import numpy as np

from src.models import QuantileMode

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Acklam's coefficients: central region numerator/denominator (a, b),
# tail regions numerator/denominator (c, d)
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)

_P_LOW = 0.02425
_P_HIGH = 1 - _P_LOW

# Upper-tail levels accepted for one-sided lower confidence bounds
MIN_ALPHA = 0.0
MAX_ALPHA = 0.5


def _tail(q: np.ndarray) -> np.ndarray:
    c, d = _C, _D
    return ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1))


def normal_ppf(p: ArrayLike) -> ArrayLike:
    """Inverse CDF of the standard normal distribution.

    Args:
        p: Probabilities in [0, 1]; 0 and 1 map to -inf and +inf

    Returns:
        z with Phi(z) = p, same shape as p (float for scalar input)

    Raises:
        ValueError: If any p is outside [0, 1]
    """
    p_arr = np.asarray(p, dtype=np.float64)
    if np.any((p_arr < 0) | (p_arr > 1)) or np.any(np.isnan(p_arr)):
        raise ValueError("p must be in the interval [0, 1]")

    z = np.empty_like(p_arr)
    z[p_arr == 0] = -np.inf
    z[p_arr == 1] = np.inf

    lower = (p_arr > 0) & (p_arr < _P_LOW)
    if np.any(lower):
        z[lower] = _tail(np.sqrt(-2 * np.log(p_arr[lower])))

    upper = (p_arr > _P_HIGH) & (p_arr < 1)
    if np.any(upper):
        z[upper] = -_tail(np.sqrt(-2 * np.log1p(-p_arr[upper])))

    central = (p_arr >= _P_LOW) & (p_arr <= _P_HIGH)
    if np.any(central):
        a, b = _A, _B
        q = p_arr[central] - 0.5
        r = q * q
        z[central] = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
                      / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1))

    if np.ndim(p) == 0:
        return float(z)
    return z


def normal_quantile(p: float) -> float:
    """Scalar inverse normal CDF refined to double precision."""
    x = normal_ppf(p)
    if not math.isfinite(x):
        return x
    # One Halley step on Phi(x) - p
    e = 0.5 * math.erfc(-x / math.sqrt(2)) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(x * x / 2)
    return x - u / (1 + x * u / 2)


def check_alpha(alpha: float) -> None:
    """Reject levels outside (0, 0.5]: only one-sided lower bounds are defined."""
    if not (MIN_ALPHA < alpha <= MAX_ALPHA):
        raise ValueError(f"alpha must be in (0, 0.5], got {alpha}")


def upper_quantile(alpha: float, mode: QuantileMode = QuantileMode.EXACT) -> float:
    """z such that P(Z > z) = alpha for a standard normal Z.

    PAPER mode truncates the exact value to two decimals: 1.64 at 0.05,
    1.95 at 0.025, 2.32 at 0.01.
    """
    check_alpha(alpha)
    z = normal_quantile(1 - alpha)
    if mode == QuantileMode.PAPER:
        return math.floor(z * 100) / 100
    return z


def empirical_quantile(values: np.ndarray, alpha: float) -> float:
    """Sample alpha-quantile by linear interpolation between order statistics.

    Uses rank h = alpha * (M - 1) + 1 (1-indexed) and interpolates between
    the floor(h)-th and ceil(h)-th smallest values, numpy's 'linear' method.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("Cannot take a quantile of an empty sample")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"Quantile level must be in [0, 1], got {alpha}")
    return float(np.quantile(values, alpha, method="linear"))
