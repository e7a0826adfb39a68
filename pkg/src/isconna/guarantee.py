"""Sketch sizing from (epsilon, delta) and false-positive-bounded flagging.

The burst count read from a sketch is corrected by ``epsilon`` times the
sketch's total mass before the G statistic is formed; the corrected
statistic is then compared with the ``1 - delta`` quantile of a chi-squared
variable with one degree of freedom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import gtest_score

# Acklam's rational approximation to the inverse normal CDF
_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_P_LOW = 0.02425


@dataclass(frozen=True)
class GuaranteeConfig:
    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def threshold(self) -> float:
        return chi2_quantile_1dof(1.0 - self.delta)


def size_from_eps_delta(cfg: GuaranteeConfig) -> tuple[int, int]:
    """Return ``(rows, cols)`` with ``rows = ceil(ln 1/delta)`` and ``cols = ceil(e/epsilon)``."""
    cols = math.ceil(math.e / cfg.epsilon)
    rows = math.ceil(math.log(1.0 / cfg.delta))
    return max(rows, 1), cols


def adjusted_count(c_hat, total, epsilon: float):
    """``c_hat - epsilon * total``, clamped at zero. Accepts arrays."""
    if isinstance(c_hat, np.ndarray) or isinstance(total, np.ndarray):
        return np.maximum(np.asarray(c_hat) - epsilon * np.asarray(total), 0.0)
    return max(c_hat - epsilon * total, 0.0)


def adjusted_statistic(c_hat, total, a_hat, t, epsilon: float):
    if isinstance(c_hat, np.ndarray):
        c = adjusted_count(c_hat, total, epsilon)
        a_hat = np.asarray(a_hat, dtype=np.float64)
        t = np.broadcast_to(np.asarray(t, dtype=np.float64), c.shape)
        out = np.zeros_like(c)
        ok = (c > 0) & (a_hat > 0) & (t > 1)
        out[ok] = np.abs(2.0 * c[ok] * np.log(c[ok] * (t[ok] - 1.0) / a_hat[ok]))
        return out
    return gtest_score(adjusted_count(c_hat, total, epsilon), a_hat, t)


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        return num / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    return num / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def normal_upper_quantile(tail: float) -> float:
    """``z`` with ``P(Z > z) = tail`` for a standard normal ``Z``."""
    if not 0.0 < tail < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {tail}")
    z = -_acklam(tail)
    # one Newton step on the upper-tail CDF
    pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if pdf > 0.0:
        z += (0.5 * math.erfc(z / math.sqrt(2.0)) - tail) / pdf
    return z


def chi2_quantile_1dof(p: float) -> float:
    """The ``p``-quantile of a chi-squared variable with one degree of freedom."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    z = normal_upper_quantile(0.5 * (1.0 - p))
    return z * z


def flag(g_tilde, delta: float):
    """True where the adjusted statistic exceeds the ``1 - delta`` quantile."""
    thr = chi2_quantile_1dof(1.0 - delta)
    if isinstance(g_tilde, np.ndarray):
        return g_tilde > thr
    return bool(g_tilde > thr)
