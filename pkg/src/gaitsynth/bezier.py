"""Bezier polynomial rows over normalized step phase s in [0, 1].

Every output trajectory of a gait is one row of Bezier coefficients.
Evaluation uses the Bernstein basis directly; the time derivative uses the
exact Bernstein derivative rescaled by the step period.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["bezier_eval", "bezier_rate", "derivative_coefficients"]


def _check_phase(s: float) -> None:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"phase s={s} outside [0, 1]; clamp before evaluating")


def bezier_eval(coeffs: np.ndarray, s: float) -> float:
    """Value of a Bezier row at phase s: sum_j c[j] * C(M,j) s^j (1-s)^(M-j)."""
    c = np.asarray(coeffs, dtype=float)
    m = c.size - 1
    if m < 1:
        raise ValueError("Bezier row needs order M >= 1 (at least 2 coefficients)")
    _check_phase(s)
    acc = 0.0
    for j in range(m + 1):
        acc += c[j] * math.comb(m, j) * s**j * (1.0 - s) ** (m - j)
    return acc


def derivative_coefficients(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of dh/ds as a Bezier row of one lower order."""
    c = np.asarray(coeffs, dtype=float)
    m = c.size - 1
    return m * np.diff(c)


def bezier_rate(coeffs: np.ndarray, s: float, T: float) -> float:
    """Time derivative of a Bezier row at phase s for step period T seconds."""
    if not math.isfinite(T):
        raise ValueError("standing gait (infinite period) has no time scale")
    if T <= 0.0:
        raise ValueError(f"period T={T} must be positive")
    dc = derivative_coefficients(coeffs)
    if dc.size == 1:
        # order-1 row: constant slope
        _check_phase(s)
        return float(dc[0]) / T
    return bezier_eval(dc, s) / T
