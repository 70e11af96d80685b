"""Pre-impact CoM state prediction on the nonlinear centroidal model.

The model couples the vertical PD force law to both horizontal axes through
the zero-angular-momentum condition f_p * z - f_z * p = 0, and is integrated
with fixed-step RK4 so predictions are deterministic at control rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernel
from .bezier import bezier_eval, bezier_rate, derivative_coefficients
from .library import GaitParams, OutputIndex

__all__ = [
    "CentroidalState",
    "PredictorGains",
    "VerticalReference",
    "ForceResult",
    "PredictionFailedError",
    "vertical_force",
    "state_rate",
    "predict_preimpact",
    "capture_point",
]

INTEGRATOR_STEP = _kernel.STEP_SECONDS  # [s]


class PredictionFailedError(RuntimeError):
    """The integration hit the pendulum singularity (z <= 0)."""


@dataclass
class PredictorGains:
    kp: float = 100.0  # vertical PD position gain [1/s^2]
    kd: float = 20.0   # vertical PD velocity gain [1/s]
    m: float = 17.0    # total mass [kg]
    g: float = 9.81    # gravity [m/s^2]

    def __post_init__(self) -> None:
        for name in ("kp", "kd", "m", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class CentroidalState:
    """CoM state relative to the stance foot: height, vertical rate, (x, y) position/velocity."""

    z: float
    zdot: float
    p: np.ndarray  # (2,) [m]
    v: np.ndarray  # (2,) [m/s]

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=float).reshape(2)
        self.v = np.asarray(self.v, dtype=float).reshape(2)
        if self.z <= 0.0:
            raise ValueError(f"CoM height z={self.z} must be positive")

    def as_vector(self) -> np.ndarray:
        return np.array([self.z, self.p[0], self.p[1], self.zdot, self.v[0], self.v[1]])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "CentroidalState":
        return cls(z=float(x[0]), zdot=float(x[3]), p=x[1:3].copy(), v=x[4:6].copy())

    def copy(self) -> "CentroidalState":
        return CentroidalState(self.z, self.zdot, self.p.copy(), self.v.copy())


@dataclass
class VerticalReference:
    """Vertical reference z*(t), zdot*(t), zddot*(t) from a gait's height row.

    The phase map is s(t) = s0 + (t - t0) / T, so the reference spans the
    remaining step window [t0, T_t] and holds its end value past s = 1.
    """

    coeffs: np.ndarray  # height Bezier row
    T: float            # active period [s]
    t0: float = 0.0     # elapsed step time at the window start [s]
    s0: float = 0.0     # phase at t0
    _d1: np.ndarray = field(init=False, repr=False)
    _d2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=float)
        if not math.isfinite(self.T) or self.T <= 0.0:
            raise ValueError(f"reference period T={self.T} must be finite positive")
        self._d1 = np.ascontiguousarray(derivative_coefficients(self.coeffs))
        self._d2 = np.ascontiguousarray(derivative_coefficients(self._d1))
        if bezier_eval(self.coeffs, 0.0) <= 0.0 or bezier_eval(self.coeffs, 1.0) <= 0.0:
            raise ValueError("vertical reference must stay positive")

    @classmethod
    def from_gait(cls, gait: GaitParams, T: float | None = None,
                  t0: float = 0.0, s0: float = 0.0) -> "VerticalReference":
        period = T if T is not None else gait.label.T
        return cls(gait.alpha[OutputIndex.Z_COM].copy(), period, t0, s0)

    def phase(self, t: float) -> float:
        return min(max(self.s0 + (t - self.t0) / self.T, 0.0), 1.0)

    def at(self, t: float) -> tuple[float, float, float]:
        s = self.phase(t)
        z = bezier_eval(self.coeffs, s)
        zd = bezier_eval(self._d1, s) / self.T if self._d1.size > 1 else self._d1[0] / self.T
        zdd = (bezier_eval(self._d2, s) if self._d2.size > 1 else self._d2[0]) / self.T**2
        return z, zd, zdd


class ForceResult(NamedTuple):
    fz: float          # vertical ground reaction force [N]
    clamped: bool      # unilateral-contact clamp engaged


class Prediction(NamedTuple):
    p_minus: np.ndarray   # (2,) pre-impact CoM position [m]
    v_minus: np.ndarray   # (2,) pre-impact CoM velocity [m/s]
    z_minus: float
    zdot_minus: float


def vertical_force(state: CentroidalState, ref: tuple[float, float, float],
                   gains: PredictorGains) -> ForceResult:
    """PD force law on the vertical reference, clamped at zero (no tension)."""
    zs, zds, zdds = ref
    raw = (zdds + gains.kp * (zs - state.z) + gains.kd * (zds - state.zdot) + gains.g) * gains.m
    if raw < 0.0:
        return ForceResult(0.0, True)
    return ForceResult(raw, False)


def state_rate(state: CentroidalState, ref: tuple[float, float, float],
               gains: PredictorGains) -> np.ndarray:
    """Time derivative [dz, dpx, dpy, dzdot, dvx, dvy] under the PD force law."""
    if state.z <= 0.0:
        raise PredictionFailedError(f"pendulum singular at z={state.z}")
    fz, _ = vertical_force(state, ref, gains)
    zddot = fz / gains.m - gains.g
    c = fz / (gains.m * state.z)
    return np.array([state.zdot, state.v[0], state.v[1],
                     zddot, c * state.p[0], c * state.p[1]])


def predict_preimpact(state: CentroidalState, t0: float, T_t: float,
                      ref: VerticalReference, gains: PredictorGains) -> Prediction:
    """Integrate the centroidal model from t0 to the step end T_t.

    Fixed-step RK4 at 1 ms with the final partial step shortened; raises
    PredictionFailedError if the trajectory hits the z <= 0 singularity.
    """
    if T_t < t0:
        raise ValueError(f"T_t={T_t} must be >= t0={t0}")
    x, status, _, _, _, _ = _kernel.integrate_centroidal(
        state.as_vector(), t0, T_t,
        ref.coeffs, ref._d1, ref._d2, ref.T, ref.phase(t0),
        gains.kp, gains.kd, gains.m, gains.g,
        1.0, 0.0, 0.0, 0.0)
    if status != _kernel.STATUS_OK:
        raise PredictionFailedError("integration reached z <= 0")
    return Prediction(x[1:3].copy(), x[4:6].copy(), float(x[0]), float(x[3]))


def capture_point(p, v, z: float, g: float = 9.81):
    """Capture point per horizontal axis: CP = p + v * sqrt(z / g)."""
    if z <= 0.0:
        raise ValueError("z must be positive")
    return np.asarray(p, dtype=float) + np.asarray(v, dtype=float) * math.sqrt(z / g)
