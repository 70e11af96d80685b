"""Offline gait library construction from the constant-height pendulum model.

Footstrike locations are chosen so that every built gait is an exactly
periodic orbit of the reduced-order plant: the sagittal pre-impact velocity
repeats every step and the lateral pre-impact velocities repeat every two
steps.  Swing trajectories are quintic Bezier rows meeting position and
velocity boundary conditions at both step ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .library import N_OUTPUTS, GaitLabel, GaitLibrary, GaitParams, OutputIndex

__all__ = [
    "BuilderConfig",
    "BuildError",
    "lateral_footstrike",
    "periodic_lateral_footstrike",
    "sagittal_footstrike",
    "lateral_velocity_for_width",
    "build_gait",
    "build_standing_gait",
    "build_library",
    "load_builder_config",
]


class BuildError(ValueError):
    """A gait could not be built (footstrike outside kinematic reach)."""


@dataclass
class BuilderConfig:
    z_bar: float = 0.41          # nominal CoM height [m]
    gravity: float = 9.81        # [m/s^2]
    periods: tuple[float, ...] = (0.35, 0.2)          # [s], strictly descending
    vx_grid: tuple[float, ...] = (-0.5, -0.3, -0.15, 0.0, 0.15, 0.3, 0.5, 0.7)
    rvy_grid: tuple[float, ...] = (-0.4, 0.0, 0.4)    # [m/s]
    lvy_grid: tuple[float, ...] = (-0.4, 0.0, 0.4)
    swing_apex: float = 0.07     # mid-step swing foot height [m]
    stance_width: float = 0.10   # half distance between feet at standing [m]
    order: int = 5               # Bezier order M
    max_reach: float = 0.30      # kinematic bound on footstrike offsets [m]

    def __post_init__(self) -> None:
        if self.z_bar <= 0.0:
            raise ValueError("z_bar must be positive")
        if self.swing_apex <= 0.0:
            raise ValueError("swing_apex must be positive")
        if self.order < 3:
            raise ValueError("order must be >= 3 for the boundary conditions")
        if len(self.periods) < 1 or np.any(np.diff(self.periods) >= 0):
            raise ValueError("periods must be strictly descending")
        for name in ("vx_grid", "rvy_grid", "lvy_grid"):
            g = getattr(self, name)
            if np.any(np.diff(g) <= 0):
                raise ValueError(f"{name} must be strictly ascending")

    @property
    def lam(self) -> float:
        return math.sqrt(self.gravity / self.z_bar)


def sagittal_footstrike(T: float, vx_minus: float, z_bar: float, g: float = 9.81) -> float:
    """Footstrike x for which the sagittal pre-impact velocity repeats each step."""
    if not math.isfinite(T) or T <= 0.0:
        raise ValueError(f"period T={T} must be finite positive")
    if z_bar <= 0.0:
        raise ValueError("z_bar must be positive")
    lam = math.sqrt(g / z_bar)
    return vx_minus * math.tanh(0.5 * T * lam) / lam


def lateral_footstrike(T: float, vy_minus: float, vbar_y: float, z_bar: float,
                       g: float = 9.81) -> float:
    """Online lateral footstrike from the pendulum model.

    y = (vy_minus - d) / sigma with sigma = lam * tanh(T*lam/2) and
    d = lam^2 * sech(T*lam/2) * T * vbar_y / (2*sigma), where vbar_y is the
    desired average lateral velocity.  Exact for cycles with zero lateral
    drift; see periodic_lateral_footstrike for the exactly periodic variant.
    """
    if not math.isfinite(T) or T <= 0.0:
        raise ValueError(f"period T={T} must be finite positive")
    if z_bar <= 0.0:
        raise ValueError("z_bar must be positive")
    lam = math.sqrt(g / z_bar)
    sigma = lam * math.tanh(0.5 * T * lam)
    d = lam * lam * T * vbar_y / (2.0 * sigma * math.cosh(0.5 * T * lam))
    return (vy_minus - d) / sigma


def periodic_lateral_footstrike(T: float, vy_minus: float, vy_minus_next: float,
                                z_bar: float, g: float = 9.81) -> float:
    """Lateral footstrike making the two-step lateral cycle exactly periodic.

    vy_minus is the pre-impact velocity ending the current step; the step it
    launches must end at vy_minus_next.  This is the same sigma-form as
    lateral_footstrike with offset d = (vy_minus + vy_minus_next) / (1 + cosh(T*lam)),
    and reduces to it when the cycle has zero average lateral velocity.
    """
    if not math.isfinite(T) or T <= 0.0:
        raise ValueError(f"period T={T} must be finite positive")
    lam = math.sqrt(g / z_bar)
    u = T * lam
    return (vy_minus * math.cosh(u) - vy_minus_next) / (lam * math.sinh(u))


def lateral_velocity_for_width(T: float, half_width: float, z_bar: float,
                               g: float = 9.81) -> float:
    """Pre-impact lateral speed of the in-place stepping cycle with foot offset half_width."""
    lam = math.sqrt(g / z_bar)
    return half_width * lam * math.tanh(0.5 * T * lam)


def _quintic_row(order: int, p0: float, dp0: float, p1: float) -> np.ndarray:
    """Bezier row with value/slope (p0, dp0) at s=0 and (p1, 0) at s=1.

    Slopes are in phase units (dh/ds).  End curvature is zero so the row
    settles onto its target; start curvature is zero for a smooth liftoff.
    """
    m = order
    row = np.empty(m + 1)
    row[0] = p0
    row[1] = p0 + dp0 / m
    row[2] = p0 + 2.0 * dp0 / m  # zero start curvature: a2 = 2*a1 - a0
    row[3:] = p1                 # equal tail coefficients: zero end rate/curvature
    return row


def _swing_height_row(order: int, apex: float) -> np.ndarray:
    """Symmetric swing height row: zero value/rate at both ends, apex at s=0.5."""
    if order != 5:
        raise BuildError("swing height row is defined for order M=5")
    c = 1.6 * apex  # B2+B3 weight at s=0.5 is 0.625
    return np.array([0.0, 0.0, c, c, 0.0, 0.0])


def build_gait(T: float, vx_minus: float, rvy_minus: float, lvy_minus: float,
               cfg: BuilderConfig) -> GaitParams:
    """Construct one periodic gait of the library in right-stance convention."""
    g, zb = cfg.gravity, cfg.z_bar
    x_f = sagittal_footstrike(T, vx_minus, zb, g)
    # footstrike ending this (right stance) step and the one ending the
    # companion left-stance step of the same two-step cycle
    y_r = periodic_lateral_footstrike(T, rvy_minus, lvy_minus, zb, g)
    y_l = periodic_lateral_footstrike(T, lvy_minus, rvy_minus, zb, g)

    label = GaitLabel(T, vx_minus, rvy_minus, lvy_minus)
    for name, val in (("x_foot", x_f), ("y_foot", y_r), ("y_start", y_l)):
        if abs(val) > cfg.max_reach:
            raise BuildError(
                f"gait (T={T}, vx={vx_minus}, rvy={rvy_minus}, lvy={lvy_minus}): "
                f"{name}={val:.4f} m exceeds reach {cfg.max_reach} m"
            )

    m = cfg.order
    alpha = np.zeros((N_OUTPUTS, m + 1))
    alpha[OutputIndex.Z_COM] = zb
    # swing foot starts at the previous stance location relative to the CoM
    # and its start rate cancels the post-impact CoM velocity (the foot is
    # momentarily ground-fixed), keeping swing rows continuous across steps
    alpha[OutputIndex.X_FOOT] = _quintic_row(m, -x_f, -vx_minus * T, x_f)
    alpha[OutputIndex.Y_FOOT] = _quintic_row(m, -y_l, -lvy_minus * T, y_r)
    alpha[OutputIndex.Z_FOOT] = _swing_height_row(m, cfg.swing_apex)
    return GaitParams(label, alpha)


def build_standing_gait(cfg: BuilderConfig) -> GaitParams:
    """Standing posture: the zero-velocity stance with feet at +/- stance_width."""
    m = cfg.order
    alpha = np.zeros((N_OUTPUTS, m + 1))
    alpha[OutputIndex.Z_COM] = cfg.z_bar
    alpha[OutputIndex.Y_FOOT] = cfg.stance_width
    return GaitParams(GaitLabel(math.inf, 0.0, 0.0, 0.0), alpha)


def build_library(cfg: BuilderConfig) -> GaitLibrary:
    """Build the dense gait grid plus the standing gait."""
    periods = np.asarray(cfg.periods, dtype=float)
    vx = np.asarray(cfg.vx_grid, dtype=float)
    rvy = np.asarray(cfg.rvy_grid, dtype=float)
    lvy = np.asarray(cfg.lvy_grid, dtype=float)
    k, l, n = periods.size, vx.size, rvy.size
    alphas = np.empty((k, l, n, n, N_OUTPUTS, cfg.order + 1))
    for j in range(k):
        for u in range(l):
            for v in range(n):
                for w in range(n):
                    gait = build_gait(periods[j], vx[u], rvy[v], lvy[w], cfg)
                    alphas[j, u, v, w] = gait.alpha
    standing = build_standing_gait(cfg)
    return GaitLibrary(periods, vx, rvy, lvy, alphas, standing.alpha)


_SCALAR_KEYS = {
    "z_bar": "z_bar",
    "gravity": "gravity",
    "swing_apex": "swing_apex",
    "stance_width": "stance_width",
    "max_reach": "max_reach",
}
_GRID_KEYS = {"periods": "periods", "vx": "vx_grid", "rvy": "rvy_grid", "lvy": "lvy_grid"}


def load_builder_config(source: str | Path, overrides: dict[str, str] | None = None) -> BuilderConfig:
    """Parse a builder config file (key value lines); overrides apply afterwards."""
    kv: dict[str, object] = {}
    for no, raw in enumerate(Path(source).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        _apply_builder_key(kv, key, rest, f"line {no}")
    for key, val in (overrides or {}).items():
        _apply_builder_key(kv, key, val.split(), f"override {key}")
    return BuilderConfig(**kv)


def _apply_builder_key(kv: dict, key: str, values: list[str], where: str) -> None:
    try:
        if key in _SCALAR_KEYS:
            if len(values) != 1:
                raise ValueError("expected one value")
            kv[_SCALAR_KEYS[key]] = float(values[0])
        elif key == "order":
            kv["order"] = int(values[0])
        elif key in _GRID_KEYS:
            if not values:
                raise ValueError("empty grid")
            kv[_GRID_KEYS[key]] = tuple(float(v) for v in values)
        else:
            raise ValueError(f"unknown key '{key}'")
    except ValueError as e:
        raise ValueError(f"builder config {where}: {e}") from None
