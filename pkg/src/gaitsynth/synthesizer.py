"""Per-tick gait synthesis: period selection, prediction, interpolation,
footstrike modification, feasibility checking and standing transitions.

The synthesizer traverses the library periods from the commanded one in
descending order, predicts the pre-impact CoM state for each candidate step
duration, and returns the first candidate whose prediction lands in the
feasible set.  The interpolated gait is then corrected by a discrete P-law
on the final swing-foot coefficients.  Left stance is handled by mirroring
the problem into the right-stance convention and mirroring the result back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .centroidal import (CentroidalState, PredictionFailedError, PredictorGains,
                         VerticalReference, capture_point, predict_preimpact)
from .library import GaitLibrary, GaitParams, OutputIndex, mirror

__all__ = [
    "FeasibleRegions",
    "DesiredGait",
    "SynthesizerConfig",
    "PhaseState",
    "SynthesisResult",
    "StandingDecision",
    "synthesize",
    "check_feasible",
    "phase_advance",
    "standing_policy",
    "mirror_state",
    "mirror_desired",
]


@dataclass(frozen=True)
class FeasibleRegions:
    """Axis-aligned pre-impact boxes for the CoM and the swing-foot target.

    The lateral foot bound is two-sided: targets with |y| below foot_y_min
    (the collision strip around the stance leg) are rejected.
    """

    com_x: float = 0.25       # |p-_x| bound [m]
    com_y: float = 0.20       # |p-_y| bound [m]
    foot_x_min: float = -0.30
    foot_x_max: float = 0.30
    foot_y_min: float = 0.04  # lateral clearance [m]
    foot_y_max: float = 0.30

    def __post_init__(self) -> None:
        if self.com_x <= 0.0 or self.com_y <= 0.0:
            raise ValueError("CoM box must be nonempty")
        if self.foot_x_min >= self.foot_x_max:
            raise ValueError("foot x bounds empty")
        if not 0.0 < self.foot_y_min < self.foot_y_max:
            raise ValueError("foot lateral clearance must satisfy 0 < min < max")

    def com_ok(self, p) -> bool:
        return abs(p[0]) <= self.com_x and abs(p[1]) <= self.com_y

    def foot_ok(self, x: float, y: float) -> bool:
        return (self.foot_x_min <= x <= self.foot_x_max
                and self.foot_y_min <= abs(y) <= self.foot_y_max)


@dataclass(frozen=True)
class DesiredGait:
    """Desired post-impact velocities and period index (user command)."""

    vx: float = 0.0    # desired sagittal post-impact velocity [m/s]
    rvy: float = 0.0   # desired lateral post-impact velocity, right stance [m/s]
    lvy: float = 0.0   # desired lateral post-impact velocity, left stance [m/s]
    period_index: int = 0


@dataclass(frozen=True)
class SynthesizerConfig:
    kx: float = 0.08     # sagittal footstrike gain [m per m/s]
    ky: float = 0.095    # lateral footstrike gain [m per m/s]
    regions: FeasibleRegions = field(default_factory=FeasibleRegions)
    desired: DesiredGait = field(default_factory=DesiredGait)
    support_halfwidth: tuple[float, float] = (0.05, 0.10)  # standing box (x, y) [m]
    max_modification: float = 0.02  # cap on the footstrike correction [m]
    gains: PredictorGains = field(default_factory=PredictorGains)

    def __post_init__(self) -> None:
        if self.kx <= 0.0 or self.ky <= 0.0:
            raise ValueError("footstrike gains must be positive")
        if self.max_modification <= 0.0:
            raise ValueError("max_modification must be positive")

    def validate_gains(self, delta_x: float, delta_y: float) -> None:
        """Stability gate: each gain must lie in (0, -2/delta) for the measured deltas."""
        for name, k, d in (("kx", self.kx, delta_x), ("ky", self.ky, delta_y)):
            if d >= 0.0:
                raise ValueError(f"delta for {name} must be negative, got {d}")
            hi = -2.0 / d
            if not 0.0 < k < hi:
                raise ValueError(
                    f"{name}={k} outside the admissible interval (0, {hi:.6g})"
                )


@dataclass
class PhaseState:
    """Phase bookkeeping of the current step.

    t0 is the wall time since the last impact; s0 is the accumulated
    normalized phase, which stays continuous across period switches.
    """

    T_current: float
    t0: float = 0.0
    s0: float = 0.0
    step_index: int = 0
    stance: str = "R"

    def __post_init__(self) -> None:
        if not 0.0 <= self.s0 < 1.0:
            raise ValueError(f"phase s0={self.s0} must lie in [0, 1)")
        if self.stance not in ("R", "L"):
            raise ValueError("stance must be 'R' or 'L'")


@dataclass
class SynthesisResult:
    alpha: GaitParams | None   # synthesized gait (physical frame); None on fall
    T: float                   # chosen period [s]
    T_t: float                 # total step duration t0 + (1 - s0) * T [s]
    saturated: bool = False    # velocity query clamped to the grid hull
    truncated: bool = False    # footstrike modification reduced by cap or box
    fall: bool = False         # no feasible period from the commanded index on


class StandingDecision(Enum):
    KEEP_STANDING = "keep standing"
    START_STEPPING = "start stepping"
    MAY_STOP = "may stop at this double support"


def mirror_state(state: CentroidalState) -> CentroidalState:
    """Reflect a physical state into the right-stance convention (y sign flip)."""
    return CentroidalState(state.z, state.zdot,
                           np.array([state.p[0], -state.p[1]]),
                           np.array([state.v[0], -state.v[1]]))


def mirror_desired(d: DesiredGait) -> DesiredGait:
    """Desired velocities seen from the mirrored (left stance) frame."""
    return replace(d, rvy=-d.lvy, lvy=-d.rvy)


def check_feasible(p_minus, v_minus, vy_s: float, period_index: int,
                   lib: GaitLibrary, regions: FeasibleRegions) -> bool:
    """True iff the predicted CoM lies in the CoM box and the interpolated
    foot target lies in the foot box."""
    if not regions.com_ok(p_minus):
        return False
    fx, fy = lib.g_foot(period_index, v_minus[0], v_minus[1], vy_s)
    return regions.foot_ok(fx, fy)


def _truncate_modification(value: float, raw_delta: float, cap: float,
                           lo: float, hi: float) -> tuple[float, bool]:
    """Apply a capped correction and keep the result inside [lo, hi]."""
    delta = min(max(raw_delta, -cap), cap)
    truncated = delta != raw_delta
    new = value + delta
    if new < lo:
        new, truncated = lo, True
    elif new > hi:
        new, truncated = hi, True
    return new, truncated


def synthesize(state: CentroidalState, phase: PhaseState, lib: GaitLibrary,
               cfg: SynthesizerConfig, active: GaitParams | None = None) -> SynthesisResult:
    """One planning tick: produce the gait to track from now until the impact.

    `active` supplies the vertical reference row being tracked (defaults to
    the library standing posture's constant height row).
    """
    left = phase.stance == "L"
    s = mirror_state(state) if left else state
    des = mirror_desired(cfg.desired) if left else cfg.desired

    z_row = (active.alpha[OutputIndex.Z_COM] if active is not None
             else lib.standing_alpha[OutputIndex.Z_COM])
    k = lib.periods.size
    if not 0 <= des.period_index < k:
        raise ValueError(f"desired period index {des.period_index} out of range 0..{k - 1}")

    for j in range(des.period_index, k):
        T = float(lib.periods[j])
        T_t = phase.t0 + (1.0 - phase.s0) * T
        ref = VerticalReference(z_row, T, phase.t0, phase.s0)
        try:
            pred = predict_preimpact(s, phase.t0, T_t, ref, cfg.gains)
        except PredictionFailedError:
            continue  # singular prediction: candidate infeasible
        vy_s = des.rvy + des.lvy - pred.v_minus[1]
        if not check_feasible(pred.p_minus, pred.v_minus, vy_s, j, lib, cfg.regions):
            continue

        _, _, _, saturated = lib.clamp_velocities(pred.v_minus[0], pred.v_minus[1], vy_s)
        gait = lib.interpolate(j, pred.v_minus[0], pred.v_minus[1], vy_s)
        a = gait.alpha
        reg = cfg.regions
        x_new, trunc_x = _truncate_modification(
            a[OutputIndex.X_FOOT, -1], cfg.kx * (pred.v_minus[0] - des.vx),
            cfg.max_modification, reg.foot_x_min, reg.foot_x_max)
        y0 = a[OutputIndex.Y_FOOT, -1]
        y_lo, y_hi = (reg.foot_y_min, reg.foot_y_max) if y0 > 0 else (-reg.foot_y_max, -reg.foot_y_min)
        y_new, trunc_y = _truncate_modification(
            y0, -cfg.ky * (pred.v_minus[1] - des.lvy),
            cfg.max_modification, y_lo, y_hi)
        a[OutputIndex.X_FOOT, -1] = x_new
        a[OutputIndex.Y_FOOT, -1] = y_new

        if left:
            gait = mirror(gait)
        return SynthesisResult(gait, T, T_t, saturated=saturated,
                               truncated=trunc_x or trunc_y, fall=False)

    T = float(lib.periods[-1])
    return SynthesisResult(None, T, phase.t0 + (1.0 - phase.s0) * T, fall=True)


def phase_advance(phase: PhaseState, dt: float, new_T: float | None = None) -> PhaseState:
    """Advance the phase by dt, optionally switching to a new period first.

    A switch rescales the increment, never the accumulated phase, so s stays
    continuous and nondecreasing; the step ends when s reaches 1.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    T = float(new_T) if new_T is not None else phase.T_current
    s = phase.s0 + dt / T
    return PhaseState(T_current=T, t0=phase.t0 + dt, s0=min(s, np.nextafter(1.0, 0.0)),
                      step_index=phase.step_index, stance=phase.stance)


def standing_policy(state: CentroidalState, cfg: SynthesizerConfig,
                    mode: str = "stand", g: float | None = None) -> StandingDecision:
    """Capture-point criterion for standing and stopping decisions.

    In standing mode: keep standing while the CP stays inside the support
    box, otherwise start stepping.  In walking mode (queried at an impact
    with the post-impact state): stopping is allowed when the CP lies inside
    the support box of the new stance foot.
    """
    grav = g if g is not None else cfg.gains.g
    cp = capture_point(state.p, state.v, state.z, grav)
    hx, hy = cfg.support_halfwidth
    inside = abs(cp[0]) <= hx and abs(cp[1]) <= hy
    if mode == "stand":
        return StandingDecision.KEEP_STANDING if inside else StandingDecision.START_STEPPING
    if mode == "walk":
        return StandingDecision.MAY_STOP if inside else StandingDecision.KEEP_STANDING
    raise ValueError(f"unknown mode '{mode}'")
