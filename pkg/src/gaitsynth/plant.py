"""Reduced-order hybrid walking plant and closed-loop scenario execution.

The continuous phase is the same centroidal model the predictor integrates
(single shared kernel), plus optional injected model error; the double
support phase is an instantaneous impact map.  Scenarios run the full 1 kHz
loop: commands, impulses, per-tick synthesis, stance switching, standing
transitions and CSV telemetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import _kernel
from .bezier import bezier_eval, bezier_rate
from .centroidal import CentroidalState, PredictorGains, VerticalReference
from .library import GaitLibrary, GaitParams, OutputIndex, foot_target
from .synthesizer import (DesiredGait, FeasibleRegions, PhaseState,
                          StandingDecision, SynthesizerConfig, standing_policy,
                          synthesize)

__all__ = [
    "PlantParams",
    "ImpulseEvent",
    "Command",
    "TerrainEvent",
    "ScenarioConfig",
    "PlantFailureError",
    "ScenarioFormatError",
    "TickForces",
    "step_continuous",
    "impact",
    "apply_impulse",
    "run_scenario",
    "RunResult",
    "StepEvent",
    "parse_scenario",
    "load_scenario",
    "write_log",
    "read_log",
    "LOG_HEADER",
]

TICK_SECONDS = _kernel.STEP_SECONDS  # control and simulation tick [s]

LOG_HEADER = ("t,s,T,step,stance,px,py,z,vx,vy,fz,fpx,fpy,"
              "xfoot,yfoot,sat,trunc,fall")


class PlantFailureError(RuntimeError):
    """The plant state became singular (CoM height reached zero)."""


class ScenarioFormatError(ValueError):
    """A scenario file failed to parse."""


@dataclass
class PlantParams:
    m: float = 17.0        # total mass [kg]
    g: float = 9.81        # gravity [m/s^2]
    mu: float = 0.6        # friction coefficient (cone reporting)
    kp: float = 100.0      # vertical PD gains
    kd: float = 20.0
    fz_bias: float = 1.0   # multiplicative model error on the realized f_z
    ref_lag: float = 0.0   # [s] lag injected on the tracked vertical reference
    late_descent_rate: float = 0.2  # [m/s] swing extension speed past s=1 (step-downs)

    def __post_init__(self) -> None:
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if not 0.8 <= self.fz_bias <= 1.2:
            raise ValueError("fz_bias must lie in [0.8, 1.2]")

    @property
    def gains(self) -> PredictorGains:
        return PredictorGains(self.kp, self.kd, self.m, self.g)


@dataclass(frozen=True)
class ImpulseEvent:
    time: float    # [s]
    axis: str      # 'x' (sagittal) or 'y' (lateral)
    impulse: float  # [N s], applied as an instantaneous velocity change

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y"):
            raise ValueError("impulse axis must be 'x' or 'y'")


@dataclass(frozen=True)
class Command:
    time: float
    desired: DesiredGait
    intent: str  # 'walk' or 'stand'

    def __post_init__(self) -> None:
        if self.intent not in ("walk", "stand"):
            raise ValueError("command intent must be 'walk' or 'stand'")


@dataclass(frozen=True)
class TerrainEvent:
    time: float
    height: float  # absolute ground elevation for impacts from this time on [m]


@dataclass
class ScenarioConfig:
    duration: float = 10.0
    plant: PlantParams = field(default_factory=PlantParams)
    synth: SynthesizerConfig = field(default_factory=SynthesizerConfig)
    commands: list[Command] = field(default_factory=list)
    impulses: list[ImpulseEvent] = field(default_factory=list)
    terrain: list[TerrainEvent] = field(default_factory=list)
    start_mode: str = "stand"
    init_px: float = 0.0
    init_py: float | None = None   # None: 0 when standing, stance offset when walking
    init_vx: float = 0.0
    init_vy: float = 0.0
    init_z: float | None = None    # None: library standing height
    init_zdot: float = 0.0
    jitter_std: float = 0.0        # planner-input noise std [m, m/s]; 0 disables RNG
    seed: int = 0
    log_path: str | None = None

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if self.start_mode not in ("stand", "walk"):
            raise ValueError("start_mode must be 'stand' or 'walk'")
        for name in ("commands", "impulses", "terrain"):
            times = [e.time for e in getattr(self, name)]
            if any(b < a for a, b in zip(times, times[1:])):
                raise ValueError(f"{name} timeline not sorted by time")
        for ev in self.impulses:
            if not 0.0 <= ev.time <= self.duration:
                raise ValueError(f"impulse at t={ev.time} outside the scenario horizon")


class TickForces(NamedTuple):
    fz: float
    fpx: float
    fpy: float
    clamped: bool  # unilateral clamp engaged during the tick


def step_continuous(state: CentroidalState, ref: VerticalReference, dt: float,
                    params: PlantParams, pivot=(0.0, 0.0)) -> tuple[CentroidalState, TickForces]:
    """Advance the plant by dt under the (possibly biased) PD force law."""
    x, status, fz, fpx, fpy, ncl = _kernel.integrate_centroidal(
        state.as_vector(), 0.0, dt,
        ref.coeffs, ref._d1, ref._d2, ref.T, ref.phase(0.0),
        params.kp, params.kd, params.m, params.g,
        params.fz_bias, params.ref_lag, pivot[0], pivot[1])
    if status != _kernel.STATUS_OK:
        raise PlantFailureError("CoM height reached zero")
    return CentroidalState.from_vector(x), TickForces(fz, fpx, fpy, ncl > 0)


def impact(state: CentroidalState, target: tuple[float, float],
           ground_offset: float = 0.0) -> CentroidalState:
    """Instantaneous stance exchange: velocities carry over, the CoM position
    re-references to the new stance foot at -target; a ground offset shifts
    the height frame."""
    return CentroidalState(
        z=state.z - ground_offset,
        zdot=state.zdot,
        p=np.array([-target[0], -target[1]]),
        v=state.v.copy(),
    )


def apply_impulse(state: CentroidalState, ev: ImpulseEvent, m: float) -> CentroidalState:
    """Instantaneous velocity change impulse/m along one horizontal axis."""
    s = state.copy()
    s.v[0 if ev.axis == "x" else 1] += ev.impulse / m
    return s


@dataclass
class StepEvent:
    """Impact bookkeeping: one record per stance exchange."""

    index: int            # index of the step that just ended
    t: float              # impact time [s]
    stance_old: str
    stance_new: str
    T: float              # period active at the impact [s]
    p_minus: np.ndarray
    v_minus: np.ndarray
    p_plus: np.ndarray
    v_plus: np.ndarray
    target: tuple[float, float]
    saturated: bool
    truncated: bool
    stopped: bool = False  # transitioned to standing at this impact


@dataclass
class RunResult:
    status: str                      # 'completed' | 'fall' | 'plant_failure'
    ticks: dict                      # column arrays, one entry per tick
    steps: list[StepEvent]
    final_state: CentroidalState
    fall_time: float | None = None

    @property
    def exit_code(self) -> int:
        return {"completed": 0, "fall": 2, "plant_failure": 3}[self.status]


class _Log:
    FLOATS = ("t", "s", "T", "px", "py", "z", "vx", "vy", "fz", "fpx", "fpy",
              "xfoot", "yfoot")
    INTS = ("step", "sat", "trunc", "fall")

    def __init__(self, n: int):
        self.cols = {name: np.zeros(n) for name in self.FLOATS}
        self.cols.update({name: np.zeros(n, dtype=int) for name in self.INTS})
        self.cols["stance"] = np.empty(n, dtype="U1")
        self.n = 0

    def append(self, **kw) -> None:
        i = self.n
        for key, val in kw.items():
            self.cols[key][i] = val
        self.n = i + 1

    def trimmed(self) -> dict:
        return {k: v[: self.n] for k, v in self.cols.items()}


class _Runner:
    """Closed-loop state machine for one scenario."""

    def __init__(self, scn: ScenarioConfig, lib: GaitLibrary):
        self.scn = scn
        self.lib = lib
        self.params = scn.plant
        self.dt = TICK_SECONDS
        self.n_ticks = int(round(scn.duration / self.dt))
        self.standing_gait = lib.standing
        self.stand_width = float(lib.standing_alpha[OutputIndex.Y_FOOT, -1])

        self.cfg = replace(scn.synth, gains=self.params.gains)
        self.intent = "stand" if scn.start_mode == "stand" else "walk"
        self.mode = scn.start_mode
        self.stance = "R"
        self.step_index = 0
        self.active: GaitParams | None = None
        self.last_sat = False
        self.last_trunc = False
        self.overtime = 0.0      # time past s=1 while waiting for a step-down contact
        self.ground = 0.0        # elevation under the current stance foot
        self.steps: list[StepEvent] = []
        self.rng = np.random.default_rng(scn.seed) if scn.jitter_std > 0.0 else None

        z0 = scn.init_z if scn.init_z is not None else bezier_eval(
            lib.standing_alpha[OutputIndex.Z_COM], 0.0)
        if scn.start_mode == "stand":
            py = scn.init_py if scn.init_py is not None else 0.0
            self.feet = {"R": np.array([0.0, -self.stand_width]),
                         "L": np.array([0.0, +self.stand_width])}
            self.phase = PhaseState(T_current=float(lib.periods[0]), stance="R")
        else:
            py = scn.init_py if scn.init_py is not None else self.stand_width
            self.feet = {}
            jd = scn.synth.desired.period_index
            self.phase = PhaseState(T_current=float(lib.periods[jd]), stance="R")
        self.state = CentroidalState(z=float(z0), zdot=scn.init_zdot,
                                     p=np.array([scn.init_px, py]),
                                     v=np.array([scn.init_vx, scn.init_vy]))
        self.log = _Log(self.n_ticks)

    # -- event timelines ----------------------------------------------------

    def _due(self, events: list, cursor: int, t: float) -> tuple[list, int]:
        out = []
        while cursor < len(events) and events[cursor].time <= t + 1e-12:
            out.append(events[cursor])
            cursor += 1
        return out, cursor

    def _terrain_height(self, t: float) -> float:
        h = 0.0
        for ev in self.scn.terrain:
            if ev.time <= t + 1e-12:
                h = ev.height
        return h

    # -- transitions ---------------------------------------------------------

    def _start_walking(self, cp: np.ndarray) -> None:
        stance = "R" if cp[1] >= 0.0 else "L"
        origin = self.feet.get(stance, np.zeros(2))
        self.state.p = self.state.p - origin
        self.stance = stance
        self.mode = "walk"
        self.step_index += 1
        jd = self.cfg.desired.period_index
        self.phase = PhaseState(T_current=float(self.lib.periods[jd]),
                                t0=0.0, s0=0.0, step_index=self.step_index,
                                stance=stance)
        self.active = None
        self.overtime = 0.0
        self.feet = {}

    def _stop_walking(self, p_minus: np.ndarray) -> None:
        other = "R" if self.stance == "L" else "L"
        self.mode = "stand"
        self.feet = {self.stance: np.zeros(2), other: self.state.p - p_minus}
        self.active = None
        self.overtime = 0.0

    def _fire_impact(self, t_impact: float, dh: float, stopped_check: bool = True) -> bool:
        """Runs the impact map; returns True if the robot stopped to standing."""
        pre = self.state
        tgt = foot_target(self.active)  # physical frame for either stance
        post = impact(pre, tgt, ground_offset=dh)
        ev = StepEvent(index=self.phase.step_index, t=t_impact,
                       stance_old=self.stance,
                       stance_new="R" if self.stance == "L" else "L",
                       T=self.phase.T_current,
                       p_minus=pre.p.copy(), v_minus=pre.v.copy(),
                       p_plus=post.p.copy(), v_plus=post.v.copy(),
                       target=tgt, saturated=self.last_sat,
                       truncated=self.last_trunc)
        self.state = post
        self.stance = ev.stance_new
        self.step_index += 1
        self.ground += dh
        self.overtime = 0.0
        stopped = False
        if stopped_check and self.intent == "stand":
            dec = standing_policy(self.state, self.cfg, mode="walk", g=self.params.g)
            if dec is StandingDecision.MAY_STOP:
                self._stop_walking(pre.p)
                stopped = True
        ev.stopped = stopped
        self.steps.append(ev)
        return stopped

    # -- tick bodies ----------------------------------------------------------

    def _standing_tick(self) -> TickForces:
        cp = np.clip(
            self.state.p + self.state.v * math.sqrt(self.state.z / self.params.g),
            [-self.cfg.support_halfwidth[0], -self.cfg.support_halfwidth[1]],
            [+self.cfg.support_halfwidth[0], +self.cfg.support_halfwidth[1]],
        )
        ref = VerticalReference.from_gait(self.standing_gait, T=1.0)
        self.state, forces = step_continuous(self.state, ref, self.dt,
                                             self.params, pivot=(cp[0], cp[1]))
        return forces

    def _planner_state(self) -> CentroidalState:
        if self.rng is None:
            return self.state
        s = self.state.copy()
        s.p = s.p + self.rng.normal(0.0, self.scn.jitter_std, 2)
        s.v = s.v + self.rng.normal(0.0, self.scn.jitter_std, 2)
        return s

    def _walking_tick(self, t: float) -> tuple[TickForces, bool]:
        """Returns (forces, fell)."""
        res = synthesize(self._planner_state(), self.phase, self.lib, self.cfg,
                         active=self.active)
        if res.fall:
            return TickForces(0.0, 0.0, 0.0, False), True
        self.active = res.alpha
        self.last_sat, self.last_trunc = res.saturated, res.truncated
        self.phase = replace(self.phase, T_current=res.T)

        dh = self._terrain_height(t) - self.ground
        remaining = (1.0 - self.phase.s0) * res.T

        # early contact on a raised ground level during swing descent
        if dh > 1e-9 and self.phase.s0 >= 0.5:
            zrow = self.active.alpha[OutputIndex.Z_FOOT]
            if (bezier_eval(zrow, self.phase.s0) <= dh
                    and bezier_rate(zrow, self.phase.s0, res.T) < 0.0):
                stopped = self._fire_impact(t, dh)
                ref = (VerticalReference.from_gait(self.standing_gait, T=1.0)
                       if stopped else
                       VerticalReference(self.active.alpha[OutputIndex.Z_COM],
                                         res.T, 0.0, 1.0))
                if stopped:
                    forces = self._standing_tick()
                else:
                    self.state, forces = step_continuous(self.state, ref, self.dt, self.params)
                    self.phase = PhaseState(T_current=res.T, t0=self.dt,
                                            s0=min(self.dt / res.T, np.nextafter(1.0, 0.0)),
                                            step_index=self.step_index, stance=self.stance)
                return forces, False

        if remaining > self.dt + 1e-12 or (remaining <= self.dt and dh < -1e-9):
            if remaining <= self.dt and dh < -1e-9:
                # past the nominal step end but the ground dropped: extend the
                # swing downward until it finds the lower level
                self.overtime += self.dt
                if -self.params.late_descent_rate * self.overtime <= dh:
                    ref = VerticalReference(self.active.alpha[OutputIndex.Z_COM],
                                            res.T, self.phase.t0, self.phase.s0)
                    self.state, forces = step_continuous(self.state, ref, self.dt, self.params)
                    stopped = self._fire_impact(t + self.dt, dh)
                    if not stopped:
                        self.phase = PhaseState(T_current=res.T, t0=0.0, s0=0.0,
                                                step_index=self.step_index,
                                                stance=self.stance)
                    return forces, False
            ref = VerticalReference(self.active.alpha[OutputIndex.Z_COM], res.T,
                                    self.phase.t0, self.phase.s0)
            self.state, forces = step_continuous(self.state, ref, self.dt, self.params)
            s_next = self.phase.s0 + self.dt / res.T
            self.phase = PhaseState(T_current=res.T, t0=self.phase.t0 + self.dt,
                                    s0=min(s_next, np.nextafter(1.0, 0.0)),
                                    step_index=self.phase.step_index, stance=self.stance)
            return forces, False

        # impact inside this tick: integrate exactly to s=1, exchange stance,
        # then spend any leftover under the held (old) vertical reference
        ref = VerticalReference(self.active.alpha[OutputIndex.Z_COM], res.T,
                                self.phase.t0, self.phase.s0)
        self.state, forces = step_continuous(self.state, ref, remaining, self.params)
        stopped = self._fire_impact(t + remaining, dh)
        leftover = self.dt - remaining
        if stopped:
            if leftover > 1e-12:
                self._standing_partial(leftover)
        else:
            self.phase = PhaseState(T_current=res.T, t0=leftover,
                                    s0=min(leftover / res.T, np.nextafter(1.0, 0.0)),
                                    step_index=self.step_index, stance=self.stance)
            if leftover > 1e-12:
                held = VerticalReference(self.active.alpha[OutputIndex.Z_COM],
                                         res.T, 0.0, 1.0)
                self.state, _ = step_continuous(self.state, held, leftover, self.params)
        return forces, False

    def _standing_partial(self, dt: float) -> None:
        cp = np.clip(
            self.state.p + self.state.v * math.sqrt(self.state.z / self.params.g),
            [-self.cfg.support_halfwidth[0], -self.cfg.support_halfwidth[1]],
            [+self.cfg.support_halfwidth[0], +self.cfg.support_halfwidth[1]],
        )
        ref = VerticalReference.from_gait(self.standing_gait, T=1.0)
        self.state, _ = step_continuous(self.state, ref, dt, self.params,
                                        pivot=(cp[0], cp[1]))

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunResult:
        cmd_cur = imp_cur = 0
        status = "completed"
        fall_time = None
        for k in range(self.n_ticks):
            t = k * self.dt
            due, cmd_cur = self._due(self.scn.commands, cmd_cur, t)
            for cmd in due:
                self.cfg = replace(self.cfg, desired=cmd.desired)
                self.intent = cmd.intent
            due, imp_cur = self._due(self.scn.impulses, imp_cur, t)
            for ev in due:
                self.state = apply_impulse(self.state, ev, self.params.m)

            if self.mode == "stand":
                dec = standing_policy(self.state, self.cfg, mode="stand", g=self.params.g)
                if self.intent == "walk" or dec is StandingDecision.START_STEPPING:
                    cp = self.state.p + self.state.v * math.sqrt(self.state.z / self.params.g)
                    self._start_walking(cp)

            fell = False
            try:
                if self.mode == "stand":
                    forces = self._standing_tick()
                else:
                    forces, fell = self._walking_tick(t)
            except PlantFailureError:
                self._log_tick(t, TickForces(0.0, 0.0, 0.0, False), fall=False)
                status = "plant_failure"
                break

            self._log_tick(t, forces, fall=fell)
            if fell:
                status = "fall"
                fall_time = t
                break
        return RunResult(status=status, ticks=self.log.trimmed(), steps=self.steps,
                         final_state=self.state, fall_time=fall_time)

    def _log_tick(self, t: float, forces: TickForces, fall: bool) -> None:
        standing = self.mode == "stand"
        gait = self.active if self.active is not None else self.standing_gait
        tx, ty = foot_target(gait)
        self.log.append(
            t=t + self.dt,  # state is logged at the end of the tick
            s=0.0 if standing else self.phase.s0,
            T=math.inf if standing else self.phase.T_current,
            step=self.step_index,
            stance="S" if standing else self.stance,
            px=self.state.p[0], py=self.state.p[1], z=self.state.z,
            vx=self.state.v[0], vy=self.state.v[1],
            fz=forces.fz, fpx=forces.fpx, fpy=forces.fpy,
            xfoot=tx, yfoot=ty,
            sat=int(self.last_sat), trunc=int(self.last_trunc), fall=int(fall),
        )


def run_scenario(scn: ScenarioConfig, lib: GaitLibrary) -> RunResult:
    """Execute a scenario closed-loop at 1 kHz and return the trajectory log."""
    return _Runner(scn, lib).run()


# ---------------------------------------------------------------------------
# Scenario files: key/value lines plus command / impulse / terrain event lines
# ---------------------------------------------------------------------------

_AXIS_ALIASES = {"x": "x", "sagittal": "x", "y": "y", "lateral": "y"}

_FLOAT_KEYS = {
    "duration", "mass", "gravity", "mu", "kp", "kd", "fz_bias", "ref_lag",
    "late_descent_rate", "kx", "ky", "scom_x", "scom_y", "sfoot_x_min",
    "sfoot_x_max", "sfoot_y_min", "sfoot_y_max", "support_x", "support_y",
    "max_modification", "init_px", "init_py", "init_vx", "init_vy", "init_z",
    "init_zdot", "jitter_std",
}


def parse_scenario(text: str, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    kv: dict[str, object] = {}
    commands: list[Command] = []
    impulses: list[ImpulseEvent] = []
    terrain: list[TerrainEvent] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "command":
                t, vx, rvy, lvy = (float(p) for p in parts[1:5])
                jd = int(parts[5])
                commands.append(Command(t, DesiredGait(vx, rvy, lvy, jd), parts[6]))
            elif key == "impulse":
                axis = _AXIS_ALIASES[parts[2]]
                impulses.append(ImpulseEvent(float(parts[1]), axis, float(parts[3])))
            elif key == "terrain":
                terrain.append(TerrainEvent(float(parts[1]), float(parts[2])))
            elif key in _FLOAT_KEYS:
                kv[key] = float(parts[1])
            elif key == "seed":
                kv[key] = int(parts[1])
            elif key == "start_mode":
                kv[key] = parts[1]
            elif key == "log":
                kv["log_path"] = parts[1]
            else:
                raise ValueError(f"unknown key '{key}'")
        except (ValueError, KeyError, IndexError) as e:
            raise ScenarioFormatError(f"scenario line {no}: {e}") from None

    for key, val in (overrides or {}).items():
        if key in _FLOAT_KEYS:
            kv[key] = float(val)
        elif key == "seed":
            kv[key] = int(val)
        elif key in ("start_mode",):
            kv[key] = val
        elif key == "log":
            kv["log_path"] = val
        else:
            raise ScenarioFormatError(f"override: unknown key '{key}'")

    return _assemble_scenario(kv, commands, impulses, terrain)


def _assemble_scenario(kv: dict, commands, impulses, terrain) -> ScenarioConfig:
    plant = PlantParams(
        m=kv.get("mass", 17.0), g=kv.get("gravity", 9.81), mu=kv.get("mu", 0.6),
        kp=kv.get("kp", 100.0), kd=kv.get("kd", 20.0),
        fz_bias=kv.get("fz_bias", 1.0), ref_lag=kv.get("ref_lag", 0.0),
        late_descent_rate=kv.get("late_descent_rate", 0.2))
    regions = FeasibleRegions(
        com_x=kv.get("scom_x", 0.25), com_y=kv.get("scom_y", 0.20),
        foot_x_min=kv.get("sfoot_x_min", -0.30), foot_x_max=kv.get("sfoot_x_max", 0.30),
        foot_y_min=kv.get("sfoot_y_min", 0.04), foot_y_max=kv.get("sfoot_y_max", 0.30))
    first = commands[0].desired if commands and commands[0].time <= 0.0 else DesiredGait()
    synth = SynthesizerConfig(
        kx=kv.get("kx", 0.08), ky=kv.get("ky", 0.095), regions=regions,
        desired=first,
        support_halfwidth=(kv.get("support_x", 0.05), kv.get("support_y", 0.10)),
        max_modification=kv.get("max_modification", 0.02),
        gains=plant.gains)
    return ScenarioConfig(
        duration=kv.get("duration", 10.0), plant=plant, synth=synth,
        commands=commands, impulses=impulses, terrain=terrain,
        start_mode=kv.get("start_mode", "stand"),
        init_px=kv.get("init_px", 0.0), init_py=kv.get("init_py"),
        init_vx=kv.get("init_vx", 0.0), init_vy=kv.get("init_vy", 0.0),
        init_z=kv.get("init_z"), init_zdot=kv.get("init_zdot", 0.0),
        jitter_std=kv.get("jitter_std", 0.0), seed=kv.get("seed", 0),
        log_path=kv.get("log_path"))


def load_scenario(path: str | Path, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text(), overrides)


# ---------------------------------------------------------------------------
# Telemetry CSV
# ---------------------------------------------------------------------------

def write_log(ticks: dict, destination: str | Path) -> None:
    """One row per tick, floats at 12 significant digits."""
    names = LOG_HEADER.split(",")
    n = len(ticks["t"])
    rows = [LOG_HEADER]
    for i in range(n):
        cells = []
        for name in names:
            val = ticks[name][i]
            if name == "stance":
                cells.append(str(val))
            elif name in ("step", "sat", "trunc", "fall"):
                cells.append(str(int(val)))
            else:
                cells.append(f"{float(val):.12g}")
        rows.append(",".join(cells))
    Path(destination).write_text("\n".join(rows) + "\n")


def read_log(source: str | Path) -> dict:
    """Parse a telemetry CSV back into column arrays."""
    lines = Path(source).read_text().splitlines()
    if not lines or lines[0] != LOG_HEADER:
        raise ScenarioFormatError(f"{source}: row 1: bad or missing log header")
    names = LOG_HEADER.split(",")
    cols: dict[str, list] = {n: [] for n in names}
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(names):
            raise ScenarioFormatError(f"{source}: row {no}: expected {len(names)} fields")
        try:
            for name, cell in zip(names, parts):
                if name == "stance":
                    cols[name].append(cell)
                elif name in ("step", "sat", "trunc", "fall"):
                    cols[name].append(int(cell))
                else:
                    cols[name].append(float(cell))
        except ValueError:
            raise ScenarioFormatError(f"{source}: row {no}: malformed value") from None
    out: dict[str, np.ndarray] = {}
    for name in names:
        if name == "stance":
            out[name] = np.array(cols[name], dtype="U1")
        elif name in ("step", "sat", "trunc", "fall"):
            out[name] = np.array(cols[name], dtype=int)
        else:
            out[name] = np.array(cols[name], dtype=float)
    return out
