"""Empirical stability laboratory.

Estimates, by seeded low-discrepancy sampling on the reduced plant, the
constants that govern step-to-step convergence: the interpolation
periodicity errors (eps_x, eps_y), the footstrike sensitivity bounds
(delta_x, delta_y), and the Lipschitz constant K of the interpolated foot
target.  From these it derives the contraction constants k1..k4, checks the
footstrike-gain gate, computes ultimate-boundedness step counts, and
verifies the per-step stability constraints on recorded trajectory logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from . import _kernel
from .bezier import bezier_eval, bezier_rate
from .library import GaitLibrary, GaitParams, OutputIndex, foot_target
from .plant import PlantParams
from .synthesizer import DesiredGait

__all__ = [
    "MapUndefinedError",
    "PropertyViolationError",
    "poincare_map",
    "estimate_epsilon",
    "estimate_delta",
    "estimate_lipschitz",
    "derive_constants",
    "uub_bound",
    "StabilityReport",
    "PeriodConstants",
    "analyze_library",
    "save_report",
    "load_report",
    "verify_constraints",
    "VerificationResult",
    "CONTRACTION_SLACK",
    "POSITION_SLACK",
]

CONTRACTION_SLACK = 0.05  # absolute slack on contraction factors
POSITION_SLACK = 0.02     # [m] slack on the position constraints


class MapUndefinedError(RuntimeError):
    """The one-step rollout failed (plant singularity)."""


class PropertyViolationError(RuntimeError):
    """An estimated quantity violated its sign/shape property."""


def poincare_map(alpha: GaitParams, v_minus, plant: PlantParams) -> np.ndarray:
    """Pre-impact velocities after one step under a fixed gait.

    The initial state sits on the gait's own orbit: the CoM starts at the
    negated foot target with the given velocities carried through impact.
    """
    T = alpha.label.T
    if math.isinf(T):
        raise ValueError("standing gait defines no finite step map")
    tx, ty = foot_target(alpha)
    zrow = np.ascontiguousarray(alpha.alpha[OutputIndex.Z_COM], dtype=float)
    m = zrow.size - 1
    d1 = np.ascontiguousarray(m * np.diff(zrow))
    d2 = np.ascontiguousarray((m - 1) * np.diff(d1))
    z0 = bezier_eval(zrow, 0.0)
    zd0 = bezier_rate(zrow, 0.0, T)
    x0 = np.array([z0, -tx, -ty, zd0, float(v_minus[0]), float(v_minus[1])])
    x, status, _, _, _, _ = _kernel.integrate_centroidal(
        x0, 0.0, T, zrow, d1, d2, T, 0.0,
        plant.kp, plant.kd, plant.m, plant.g,
        plant.fz_bias, plant.ref_lag, 0.0, 0.0)
    if status != _kernel.STATUS_OK:
        raise MapUndefinedError(f"one-step rollout singular for gait {alpha.label}")
    return x[4:6].copy()


def _sobol_velocities(lib: GaitLibrary, n: int, seed: int) -> np.ndarray:
    lows = [lib.vx_grid[0], lib.rvy_grid[0], lib.lvy_grid[0]]
    highs = [lib.vx_grid[-1], lib.rvy_grid[-1], lib.lvy_grid[-1]]
    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    pts = sampler.random(n)
    return qmc.scale(pts, lows, highs)


@dataclass
class EpsilonEstimate:
    eps_x: float
    eps_y: float
    samples: int
    excluded: int


def estimate_epsilon(lib: GaitLibrary, plant: PlantParams | None = None,
                     samples: int = 512, seed: int = 0) -> EpsilonEstimate:
    """Worst periodicity deviation of interpolated gaits over the grid hull."""
    if samples < 100:
        raise ValueError("estimate_epsilon needs at least 100 samples")
    plant = plant or PlantParams()
    pts = _sobol_velocities(lib, samples, seed)
    eps_x = eps_y = 0.0
    excluded = 0
    for j in range(lib.periods.size):
        for vx, rvy, lvy in pts:
            gait = lib.interpolate(j, vx, rvy, lvy)
            try:
                res = poincare_map(gait, (vx, rvy), plant)
            except MapUndefinedError:
                excluded += 1
                continue
            eps_x = max(eps_x, abs(res[0] - vx))
            eps_y = max(eps_y, abs(res[1] - lvy))
    return EpsilonEstimate(eps_x, eps_y, samples * lib.periods.size, excluded)


@dataclass
class DeltaEstimate:
    delta_x: float                    # most negative x ratio
    delta_y: float
    per_period: dict                  # T -> (dx_min, dx_max, dy_min, dy_max)
    samples: int
    ratios: int
    probe: float


def estimate_delta(lib: GaitLibrary, plant: PlantParams | None = None,
                   probe: float = 1e-3, samples: int = 600,
                   seed: int = 0) -> DeltaEstimate:
    """Finite-difference footstrike sensitivity ratios on sampled gaits.

    Every one-sided ratio must be strictly negative; a non-negative ratio
    raises PropertyViolationError naming the offending sample.
    """
    if not 1e-4 <= probe <= 1e-2:
        raise ValueError("probe must lie in [1e-4, 1e-2] m")
    plant = plant or PlantParams()
    pts = _sobol_velocities(lib, samples, seed)
    per_x: dict[float, list[float]] = {float(T): [] for T in lib.periods}
    per_y: dict[float, list[float]] = {float(T): [] for T in lib.periods}
    k = lib.periods.size
    n_ratios = 0
    for i, (vx, rvy, lvy) in enumerate(pts):
        j = i % k
        T = float(lib.periods[j])
        base = lib.interpolate(j, vx, rvy, lvy)
        p0 = poincare_map(base, (vx, rvy), plant)
        for row, bucket in ((OutputIndex.X_FOOT, per_x), (OutputIndex.Y_FOOT, per_y)):
            axis = 0 if row == OutputIndex.X_FOOT else 1
            for sign in (probe, -probe):
                pert = base.copy()
                pert.alpha[row, -1] += sign
                p1 = poincare_map(pert, (vx, rvy), plant)
                ratio = (p1[axis] - p0[axis]) / sign
                if ratio >= 0.0:
                    raise PropertyViolationError(
                        f"non-negative footstrike ratio {ratio:.3e} at "
                        f"(T={T}, vx={vx:.3f}, rvy={rvy:.3f}, lvy={lvy:.3f}, "
                        f"axis={'x' if axis == 0 else 'y'}, probe={sign:+.1e})"
                    )
                bucket[T].append(ratio)
                n_ratios += 1
    per_period = {
        T: (min(per_x[T]), max(per_x[T]), min(per_y[T]), max(per_y[T]))
        for T in per_x
    }
    return DeltaEstimate(
        delta_x=min(min(v) for v in per_x.values()),
        delta_y=min(min(v) for v in per_y.values()),
        per_period=per_period, samples=samples, ratios=n_ratios, probe=probe)


@dataclass
class LipschitzEstimate:
    K: float
    per_period: dict  # T -> K
    pairs: int


def estimate_lipschitz(lib: GaitLibrary, pairs: int = 2048, seed: int = 0) -> LipschitzEstimate:
    """Sampled Lipschitz constant of the interpolated foot target over the hull."""
    if pairs < 1000:
        raise ValueError("estimate_lipschitz needs at least 1000 pairs")
    pa = _sobol_velocities(lib, pairs, seed)
    pb = _sobol_velocities(lib, pairs, seed + 1)
    per = {}
    for j, T in enumerate(lib.periods):
        worst = 0.0
        for a, b in zip(pa, pb):
            dv = math.sqrt(float(np.sum((a - b) ** 2)))
            if dv < 1e-12:
                continue
            fa = lib.g_foot(j, a[0], a[1], a[2])
            fb = lib.g_foot(j, b[0], b[1], b[2])
            dg = math.hypot(fa[0] - fb[0], fa[1] - fb[1])
            worst = max(worst, dg / dv)
        per[float(T)] = worst
    return LipschitzEstimate(K=max(per.values()), per_period=per, pairs=pairs)


@dataclass
class DerivedConstants:
    k1: float
    k2: float
    k3: float
    k4: float
    gate_pass: bool
    kx_admissible_max: float
    ky_admissible_max: float


def derive_constants(delta_x: float, delta_y: float, K: float,
                     kx: float, ky: float) -> DerivedConstants:
    """Contraction and position constants plus the footstrike-gain gate."""
    if delta_x >= 0.0 or delta_y >= 0.0:
        raise ValueError("delta estimates must be negative")
    kx_max = -2.0 / delta_x
    ky_max = -2.0 / delta_y
    gate = (0.0 < kx < kx_max) and (0.0 < ky < ky_max)
    return DerivedConstants(
        k1=abs(1.0 + delta_x * kx),
        k2=abs(1.0 + delta_y * ky),
        k3=math.sqrt(2.0) * K + kx,
        k4=math.sqrt(2.0) * K + ky,
        gate_pass=gate,
        kx_admissible_max=kx_max,
        ky_admissible_max=ky_max)


def uub_bound(eps_x: float, k1: float, a: float, b: float) -> int:
    """Smallest step count N after which errors starting at a stay within b."""
    if not 0.0 < k1 < 1.0:
        raise ValueError(f"k1={k1} must lie in (0, 1)")
    if a <= 0.0:
        raise ValueError("initial error a must be positive")
    floor = eps_x / (1.0 - k1)
    if b <= floor:
        raise ValueError(f"bound b={b} must exceed eps/(1-k1)={floor}")
    z = (b - floor) / a
    if z >= 1.0:
        return 0
    return max(0, math.ceil(math.log(z) / math.log(k1)))


@dataclass
class PeriodConstants:
    T: float
    delta_x_min: float
    delta_x_max: float
    delta_y_min: float
    delta_y_max: float
    k1: float  # worst |1 + delta_x * kx| over the measured ratio range
    k2: float


@dataclass
class StabilityReport:
    kx: float
    ky: float
    delta_x: float
    delta_y: float
    eps_x: float
    eps_y: float
    K: float
    k1: float
    k2: float
    k3: float
    k4: float
    gate_pass: bool
    kx_admissible_max: float
    ky_admissible_max: float
    uub_a: float
    uub_b: float
    uub_n: int
    samples_epsilon: int
    samples_delta: int
    pairs_lipschitz: int
    excluded_epsilon: int
    probe: float
    seed: int
    grid: dict = field(default_factory=dict)
    per_period: list[PeriodConstants] = field(default_factory=list)
    library: str = "-"
    notes: list[str] = field(default_factory=list)

    def period_constants(self, T: float) -> PeriodConstants | None:
        for pc in self.per_period:
            if abs(pc.T - T) < 1e-9:
                return pc
        return None


def analyze_library(lib: GaitLibrary, plant: PlantParams | None = None,
                    kx: float = 0.08, ky: float = 0.095, seed: int = 0,
                    samples_epsilon: int = 512, samples_delta: int = 600,
                    pairs_lipschitz: int = 2048, probe: float = 1e-3,
                    library_path: str = "-") -> StabilityReport:
    """Run all estimators on a library and assemble the stability report."""
    plant = plant or PlantParams()
    eps = estimate_epsilon(lib, plant, samples=samples_epsilon, seed=seed)
    dlt = estimate_delta(lib, plant, probe=probe, samples=samples_delta, seed=seed + 1)
    lip = estimate_lipschitz(lib, pairs=pairs_lipschitz, seed=seed + 2)
    cst = derive_constants(dlt.delta_x, dlt.delta_y, lip.K, kx, ky)

    per = []
    for T in lib.periods:
        dxl, dxh, dyl, dyh = dlt.per_period[float(T)]
        per.append(PeriodConstants(
            T=float(T), delta_x_min=dxl, delta_x_max=dxh,
            delta_y_min=dyl, delta_y_max=dyh,
            k1=max(abs(1.0 + dxl * kx), abs(1.0 + dxh * kx)),
            k2=max(abs(1.0 + dyl * ky), abs(1.0 + dyh * ky))))

    span = float(lib.vx_grid[-1] - lib.vx_grid[0])
    if cst.gate_pass and 0.0 < cst.k1 < 1.0:
        uub_a = span / 2.0
        uub_b = max(0.05, 2.0 * eps.eps_x / (1.0 - cst.k1))
        uub_n = uub_bound(eps.eps_x, cst.k1, uub_a, uub_b)
    else:
        uub_a = uub_b = float("nan")
        uub_n = -1

    grid = {
        "vx_min": float(lib.vx_grid[0]), "vx_max": float(lib.vx_grid[-1]),
        "rvy_min": float(lib.rvy_grid[0]), "rvy_max": float(lib.rvy_grid[-1]),
        "lvy_min": float(lib.lvy_grid[0]), "lvy_max": float(lib.lvy_grid[-1]),
        "spacing_vx": float(np.max(np.diff(lib.vx_grid))) if lib.vx_grid.size > 1 else 0.0,
        "spacing_rvy": float(np.max(np.diff(lib.rvy_grid))) if lib.rvy_grid.size > 1 else 0.0,
        "spacing_lvy": float(np.max(np.diff(lib.lvy_grid))) if lib.lvy_grid.size > 1 else 0.0,
    }
    return StabilityReport(
        kx=kx, ky=ky, delta_x=dlt.delta_x, delta_y=dlt.delta_y,
        eps_x=eps.eps_x, eps_y=eps.eps_y, K=lip.K,
        k1=cst.k1, k2=cst.k2, k3=cst.k3, k4=cst.k4,
        gate_pass=cst.gate_pass,
        kx_admissible_max=cst.kx_admissible_max,
        ky_admissible_max=cst.ky_admissible_max,
        uub_a=uub_a, uub_b=uub_b, uub_n=uub_n,
        samples_epsilon=eps.samples, samples_delta=dlt.samples,
        pairs_lipschitz=lip.pairs, excluded_epsilon=eps.excluded,
        probe=probe, seed=seed, grid=grid, per_period=per,
        library=library_path,
        notes=["delta ratios measured by direct plant rollouts, "
               "not a discretized propagation model"])


# ---------------------------------------------------------------------------
# Report I/O (.stab)
# ---------------------------------------------------------------------------

def _f(x: float) -> str:
    return f"{x:.17g}"


def save_report(rep: StabilityReport, destination: str | Path) -> None:
    lines = [
        "version 1",
        f"library {rep.library}",
        f"seed {rep.seed}",
        f"kx {_f(rep.kx)}",
        f"ky {_f(rep.ky)}",
        f"samples_epsilon {rep.samples_epsilon}",
        f"samples_delta {rep.samples_delta}",
        f"pairs_lipschitz {rep.pairs_lipschitz}",
        f"excluded_epsilon {rep.excluded_epsilon}",
        f"probe {_f(rep.probe)}",
        f"delta_x {_f(rep.delta_x)}",
        f"delta_y {_f(rep.delta_y)}",
        f"eps_x {_f(rep.eps_x)}",
        f"eps_y {_f(rep.eps_y)}",
        f"K {_f(rep.K)}",
        f"k1 {_f(rep.k1)}",
        f"k2 {_f(rep.k2)}",
        f"k3 {_f(rep.k3)}",
        f"k4 {_f(rep.k4)}",
        f"gate {'pass' if rep.gate_pass else 'fail'}",
        f"kx_admissible_max {_f(rep.kx_admissible_max)}",
        f"ky_admissible_max {_f(rep.ky_admissible_max)}",
        f"uub_a {_f(rep.uub_a)}",
        f"uub_b {_f(rep.uub_b)}",
        f"uub_n {rep.uub_n}",
    ]
    for key, val in rep.grid.items():
        lines.append(f"grid_{key} {_f(val)}")
    for pc in rep.per_period:
        lines.append(
            "period " + " ".join(_f(v) for v in (
                pc.T, pc.delta_x_min, pc.delta_x_max,
                pc.delta_y_min, pc.delta_y_max, pc.k1, pc.k2)))
    for note in rep.notes:
        lines.append(f"note {note}")
    Path(destination).write_text("\n".join(lines) + "\n")


def load_report(source: str | Path) -> StabilityReport:
    kv: dict[str, str] = {}
    per: list[PeriodConstants] = []
    notes: list[str] = []
    grid: dict[str, float] = {}
    for no, raw in enumerate(Path(source).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        if key == "period":
            vals = [float(v) for v in rest.split()]
            if len(vals) != 7:
                raise ValueError(f"report line {no}: malformed period record")
            per.append(PeriodConstants(*vals))
        elif key == "note":
            notes.append(rest)
        elif key.startswith("grid_"):
            grid[key[5:]] = float(rest)
        else:
            kv[key] = rest
    try:
        return StabilityReport(
            kx=float(kv["kx"]), ky=float(kv["ky"]),
            delta_x=float(kv["delta_x"]), delta_y=float(kv["delta_y"]),
            eps_x=float(kv["eps_x"]), eps_y=float(kv["eps_y"]), K=float(kv["K"]),
            k1=float(kv["k1"]), k2=float(kv["k2"]),
            k3=float(kv["k3"]), k4=float(kv["k4"]),
            gate_pass=kv["gate"] == "pass",
            kx_admissible_max=float(kv["kx_admissible_max"]),
            ky_admissible_max=float(kv["ky_admissible_max"]),
            uub_a=float(kv["uub_a"]), uub_b=float(kv["uub_b"]),
            uub_n=int(kv["uub_n"]),
            samples_epsilon=int(kv["samples_epsilon"]),
            samples_delta=int(kv["samples_delta"]),
            pairs_lipschitz=int(kv["pairs_lipschitz"]),
            excluded_epsilon=int(kv["excluded_epsilon"]),
            probe=float(kv["probe"]), seed=int(kv["seed"]),
            grid=grid, per_period=per, library=kv.get("library", "-"),
            notes=notes)
    except KeyError as e:
        raise ValueError(f"report missing field {e}") from None


# ---------------------------------------------------------------------------
# Per-step constraint verification on trajectory logs
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    side: str            # stance of the step starting at this impact
    t: float
    p_plus: np.ndarray
    v_plus: np.ndarray
    T_prev: float        # period executed by the step that just ended
    sat_prev: bool
    trunc_prev: bool
    T_exec: float = 0.0  # period executed by this step (filled afterwards)
    sat: bool = False
    trunc: bool = False


@dataclass
class ConstraintRow:
    step: int
    constraint: int      # 1..4
    lhs: float
    rhs: float
    ok: bool
    applicable: bool
    ratio: float | None = None


@dataclass
class VerificationResult:
    rows: list[ConstraintRow]
    n_steps: int

    @property
    def violations(self) -> list[ConstraintRow]:
        return [r for r in self.rows if r.applicable and not r.ok]

    @property
    def all_ok(self) -> bool:
        return not self.violations


def _extract_steps(ticks: dict) -> list[list[StepRecord]]:
    """Post-impact records grouped into uninterrupted walking chains."""
    step = ticks["step"]
    stance = ticks["stance"]
    chains: list[list[StepRecord]] = []
    current: list[StepRecord] = []
    for i in range(1, len(step)):
        if stance[i] == "S":
            if current:
                chains.append(current)
                current = []
            continue
        if step[i] != step[i - 1] and stance[i - 1] != "S":
            rec = StepRecord(
                step=int(step[i]), side=str(stance[i]), t=float(ticks["t"][i]),
                p_plus=np.array([ticks["px"][i], ticks["py"][i]]),
                v_plus=np.array([ticks["vx"][i], ticks["vy"][i]]),
                T_prev=float(ticks["T"][i - 1]),
                sat_prev=bool(ticks["sat"][i - 1]),
                trunc_prev=bool(ticks["trunc"][i - 1]))
            current.append(rec)
    if current:
        chains.append(current)
    for chain in chains:
        for a, b in zip(chain, chain[1:]):
            a.T_exec, a.sat, a.trunc = b.T_prev, b.sat_prev, b.trunc_prev
    return chains


def _desired_post_impact(side: str, desired: DesiredGait, lib: GaitLibrary,
                         T: float) -> tuple[np.ndarray, np.ndarray]:
    """Desired post-impact (p+, v+) for a step on the given stance side."""
    j = int(np.argmin(np.abs(lib.periods - T)))
    if side == "L":
        # placed by the right-stance gait of the desired cycle
        fx, fy = lib.g_foot(j, desired.vx, desired.lvy, desired.rvy)
        p_d = np.array([-fx, -fy])
        v_d = np.array([desired.vx, desired.lvy])
    else:
        # placed by the left-stance gait: mirror of the query with negated,
        # swapped lateral targets
        fx, fy = lib.g_foot(j, desired.vx, -desired.rvy, -desired.lvy)
        p_d = np.array([-fx, +fy])
        v_d = np.array([desired.vx, desired.rvy])
    return p_d, v_d


def verify_constraints(ticks: dict, report: StabilityReport, desired: DesiredGait,
                       lib: GaitLibrary) -> VerificationResult:
    """Check the four per-step stability constraints on a trajectory log.

    Contraction constraints use the executing period's constants and are
    marked not-applicable on steps whose synthesis saturated the velocity
    grid or truncated the footstrike modification (outside the theory's
    domain); position constraints hold regardless and are always checked.
    """
    chains = _extract_steps(ticks)
    n_steps = sum(len(c) for c in chains)
    if n_steps < 3:
        raise ValueError(f"log contains only {n_steps} post-impact records, need >= 3")

    rows: list[ConstraintRow] = []
    atol = 1e-9
    for chain in chains:
        for rec in chain:
            p_d, v_d = _desired_post_impact(rec.side, desired, lib,
                                            rec.T_prev if rec.T_prev else lib.periods[0])
            verr = float(np.hypot(rec.v_plus[0] - v_d[0], rec.v_plus[1] - v_d[1]))
            lhs3 = abs(rec.p_plus[0] - p_d[0])
            lhs4 = abs(rec.p_plus[1] - p_d[1])
            rhs3 = report.k3 * verr + POSITION_SLACK
            rhs4 = report.k4 * verr + POSITION_SLACK
            rows.append(ConstraintRow(rec.step, 3, lhs3, rhs3, lhs3 <= rhs3 + atol, True))
            rows.append(ConstraintRow(rec.step, 4, lhs4, rhs4, lhs4 <= rhs4 + atol, True))

        for a, b in zip(chain, chain[1:]):
            pc = report.period_constants(a.T_exec)
            k1 = pc.k1 if pc is not None else report.k1
            k2 = pc.k2 if pc is not None else report.k2
            applicable = not (a.sat or a.trunc)
            _, v_da = _desired_post_impact(a.side, desired, lib, a.T_exec)
            _, v_db = _desired_post_impact(b.side, desired, lib, a.T_exec)
            e1a = abs(a.v_plus[0] - v_da[0])
            e1b = abs(b.v_plus[0] - v_db[0])
            rhs1 = (k1 + CONTRACTION_SLACK) * e1a + report.eps_x
            rows.append(ConstraintRow(
                b.step, 1, e1b, rhs1, e1b <= rhs1 + atol, applicable,
                ratio=e1b / e1a if e1a > 1e-6 else None))
            e2a = abs(a.v_plus[1] - v_da[1])
            e2b = abs(b.v_plus[1] - v_db[1])
            rhs2 = (k2 + CONTRACTION_SLACK) * e2a + report.eps_y
            rows.append(ConstraintRow(
                b.step, 2, e2b, rhs2, e2b <= rhs2 + atol, applicable,
                ratio=e2b / e2a if e2a > 1e-6 else None))
    return VerificationResult(rows=rows, n_steps=n_steps)
