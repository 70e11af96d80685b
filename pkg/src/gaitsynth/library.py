"""Gait representation and the multi-period gait library.

A gait is a matrix of Bezier coefficient rows (one row per controlled
output) labeled by step period and pre-impact CoM velocities.  The library
is a dense 4-D grid over (period, sagittal velocity, right-stance lateral
velocity, left-stance lateral velocity) plus one standing posture, and is
queried by trilinear interpolation over the three velocity axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

N_OUTPUTS = 10

__all__ = [
    "N_OUTPUTS",
    "OutputIndex",
    "GaitLabel",
    "GaitParams",
    "GaitLibrary",
    "LibraryFormatError",
    "foot_target",
    "mirror",
    "save_library",
    "load_library",
]


class OutputIndex(IntEnum):
    """Row assignment of the controlled outputs (fixed order)."""

    TORSO_ROLL = 0
    TORSO_PITCH = 1
    TORSO_YAW = 2
    Z_COM = 3
    X_FOOT = 4  # swing foot x relative to the CoM
    Y_FOOT = 5  # swing foot y relative to the CoM
    Z_FOOT = 6  # swing foot height
    FOOT_ROLL = 7
    FOOT_PITCH = 8
    FOOT_YAW = 9


# Rows whose sign flips when reflecting a right-stance gait to left stance.
_MIRROR_ROWS = (
    OutputIndex.TORSO_ROLL,
    OutputIndex.TORSO_YAW,
    OutputIndex.Y_FOOT,
    OutputIndex.FOOT_ROLL,
    OutputIndex.FOOT_YAW,
)


class LibraryFormatError(ValueError):
    """A .gaitlib file failed to parse or violates the format invariants."""


@dataclass(frozen=True)
class GaitLabel:
    """Identity of one gait: step period and pre-impact CoM velocities.

    T is the step period in seconds; math.inf marks the standing posture.
    vx_minus is the sagittal pre-impact velocity; rvy_minus / lvy_minus are
    the lateral pre-impact velocities with right / left stance.
    """

    T: float
    vx_minus: float
    rvy_minus: float
    lvy_minus: float

    def __post_init__(self) -> None:
        if not (self.T > 0.0):
            raise ValueError(f"step period must be positive or inf, got {self.T}")

    @property
    def is_standing(self) -> bool:
        return math.isinf(self.T)


@dataclass
class GaitParams:
    """One gait: a label plus the N_OUTPUTS x (M+1) Bezier coefficient matrix."""

    label: GaitLabel
    alpha: np.ndarray

    def __post_init__(self) -> None:
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.ndim != 2 or self.alpha.shape[0] != N_OUTPUTS:
            raise ValueError(f"alpha must be {N_OUTPUTS} x (M+1), got {self.alpha.shape}")
        if self.alpha.shape[1] < 2:
            raise ValueError("alpha needs at least order M=1 (2 columns)")

    @property
    def order(self) -> int:
        return self.alpha.shape[1] - 1

    def copy(self) -> "GaitParams":
        return GaitParams(self.label, self.alpha.copy())


def foot_target(g: GaitParams) -> tuple[float, float]:
    """Pre-impact swing foot (x, y) relative to the CoM (last x/y coefficients)."""
    return float(g.alpha[OutputIndex.X_FOOT, -1]), float(g.alpha[OutputIndex.Y_FOOT, -1])


def mirror(g: GaitParams) -> GaitParams:
    """Reflect a right-stance gait into the left-stance convention.

    Lateral outputs change sign and the R/L lateral velocity labels swap.
    The operation is an involution.
    """
    a = g.alpha.copy()
    for row in _MIRROR_ROWS:
        a[row] = -a[row]
    lbl = replace(g.label, rvy_minus=g.label.lvy_minus, lvy_minus=g.label.rvy_minus)
    return GaitParams(lbl, a)


def _bracket(grid: np.ndarray, q: float) -> tuple[int, float]:
    """Cell index and local coordinate of q on an ascending grid."""
    n = grid.size
    if n == 1:
        return 0, 0.0
    i = int(np.searchsorted(grid, q, side="right")) - 1
    i = min(max(i, 0), n - 2)
    return i, (q - grid[i]) / (grid[i + 1] - grid[i])


class GaitLibrary:
    """Dense gait grid over descending periods and ascending velocity grids."""

    def __init__(
        self,
        periods: np.ndarray,
        vx_grid: np.ndarray,
        rvy_grid: np.ndarray,
        lvy_grid: np.ndarray,
        alphas: np.ndarray,
        standing_alpha: np.ndarray,
    ):
        self.periods = np.asarray(periods, dtype=float)
        self.vx_grid = np.asarray(vx_grid, dtype=float)
        self.rvy_grid = np.asarray(rvy_grid, dtype=float)
        self.lvy_grid = np.asarray(lvy_grid, dtype=float)
        self.alphas = np.asarray(alphas, dtype=float)
        self.standing_alpha = np.asarray(standing_alpha, dtype=float)
        self._validate()
        # fast scalar access to the foot-target tables used by g_foot
        self._xfoot = np.ascontiguousarray(self.alphas[..., OutputIndex.X_FOOT, -1])
        self._yfoot = np.ascontiguousarray(self.alphas[..., OutputIndex.Y_FOOT, -1])
        for arr in (self.periods, self.vx_grid, self.rvy_grid, self.lvy_grid,
                    self.alphas, self.standing_alpha, self._xfoot, self._yfoot):
            arr.flags.writeable = False  # libraries are shared read-only

    def _validate(self) -> None:
        k, l, n = self.periods.size, self.vx_grid.size, self.rvy_grid.size
        if k < 1:
            raise ValueError("library needs at least one finite period")
        if np.any(np.diff(self.periods) >= 0):
            raise ValueError("periods must be strictly descending")
        for name, g in (("vx", self.vx_grid), ("rvy", self.rvy_grid), ("lvy", self.lvy_grid)):
            if np.any(np.diff(g) <= 0):
                raise ValueError(f"{name} grid not ascending")
        if self.lvy_grid.size != n:
            raise ValueError("rvy and lvy grids must have the same length")
        expect = (k, l, n, n, N_OUTPUTS)
        if self.alphas.shape[:5] != expect:
            raise ValueError(f"alphas shape {self.alphas.shape} does not match grids {expect}")
        if self.standing_alpha.shape != self.alphas.shape[-2:]:
            raise ValueError("standing gait shape does not match the grid gaits")
        if not np.all(np.isfinite(self.alphas)):
            raise ValueError("library contains non-finite coefficients")

    @property
    def order(self) -> int:
        return self.alphas.shape[-1] - 1

    @property
    def n_gaits(self) -> int:
        k, l, n = self.periods.size, self.vx_grid.size, self.rvy_grid.size
        return k * l * n * n

    @property
    def standing(self) -> GaitParams:
        return GaitParams(GaitLabel(math.inf, 0.0, 0.0, 0.0), self.standing_alpha.copy())

    def gait(self, j: int, u: int, v: int, w: int) -> GaitParams:
        """Grid vertex gait; its label is defined by the grid coordinates."""
        lbl = GaitLabel(
            float(self.periods[j]),
            float(self.vx_grid[u]),
            float(self.rvy_grid[v]),
            float(self.lvy_grid[w]),
        )
        return GaitParams(lbl, self.alphas[j, u, v, w].copy())

    def clamp_velocities(self, vx: float, vy: float, vys: float) -> tuple[float, float, float, bool]:
        """Clamp a velocity query to the grid hull; flags whether clamping acted."""
        cx = min(max(vx, self.vx_grid[0]), self.vx_grid[-1])
        cy = min(max(vy, self.rvy_grid[0]), self.rvy_grid[-1])
        cs = min(max(vys, self.lvy_grid[0]), self.lvy_grid[-1])
        return cx, cy, cs, (cx != vx or cy != vy or cs != vys)

    def _weights(self, vx: float, vy: float, vys: float):
        u, x1 = _bracket(self.vx_grid, vx)
        v, x2 = _bracket(self.rvy_grid, vy)
        w, x3 = _bracket(self.lvy_grid, vys)
        return (u, x1), (v, x2), (w, x3)

    def interpolate(self, period_index: int, vx: float, vy: float, vys: float,
                    clamp: bool = True) -> GaitParams:
        """Trilinear 8-corner blend of the coefficient matrices at one period.

        vy queries the right-stance lateral axis, vys the left-stance axis.
        Out-of-hull queries are clamped when clamp is True, otherwise raise.
        """
        if not 0 <= period_index < self.periods.size:
            raise IndexError(f"period index {period_index} out of range")
        if clamp:
            vx, vy, vys, _ = self.clamp_velocities(vx, vy, vys)
        else:
            cx, cy, cs, sat = self.clamp_velocities(vx, vy, vys)
            if sat:
                raise ValueError(
                    f"query ({vx}, {vy}, {vys}) outside the velocity grid hull"
                )
        (u, x1), (v, x2), (w, x3) = self._weights(vx, vy, vys)
        a = np.zeros(self.alphas.shape[-2:])
        cell = self.alphas[period_index]
        nu, nv, nw = self.vx_grid.size - 1, self.rvy_grid.size - 1, self.lvy_grid.size - 1
        for du, wu in ((0, 1.0 - x1), (1, x1)):
            for dv, wv in ((0, 1.0 - x2), (1, x2)):
                for dw, ww in ((0, 1.0 - x3), (1, x3)):
                    wgt = wu * wv * ww
                    if wgt == 0.0:
                        continue
                    a += wgt * cell[min(u + du, nu), min(v + dv, nv), min(w + dw, nw)]
        lbl = GaitLabel(float(self.periods[period_index]), vx, vy, vys)
        return GaitParams(lbl, a)

    def g_foot(self, period_index: int, vx: float, vy: float, vys: float,
               clamp: bool = True) -> tuple[float, float]:
        """Pre-impact swing foot (x, y) of the interpolated gait (scalar fast path)."""
        if clamp:
            vx, vy, vys, _ = self.clamp_velocities(vx, vy, vys)
        (u, x1), (v, x2), (w, x3) = self._weights(vx, vy, vys)
        nu, nv, nw = self.vx_grid.size - 1, self.rvy_grid.size - 1, self.lvy_grid.size - 1
        fx = 0.0
        fy = 0.0
        xt = self._xfoot[period_index]
        yt = self._yfoot[period_index]
        for du, wu in ((0, 1.0 - x1), (1, x1)):
            for dv, wv in ((0, 1.0 - x2), (1, x2)):
                for dw, ww in ((0, 1.0 - x3), (1, x3)):
                    wgt = wu * wv * ww
                    if wgt == 0.0:
                        continue
                    iu, iv, iw = min(u + du, nu), min(v + dv, nv), min(w + dw, nw)
                    fx += wgt * xt[iu, iv, iw]
                    fy += wgt * yt[iu, iv, iw]
        return fx, fy


# ---------------------------------------------------------------------------
# Library file I/O (.gaitlib): line-oriented text, 17-significant-digit floats
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def save_library(lib: GaitLibrary, destination: str | Path) -> None:
    """Write a library to a .gaitlib text file (bit-exact round trip)."""
    k, l, n = lib.periods.size, lib.vx_grid.size, lib.rvy_grid.size
    lines = [
        "version 1",
        f"outputs {N_OUTPUTS}",
        f"order {lib.order}",
        "periods " + " ".join([str(k)] + [_fmt(t) for t in lib.periods]),
        "vx " + " ".join([str(l)] + [_fmt(x) for x in lib.vx_grid]),
        "rvy " + " ".join([str(n)] + [_fmt(x) for x in lib.rvy_grid]),
        "lvy " + " ".join([str(n)] + [_fmt(x) for x in lib.lvy_grid]),
    ]
    for j in range(k):
        for u in range(l):
            for v in range(n):
                for w in range(n):
                    lines.append(f"gait {j} {u} {v} {w}")
                    for row in lib.alphas[j, u, v, w]:
                        lines.append(" ".join(_fmt(x) for x in row))
    lines.append("standing")
    for row in lib.standing_alpha:
        lines.append(" ".join(_fmt(x) for x in row))
    Path(destination).write_text("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> tuple[int, str]:
        while self.pos < len(self.lines):
            self.pos += 1
            line = self.lines[self.pos - 1].strip()
            if line:
                return self.pos, line
        raise LibraryFormatError(f"line {len(self.lines)}: unexpected end of file")

    def expect_row(self, width: int, what: str) -> np.ndarray:
        no, line = self.next()
        parts = line.split()
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError:
            raise LibraryFormatError(f"line {no}: malformed {what} row") from None
        if vals.size != width:
            raise LibraryFormatError(
                f"line {no}: {what} row has {vals.size} values, expected {width}"
            )
        return vals


def _parse_counted(no: int, line: str, key: str) -> np.ndarray:
    parts = line.split()
    if parts[0] != key:
        raise LibraryFormatError(f"line {no}: malformed header, expected '{key} ...'")
    try:
        cnt = int(parts[1])
        vals = np.array([float(p) for p in parts[2:]])
    except (ValueError, IndexError):
        raise LibraryFormatError(f"line {no}: malformed '{key}' header line") from None
    if vals.size != cnt:
        raise LibraryFormatError(f"line {no}: '{key}' lists {vals.size} values, header says {cnt}")
    return vals


def load_library(source: str | Path) -> GaitLibrary:
    """Parse a .gaitlib file; raises LibraryFormatError naming the offending line."""
    r = _Reader(Path(source).read_text())

    no, line = r.next()
    if line != "version 1":
        raise LibraryFormatError(f"line {no}: malformed header, expected 'version 1'")
    no, line = r.next()
    if line != f"outputs {N_OUTPUTS}":
        raise LibraryFormatError(f"line {no}: expected 'outputs {N_OUTPUTS}'")
    no, line = r.next()
    parts = line.split()
    if parts[0] != "order" or len(parts) != 2:
        raise LibraryFormatError(f"line {no}: expected 'order M'")
    order = int(parts[1])
    if order < 1:
        raise LibraryFormatError(f"line {no}: order must be >= 1")

    no, line = r.next()
    periods = _parse_counted(no, line, "periods")
    if np.any(np.diff(periods) >= 0):
        raise LibraryFormatError(f"line {no}: periods grid not descending")
    no, line = r.next()
    vx = _parse_counted(no, line, "vx")
    if np.any(np.diff(vx) <= 0):
        raise LibraryFormatError(f"line {no}: vx grid not ascending")
    no, line = r.next()
    rvy = _parse_counted(no, line, "rvy")
    if np.any(np.diff(rvy) <= 0):
        raise LibraryFormatError(f"line {no}: rvy grid not ascending")
    no, line = r.next()
    lvy = _parse_counted(no, line, "lvy")
    if np.any(np.diff(lvy) <= 0):
        raise LibraryFormatError(f"line {no}: lvy grid not ascending")
    if rvy.size != lvy.size:
        raise LibraryFormatError(f"line {no}: rvy/lvy grids must have equal length")

    k, l, n = periods.size, vx.size, rvy.size
    alphas = np.full((k, l, n, n, N_OUTPUTS, order + 1), np.nan)
    seen = np.zeros((k, l, n, n), dtype=bool)
    for _ in range(k * l * n * n):
        no, line = r.next()
        parts = line.split()
        if parts[0] == "standing":
            raise LibraryFormatError(
                f"line {no}: missing gait record ({int(seen.sum())} of {k * l * n * n} present)"
            )
        if parts[0] != "gait" or len(parts) != 5:
            raise LibraryFormatError(f"line {no}: expected 'gait j u v w'")
        try:
            j, u, v, w = (int(p) for p in parts[1:])
        except ValueError:
            raise LibraryFormatError(f"line {no}: malformed gait indices") from None
        if not (0 <= j < k and 0 <= u < l and 0 <= v < n and 0 <= w < n):
            raise LibraryFormatError(f"line {no}: gait indices out of range")
        if seen[j, u, v, w]:
            raise LibraryFormatError(f"line {no}: duplicate gait record ({j} {u} {v} {w})")
        seen[j, u, v, w] = True
        for row in range(N_OUTPUTS):
            alphas[j, u, v, w, row] = r.expect_row(order + 1, "coefficient")

    no, line = r.next()
    if line != "standing":
        raise LibraryFormatError(f"line {no}: expected 'standing' block")
    standing = np.vstack([r.expect_row(order + 1, "standing coefficient")
                          for _ in range(N_OUTPUTS)])

    return GaitLibrary(periods, vx, rvy, lvy, alphas, standing)
