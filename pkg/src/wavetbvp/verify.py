"""Finite-difference forward solver and diagnostics.

The leapfrog scheme here shares nothing with the synthesis code apart from
function evaluation, so agreement between the two is a real check. At unit
Courant number the scheme is exact for the 1-D wave equation on a uniform
grid, which makes it a strong oracle for line problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CFLViolation

LINE, PERIODIC, ODD, EVEN = "line", "periodic", "odd", "even"
BOUNDARIES = (LINE, PERIODIC, ODD, EVEN)
EXACT_RESIDUAL = 1e-8


@dataclass(frozen=True)
class FDGrid:
    """Uniform space-time grid.

    ``line`` grids carry ``margin`` extra cells on each side; the region
    they pollute shrinks by one cell per step and is masked out.
    ``periodic`` grids hold nx nodes of one period; ``odd``/``even`` grids
    hold nx nodes including both ends of [x0, x0 + (nx-1) dx].
    """

    x0: float
    dx: float
    nx: int
    dt: float
    nt: int
    boundary: str = LINE
    c: float = 1.0
    margin: int = 0

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.nx < 16 or self.nt < 16:
            raise ValueError("nx and nt must be at least 16")
        if self.lam > 1.0 + 1e-12:
            raise CFLViolation(f"Courant number {self.lam:.6g} exceeds 1", lam=self.lam)

    @property
    def lam(self) -> float:
        return self.c * self.dt / self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    @property
    def T(self) -> float:
        return self.dt * self.nt

    @staticmethod
    def _steps(T: float, dx: float, lam: float, c: float) -> int:
        return max(16, math.ceil(c * T / (lam * dx) - 1e-9))

    @classmethod
    def line(cls, xmin: float, xmax: float, T: float, nx: int = 1000, lam: float = 1.0, c: float = 1.0):
        """Grid whose valid region covers [xmin, xmax] for all t in [0, T].

        dx is adjusted so that lam*dx*nt = c*T exactly.
        """
        nt = cls._steps(T, (xmax - xmin) / (nx - 1), lam, c)
        dx = c * T / (lam * nt)
        n_in = math.ceil((xmax - xmin) / dx - 1e-9) + 1
        return cls(xmin - nt * dx, dx, n_in + 2 * nt, T / nt, nt, LINE, c, nt)

    @classmethod
    def periodic(cls, x0: float, L: float, T: float, nx: int = 1000, lam: float = 0.5, c: float = 1.0):
        dx = L / nx
        nt = cls._steps(T, dx, lam, c)
        return cls(x0, dx, nx, T / nt, nt, PERIODIC, c)

    @classmethod
    def interval(cls, L: float, T: float, nx: int = 1000, lam: float = 0.5, boundary: str = ODD,
                 c: float = 1.0):
        dx = L / (nx - 1)
        nt = cls._steps(T, dx, lam, c)
        return cls(0.0, dx, nx, T / nt, nt, boundary, c)

    def valid(self, step: int) -> slice:
        if self.boundary == LINE:
            return slice(step, self.nx - step)
        return slice(0, self.nx)


@dataclass
class FDSolution:
    grid: FDGrid
    steps: np.ndarray
    Y: np.ndarray
    energy: np.ndarray | None = None

    @property
    def t(self) -> np.ndarray:
        return self.steps * self.grid.dt

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def slice_at(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Valid (x, y) at the k-th stored time."""
        s = self.grid.valid(int(self.steps[k]))
        return self.x[s], self.Y[k, s]

    @property
    def energy_drift(self) -> float:
        """Largest relative change of the discrete energy over one step."""
        if self.energy is None or len(self.energy) < 2:
            return float("nan")
        scale = max(abs(self.energy[0]), 1e-300)
        return float(np.max(np.abs(np.diff(self.energy))) / scale)


def _lap(y: np.ndarray, boundary: str) -> np.ndarray:
    """Undivided second difference; left at zero where no stencil exists."""
    if boundary == PERIODIC:
        return np.roll(y, -1) - 2.0 * y + np.roll(y, 1)
    out = np.zeros_like(y)
    out[1:-1] = y[2:] - 2.0 * y[1:-1] + y[:-2]
    return out


def _end_lap(y: np.ndarray, out: np.ndarray) -> None:
    # one-sided second differences at the two ends
    out[0] = 2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]
    out[-1] = 2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]


def _energy(y1: np.ndarray, y0: np.ndarray, g: FDGrid) -> float:
    """Conserved leapfrog energy between levels n and n+1 (periodic grids)."""
    kin = np.sum((y1 - y0) ** 2) / g.dt**2
    pot = g.c**2 * np.sum((np.roll(y1, -1) - y1) * (np.roll(y0, -1) - y0)) / g.dx**2
    return 0.5 * g.dx * float(kin + pot)


def fd_forward(f: Callable, v: Callable, T: float, grid: FDGrid,
               left: Callable | None = None, right: Callable | None = None,
               stride: int = 1, track_energy: bool = False) -> FDSolution:
    """Leapfrog solution of y_tt = c^2 y_xx with y(0) = f, y_t(0) = v.

    For ``odd`` grids ``left``/``right`` give boundary values y(t, x0) and
    y(t, x_end) (default 0). For ``even`` grids they give the outward
    x-derivative y_x at each end (default 0) through ghost points.
    """
    g = grid
    if abs(g.T - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"grid spans t in [0, {g.T}], asked for T = {T}")
    x = g.x
    lam2 = g.lam**2
    y0 = np.asarray(f(x), dtype=float) * np.ones(g.nx)
    vv = np.asarray(v(x), dtype=float) * np.ones(g.nx)
    zero = lambda t: 0.0
    left = left or zero
    right = right or zero
    b = g.boundary

    def lap(y, t):
        out = _lap(y, b)
        if b == EVEN:
            # ghosts: y_{-1} = y_1 - 2 dx H(t), y_{n} = y_{n-2} + 2 dx K(t)
            out[0] = 2.0 * (y[1] - y[0]) - 2.0 * g.dx * left(t)
            out[-1] = 2.0 * (y[-2] - y[-1]) + 2.0 * g.dx * right(t)
        return out

    lv = _lap(vv, b)
    if b in (ODD, EVEN):
        _end_lap(vv, lv)
    y1 = y0 + 0.5 * lam2 * lap(y0, 0.0) + g.dt * vv + (g.dt * g.c) ** 2 * g.dt / 6.0 * lv / g.dx**2
    if b == ODD:
        y1[0], y1[-1] = left(g.dt), right(g.dt)

    keep = sorted(set(range(0, g.nt + 1, stride)) | {g.nt})
    out = np.empty((len(keep), g.nx))
    k = 0
    energies = [] if (track_energy and b == PERIODIC) else None
    if keep[k] == 0:
        out[k] = y0
        k += 1
    if k < len(keep) and keep[k] == 1:
        out[k] = y1
        k += 1
    if energies is not None:
        energies.append(_energy(y1, y0, g))
    for n in range(1, g.nt):
        t = n * g.dt
        y2 = 2.0 * y1 - y0 + lam2 * lap(y1, t)
        if b == ODD:
            y2[0], y2[-1] = left(t + g.dt), right(t + g.dt)
        y0, y1 = y1, y2
        if energies is not None:
            energies.append(_energy(y1, y0, g))
        if k < len(keep) and keep[k] == n + 1:
            out[k] = y1
            k += 1
    return FDSolution(g, np.array(keep), out, None if energies is None else np.array(energies))


# ------------------------------------------------------------ diagnostics

@dataclass
class Diagnostics:
    """Named measurements with their tolerances."""

    values: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def add(self, name: str, value, tol: float | None = None, lower: bool = False) -> None:
        """Record a value; with ``lower`` the tolerance is a minimum, not a maximum."""
        self.values[name] = value
        if tol is not None:
            self.tolerances[name] = (tol, lower)

    def __getitem__(self, name: str):
        return self.values[name]

    def check(self, name: str) -> bool:
        if name not in self.tolerances:
            return True
        tol, lower = self.tolerances[name]
        val = self.values[name]
        if val is None or (isinstance(val, float) and math.isnan(val)):
            return False
        return val >= tol if lower else val <= tol

    @property
    def checks(self) -> dict[str, bool]:
        return {k: self.check(k) for k in self.tolerances}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def merge(self, other: "Diagnostics", prefix: str = "") -> "Diagnostics":
        for k, v in other.values.items():
            self.values[prefix + k] = v
        for k, v in other.tolerances.items():
            self.tolerances[prefix + k] = v
        return self

    def as_dict(self) -> dict:
        return {
            "values": self.values,
            "tolerances": {k: {"tol": t, "kind": "min" if lo else "max"} for k, (t, lo) in self.tolerances.items()},
            "checks": self.checks,
            "passed": self.passed,
        }


def compare(evaluator: Callable, oracle: FDSolution, interior: int = 1, tol: float | None = None) -> Diagnostics:
    """Max and RMS deviation of evaluator(t, x) from the oracle field.

    ``interior`` end points of every valid slice are skipped.
    """
    worst, sq, count = 0.0, 0.0, 0
    per_slice = []
    for k in range(len(oracle.steps)):
        x, y = oracle.slice_at(k)
        if interior:
            x, y = x[interior:-interior], y[interior:-interior]
        if x.size == 0:
            continue
        t = float(oracle.t[k])
        e = np.abs(np.asarray(evaluator(np.full_like(x, t), x), dtype=float) - y)
        per_slice.append(float(e.max()))
        worst = max(worst, float(e.max()))
        sq += float(np.sum(e * e))
        count += e.size
    d = Diagnostics()
    d.add("oracle_max_dev", worst, tol)
    d.add("oracle_rms_dev", math.sqrt(sq / max(count, 1)))
    d.add("oracle_first_slice_dev", per_slice[0] if per_slice else float("nan"))
    d.add("oracle_last_slice_dev", per_slice[-1] if per_slice else float("nan"))
    return d


@dataclass(frozen=True)
class ResidualOrder:
    hs: tuple
    residuals: tuple
    order: float | None
    exact: bool
    passed: bool


def wave_residual(evaluator: Callable, t: np.ndarray, x: np.ndarray, ht: float, hx: float,
                  c: float = 1.0, rhs: Callable | None = None) -> np.ndarray:
    """Central-difference residual of y_tt - c^2 y_xx - rhs(y_t, y_x)."""
    y = lambda a, b: np.asarray(evaluator(a, b), dtype=float)
    yc = y(t, x)
    ytp, ytm = y(t + ht, x), y(t - ht, x)
    yxp, yxm = y(t, x + hx), y(t, x - hx)
    res = (ytp - 2.0 * yc + ytm) / ht**2 - c**2 * (yxp - 2.0 * yc + yxm) / hx**2
    if rhs is not None:
        res = res - rhs((ytp - ytm) / (2.0 * ht), (yxp - yxm) / (2.0 * hx))
    return res


def residual_order(evaluator: Callable, domain: Sequence[float], hs: Sequence[float] = (0.04, 0.02, 0.01),
                   n: int = 9, ratio: float = 0.7, c: float = 1.0, rhs: Callable | None = None,
                   min_order: float = 1.9, exact_tol: float = EXACT_RESIDUAL,
                   avoid: Sequence[tuple[float, float]] = ()) -> ResidualOrder:
    """Observed order of the PDE residual as the stencil shrinks.

    ``domain`` is (t0, t1, x0, x1); residuals are sampled on an n x n grid
    kept max(hs) away from its edges. The time step is h and the space step
    ratio*h: with equal steps the centred stencil is exact on every
    solution and would show no order at all. Residuals below ``exact_tol``
    at every h mark the evaluator as exact.

    ``avoid`` lists lines x + b*t = a, given as (a, b), across which the
    evaluator is known to lose smoothness (characteristics through kinks of
    the data or the velocity). Sample points whose stencil reaches such a
    line are dropped, since the residual there only decays like h.
    """
    hs = tuple(float(h) for h in hs)
    if len(hs) < 3:
        raise ValueError("need at least three step sizes")
    t0, t1, x0, x1 = map(float, domain)
    m = max(hs)
    ts = np.linspace(t0 + m, t1 - m, n)
    xs = np.linspace(x0 + m, x1 - m, n)
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    keep = np.ones(tt.shape, dtype=bool)
    for a, b in avoid:
        band = 1.5 * m * (max(1.0, ratio) + abs(b))
        keep &= np.abs(xx + b * tt - a) > band
    if not keep.any():
        raise ValueError("every sample point lies next to an avoided line")
    tt, xx = tt[keep], xx[keep]
    res = tuple(float(np.max(np.abs(wave_residual(evaluator, tt, xx, h, ratio * h, c, rhs)))) for h in hs)
    if max(res) <= exact_tol:
        return ResidualOrder(hs, res, None, True, True)
    if min(res) <= 0:
        return ResidualOrder(hs, res, None, False, False)
    order = float(np.polyfit(np.log(hs), np.log(res), 1)[0])
    return ResidualOrder(hs, res, order, False, order >= min_order)
