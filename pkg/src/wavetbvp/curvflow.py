"""Hyperbolic curvature flow k_tt = k_ss on closed curves.

The curvature k(t, s) of an L-periodic arclength parametrisation is steered
from a nonnegative profile f to a constant. First solve the periodic problem
with terminal value kstar; if its initial velocity v dips to a negative
minimum M, add |M| t, which keeps the wave equation, makes the velocity
nonnegative (hence k >= 0 by d'Alembert) and raises the terminal constant to
kstar + |M| T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.optimize import minimize_scalar

from .errors import NegativeData
from .funcrep import Fn, const
from .io import write_json
from .periodic import FourierSolution, PeriodicProblem, solve_periodic

MIN_GRID = 8192


@dataclass(frozen=True)
class FlowProblem:
    f: Fn
    L: float
    T: float
    kstar: float = 1.0

    def __post_init__(self):
        if not (self.L > 0 and self.T > 0 and self.kstar > 0):
            raise ValueError("L, T and kstar must be positive")
        self.f.check_period(self.L)
        s = np.linspace(0.0, self.L, 2001)
        fmin = float(np.min(self.f(s)))
        if fmin < 0:
            raise NegativeData(f"initial curvature must be nonnegative, min is {fmin:.3e}", min=fmin)


def periodic_min(fn: Fn, L: float, n: int = MIN_GRID) -> float:
    """Minimum of an L-periodic function: grid search then golden-section refinement."""
    s = np.arange(n) * (L / n)
    vals = fn(s)
    i = int(np.argmin(vals))
    h = L / n
    a, m, b = s[i] - h, s[i], s[i] + h
    best = float(vals[i])
    if fn(a) > best and fn(b) > best:
        res = minimize_scalar(lambda x: fn(x), bracket=(a, m, b), method="golden", tol=1e-10)
        best = min(best, float(res.fun))
    return best


@dataclass
class FlowSolution:
    problem: FlowProblem
    k: FourierSolution
    v: Fn
    M: float
    k0: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def shift(self) -> float:
        return max(0.0, -self.M)

    @property
    def vbar(self) -> Fn:
        return self.v + self.shift

    def kbar(self, t, s, dt: int = 0, ds: int = 0):
        t = np.asarray(t, dtype=float)
        out = self.k.eval(t, s, dt, ds)
        if ds == 0 and dt == 0:
            out = out + self.shift * t
        elif ds == 0 and dt == 1:
            out = out + self.shift
        return float(out) if np.ndim(out) == 0 else out

    eval = kbar

    def __call__(self, t, s):
        return self.kbar(t, s)


def solve_flow(p: FlowProblem, tol: float = 1e-8) -> FlowSolution:
    ksol, v = solve_periodic(PeriodicProblem(p.f, const(p.kstar), p.T, p.L), tol)
    M = periodic_min(v, p.L)
    k0 = p.kstar + max(0.0, -M) * p.T
    sol = FlowSolution(p, ksol, v, M, k0)
    s = np.linspace(0.0, p.L, 2001)
    sol.diagnostics.update(
        terminal_constancy=float(np.max(np.abs(sol.kbar(p.T, s) - k0))),
        initial_error=float(np.max(np.abs(sol.kbar(0.0, s) - p.f(s)))),
        **{f"periodic_{k}": v for k, v in ksol.diagnostics.items()},
    )
    return sol


# ------------------------------------------------------------ curves

@dataclass(frozen=True)
class Polyline:
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    endpoint_gap: float
    angle_defect: float


def reconstruct_curve(k, L: float, n: int = 512, refine: int = 16) -> Polyline:
    """Integrate tangent angle and position from curvature k(s) on [0, L].

    The start point is the origin with tangent angle 0. Integration runs on a
    grid ``refine`` times finer than the returned n+1 points.
    """
    if n < 8:
        raise ValueError("need at least 8 sample points")
    m = n * refine
    s = np.linspace(0.0, L, m + 1)
    kv = np.asarray(k(s), dtype=float)
    phi = np.concatenate([[0.0], cumulative_simpson(kv, x=s)])
    xs = np.concatenate([[0.0], cumulative_simpson(np.cos(phi), x=s)])
    ys = np.concatenate([[0.0], cumulative_simpson(np.sin(phi), x=s)])
    sel = slice(None, None, refine)
    gap = float(math.hypot(xs[-1] - xs[0], ys[-1] - ys[0]))
    return Polyline(s[sel], xs[sel], ys[sel], gap, float(abs(phi[-1] - 2.0 * math.pi)))


def _svg(poly: Polyline) -> str:
    x, y = poly.x, -poly.y  # SVG y points down
    lo_x, hi_x, lo_y, hi_y = x.min(), x.max(), y.min(), y.max()
    size = max(hi_x - lo_x, hi_y - lo_y, 1e-12)
    m = 0.05 * size
    vb = f"{lo_x - m:.9g} {lo_y - m:.9g} {hi_x - lo_x + 2 * m:.9g} {hi_y - lo_y + 2 * m:.9g}"
    pts = " ".join(f"{a:.9g},{b:.9g}" for a, b in zip(x, y))
    stroke = f"{size / 200:.6g}"
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vb}">\n'
        f'  <polyline fill="none" stroke="black" stroke-width="{stroke}" points="{pts}"/>\n'
        "</svg>\n"
    )


def emit_frames(sol: FlowSolution, frames: int, path: str | Path, n: int = 512) -> dict:
    """Write frame_XXX.svg for uniformly spaced times plus frames.json."""
    if frames < 2:
        raise ValueError("need at least 2 frames")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    p = sol.problem
    entries = []
    for j, t in enumerate(np.linspace(0.0, p.T, frames)):
        kt = lambda s, t=t: sol.kbar(np.full_like(s, t), s)
        poly = reconstruct_curve(kt, p.L, n)
        name = f"frame_{j:03d}.svg"
        with open(path / name, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(_svg(poly))
        entries.append({
            "index": j,
            "t": float(t),
            "file": name,
            "endpoint_gap": poly.endpoint_gap,
            "angle_defect": poly.angle_defect,
            "min_curvature": float(np.min(kt(np.linspace(0.0, p.L, 2 * n + 1)))),
        })
    manifest = {"L": p.L, "T": p.T, "k0": sol.k0, "M": sol.M, "frames": entries}
    write_json(path / "frames.json", manifest)
    return manifest
