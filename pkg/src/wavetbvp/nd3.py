"""Three space dimensions by spherical means.

For a point x, w(t, r) = r * A_r y(t, x) (A_r the mean over the sphere of
radius r about x) solves the 1-D wave equation in r and is odd in r. The
3-D problem at x therefore reduces to a line problem with data r*A_r f(x),
r*A_r g(x), and y(t, x) is recovered as the limit of w(t, r)/r at r = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .funcrep import Fn
from .funcrep import expr as E
from .line1d import ControlSolution, LineProblem, solve_line

VARS = ("x1", "x2", "x3")
DIRS = ("y1", "y2", "y3")


class Field3:
    """Scalar function of (x1, x2, x3) given by an expression."""

    def __init__(self, src: str | float | E.Node):
        if isinstance(src, E.Node):
            self.node = src
            self.src = E.to_text(src)
        elif isinstance(src, (int, float)):
            self.node = E.Const(float(src))
            self.src = repr(float(src))
        else:
            self.node = E.parse(src, VARS)
            self.src = src
        self._dir: dict[int, E.Node] = {0: self.node}

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        env = {v: X[..., i] for i, v in enumerate(VARS)}
        return np.broadcast_to(np.asarray(E.evaluate(self.node, env), dtype=float), X.shape[:-1]).copy()

    def directional(self, n: int) -> E.Node:
        """Tree of the n-th derivative along the direction (y1, y2, y3)."""
        if n not in self._dir:
            prev = self.directional(n - 1)
            acc: E.Node = E.ZERO
            for xv, yv in zip(VARS, DIRS):
                acc = E.add(acc, E.mul(E.Var(yv), E.diff(prev, xv)))
            self._dir[n] = acc
        return self._dir[n]

    def eval_directional(self, n: int, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        env = {v: X[..., i] for i, v in enumerate(VARS)}
        env.update({v: Y[..., i] for i, v in enumerate(DIRS)})
        out = E.evaluate(self.directional(n), env)
        return np.broadcast_to(np.asarray(out, dtype=float), X.shape[:-1]).copy()


@dataclass(frozen=True)
class SphericalQuadrature:
    """Gauss-Legendre in cos(theta) times the trapezoid rule in phi: m x 2m nodes."""

    m: int = 16

    @cached_property
    def nodes_weights(self) -> tuple[np.ndarray, np.ndarray]:
        mu, wmu = np.polynomial.legendre.leggauss(self.m)
        phi = np.arange(2 * self.m) * (math.pi / self.m)
        st = np.sqrt(1.0 - mu**2)
        Y = np.stack([
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(mu, 2 * self.m),
        ], axis=1)
        W = np.repeat(wmu, 2 * self.m) * (math.pi / self.m)
        return Y, W

    @property
    def nodes(self) -> np.ndarray:
        return self.nodes_weights[0]

    @property
    def weights(self) -> np.ndarray:
        return self.nodes_weights[1]


def spherical_mean(h, x: Sequence[float], r: float, q: SphericalQuadrature = SphericalQuadrature()) -> float:
    """(1/4pi) * sum_i w_i h(x + r y_i)."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    Y, W = q.nodes_weights
    pts = np.asarray(x, dtype=float)[None, :] + r * Y
    return float(np.dot(W, np.asarray(h(pts), dtype=float)) / (4.0 * math.pi))


class RadialData(Fn):
    """F(r) = r * A_r h(x) as a function of r (odd in r); n-th derivative order."""

    _BATCH = 1 << 20

    def __init__(self, h: Field3, x: Sequence[float], q: SphericalQuadrature, order: int = 0):
        self.h, self.x, self.q, self.order = h, np.asarray(x, dtype=float), q, order

    def _mean(self, n: int, r: np.ndarray) -> np.ndarray:
        """d^n/dr^n A_r h(x)."""
        Y, W = self.q.nodes_weights
        out = np.empty(r.shape)
        flat, res = r.ravel(), out.reshape(-1)
        rows = max(1, self._BATCH // Y.shape[0])
        for s in range(0, flat.size, rows):
            rr = flat[s:s + rows]
            pts = self.x[None, None, :] + rr[:, None, None] * Y[None, :, :]
            if n == 0:
                vals = self.h(pts)
            else:
                vals = self.h.eval_directional(n, pts, np.broadcast_to(Y, pts.shape))
            res[s:s + rows] = vals @ W / (4.0 * math.pi)
        return out

    def _eval(self, r):
        n = self.order
        # (r A)^(n) = n A^(n-1) + r A^(n)
        val = r * self._mean(n, r)
        if n:
            val = val + n * self._mean(n - 1, r)
        return val

    def _derivative(self):
        return RadialData(self.h, self.x, self.q, self.order + 1)


@dataclass(frozen=True)
class Problem3D:
    f: Field3
    g: Field3
    T: float
    points: tuple = ()

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")


def problem3d(f, g, T: float, points=()) -> Problem3D:
    f = f if isinstance(f, Field3) else Field3(f)
    g = g if isinstance(g, Field3) else Field3(g)
    return Problem3D(f, g, float(T), tuple(tuple(map(float, p)) for p in points))


def reduce_to_radial(p: Problem3D, x: Sequence[float], q: SphericalQuadrature = SphericalQuadrature()) -> LineProblem:
    return LineProblem(RadialData(p.f, x, q), RadialData(p.g, x, q), p.T)


@dataclass
class PointSolution:
    """Radial control at one point and the recovery of y(t, x)."""

    x: tuple
    radial: ControlSolution
    rprobe: float
    diagnostics: dict = field(default_factory=dict)

    def w(self, t, r):
        return self.radial.eval(t, r)

    def eval(self, t):
        """Richardson limit of w(t, r)/r from r = rprobe and rprobe/2."""
        t = np.asarray(t, dtype=float)
        rp = self.rprobe
        W1 = np.asarray(self.radial.eval(t, np.full(t.shape, rp))) / rp
        W2 = np.asarray(self.radial.eval(t, np.full(t.shape, 0.5 * rp))) / (0.5 * rp)
        out = (4.0 * W2 - W1) / 3.0
        return float(out) if out.ndim == 0 else out


def solve_point(p: Problem3D, x: Sequence[float], rprobe: float = 1e-3,
                q: SphericalQuadrature = SphericalQuadrature()) -> PointSolution:
    if not rprobe > 0:
        raise ValueError("rprobe must be positive")
    lp = reduce_to_radial(p, x, q)
    sol = solve_line(lp, check=False)
    return PointSolution(tuple(map(float, x)), sol, rprobe)


def eval_3d(p: Problem3D, t: float, x: Sequence[float], rprobe: float = 1e-3,
            q: SphericalQuadrature = SphericalQuadrature()) -> float:
    return solve_point(p, x, rprobe, q).eval(t)


def wave_residual_3d(p: Problem3D, x: Sequence[float], t: float, h: float = 0.02, rprobe: float = 1e-3,
                     q: SphericalQuadrature = SphericalQuadrature()) -> float:
    """|y_tt - (y_x1x1 + y_x2x2 + y_x3x3)| at (t, x) by centred differences of step h.

    Each point has its own radial control, and the family is a 3-D solution
    only if those controls are spherical means of one velocity field. This
    measures how far the assembled pointwise values are from one.
    """
    if not (0.0 <= t - h and t + h <= p.T):
        raise ValueError("need 0 <= t - h and t + h <= T")
    x = np.asarray(x, dtype=float)
    c = solve_point(p, x, rprobe, q)
    y0 = c.eval(t)
    ytt = (c.eval(t + h) - 2.0 * y0 + c.eval(t - h)) / h**2
    lap = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        lap += solve_point(p, x + e, rprobe, q).eval(t) + solve_point(p, x - e, rprobe, q).eval(t) - 2.0 * y0
    return float(abs(ytt - lap / h**2))
