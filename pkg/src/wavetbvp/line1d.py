"""Two-point boundary value problems for the wave equation on the whole line.

Given profiles f, g and a horizon T, find an initial velocity v such that the
solution of y_tt = c^2 y_xx with y(0,.) = f, y_t(0,.) = v satisfies
y(T,.) = g. After rescaling to unit speed the task is the integral equation

    (1/2) * int_{x-T}^{x+T} v = ftilde(x),   ftilde = g - (f(.-T) + f(.+T))/2,

which is solved by choosing v on [-T, T] (the seed) and continuing it
outward by the difference relation v(x+T) - v(x-T) = 2 ftilde'(x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, InvalidNullVelocity
from .funcrep import ExprFn, Fn, PiecewiseFn, PolyFn, Quadrature, parse_expr
from .funcrep import DEFAULT_QUADRATURE
from .funcrep import expr as E

SEED_TOL = 1e-8
PROBE_POINTS = 2001


@dataclass(frozen=True)
class LineProblem:
    f: Fn
    g: Fn
    T: float
    c: float = 1.0
    # x_physical = xscale * x_solver; set by normalize_speed
    xscale: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if not self.c > 0:
            raise ValueError("speed c must be positive")


def normalize_speed(p: LineProblem) -> LineProblem:
    """Rescale x -> x/c so the problem has unit speed; ``xscale`` records c."""
    if p.c == 1.0:
        return p
    c = p.c
    return LineProblem(p.f.affine(c), p.g.affine(c), p.T, 1.0, xscale=p.xscale * c)


@dataclass(frozen=True)
class ReducedTarget:
    ftilde: Fn
    a0: float
    b0: float
    c0: float


def reduce_target(p: LineProblem) -> ReducedTarget:
    if p.c != 1.0:
        raise ValueError("reduce_target expects a unit-speed problem; call normalize_speed")
    T = p.T
    ft = p.g - (p.f.shift(-T) + p.f.shift(T)) * 0.5
    return ReducedTarget(ft, ft(0.0), ft.deriv(0.0, 1), ft.deriv(0.0, 2))


def reduced_from_values(a0: float, b0: float, c0: float) -> ReducedTarget:
    """Quadratic reduced target with prescribed value and derivatives at 0."""
    return ReducedTarget(PolyFn([a0, b0, 0.5 * c0]), float(a0), float(b0), float(c0))


# --------------------------------------------------------------------- seeds

@dataclass(frozen=True)
class SeedFunction:
    u: Fn
    T: float
    kind: str  # "polynomial", "trigonometric" or "user"

    def one_sided_derivative(self, x: float, side: str) -> float:
        u = self.u
        if isinstance(u, PiecewiseFn):
            return u.one_sided(x, side, 1)
        if self.kind != "user":
            return u.deriv(x, 1)
        # three-point one-sided difference staying inside [-T, T]
        h = 1e-5 * self.T
        s = -1.0 if side == "-" else 1.0
        return s * (-1.5 * u(x) + 2.0 * u(x + s * h) - 0.5 * u(x + 2 * s * h)) / h

    def residuals(self, rt: ReducedTarget, quad: Quadrature = DEFAULT_QUADRATURE) -> tuple[float, float, float]:
        """Signed defects of the three moment conditions a seed must satisfy."""
        T = self.T
        r_int = quad.integrate(self.u, -T, T) - 2.0 * rt.a0
        r_jump = self.u(T) - self.u(-T) - 2.0 * rt.b0
        r_slope = self.one_sided_derivative(T, "-") - self.one_sided_derivative(-T, "+") - 2.0 * rt.c0
        return r_int, r_jump, r_slope

    def admissible(self, rt: ReducedTarget, tol: float = SEED_TOL) -> bool:
        return all(abs(r) <= tol * (1.0 + abs(x)) for r, x in zip(self.residuals(rt), (rt.a0, rt.b0, rt.c0)))


def seed_polynomial(rt: ReducedTarget, T: float) -> SeedFunction:
    if not T > 0:
        raise ValueError("T must be positive")
    a, b, c = rt.a0, rt.b0, rt.c0
    u = PolyFn([a / T - c * T / 6.0, b / T, c / (2.0 * T)])
    u.domain = (-T, T)
    return SeedFunction(u, T, "polynomial")


def seed_trig(rt: ReducedTarget, T: float) -> SeedFunction:
    if not T > 0:
        raise ValueError("T must be positive")
    a, b, c = rt.a0, rt.b0, rt.c0
    h = 2.0 * b - T * c
    ht = a / T + 7.0 * T * c / 12.0 - 1.5 * b
    # cos(pi x / T) is the shifted sine sin(pi x/T + pi/2)
    left = ExprFn(E.add(E.Const(ht + 0.5 * h),
                        E.mul(E.Const(0.5 * h),
                              E.call("sin", E.add(E.mul(E.Const(math.pi / T), E.Var("x")),
                                                  E.Const(0.5 * math.pi))))))
    right = PolyFn([ht + h, 0.0, c / T])
    return SeedFunction(PiecewiseFn([-T, 0.0, T], [left, right]), T, "trigonometric")


def seed_user(u: Fn, T: float) -> SeedFunction:
    return SeedFunction(u, T, "user")


# ------------------------------------------------------------------ velocity

class SynthesizedVelocity(Fn):
    """Velocity built from a seed on [-T, T] and the reduced target's slope.

    For x >= 0 with N = floor((|x|+T)/(2T)):
        v(x) = u(x - 2NT) + 2 * sum_{i=1..N} dft(x - (2i-1)T)
    and symmetrically for x < 0. Derivatives have the same structure with
    u and dft differentiated.
    """

    def __init__(self, u: Fn, dft: Fn, T: float):
        self.u, self.dft, self.T = u, dft, float(T)

    def _eval_n(self, x: np.ndarray, N: np.ndarray) -> np.ndarray:
        T = self.T
        pos = x >= 0
        sgn = np.where(pos, 1.0, -1.0)
        base = np.clip(x - sgn * 2.0 * N * T, -T, T)
        out = self.u._eval(base)
        nmax = int(N.max()) if N.size else 0
        for i in range(1, nmax + 1):
            m = N >= i
            if not np.any(m):
                break
            xm = x[m]
            sg = sgn[m]
            out[m] += 2.0 * sg * self.dft._eval(xm - sg * (2 * i - 1) * T)
        return out

    def _eval(self, x):
        N = np.floor((np.abs(x) + self.T) / (2.0 * self.T)).astype(np.int64)
        return self._eval_n(x, N)

    def _derivative(self):
        return SynthesizedVelocity(self.u.derivative(1), self.dft.derivative(1), self.T)

    def one_sided(self, x: float, side: str, order: int = 0) -> float:
        """Limit of v^(order) at x from the left ('-') or right ('+')."""
        fn = self.derivative(order)
        s = (abs(x) + self.T) / (2.0 * self.T)
        toward_origin = (side == "-") == (x >= 0)
        N = math.ceil(s) - 1 if toward_origin else math.floor(s)
        N = max(N, 0)
        xs = np.array([x], dtype=float)
        if isinstance(fn.u, PiecewiseFn):
            base = x - math.copysign(2.0 * N * self.T, x if x != 0 else 1.0)
            uval = fn.u.one_sided(base, side, 0)
            rest = fn._eval_n(xs, np.array([N])) - fn.u._eval(np.array([np.clip(base, -self.T, self.T)]))
            return float(uval + rest[0])
        return float(fn._eval_n(xs, np.array([N]))[0])

    def seams(self, Nmax: int) -> list[float]:
        pts = []
        for n in range(1, Nmax + 1):
            pts += [(2 * n - 1) * self.T, -(2 * n - 1) * self.T]
        return sorted(pts)

    def kinks(self, a, b):
        T = self.T
        pts = set()
        for k in range(math.floor((a / T - 1) / 2), math.ceil((b / T + 1) / 2) + 1):
            xs = (2 * k + 1) * T
            if a < xs < b:
                pts.add(xs)
        nlo = math.floor((abs(min(a, 0.0)) + T) / (2 * T)) + 1
        nhi = math.floor((abs(max(b, 0.0)) + T) / (2 * T)) + 1
        for uk in self.u.kinks(-T, T):
            for N in range(0, max(nlo, nhi) + 1):
                for xk in (uk + 2 * N * T, uk - 2 * N * T):
                    if a < xk < b:
                        pts.add(xk)
        for dk in self.dft.kinks(min(a, 0.0) - T, max(b, 0.0) + T):
            for i in range(1, max(nlo, nhi) + 1):
                for xk in (dk + (2 * i - 1) * T, dk - (2 * i - 1) * T):
                    if a < xk < b:
                        pts.add(xk)
        return sorted(pts)


def synth_velocity(seed: SeedFunction, rt: ReducedTarget, T: float) -> SynthesizedVelocity:
    return SynthesizedVelocity(seed.u, rt.ftilde.derivative(1), T)


def seam_jumps(v: SynthesizedVelocity, Nmax: int = 5, orders: Sequence[int] = (0, 1)) -> dict[int, float]:
    """Max |v^(n)(s+) - v^(n)(s-)| over seams s = +-(2N-1)T, N <= Nmax."""
    out = {}
    for n in orders:
        out[n] = max(abs(v.one_sided(s, "+", n) - v.one_sided(s, "-", n)) for s in v.seams(Nmax))
    return out


# ------------------------------------------------------------------ solution

def dalembert_eval(v: Fn, p: LineProblem, t, x, quad: Quadrature = DEFAULT_QUADRATURE):
    """(f(x-ct) + f(x+ct))/2 + (1/2c) * int_{x-ct}^{x+ct} v, for 0 <= t <= T."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_time(t, p.T)
    c = p.c
    lo, hi = x - c * t, x + c * t
    val = 0.5 * (p.f(lo) + p.f(hi)) + quad.integrate_many(v, lo, hi) / (2.0 * c)
    return float(val) if val.ndim == 0 else val


def _check_time(t: np.ndarray, T: float) -> None:
    if t.size and (np.min(t) < -1e-12 * T or np.max(t) > T * (1 + 1e-12)):
        raise DomainError(f"t must lie in [0, {T:g}]")


def probe_grid(p: LineProblem, n: int = PROBE_POINTS) -> np.ndarray:
    """Uniform probe points on [-5(T+1), 5(T+1)], clipped to sampled data."""
    T = p.T
    lo, hi = -5.0 * (T + 1.0), 5.0 * (T + 1.0)
    reach = p.c * T
    for fn, pad in ((p.f, reach), (p.g, 0.0)):
        if fn.domain is not None and fn.period is None:
            lo = max(lo, fn.domain[0] + pad)
            hi = min(hi, fn.domain[1] - pad)
    if not lo < hi:
        raise DomainError("data do not cover any probe interval")
    return np.linspace(lo, hi, n)


@dataclass
class ControlSolution:
    """Synthesized velocity plus an evaluator for y and its derivatives.

    ``v`` and the evaluators work in solver coordinates (unit speed); the
    ``velocity`` and ``eval`` methods take physical x.
    """

    problem: LineProblem
    normalized: LineProblem
    reduced: ReducedTarget
    seed: SeedFunction | None
    v: Fn
    quad: Quadrature = DEFAULT_QUADRATURE
    diagnostics: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return self.problem.T

    @property
    def xscale(self) -> float:
        return self.normalized.xscale / self.problem.xscale

    def velocity(self, x):
        return self.v(np.asarray(x, dtype=float) / self.xscale)

    def eval(self, t, x, dt: int = 0, dx: int = 0):
        """d^dt/dt d^dx/dx y at (t, x); arrays broadcast."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t, x = np.broadcast_arrays(t, x)
        _check_time(t, self.T)
        s = self.xscale
        xi = x / s
        f = self.normalized.f
        n = dt + dx
        hi, lo = xi + t, xi - t
        if n == 0:
            val = 0.5 * (f(lo) + f(hi)) + 0.5 * self.quad.integrate_many(self.v, lo, hi)
        else:
            fn, vn = f.derivative(n), self.v.derivative(n - 1)
            sign = -1.0 if dt % 2 else 1.0
            val = 0.5 * (fn(hi) + vn(hi)) + sign * 0.5 * (fn(lo) - vn(lo))
            val = val / s**dx
        return float(val) if np.ndim(val) == 0 else val

    def __call__(self, t, x):
        return self.eval(t, x)

    def reduced_eval(self, t, x):
        """y minus the free-wave average (f(x-ct)+f(x+ct))/2."""
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        c = self.problem.c
        return self.eval(t, x) - 0.5 * (self.problem.f(x - c * t) + self.problem.f(x + c * t))

    def kink_lines(self, a: float, b: float) -> list[tuple[float, float]]:
        """Characteristics x +- c t = const through kinks of f or v, as (const, +-c).

        They cross [a, b] at some time in [0, T]; y has only its guaranteed
        smoothness across them.
        """
        s = self.xscale
        lo, hi = a / s - self.T, b / s + self.T
        pts = sorted(set(self.v.kinks(lo, hi)) | set(self.normalized.f.kinks(lo, hi)))
        return [(s * k, sgn * s) for k in pts for sgn in (1.0, -1.0)]

    def terminal_error(self, grid=None) -> float:
        xs = probe_grid(self.problem) if grid is None else np.asarray(grid, dtype=float)
        return float(np.max(np.abs(self.eval(np.full_like(xs, self.T), xs) - self.problem.g(xs))))

    def initial_error(self, grid=None) -> float:
        xs = probe_grid(self.problem) if grid is None else np.asarray(grid, dtype=float)
        return float(np.max(np.abs(self.eval(np.zeros_like(xs), xs) - self.problem.f(xs))))


def _check_twice_differentiable(p: LineProblem) -> None:
    xs = probe_grid(p, 201)
    for name, fn in (("f", p.f), ("g", p.g)):
        vals = fn.derivative(2)(xs)
        if not np.all(np.isfinite(vals)):
            bad = xs[~np.isfinite(vals)][0]
            raise DomainError(f"{name} is not twice differentiable near x={bad:g}")


def solve_line(p: LineProblem, seed: str | Fn = "polynomial",
               quad: Quadrature = DEFAULT_QUADRATURE, check: bool = True) -> ControlSolution:
    _check_twice_differentiable(p)
    q = normalize_speed(p)
    rt = reduce_target(q)
    if isinstance(seed, Fn):
        sd = seed_user(seed, q.T)
    elif seed == "polynomial":
        sd = seed_polynomial(rt, q.T)
    elif seed in ("trig", "trigonometric"):
        sd = seed_trig(rt, q.T)
    else:
        raise ValueError(f"unknown seed kind {seed!r}")
    v = synth_velocity(sd, rt, q.T)
    sol = ControlSolution(p, q, rt, sd, v, quad)
    if check:
        sol.diagnostics["terminal_error"] = sol.terminal_error()
        sol.diagnostics["seed_residuals"] = list(sd.residuals(rt, quad))
    return sol


# ----------------------------------------------------------- non-uniqueness

@dataclass(frozen=True)
class NullVelocity:
    """A 2T-periodic velocity with zero mean over one period.

    Adding it to a control changes neither endpoint profile.
    """

    v1: Fn
    T: float

    def __post_init__(self):
        validate_null_velocity(self.v1, self.T)


def validate_null_velocity(v1: Fn, T: float, quad: Quadrature = DEFAULT_QUADRATURE) -> None:
    from .errors import PeriodicityError

    try:
        v1.check_period(2.0 * T)
    except PeriodicityError as exc:
        raise InvalidNullVelocity(f"null velocity must be {2 * T:g}-periodic: {exc}") from exc
    mean = quad.integrate(v1, -T, T)
    if abs(mean) > 1e-9:
        raise InvalidNullVelocity(f"null velocity must integrate to 0 over a period, got {mean:.3e}")


def add_null_velocity(sol: ControlSolution, v1: NullVelocity | Fn) -> ControlSolution:
    """Velocity v + v1 (v1 in solver coordinates)."""
    if isinstance(v1, Fn):
        v1 = NullVelocity(v1, sol.normalized.T)
    elif not math.isclose(v1.T, sol.normalized.T, rel_tol=1e-12):
        raise InvalidNullVelocity("null velocity period does not match the horizon")
    return replace(sol, v=sol.v + v1.v1, seed=None, diagnostics={})


# ------------------------------------------------------------- diagnostics

def volterra_residual(sol: ControlSolution, rt: ReducedTarget, grid) -> float:
    """max |(1/2) int_{x-T}^{x+T} v - ftilde(x)| over ``grid`` (solver coordinates)."""
    xs = np.asarray(grid, dtype=float)
    T = sol.normalized.T
    half = 0.5 * sol.quad.integrate_many(sol.v, xs - T, xs + T)
    return float(np.max(np.abs(half - rt.ftilde(xs))))


def quadrilateral_check(sol: ControlSolution, t1: float, t2: float, x: float) -> float:
    """|yt(A) + yt(D) - yt(B) - yt(C)| on the characteristic parallelogram.

    A = (t1, x), D = (t2, x), B and C = ((t1+t2)/2, x -+ c(t2-t1)/2), where yt
    is the solution minus its free-wave part.
    """
    T = sol.T
    for t in (t1, t2):
        if t < 0 or t > T:
            raise DomainError("parallelogram vertex outside the strip [0, T]")
    c = sol.problem.c
    tm, d = 0.5 * (t1 + t2), 0.5 * c * (t2 - t1)
    ts = np.array([t1, t2, tm, tm])
    xs = np.array([x, x, x - d, x + d])
    yt = sol.reduced_eval(ts, xs)
    return float(abs(yt[0] + yt[1] - yt[2] - yt[3]))


def solve_vector_line(components: Sequence[LineProblem], **kw) -> list[ControlSolution]:
    """Componentwise solve of a decoupled system sharing one horizon and speed."""
    comps = list(components)
    if not comps:
        return []
    T, c = comps[0].T, comps[0].c
    for p in comps[1:]:
        if p.T != T or p.c != c:
            raise ValueError("mismatched horizons: all components must share T and c")
    return [solve_line(p, **kw) for p in comps]


def line_problem(f: str | Fn, g: str | Fn, T: float, c: float = 1.0) -> LineProblem:
    """Convenience constructor accepting expression strings."""
    f = parse_expr(f) if isinstance(f, str) else f
    g = parse_expr(g) if isinstance(g, str) else g
    return LineProblem(f, g, float(T), float(c))
