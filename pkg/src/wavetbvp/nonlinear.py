"""Wave map y_tt - y_xx = y_t^2 - y_x^2 through the substitution z = exp(-y).

z solves the linear wave equation with data exp(-f), exp(-g). A solution y
exists as long as z stays positive, which holds when the synthesized
velocity is nonnegative. That needs a nonnegative seed plus a sign condition
on the slope sums of the reduced target.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoNonnegativeSeed, NonnegConditionFailed, OrderingViolated, PositivityLost
from .funcrep import DEFAULT_QUADRATURE, Fn, PiecewiseFn, ShiftedPolyFn, const
from .line1d import (
    ControlSolution,
    LineProblem,
    ReducedTarget,
    SeedFunction,
    reduce_target,
    seed_polynomial,
    synth_velocity,
)

ORDER_POINTS = 4001
SUM_TOL = 1e-9


@dataclass(frozen=True)
class WaveMapProblem:
    f: Fn
    g: Fn
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")

    def grid(self, n: int = ORDER_POINTS) -> np.ndarray:
        r = 5.0 * (self.T + 1.0)
        return np.linspace(-r, r, n)

    @property
    def fhat(self) -> Fn:
        return (-self.f).map("exp")

    @property
    def ghat(self) -> Fn:
        return (-self.g).map("exp")


def check_ordering(p: WaveMapProblem) -> dict:
    """inf f > sup g on the probe grid; raises OrderingViolated with a witness."""
    xs = p.grid()
    fv, gv = p.f(xs), p.g(xs)
    i, j = int(np.argmin(fv)), int(np.argmax(gv))
    report = {"inf_f": float(fv[i]), "argmin_f": float(xs[i]),
              "sup_g": float(gv[j]), "argmax_g": float(xs[j])}
    if not fv[i] > gv[j]:
        raise OrderingViolated(
            f"need inf f > sup g: f({xs[i]:g}) = {fv[i]:.6g} <= g({xs[j]:g}) = {gv[j]:.6g}",
            witness_f=float(xs[i]), witness_g=float(xs[j]), **report)
    return report


def to_linear(p: WaveMapProblem) -> LineProblem:
    check_ordering(p)
    return LineProblem(p.fhat, p.ghat, p.T)


# ------------------------------------------------------- sign condition

@dataclass(frozen=True)
class NonnegReport:
    passed: bool
    worst_right: float  # min over x > T of the slope sum
    worst_left: float   # max over x < -T of the slope sum
    Nmax: int
    monotone_pattern: bool
    antiperiodic_pattern: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_nonneg_condition(ft: Fn, T: float, Nmax: int | None = None, n: int = ORDER_POINTS) -> NonnegReport:
    """Sign of the slope sums that enter the velocity outside [-T, T].

    For x > T: sum_{i=1..N} ft'(x - (2i-1)T) >= 0, and for x < -T:
    sum_{i=1..N} ft'(x + (2i-1)T) <= 0, with N = floor((|x|+T)/(2T)) the
    number of terms the velocity formula uses at x.
    """
    if Nmax is None:
        Nmax = int(np.floor((5.0 * (T + 1.0) + T) / (2.0 * T)))
    reach = (2 * Nmax + 1) * T
    d = ft.derivative(1)
    xr = np.linspace(T, reach, n)[1:]
    worst_r, worst_l = np.inf, -np.inf
    for side, xs in ((1.0, xr), (-1.0, -xr)):
        N = np.floor((np.abs(xs) + T) / (2.0 * T)).astype(int)
        s = np.zeros_like(xs)
        for i in range(1, Nmax + 1):
            m = N >= i
            s[m] += d(xs[m] - side * (2 * i - 1) * T)
        if side > 0:
            worst_r = float(s.min())
        else:
            worst_l = float(s.max())
    passed = worst_r >= -SUM_TOL and worst_l <= SUM_TOL
    # two sufficient patterns: slope sign equal to sign(x), and a slope that is
    # nonnegative on [0, 2T] and flips sign under a 2T shift
    xg = np.linspace(-reach, reach, n)
    dg = d(xg)
    monotone = bool(np.all(dg[xg > 0] >= -SUM_TOL) and np.all(dg[xg < 0] <= SUM_TOL))
    x0 = np.linspace(0.0, 2.0 * T, 401)
    xa = np.linspace(-reach, reach - 2.0 * T, n)
    anti = bool(np.all(d(x0) >= -SUM_TOL) and np.max(np.abs(d(xa) + d(xa + 2.0 * T))) <= 1e-9)
    return NonnegReport(passed, worst_r, worst_l, Nmax, monotone, anti)


# ---------------------------------------------------------- nonneg seed

def _smoothstep_pieces(d: float, T: float, P: float, Q: float, cc: float, alpha: float,
                       c_nonneg: bool) -> PiecewiseFn:
    """alpha + P*R + Q*Lf + cc*W with smoothstep ramps of width d at both ends."""
    a, b = T - d, -T + d
    # in powers of (x - a) on [T-d, T] and of (x - b) on [-T, -T+d]
    ramp_r = np.array([0.0, 0.0, 3.0 / d**2, -2.0 / d**3])
    ramp_l = np.array([0.0, 0.0, 3.0 / d**2, 2.0 / d**3])
    if c_nonneg:
        w_r = np.array([0.0, 0.0, 1.0 / (4.0 * d), 0.0])
        w_l = w_r
    else:
        w_r = np.array([0.0, 0.0, 1.0 / (2.0 * d), -1.0 / (2.0 * d**2)])
        w_l = np.array([0.0, 0.0, 1.0 / (2.0 * d), 1.0 / (2.0 * d**2)])
    base = np.array([alpha, 0.0, 0.0, 0.0])
    right = ShiftedPolyFn(base + P * ramp_r + cc * w_r, a)
    left = ShiftedPolyFn(base + Q * ramp_l + cc * w_l, b)
    if b < a:
        return PiecewiseFn([-T, b, a, T], [left, const(alpha), right])
    return PiecewiseFn([-T, 0.0, T], [left, right])


def build_nonneg_seed(rt: ReducedTarget, T: float, max_halvings: int = 60) -> SeedFunction:
    """A seed satisfying the moment conditions with u >= 0 on [-T, T].

    The polynomial seed is used when it is already nonnegative. Otherwise the
    seed is a constant plus smoothstep ramps of width d at the ends of
    [-T, T] (which carry the jump u(T) - u(-T)) plus a nonnegative quadratic
    bump pair (which carries the slope jump). Every part except the constant
    is nonnegative, and the constant is fixed by the integral condition; d is
    halved from T until the constant is >= 0.
    """
    poly = seed_polynomial(rt, T)
    xs = np.linspace(-T, T, 2001)
    if np.min(poly.u(xs)) >= 0.0:
        return SeedFunction(poly.u, T, "polynomial")
    a, b, c = rt.a0, rt.b0, rt.c0
    if a <= 0.0:
        raise NoNonnegativeSeed(
            f"a nonnegative seed needs ftilde(0) > 0, got {a:.3e}", a0=a, b0=b, c0=c)
    P, Q = (2.0 * b, 0.0) if b >= 0 else (0.0, -2.0 * b)
    cc = 2.0 * abs(c)
    d = T
    for _ in range(max_halvings):
        w_int = d * d / 6.0 if c >= 0 else d * d / 12.0
        alpha = (2.0 * a - abs(b) * d - cc * w_int) / (2.0 * T)
        if alpha >= 0.0:
            u = _smoothstep_pieces(d, T, P, Q, cc, alpha, c >= 0)
            if np.min(u(xs)) >= -1e-14 * (1.0 + abs(b) + abs(c)):
                return SeedFunction(u, T, "nonnegative")
        d *= 0.5
    raise NoNonnegativeSeed(
        "no nonnegative seed found in the ramp family", a0=a, b0=b, c0=c)


# ------------------------------------------------------------- solution

@dataclass
class WaveMapSolution:
    problem: WaveMapProblem
    linear: ControlSolution
    report: dict = field(default_factory=dict)

    @property
    def v(self) -> Fn:
        return self.linear.v

    def z(self, t, x, dt: int = 0, dx: int = 0):
        return self.linear.eval(t, x, dt, dx)

    def eval(self, t, x, dt: int = 0, dx: int = 0):
        """y = -ln z and its derivatives up to total order 2."""
        z = np.asarray(self.linear.eval(t, x))
        n = dt + dx
        if n == 0:
            out = -np.log(z)
        elif n == 1:
            out = -np.asarray(self.linear.eval(t, x, dt, dx)) / z
        elif n == 2:
            # -z_ab/z + z_a z_b/z^2 with (a, b) the two differentiations
            zt = np.asarray(self.linear.eval(t, x, 1, 0))
            zx = np.asarray(self.linear.eval(t, x, 0, 1))
            pair = {2: zt * zt, 1: zt * zx, 0: zx * zx}[dt]
            second = np.asarray(self.linear.eval(t, x, dt, dx))
            out = -second / z + pair / z**2
        else:
            raise ValueError("derivatives up to total order 2")
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, t, x):
        return self.eval(t, x)


def solve_wavemap(p: WaveMapProblem, nt: int = 21) -> WaveMapSolution:
    report = {"ordering": check_ordering(p)}
    lp = LineProblem(p.fhat, p.ghat, p.T)
    rt = reduce_target(lp)
    xs = p.grid()
    ftv = rt.ftilde(xs)
    report["ftilde_min"] = float(ftv.min())
    cond = check_nonneg_condition(rt.ftilde, p.T)
    report["nonneg_condition"] = cond.as_dict()
    if not cond.passed:
        raise NonnegConditionFailed(
            f"slope sums change sign (min right {cond.worst_right:.3e}, max left {cond.worst_left:.3e})",
            **cond.as_dict())
    seed = build_nonneg_seed(rt, p.T)
    report["seed_kind"] = seed.kind
    v = synth_velocity(seed, rt, p.T)
    lin = ControlSolution(lp, lp, rt, seed, v, DEFAULT_QUADRATURE)
    ts = np.linspace(0.0, p.T, nt)
    tt, xx = np.meshgrid(ts, xs, indexing="ij")
    zv = lin.eval(tt, xx)
    report["z_min"] = float(zv.min())
    if not np.all(zv > 0):
        k = np.unravel_index(np.argmin(zv), zv.shape)
        raise PositivityLost(f"z = {zv[k]:.3e} <= 0 at t={tt[k]:g}, x={xx[k]:g}")
    report["v_min"] = float(np.min(v(xs)))
    sol = WaveMapSolution(p, lin, report)
    report["terminal_error"] = float(np.max(np.abs(sol.eval(np.full_like(xs, p.T), xs) - p.g(xs))))
    report["initial_error"] = float(np.max(np.abs(sol.eval(np.zeros_like(xs), xs) - p.f(xs))))
    return sol
