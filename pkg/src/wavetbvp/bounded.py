"""Problems on an interval [0, L] with Dirichlet or Neumann boundary data.

Homogeneous data are reflected (odd for Dirichlet, even for Neumann) to a
2L-periodic problem and handed to the Fourier solver. Inhomogeneous data are
first reduced to homogeneous ones by subtracting a wave built from the
boundary data, which requires extending that data beyond [0, T] so that it
stays compatible with the far boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CompatibilityError, DomainError, HorizonError, ResonantRatio
from .funcrep import DEFAULT_QUADRATURE, Fn, LambdaFn, PiecewiseFn, ReflectedFn, ShiftedPolyFn, const
from .periodic import FourierSolution, PeriodicProblem, recognize_ratio, solve_periodic

COMPAT_TOL = 1e-6
DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class BoundedProblem:
    """f, g on [0, L]; boundary data h, l (Dirichlet) or H, K (Neumann) on [0, T].

    Missing boundary data mean homogeneous conditions.
    """

    f: Fn
    g: Fn
    T: float
    L: float
    bc: str = DIRICHLET
    h: Fn | None = None
    l: Fn | None = None
    H: Fn | None = None
    K: Fn | None = None

    def __post_init__(self):
        if not (self.T > 0 and self.L > 0):
            raise ValueError("T and L must be positive")
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary type {self.bc!r}")
        if self.bc == DIRICHLET and (self.H is not None or self.K is not None):
            raise ValueError("Dirichlet problems take boundary data h, l")
        if self.bc == NEUMANN and (self.h is not None or self.l is not None):
            raise ValueError("Neumann problems take boundary data H, K")

    @property
    def homogeneous(self) -> bool:
        return all(x is None for x in (self.h, self.l, self.H, self.K))

    def left(self) -> Fn:
        fn = self.h if self.bc == DIRICHLET else self.H
        return const(0.0) if fn is None else fn

    def right(self) -> Fn:
        fn = self.l if self.bc == DIRICHLET else self.K
        return const(0.0) if fn is None else fn


# ------------------------------------------------------------ compatibility

@dataclass(frozen=True)
class CompatReport:
    residuals: dict[str, float]
    tol: float = COMPAT_TOL

    @property
    def passed(self) -> bool:
        return all(abs(r) <= self.tol for r in self.residuals.values())

    @property
    def worst(self) -> float:
        return max((abs(r) for r in self.residuals.values()), default=0.0)


def check_compat(p: BoundedProblem, tol: float = COMPAT_TOL) -> CompatReport:
    """Corner conditions linking f, g with the boundary data."""
    f, g, T, L = p.f, p.g, p.T, p.L
    r: dict[str, float] = {}
    if p.bc == DIRICHLET:
        h, l = p.left(), p.right()
        for order in (0, 2):
            tag = "" if order == 0 else "''"
            r[f"f{tag}(0)-h{tag}(0)"] = f.deriv(0.0, order) - h.deriv(0.0, order)
            r[f"f{tag}(L)-l{tag}(0)"] = f.deriv(L, order) - l.deriv(0.0, order)
            r[f"g{tag}(0)-h{tag}(T)"] = g.deriv(0.0, order) - h.deriv(T, order)
            r[f"g{tag}(L)-l{tag}(T)"] = g.deriv(L, order) - l.deriv(T, order)
    else:
        H, K = p.left(), p.right()
        r["f'(0)-H(0)"] = f.deriv(0.0, 1) - H(0.0)
        r["f'(L)-K(0)"] = f.deriv(L, 1) - K(0.0)
        r["g'(0)-H(T)"] = g.deriv(0.0, 1) - H(T)
        r["g'(L)-K(T)"] = g.deriv(L, 1) - K(T)
    return CompatReport({k: float(v) for k, v in r.items()}, tol)


# ---------------------------------------------------------------- reflection

def extend_odd(fn: Fn, L: float, tol: float = COMPAT_TOL) -> ReflectedFn:
    """Odd reflection about 0, continued 2L-periodically; needs fn(0) = fn(L) = 0."""
    e0, eL = fn(0.0), fn(L)
    if abs(e0) > tol or abs(eL) > tol:
        raise CompatibilityError(
            f"odd extension needs zero endpoint values, got {e0:.3e}, {eL:.3e}", residual=max(abs(e0), abs(eL)))
    return ReflectedFn(fn, L, -1)


def extend_even(fn: Fn, L: float) -> ReflectedFn:
    """Even reflection about 0, continued 2L-periodically."""
    return ReflectedFn(fn, L, +1)


# ------------------------------------------------------------------ solution

@dataclass
class BoundedSolution:
    """Evaluator on [0, T] x [0, L]: Fourier part plus an optional lift."""

    problem: BoundedProblem
    fourier: FourierSolution | None = None
    lift: "Lift | None" = None
    transposed: "BoundedSolution | None" = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return self.problem.T

    @property
    def L(self) -> float:
        return self.problem.L

    def eval(self, t, x, dt: int = 0, dx: int = 0):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        t, x = np.broadcast_arrays(t, x)
        if x.size and (x.min() < -1e-12 * self.L or x.max() > self.L * (1 + 1e-12)):
            raise DomainError(f"x must lie in [0, {self.L:g}]")
        if self.transposed is not None:
            return self.transposed.eval(x, t, dx, dt)
        out = self.fourier.eval(t, x, dt, dx)
        if self.lift is not None:
            out = out + self.lift.eval(t, x, dt, dx)
        return out

    def __call__(self, t, x):
        return self.eval(t, x)

    def velocity(self) -> Fn:
        """y_t(0, .) on [0, L]."""
        if self.transposed is None and self.lift is None:
            return self.fourier.velocity()
        if self.transposed is None:
            return self.fourier.velocity() + self.lift.velocity()
        inner = self.transposed
        return LambdaFn(lambda x: inner.eval(x, np.zeros_like(x), 0, 1),
                        domain=(0.0, self.L), name="transposed velocity")

    def kink_lines(self) -> list[tuple[float, float]]:
        """Lines x + b t = a, as (a, b), across which y may be only C^2.

        They are the characteristics through reflection points of the
        extended data and through junctions of the boundary extension.
        """
        if self.transposed is not None:
            # inner lines t + b x = a in swapped coordinates
            return [(a * b, b) for a, b in self.transposed.kink_lines()]
        T, L = self.T, self.L
        pts = {m * L for m in range(-2 - math.ceil(T / L), 3 + math.ceil(T / L))}
        if self.lift is not None:
            span = 2.0 * (T + L)
            pts |= set(self.lift.ext.fn.kinks(-span, span))
            pts |= {-k for k in self.lift.ext.fn.kinks(-span, span)}
        return [(a, b) for a in sorted(pts) for b in (1.0, -1.0)]

    def measure(self, n: int = 2001, seed: int = 0) -> dict:
        """Endpoint profile errors and boundary-trace errors."""
        p = self.problem
        xs = np.linspace(0.0, p.L, n)
        ts = np.random.default_rng(seed).uniform(0.0, p.T, 100)
        d = {
            "initial_error": float(np.max(np.abs(self.eval(0.0, xs) - p.f(xs)))),
            "terminal_error": float(np.max(np.abs(self.eval(p.T, xs) - p.g(xs)))),
        }
        order = 0 if p.bc == DIRICHLET else 1
        left = self.eval(ts, np.zeros_like(ts), 0, order) - p.left()(ts)
        right = self.eval(ts, np.full_like(ts, p.L), 0, order) - p.right()(ts)
        d["boundary_error"] = float(max(np.max(np.abs(left)), np.max(np.abs(right))))
        return d


def solve_homogeneous(p: BoundedProblem, tol: float = 1e-8) -> BoundedSolution:
    """Reflect to period 2L and solve the periodic problem."""
    if not p.homogeneous:
        raise ValueError("boundary data present; use solve_inhomogeneous")
    report = check_compat(p)
    if not report.passed:
        raise CompatibilityError(
            f"compatibility conditions fail (worst residual {report.worst:.3e})",
            residuals=report.residuals)
    if p.bc == DIRICHLET:
        F, G = extend_odd(p.f, p.L), extend_odd(p.g, p.L)
    else:
        F, G = extend_even(p.f, p.L), extend_even(p.g, p.L)
    fsol, _ = solve_periodic(PeriodicProblem(F, G, p.T, 2.0 * p.L), tol)
    sol = BoundedSolution(p, fourier=fsol)
    sol.diagnostics.update(fsol.diagnostics)
    return sol


# ----------------------------------------------------- boundary extensions

def hermite(a: float, b: float, left, right) -> ShiftedPolyFn:
    """Polynomial of degree 2m-1 matching m derivatives (orders 0..m-1) at a and b."""
    m = len(left)
    if len(right) != m:
        raise ValueError("need the same number of conditions at both ends")
    D = b - a
    n = 2 * m
    d = np.zeros(n)
    for j in range(m):
        d[j] = left[j] * D**j / math.factorial(j)
    # rows: j-th derivative at u = 1 of sum_i d_i u^i, for the unknown i >= m
    A = np.zeros((m, m))
    rhs = np.zeros(m)
    for j in range(m):
        acc = 0.0
        for i in range(n):
            coef = math.factorial(i) / math.factorial(i - j) if i >= j else 0.0
            if i < m:
                acc += coef * d[i]
            else:
                A[j, i - m] = coef
        rhs[j] = right[j] * D**j - acc
    d[m:] = np.linalg.solve(A, rhs)
    c = d / D ** np.arange(n)
    return ShiftedPolyFn(c, a)


@dataclass(frozen=True)
class ExtendedBoundaryFn:
    """Boundary data continued past [0, T] so that E(t+L) + E(t-L) = 2R(t) on [0, T]."""

    fn: PiecewiseFn
    kind: str
    T: float
    L: float
    junctions: dict[str, float]

    def residual(self, right: Fn, n: int = 2001) -> float:
        ts = np.linspace(0.0, self.T, n)
        return float(np.max(np.abs(self.fn(ts + self.L) + self.fn(ts - self.L) - 2.0 * right(ts))))

    @property
    def junction_max(self) -> float:
        return max(self.junctions.values(), default=0.0)


def _extend_boundary(left: Fn, right: Fn, T: float, L: float, orders: int, kind: str,
                     start: float) -> ExtendedBoundaryFn:
    if not T < L:
        raise HorizonError(f"boundary extension needs T < L (T={T:g}, L={L:g})", T=T, L=L)
    at0 = [left.deriv(0.0, j) for j in range(orders)]
    atT = [left.deriv(T, j) for j in range(orders)]
    # free data at -L: constant continuation of the value at 0
    dm = [at0[0]] + [0.0] * (orders - 1)
    p_neg = hermite(-L, 0.0, dm, at0)
    r0 = [right.deriv(0.0, j) for j in range(orders)]
    eL = [2.0 * r0[j] - dm[j] for j in range(orders)]
    p_mid = hermite(T, L, atT, eL)
    # the functional equation itself on [L, L+T]
    p_top = right.shift(-L) * 2.0 - p_neg.shift(-2.0 * L)
    breaks = [-L, 0.0, T, L, L + T]
    pieces = [p_neg, left, p_mid, p_top]
    if start < -L:
        breaks.insert(0, start)
        pieces.insert(0, const(dm[0]))
    pw = PiecewiseFn(breaks, pieces)
    junctions = {}
    for s in breaks[1:-1]:
        junctions[f"{s:.17g}"] = max(
            abs(pw.one_sided(s, "+", j) - pw.one_sided(s, "-", j)) for j in range(orders))
    return ExtendedBoundaryFn(pw, kind, T, L, junctions)


def extend_boundary_dirichlet(h: Fn, l: Fn, T: float, L: float) -> ExtendedBoundaryFn:
    """C^3 extension of h to [-T-L, T+L] with h(t+L) + h(t-L) = 2 l(t) on [0, T]."""
    return _extend_boundary(h, l, T, L, 4, DIRICHLET, -T - L)


def extend_boundary_neumann(H: Fn, K: Fn, T: float, L: float) -> ExtendedBoundaryFn:
    """C^2 extension of H to [-L, T+L] with H(t+L) + H(t-L) = 2 K(t) on [0, T]."""
    return _extend_boundary(H, K, T, L, 3, NEUMANN, -L)


# ------------------------------------------------------------------- lifts

@dataclass(frozen=True)
class Lift:
    """The wave subtracted to homogenise boundary data.

    Dirichlet: (E(t+x) + E(t-x)) / 2.  Neumann: (1/2) int_{t-x}^{t+x} E.
    """

    ext: ExtendedBoundaryFn

    def eval(self, t, x, dt: int = 0, dx: int = 0):
        E = self.ext.fn
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        n = dt + dx
        sgn = -1.0 if dx % 2 else 1.0
        if self.ext.kind == DIRICHLET:
            En = E.derivative(n)
            return 0.5 * (En(t + x) + sgn * En(t - x))
        if n == 0:
            return 0.5 * DEFAULT_QUADRATURE.integrate_many(E, t - x, t + x)
        En = E.derivative(n - 1)
        return 0.5 * (En(t + x) - sgn * En(t - x))

    def velocity(self) -> Fn:
        E = self.ext.fn
        if self.ext.kind == DIRICHLET:
            d = E.derivative(1)
            return (d + d.affine(-1.0)) * 0.5
        return (E - E.affine(-1.0)) * 0.5


def _lifted_problem(p: BoundedProblem, ext: ExtendedBoundaryFn) -> BoundedProblem:
    E, T = ext.fn, p.T
    if ext.kind == DIRICHLET:
        ft = p.f - (E + E.affine(-1.0)) * 0.5
        gt = p.g - (E.shift(T) + E.affine(-1.0, T)) * 0.5
    else:
        q = DEFAULT_QUADRATURE
        f1 = p.f.derivative(1) - (E + E.affine(-1.0)) * 0.5
        g1 = p.g.derivative(1) - (E.shift(T) + E.affine(-1.0, T)) * 0.5
        ft = LambdaFn(lambda x: p.f(x) - 0.5 * q.integrate_many(E, -x, x),
                      lambda n: f1.derivative(n - 1), name="lifted f")
        gt = LambdaFn(lambda x: p.g(x) - 0.5 * q.integrate_many(E, T - x, T + x),
                      lambda n: g1.derivative(n - 1), name="lifted g")
    lifted = BoundedProblem(ft, gt, p.T, p.L, p.bc)
    report = check_compat(lifted)
    if not report.passed:
        raise CompatibilityError(
            f"lifted data violate the homogeneous compatibility conditions "
            f"(worst {report.worst:.3e}); the boundary extension is inconsistent",
            residuals=report.residuals)
    return lifted


def lift_dirichlet(p: BoundedProblem, ext: ExtendedBoundaryFn) -> BoundedProblem:
    if ext.kind != DIRICHLET:
        raise ValueError("expected a Dirichlet extension")
    return _lifted_problem(p, ext)


def lift_neumann(p: BoundedProblem, ext: ExtendedBoundaryFn) -> BoundedProblem:
    if ext.kind != NEUMANN:
        raise ValueError("expected a Neumann extension")
    return _lifted_problem(p, ext)


# ---------------------------------------------------------------- solvers

def exchange_axes(p: BoundedProblem) -> BoundedProblem:
    """Swap the roles of t and x in a Dirichlet problem: (f,g,h,l,T,L) -> (h,l,f,g,L,T)."""
    if p.bc != DIRICHLET:
        raise ValueError("axis exchange is defined for Dirichlet data only")
    return BoundedProblem(p.left(), p.right(), p.L, p.T, DIRICHLET, h=p.f, l=p.g)


def solve_inhomogeneous(p: BoundedProblem, tol: float = 1e-8) -> BoundedSolution:
    ratio = recognize_ratio(p.T, 2.0 * p.L)
    if ratio.q == 1:
        raise ResonantRatio(f"T/L = {ratio.p} is an integer", ratio=ratio.p)
    report = check_compat(p)
    if not report.passed:
        raise CompatibilityError(
            f"compatibility conditions fail (worst residual {report.worst:.3e})",
            residuals=report.residuals)
    if p.bc == DIRICHLET:
        if p.T > p.L:
            inner = solve_inhomogeneous(exchange_axes(p), tol)
            sol = BoundedSolution(p, transposed=inner)
            sol.diagnostics.update(axis_exchange=True, **{
                k: v for k, v in inner.diagnostics.items() if k.startswith(("junction", "functional"))})
            return sol
        ext = extend_boundary_dirichlet(p.left(), p.right(), p.T, p.L)
    else:
        if not p.T < p.L:
            raise HorizonError(
                f"Neumann boundary data need T < L (T={p.T:g}, L={p.L:g})", T=p.T, L=p.L)
        ext = extend_boundary_neumann(p.left(), p.right(), p.T, p.L)
    lifted = _lifted_problem(p, ext)
    hom = solve_homogeneous(lifted, tol)
    sol = BoundedSolution(p, fourier=hom.fourier, lift=Lift(ext))
    sol.diagnostics.update(hom.diagnostics)
    sol.diagnostics.update(
        junction_max=ext.junction_max,
        functional_residual=ext.residual(p.right()),
    )
    return sol


def solve_bounded(p: BoundedProblem, tol: float = 1e-8) -> BoundedSolution:
    if p.homogeneous:
        return solve_homogeneous(p, tol)
    return solve_inhomogeneous(p, tol)
