"""Scalar data functions of one real variable.

Every solver consumes ``Fn`` objects. An ``Fn`` evaluates on scalars or numpy
arrays, differentiates to any order (exactly for expression trees, by finite
differences for samples) and reports the points where its smoothness may
break, so quadrature can split there.
"""

from __future__ import annotations

import csv
import math
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import DomainError, PeriodicityError
from . import expr as E

PERIOD_RTOL = 1e-9


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


class Fn:
    """Base class. Subclasses implement ``_eval`` and ``_derivative``."""

    period: float | None = None
    domain: tuple[float, float] | None = None

    # --- evaluation
    def __call__(self, x):
        arr = _as_array(x)
        if arr.ndim == 0:
            return float(self._eval(arr.reshape(1))[0])
        return self._eval(arr)

    def _eval(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # --- differentiation
    def derivative(self, n: int = 1) -> "Fn":
        if n < 0:
            raise ValueError("derivative order must be >= 0")
        if n == 0:
            return self
        cache = self.__dict__.setdefault("_dcache", {})
        if n not in cache:
            cache[n] = self._derivative() if n == 1 else self.derivative(n - 1).derivative(1)
        return cache[n]

    def _derivative(self) -> "Fn":
        raise NotImplementedError

    def deriv(self, x, order: int = 1):
        return self.derivative(order)(x)

    # --- structure
    def kinks(self, a: float, b: float) -> list[float]:
        """Points in (a, b) where some derivative may jump."""
        return []

    def check_domain(self, lo: float, hi: float) -> None:
        if self.domain is None or self.period is not None:
            return
        d0, d1 = self.domain
        tol = 1e-9 * max(1.0, abs(d0), abs(d1))
        if lo < d0 - tol or hi > d1 + tol:
            raise DomainError(f"[{lo:g}, {hi:g}] leaves the domain [{d0:g}, {d1:g}]")

    # --- algebra
    def _node(self) -> E.Node:
        return E.Apply(self, 1.0, 0.0)

    def affine(self, scale: float, shift: float = 0.0) -> "Fn":
        """x -> self(scale*x + shift)."""
        return ExprFn(E.substitute_affine(self._node(), float(scale), float(shift)),
                      period=_affine_period(self.period, scale))

    def shift(self, s: float) -> "Fn":
        return self.affine(1.0, s)

    def map(self, name: str) -> "Fn":
        return ExprFn(E.call(name, self._node()))

    def __add__(self, other):
        return _binary("+", self, other)

    def __radd__(self, other):
        return _binary("+", other, self)

    def __sub__(self, other):
        return _binary("-", self, other)

    def __rsub__(self, other):
        return _binary("-", other, self)

    def __mul__(self, other):
        return _binary("*", self, other)

    def __rmul__(self, other):
        return _binary("*", other, self)

    def __truediv__(self, other):
        return _binary("/", self, other)

    def __rtruediv__(self, other):
        return _binary("/", other, self)

    def __neg__(self):
        return ExprFn(E.neg(self._node()), period=self.period)

    def __pow__(self, other):
        return _binary("^", self, other)

    # --- periodicity
    def check_period(self, L: float | None = None, n: int = 100, seed: int = 0) -> float:
        """Max |fn(x) - fn(x+L)| at ``n`` random points; raises when too large."""
        L = self.period if L is None else L
        if L is None:
            raise PeriodicityError("no period declared")
        rng = np.random.default_rng(seed)
        lo = 0.0 if self.domain is None else self.domain[0]
        xs = lo + rng.uniform(0.0, L, n)
        if self.domain is not None and self.period is None:
            xs = lo + rng.uniform(0.0, max(self.domain[1] - lo - L, 0.0), n)
        a, b = self(xs), self(xs + L)
        err = float(np.max(np.abs(a - b)))
        scale = 1.0 + float(np.max(np.abs(a)))
        if err > PERIOD_RTOL * scale:
            raise PeriodicityError(f"not {L:g}-periodic: mismatch {err:.3e}")
        return err


def _affine_period(period, scale):
    if period is None or scale == 0:
        return None
    return period / abs(scale)


def _to_node(obj) -> E.Node:
    if isinstance(obj, Fn):
        return obj._node()
    if isinstance(obj, (int, float, np.floating, np.integer)):
        return E.Const(float(obj))
    raise TypeError(f"cannot combine Fn with {type(obj).__name__}")


def _combined_period(a, b):
    pa = a.period if isinstance(a, Fn) else 0.0
    pb = b.period if isinstance(b, Fn) else 0.0
    if pa is None or pb is None:
        return None
    if pa == 0.0:
        return pb or None
    if pb == 0.0 or math.isclose(pa, pb, rel_tol=1e-12):
        return pa
    return None


def _binary(op, a, b) -> "ExprFn":
    na, nb = _to_node(a), _to_node(b)
    node = {"+": E.add, "-": E.sub, "*": E.mul, "/": E.div, "^": E.power}[op](na, nb)
    return ExprFn(node, period=_combined_period(a, b))


class ExprFn(Fn):
    """Function given by an expression tree in ``x``.

    Leaves may be other ``Fn`` objects composed with an affine map, which is
    how derived quantities (lifts, reduced targets, transforms) are built
    without resampling.
    """

    def __init__(self, node: E.Node, period: float | None = None, src: str | None = None):
        self.node = node
        self.period = period
        self.src = src

    def _node(self) -> E.Node:
        return self.node

    def _eval(self, x: np.ndarray) -> np.ndarray:
        for leaf in E.applies(self.node):
            fn = leaf.fn
            if fn.domain is not None and fn.period is None and x.size:
                lo = leaf.scale * float(x.min()) + leaf.shift
                hi = leaf.scale * float(x.max()) + leaf.shift
                fn.check_domain(min(lo, hi), max(lo, hi))
        out = E.evaluate(self.node, {"x": x})
        return np.broadcast_to(np.asarray(out, dtype=float), x.shape).copy()

    def _derivative(self) -> "Fn":
        return ExprFn(E.diff(self.node, "x"), period=self.period)

    def kinks(self, a: float, b: float) -> list[float]:
        pts: set[float] = set()
        for leaf in E.applies(self.node):
            s, c = leaf.scale, leaf.shift
            if s == 0:
                continue
            lo, hi = sorted((s * a + c, s * b + c))
            for k in leaf.fn.kinks(lo, hi):
                xk = (k - c) / s
                if a < xk < b:
                    pts.add(xk)
        return sorted(pts)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.node, E.Const)

    def __repr__(self):
        return f"ExprFn({self.src or E.to_text(self.node)!r})"


def parse_expr(src: str, period: float | None = None) -> ExprFn:
    """Parse an expression in ``x`` into a function."""
    return ExprFn(E.parse(src, ("x",)), period=period, src=src)


def const(c: float) -> ExprFn:
    return ExprFn(E.Const(float(c)))


def identity() -> ExprFn:
    return ExprFn(E.Var("x"))


# ------------------------------------------------------------------ samples

class SampledFn(Fn):
    """Uniform samples with Catmull-Rom cubic interpolation.

    Derivatives of order n are central finite differences of the interpolant
    at the sample spacing (one-sided within two spacings of an edge).
    """

    def __init__(self, x0: float, dx: float, values: Sequence[float], period: float | None = None):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 1 or vals.size < 4:
            raise ValueError("sampled function needs at least 4 values")
        if not dx > 0:
            raise ValueError("sample spacing must be positive")
        self.x0 = float(x0)
        self.dx = float(dx)
        self.values = vals
        self.values.setflags(write=False)
        self.period = period
        self.domain = (self.x0, self.x0 + self.dx * (vals.size - 1))
        if period is not None:
            self._check_sample_period()

    def _check_sample_period(self):
        L = self.period
        m = L / self.dx
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise PeriodicityError("period is not a multiple of the sample spacing")
        m = int(round(m))
        if m + 1 > self.values.size:
            raise PeriodicityError("fewer samples than one period")
        mx = float(np.max(np.abs(self.values)))
        if abs(self.values[0] - self.values[m]) > PERIOD_RTOL * (1.0 + mx):
            raise PeriodicityError(
                f"samples are not {L:g}-periodic: {abs(self.values[0] - self.values[m]):.3e}")
        self._m = m

    @classmethod
    def from_csv(cls, path: str | Path, period: float | None = None) -> "SampledFn":
        xs, ys = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    x, y = float(row[0]), float(row[1])
                except ValueError:
                    if xs:
                        raise
                    continue  # header
                xs.append(x)
                ys.append(y)
        xs = np.asarray(xs)
        if xs.size < 4:
            raise ValueError(f"{path}: need at least 4 samples")
        d = np.diff(xs)
        if np.any(d <= 0):
            raise ValueError(f"{path}: x must be strictly increasing")
        dx = (xs[-1] - xs[0]) / (xs.size - 1)
        if np.max(np.abs(d - dx)) > 1e-9 * max(1.0, abs(dx)):
            raise ValueError(f"{path}: x must be uniformly spaced")
        return cls(xs[0], dx, ys, period=period)

    @classmethod
    def from_fn(cls, fn, a: float, b: float, n: int, period: float | None = None) -> "SampledFn":
        xs = np.linspace(a, b, n)
        return cls(a, (b - a) / (n - 1), fn(xs), period=period)

    @cached_property
    def _padded(self) -> np.ndarray:
        v = self.values
        if self.period is not None:
            m = self._m
            core = v[:m]
            return np.concatenate([core[-1:], core, core[:3]])
        lo = 3 * v[0] - 3 * v[1] + v[2]
        hi = 3 * v[-1] - 3 * v[-2] + v[-3]
        return np.concatenate([[lo], v, [hi]])

    def _eval(self, x: np.ndarray) -> np.ndarray:
        s = (x - self.x0) / self.dx
        if self.period is not None:
            s = np.mod(s, self._m)
            n = self._m
        else:
            n = self.values.size - 1
            if x.size:
                self.check_domain(float(x.min()), float(x.max()))
            s = np.clip(s, 0.0, n)
        i = np.minimum(np.floor(s).astype(np.int64), n - 1)
        u = s - i
        p = self._padded
        p0, p1, p2, p3 = p[i], p[i + 1], p[i + 2], p[i + 3]
        return p1 + 0.5 * u * (p2 - p0 + u * (2 * p0 - 5 * p1 + 4 * p2 - p3 + u * (3 * (p1 - p2) + p3 - p0)))

    def _derivative(self) -> "Fn":
        return _SampledDerivative(self, 1)

    def derivative(self, n: int = 1) -> Fn:
        if n == 0:
            return self
        cache = self.__dict__.setdefault("_dcache", {})
        if n not in cache:
            cache[n] = _SampledDerivative(self, n)
        return cache[n]


# central stencils (offsets, weights) for orders 1..4 and their one-sided twins
_CENTRAL = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
}
_FORWARD = {
    1: ((0, 1, 2), (-1.5, 2.0, -0.5)),
    2: ((0, 1, 2, 3), (2.0, -5.0, 4.0, -1.0)),
    3: ((0, 1, 2, 3, 4), (-2.5, 9.0, -12.0, 7.0, -1.5)),
    4: ((0, 1, 2, 3, 4, 5), (3.0, -14.0, 26.0, -24.0, 11.0, -2.0)),
}


class _SampledDerivative(Fn):
    def __init__(self, base: SampledFn, order: int):
        if order > 4:
            raise ValueError("sampled derivatives are available up to order 4")
        self.base = base
        self.order = order
        self.period = base.period
        self.domain = base.domain

    def _eval(self, x: np.ndarray) -> np.ndarray:
        b, h, n = self.base, self.base.dx, self.order
        if b.period is not None:
            offs, w = _CENTRAL[n]
            return sum(wi * b._eval(x + o * h) for o, wi in zip(offs, w)) / h**n
        if x.size:
            b.check_domain(float(x.min()), float(x.max()))
        lo, hi = b.domain
        reach = max(abs(o) for o in _CENTRAL[n][0]) * h
        out = np.empty_like(x)
        left = x - reach < lo
        right = (x + reach > hi) & ~left
        mid = ~(left | right)
        for mask, (offs, w), sgn in (
            (mid, _CENTRAL[n], 1),
            (left, _FORWARD[n], 1),
            (right, _FORWARD[n], -1),
        ):
            if not np.any(mask):
                continue
            xm = x[mask]
            if mask is left:
                xm = np.maximum(xm, lo)
            elif mask is right:
                xm = np.minimum(xm, hi)
            acc = sum(wi * b._eval(np.clip(xm + sgn * o * h, lo, hi)) for o, wi in zip(offs, w))
            out[mask] = acc * (sgn ** n) / h**n
        return out

    def derivative(self, n: int = 1) -> Fn:
        return self.base.derivative(self.order + n)


# --------------------------------------------------------------- polynomials

class PolyFn(Fn):
    """Polynomial in x given by ascending coefficients."""

    def __init__(self, coeffs: Sequence[float]):
        c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
        self.coeffs = c if c.size else np.zeros(1)

    def _eval(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs) + np.zeros_like(x)

    def _derivative(self):
        if self.coeffs.size <= 1:
            return PolyFn([0.0])
        return PolyFn(np.polynomial.polynomial.polyder(self.coeffs))

    def __repr__(self):
        return f"PolyFn({self.coeffs.tolist()})"


class ShiftedPolyFn(Fn):
    """Polynomial in (x - center); keeps Hermite pieces well conditioned."""

    def __init__(self, coeffs: Sequence[float], center: float):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.center = float(center)

    def _eval(self, x):
        return np.polynomial.polynomial.polyval(x - self.center, self.coeffs) + np.zeros_like(x)

    def _derivative(self):
        if self.coeffs.size <= 1:
            return ShiftedPolyFn([0.0], self.center)
        return ShiftedPolyFn(np.polynomial.polynomial.polyder(self.coeffs), self.center)


# ----------------------------------------------------------------- piecewise

class PiecewiseFn(Fn):
    """Pieces on consecutive intervals ``[breaks[i], breaks[i+1]]``.

    At an interior break the right-hand piece is used; ``one_sided`` gives
    explicit access to either side.
    """

    def __init__(self, breaks: Sequence[float], pieces: Sequence[Fn], extrapolate: bool = False):
        self.breaks = np.asarray(breaks, dtype=float)
        self.pieces = list(pieces)
        if len(self.pieces) != self.breaks.size - 1:
            raise ValueError("need one piece per interval")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breaks must increase")
        self.extrapolate = extrapolate
        self.domain = None if extrapolate else (float(self.breaks[0]), float(self.breaks[-1]))

    def _index(self, x):
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def _eval(self, x):
        if not self.extrapolate and x.size:
            self.check_domain(float(x.min()), float(x.max()))
        idx = self._index(x)
        out = np.empty_like(x)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if np.any(m):
                out[m] = piece._eval(x[m])
        return out

    def _derivative(self):
        return PiecewiseFn(self.breaks, [p.derivative(1) for p in self.pieces], self.extrapolate)

    def one_sided(self, x: float, side: str, order: int = 0) -> float:
        """Limit of the ``order``-th derivative at x from ``side`` ('-' or '+')."""
        xs = np.asarray([x], dtype=float)
        i = int(np.searchsorted(self.breaks, x, side="left" if side == "-" else "right")) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return float(self.pieces[i].derivative(order)._eval(xs)[0])

    def kinks(self, a, b):
        inner = self.breaks[1:-1]
        return [float(k) for k in inner if a < k < b]


# --------------------------------------------------------- periodic wrappers

class PeriodizedFn(Fn):
    """Periodic continuation of ``base`` restricted to [a, a+L)."""

    def __init__(self, base: Fn, a: float, L: float):
        self.base, self.a, self.period = base, float(a), float(L)

    def _eval(self, x):
        return self.base._eval(self.a + np.mod(x - self.a, self.period))

    def _derivative(self):
        return PeriodizedFn(self.base.derivative(1), self.a, self.period)

    def kinks(self, a, b):
        L = self.period
        inner = [self.a + k for k in self.base.kinks(self.a, self.a + L)] + [self.a]
        out = []
        for k0 in inner:
            j = math.ceil((a - k0) / L)
            while k0 + j * L < b:
                xk = k0 + j * L
                if a < xk:
                    out.append(xk)
                j += 1
        return sorted(out)


class ReflectedFn(Fn):
    """Odd (parity -1) or even (+1) reflection of ``base`` on [0, L], made 2L-periodic."""

    def __init__(self, base: Fn, L: float, parity: int, smooth_joins: bool = False):
        if parity not in (1, -1):
            raise ValueError("parity must be +1 or -1")
        self.base, self.L, self.parity = base, float(L), parity
        self.period = 2.0 * self.L
        self.smooth_joins = smooth_joins

    def _eval(self, x):
        L = self.L
        s = np.mod(x + L, 2 * L) - L  # in [-L, L)
        neg = s < 0
        out = self.base._eval(np.abs(s))
        if self.parity == -1:
            out = np.where(neg, -out, out)
        return out

    def _derivative(self):
        return ReflectedFn(self.base.derivative(1), self.L, -self.parity, self.smooth_joins)

    def kinks(self, a, b):
        if self.smooth_joins:
            return []
        L = self.L
        j = math.floor(a / L) + 1
        out = []
        while j * L < b:
            out.append(j * L)
            j += 1
        return out


# ------------------------------------------------------------- trig series

class TrigSeriesFn(Fn):
    """c0 + sum_k (A_k cos(k w x) + B_k sin(k w x)), k = 1..K."""

    def __init__(self, c0: float, A: Sequence[float], B: Sequence[float], omega: float):
        self.c0 = float(c0)
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.omega = float(omega)
        self.period = 2 * math.pi / self.omega

    @property
    def K(self) -> int:
        return self.A.size

    def _eval(self, x):
        out = np.full(x.shape, self.c0)
        if self.K == 0:
            return out
        k = np.arange(1, self.K + 1) * self.omega
        flat = x.reshape(-1)
        res = out.reshape(-1)
        rows = max(1, (1 << 22) // self.K)
        for s in range(0, flat.size, rows):
            ph = np.outer(flat[s:s + rows], k)
            res[s:s + rows] += np.cos(ph) @ self.A + np.sin(ph) @ self.B
        return res.reshape(x.shape)

    def _derivative(self):
        k = np.arange(1, self.K + 1) * self.omega
        return TrigSeriesFn(0.0, k * self.B, -k * self.A, self.omega)


def grid_values(fn: Fn, xs: Iterable[float]) -> np.ndarray:
    return fn(np.asarray(list(xs), dtype=float))


class LambdaFn(Fn):
    """Wraps a vectorised callable; derivatives come from ``deriv_factory``."""

    def __init__(self, func, deriv_factory=None, domain=None, period=None, name: str = "lambda"):
        self.func = func
        self.deriv_factory = deriv_factory
        self.domain = domain
        self.period = period
        self.name = name

    def _eval(self, x):
        return np.asarray(self.func(x), dtype=float) + np.zeros_like(x)

    def _derivative(self):
        if self.deriv_factory is None:
            raise NotImplementedError(f"{self.name} has no derivative")
        return self.deriv_factory(1)

    def derivative(self, n: int = 1) -> Fn:
        if n == 0:
            return self
        if self.deriv_factory is None:
            raise NotImplementedError(f"{self.name} has no derivative")
        return self.deriv_factory(n)

    def __repr__(self):
        return f"LambdaFn({self.name})"
