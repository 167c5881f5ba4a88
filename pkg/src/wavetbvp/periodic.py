"""Periodic and circle problems by truncated Fourier synthesis.

Each Fourier mode of an L-periodic solution evolves as a harmonic oscillator
with frequency w_k = 2 k pi / L, so the initial sine/cosine coefficients fix
the mode at t = 0 and the terminal coefficients fix it at t = T, as long as
sin(w_k T) != 0. With 2T/L = p/q in lowest terms these divisors are bounded
below by sin(pi/q); modes with q | k are resonant and cannot be steered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, IrrationalRatio, ResonanceObstruction, ResonantRatio, TailNotConverged
from .funcrep import Fn, TrigSeriesFn

K_CAP = 4096
ANALYSIS_MODES = 2 * K_CAP
DENOM_CAP = 10**6
RATIO_RTOL = 1e-12
THETA_POINTS = 2001


@dataclass(frozen=True)
class PeriodicProblem:
    f: Fn
    g: Fn
    T: float
    L: float

    def __post_init__(self):
        if not (self.T > 0 and self.L > 0):
            raise ValueError("T and L must be positive")
        self.f.check_period(self.L)
        self.g.check_period(self.L)


# ------------------------------------------------------------------ ratio

@dataclass(frozen=True)
class RationalRatio:
    """2T/L = p/q in lowest terms."""

    p: int
    q: int

    @property
    def value(self) -> float:
        return self.p / self.q

    @property
    def Cs(self) -> float:
        """Lower bound of |sin(2 k pi T / L)| over non-resonant k."""
        return math.sin(math.pi / self.q) if self.q >= 2 else 0.0

    def resonant(self, k) -> np.ndarray | bool:
        """Modes with sin(2 k pi T/L) = 0, i.e. q divides k."""
        return np.asarray(k) % self.q == 0


def recognize_ratio(T: float, L: float) -> RationalRatio:
    """Continued-fraction reconstruction of 2T/L; IrrationalRatio if none fits."""
    r = 2.0 * T / L
    fr = Fraction(r).limit_denominator(DENOM_CAP)
    if abs(fr.numerator / fr.denominator - r) > RATIO_RTOL * abs(r):
        raise IrrationalRatio(
            f"2T/L = {r!r} has no rational form with denominator <= {DENOM_CAP}", ratio=r)
    return RationalRatio(fr.numerator, fr.denominator)


def rationality_check(T: float, L: float) -> RationalRatio:
    """Like ``recognize_ratio`` but also rejects integer 2T/L."""
    ratio = recognize_ratio(T, L)
    if ratio.q == 1:
        raise ResonantRatio(f"2T/L = {ratio.p} is an integer: every mode is resonant", ratio=ratio.p)
    return ratio


# --------------------------------------------------------------- analysis

@dataclass(frozen=True)
class CoefficientTable:
    """a_k = (2/L) int f cos(w_k x), b_k likewise with sin, k = 0..K."""

    a: np.ndarray
    b: np.ndarray
    L: float

    @property
    def K(self) -> int:
        return self.a.size - 1

    def truncate(self, K: int) -> "CoefficientTable":
        return CoefficientTable(self.a[:K + 1].copy(), self.b[:K + 1].copy(), self.L)

    def synthesize(self, x) -> np.ndarray:
        w = 2.0 * math.pi / self.L
        return TrigSeriesFn(0.5 * self.a[0], self.a[1:], self.b[1:], w)(x)


def _sample_count(L: float, K: int) -> int:
    n = max(16 * K, 2048 * math.ceil(L), 1 << 14)
    return 1 << math.ceil(math.log2(n))


def fourier_analyze(fn: Fn, L: float, K: int, check_period: bool = True) -> CoefficientTable:
    """Composite Simpson coefficients on n >= 16K panels, evaluated by one FFT.

    For an L-periodic integrand the Simpson weights collapse to 2h/3 on even
    nodes and 4h/3 on odd nodes, so the weighted sums are a single real FFT.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if check_period:
        fn.check_period(L)
    n = _sample_count(L, K)
    h = L / n
    xs = np.arange(n) * h
    w = np.where(np.arange(n) % 2 == 0, 2.0 * h / 3.0, 4.0 * h / 3.0)
    F = np.fft.rfft(w * fn(xs))[:K + 1]
    return CoefficientTable((2.0 / L) * F.real, -(2.0 / L) * F.imag, L)


# ---------------------------------------------------------------- cutoff

def tail_bound(fc: CoefficientTable, gc: CoefficientTable, ratio: RationalRatio, K: int, weight: int = 0) -> float:
    """Majorant of the neglected part of the solution beyond mode K.

    (1 + 1/Cs) sum_{k>K} (|a_k(f)| + |b_k(f)|) + (1/Cs) sum_{k>K} (|a_k(g)| + |b_k(g)|),
    with an extra factor k^weight inside the sums.
    """
    inv = 1.0 / ratio.Cs
    k = np.arange(K + 1, fc.K + 1, dtype=float) ** weight
    sf = np.sum(k * (np.abs(fc.a[K + 1:]) + np.abs(fc.b[K + 1:])))
    sg = np.sum(k * (np.abs(gc.a[K + 1:]) + np.abs(gc.b[K + 1:])))
    return float((1.0 + inv) * sf + inv * sg)


def choose_cutoff(fc: CoefficientTable, gc: CoefficientTable, ratio: RationalRatio,
                  tol: float, cap: int = K_CAP) -> int:
    """Smallest K <= cap whose tail majorant is <= tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if ratio.q < 2:
        raise ResonantRatio("cutoff needs a non-integer 2T/L")
    inv = 1.0 / ratio.Cs
    mags = (1.0 + inv) * (np.abs(fc.a) + np.abs(fc.b)) + inv * (np.abs(gc.a) + np.abs(gc.b))
    mags[0] = 0.0
    # tails[K] = sum_{k > K} mags[k]
    tails = np.concatenate([np.cumsum(mags[::-1])[::-1][1:], [0.0]])
    ok = np.nonzero(tails[1:cap + 1] <= tol)[0]
    if ok.size == 0:
        raise TailNotConverged(
            f"tail bound {tails[cap]:.3e} exceeds tol {tol:.1e} at K = {cap}", tail=float(tails[cap]))
    return int(ok[0]) + 1


# -------------------------------------------------------------- synthesis

@dataclass(frozen=True)
class FourierSolution:
    """Truncated solution coefficients.

    y(t, th) = (alpha0 + beta0 t)/2
             + sum_k [alpha_k cos(w_k t) + beta_k sin(w_k t)] cos(w_k th)
             + [abar_k cos(w_k t) + bbar_k sin(w_k t)] sin(w_k th)
    """

    K: int
    alpha0: float
    beta0: float
    alpha: np.ndarray
    beta: np.ndarray
    abar: np.ndarray
    bbar: np.ndarray
    L: float
    T: float
    ratio: RationalRatio
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(1, self.K + 1) / self.L

    @property
    def resonant(self) -> np.ndarray:
        return self.ratio.resonant(np.arange(1, self.K + 1))

    def with_resonant_choice(self, beta, bbar) -> "FourierSolution":
        """Copy with different (beta_k, bbar_k) on the resonant modes."""
        m = self.resonant
        nb, nbb = self.beta.copy(), self.bbar.copy()
        nb[m] = np.broadcast_to(beta, nb.shape)[m]
        nbb[m] = np.broadcast_to(bbar, nbb.shape)[m]
        return replace(self, beta=nb, bbar=nbb, diagnostics={})

    def small_divisors(self) -> np.ndarray:
        """|sin(w_k T)| for the non-resonant k <= K."""
        return np.abs(np.sin(self.omega * self.T))[~self.resonant]

    def eval(self, t, theta, dt: int = 0, dth: int = 0, check: bool = True):
        t = np.asarray(t, dtype=float)
        th = np.asarray(theta, dtype=float)
        t, th = np.broadcast_arrays(t, th)
        if check and t.size and (t.min() < -1e-12 * self.T or t.max() > self.T * (1 + 1e-12)):
            raise DomainError(f"t must lie in [0, {self.T:g}]")
        shape = t.shape
        tf, xf = t.ravel(), th.ravel()
        if dth == 0 and dt == 0:
            out = 0.5 * (self.alpha0 + self.beta0 * tf)
        elif dth == 0 and dt == 1:
            out = np.full(tf.shape, 0.5 * self.beta0)
        else:
            out = np.zeros(tf.shape)
        if self.K:
            w = self.omega
            ps, px = 0.5 * math.pi * dt, 0.5 * math.pi * dth
            scale = w ** (dt + dth)
            rows = max(1, (1 << 21) // self.K)
            for s in range(0, tf.size, rows):
                wt = np.outer(tf[s:s + rows], w)
                wx = np.outer(xf[s:s + rows], w)
                ct, st = np.cos(wt + ps), np.sin(wt + ps)
                cx, sx = np.cos(wx + px), np.sin(wx + px)
                acc = (ct * self.alpha + st * self.beta) * cx + (ct * self.abar + st * self.bbar) * sx
                out[s:s + rows] += acc @ scale
        out = out.reshape(shape)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t, theta):
        return self.eval(t, theta)

    def velocity(self) -> TrigSeriesFn:
        w = 2.0 * math.pi / self.L
        k = self.omega
        return TrigSeriesFn(0.5 * self.beta0, k * self.beta, k * self.bbar, w)

    def sum_k2(self) -> float:
        k2 = np.arange(1, self.K + 1, dtype=float) ** 2
        return float(np.sum(k2 * (np.abs(self.alpha) + np.abs(self.beta) + np.abs(self.abar) + np.abs(self.bbar))))

    def manifest(self) -> dict:
        return {
            "K": self.K,
            "ratio": {"p": self.ratio.p, "q": self.ratio.q, "Cs": self.ratio.Cs},
            "L": self.L,
            "T": self.T,
            "alpha0": self.alpha0,
            "beta0": self.beta0,
            "modes": [
                [int(k), float(a), float(b), float(ab), float(bb)]
                for k, a, b, ab, bb in zip(range(1, self.K + 1), self.alpha, self.beta, self.abar, self.bbar)
            ],
            **{k: v for k, v in self.diagnostics.items() if np.isscalar(v)},
        }


def synth_coeffs(fc: CoefficientTable, gc: CoefficientTable, ratio: RationalRatio,
                 T: float, L: float) -> FourierSolution:
    if fc.K != gc.K:
        raise ValueError("coefficient tables must share K")
    K = fc.K
    k = np.arange(1, K + 1)
    w = 2.0 * math.pi * k / L
    c, s = np.cos(w * T), np.sin(w * T)
    res = ratio.resonant(k)
    s_safe = np.where(res, 1.0, s)
    beta = np.where(res, 0.0, (gc.a[1:] - fc.a[1:] * c) / s_safe)
    bbar = np.where(res, 0.0, (gc.b[1:] - fc.b[1:] * c) / s_safe)
    return FourierSolution(
        K=K,
        alpha0=float(fc.a[0]),
        beta0=float((gc.a[0] - fc.a[0]) / T),
        alpha=fc.a[1:].copy(),
        beta=beta,
        abar=fc.b[1:].copy(),
        bbar=bbar,
        L=float(L),
        T=float(T),
        ratio=ratio,
    )


# ------------------------------------------------------------- resonance

class Obstruction(NamedTuple):
    residual: float
    applicable: bool


def _resonant_residual(fc: CoefficientTable, gc: CoefficientTable, ratio: RationalRatio,
                       T: float, L: float, n: int = THETA_POINTS) -> float:
    """Max over a theta grid of the terminal defect left by the resonant modes."""
    k = np.arange(1, fc.K + 1)
    m = ratio.resonant(k)
    if not np.any(m):
        return 0.0
    c = np.cos(2.0 * math.pi * k * T / L)
    da = np.where(m, gc.a[1:] - c * fc.a[1:], 0.0)
    db = np.where(m, gc.b[1:] - c * fc.b[1:], 0.0)
    defect = TrigSeriesFn(0.0, da, db, 2.0 * math.pi / L)
    return _periodic_absmax(defect, L, n)


def _periodic_absmax(fn: Fn, L: float, n: int) -> float:
    """max |fn| over one period: grid search, then bounded refinement around the best nodes."""
    theta = np.linspace(0.0, L, n)
    vals = np.abs(fn(theta))
    best = float(vals.max())
    h = L / (n - 1)
    for i in np.argsort(vals)[-3:]:
        res = minimize_scalar(lambda s: -abs(float(fn(s))), bounds=(theta[i] - h, theta[i] + h),
                              method="bounded", options={"xatol": 1e-12 * max(L, 1.0)})
        best = max(best, -float(res.fun))
    return best


def resonance_obstruction(p: PeriodicProblem, K: int = 1024) -> Obstruction:
    """Terminal defect forced on the data when 2T/L is an integer.

    Every mode is then resonant: the reachable terminal profile is g's mean
    plus the modes of f multiplied by cos(w_k T). The residual is the max over
    a theta grid of g minus that profile.
    """
    try:
        ratio = recognize_ratio(p.T, p.L)
    except IrrationalRatio:
        return Obstruction(0.0, False)
    if ratio.q != 1:
        return Obstruction(0.0, False)
    fc = fourier_analyze(p.f, p.L, K)
    gc = fourier_analyze(p.g, p.L, K)
    # the mean of the solution is linear in t and always reaches g's mean
    return Obstruction(_resonant_residual(fc, gc, ratio, p.T, p.L), True)


# ---------------------------------------------------------------- solving

def solve_periodic(p: PeriodicProblem, tol: float = 1e-8) -> tuple[FourierSolution, TrigSeriesFn]:
    ratio = recognize_ratio(p.T, p.L)
    if ratio.q == 1:
        obs = resonance_obstruction(p)
        raise ResonantRatio(
            f"2T/L = {ratio.p} is an integer: every mode is resonant "
            f"(obstruction residual {obs.residual:.3e})", residual=obs.residual, ratio=ratio.p)
    fc_all = fourier_analyze(p.f, p.L, ANALYSIS_MODES)
    gc_all = fourier_analyze(p.g, p.L, ANALYSIS_MODES)
    K = choose_cutoff(fc_all, gc_all, ratio, tol)
    fc, gc = fc_all.truncate(K), gc_all.truncate(K)
    target = max(tol, 1e-7)
    obstruction = _resonant_residual(fc, gc, ratio, p.T, p.L)
    if obstruction > target:
        raise ResonanceObstruction(
            f"modes divisible by q = {ratio.q} are resonant and g is not reachable "
            f"(residual {obstruction:.3e})", residual=obstruction)
    sol = synth_coeffs(fc, gc, ratio, p.T, p.L)
    theta = np.linspace(0.0, p.L, THETA_POINTS)
    sol.diagnostics.update(
        tail_bound=tail_bound(fc_all, gc_all, ratio, K),
        tail_bound_k2=tail_bound(fc_all, gc_all, ratio, K, weight=2),
        sum_k2=sol.sum_k2(),
        obstruction_residual=obstruction,
        terminal_error=float(np.max(np.abs(sol.eval(p.T, theta) - p.g(theta)))),
        initial_error=float(np.max(np.abs(sol.eval(0.0, theta) - p.f(theta)))),
    )
    return sol, sol.velocity()


def solve_circle(f: Fn, g: Fn, T: float, tol: float = 1e-8) -> tuple[FourierSolution, TrigSeriesFn]:
    """Problem on the unit circle: period 2 pi in the angle."""
    return solve_periodic(PeriodicProblem(f, g, T, 2.0 * math.pi), tol)
