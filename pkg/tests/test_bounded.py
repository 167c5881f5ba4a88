import math
import re

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavetbvp.bounded import (
    DIRICHLET,
    NEUMANN,
    BoundedProblem,
    check_compat,
    exchange_axes,
    extend_boundary_dirichlet,
    extend_boundary_neumann,
    extend_even,
    extend_odd,
    hermite,
    lift_dirichlet,
    lift_neumann,
    solve_bounded,
    solve_homogeneous,
    solve_inhomogeneous,
)
from wavetbvp.errors import CompatibilityError, HorizonError, ResonantRatio
from wavetbvp.funcrep import const, parse_expr
from wavetbvp.funcrep.expr import diff, parse, to_text
from wavetbvp.verify import EVEN, ODD, FDGrid, compare, fd_forward, residual_order


def sub(src: str, var: str, repl: str) -> str:
    return re.sub(rf"\b{var}\b", f"({repl})", src)


def traveling(rng):
    """F(x+t) + G(x-t) with random smooth F, G, as an expression in x and t."""
    a = rng.uniform(-1, 1, 4)
    k = rng.uniform(0.5, 2.0, 2)
    F = f"{a[0]:.6f}*sin({k[0]:.6f}*s) + {a[1]:.6f}*exp(-s^2/3)"
    G = f"{a[2]:.6f}*cos({k[1]:.6f}*s) + {a[3]:.6f}*s"
    return f"{sub(F, 's', 'x+t')} + {sub(G, 's', 'x-t')}"


def traveling_problem(y: str, T: float, L: float, bc: str) -> BoundedProblem:
    f = parse_expr(sub(y, "t", "0"))
    g = parse_expr(sub(y, "t", repr(T)))
    if bc == DIRICHLET:
        left = parse_expr(sub(sub(y, "x", "0"), "t", "x"))
        right = parse_expr(sub(sub(y, "x", repr(L)), "t", "x"))
        return BoundedProblem(f, g, T, L, DIRICHLET, h=left, l=right)
    return BoundedProblem(f, g, T, L, NEUMANN, H=_trace_dx(y, 0.0), K=_trace_dx(y, L))


def _trace_dx(y: str, x0: float):
    """y_x(t, x0) as a function of t (written in the variable x)."""
    node = diff(parse(y, ("x", "t")), "x")
    return parse_expr(sub(sub(to_text(node), "x", repr(x0)), "t", "x"))


class TestCompat:
    def test_sine_dirichlet(self):
        rep = check_compat(BoundedProblem(parse_expr("sin(pi*x/2)"), const(0.0), 0.5, 2.0))
        assert rep.passed and rep.worst <= 1e-10

    def test_cosine_dirichlet_fails(self):
        rep = check_compat(BoundedProblem(parse_expr("cos(pi*x)"), const(0.0), 0.25, 1.0))
        assert not rep.passed

    def test_cosine_neumann(self):
        rep = check_compat(BoundedProblem(parse_expr("cos(pi*x)"), const(0.0), 0.25, 1.0, NEUMANN))
        assert rep.passed

    def test_solver_refuses(self):
        with pytest.raises(CompatibilityError):
            solve_homogeneous(BoundedProblem(parse_expr("cos(pi*x)"), const(0.0), 0.25, 1.0))

    def test_wrong_boundary_data(self):
        with pytest.raises(ValueError):
            BoundedProblem(const(0.0), const(0.0), 0.25, 1.0, DIRICHLET, H=const(0.0))
        with pytest.raises(ValueError):
            BoundedProblem(const(0.0), const(0.0), 0.25, 1.0, NEUMANN, h=const(0.0))
        with pytest.raises(ValueError):
            BoundedProblem(const(0.0), const(0.0), 0.25, 1.0, "robin")


class TestReflection:
    def test_odd_sine(self):
        F = extend_odd(parse_expr("sin(pi*x)"), 1.0)
        xs = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(F(xs), np.sin(np.pi * xs), atol=1e-12)

    def test_odd_parabola(self):
        L = 1.5
        F = extend_odd(parse_expr(f"x*({L}-x)"), L)
        assert F(-L / 2) == pytest.approx(-L * L / 4)

    def test_odd_zero(self):
        assert extend_odd(const(0.0), 1.0)(-0.3) == 0.0

    def test_odd_needs_zero_ends(self):
        with pytest.raises(CompatibilityError):
            extend_odd(parse_expr("x"), 1.0)

    def test_even_cosine(self):
        F = extend_even(parse_expr("cos(pi*x)"), 1.0)
        xs = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(F(xs), np.cos(np.pi * xs), atol=1e-12)

    def test_even_constant_and_square(self):
        assert extend_even(const(2.5), 1.0)(-7.3) == 2.5
        assert extend_even(parse_expr("x^2"), 1.0)(-0.5) == pytest.approx(0.25)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-20, 20), L=st.floats(0.3, 3.0))
def test_reflection_symmetry(x, L):
    odd = extend_odd(parse_expr(f"x*({L!r}-x)*exp(x)"), L)
    even = extend_even(parse_expr("exp(x)+x^3"), L)
    assert abs(odd(-x) + odd(x)) <= 1e-10 * (1 + abs(odd(x)))
    assert abs(odd(x + 2 * L) - odd(x)) <= 1e-10 * (1 + abs(odd(x)))
    assert abs(even(-x) - even(x)) <= 1e-10 * (1 + abs(even(x)))
    assert abs(even(x + 2 * L) - even(x)) <= 1e-10 * (1 + abs(even(x)))


class TestHomogeneous:
    def test_dirichlet_closed_form(self):
        sol = solve_homogeneous(BoundedProblem(parse_expr("sin(pi*x)"), const(0.0), 0.25, 1.0))
        t = np.linspace(0, 0.25, 9)[:, None]
        x = np.linspace(0, 1, 41)[None, :]
        exact = (np.cos(np.pi * t) - np.sin(np.pi * t)) * np.sin(np.pi * x)
        assert np.max(np.abs(sol.eval(t, x) - exact)) <= 1e-8
        xs = np.linspace(0, 1, 41)
        np.testing.assert_allclose(sol.velocity()(xs), -np.pi * np.sin(np.pi * xs), atol=1e-8)

    def test_neumann_closed_form(self):
        sol = solve_homogeneous(BoundedProblem(parse_expr("cos(pi*x)"), const(0.0), 0.25, 1.0, NEUMANN))
        t = np.linspace(0, 0.25, 9)[:, None]
        x = np.linspace(0, 1, 41)[None, :]
        exact = (np.cos(np.pi * t) - np.sin(np.pi * t)) * np.cos(np.pi * x)
        assert np.max(np.abs(sol.eval(t, x) - exact)) <= 1e-8
        assert sol.measure()["boundary_error"] <= 1e-5

    def test_zero(self):
        sol = solve_homogeneous(BoundedProblem(const(0.0), const(0.0), 0.25, 1.0))
        assert sol.eval(0.1, 0.5) == 0.0

    def test_integer_ratio(self):
        with pytest.raises(ResonantRatio):
            solve_homogeneous(BoundedProblem(parse_expr("sin(pi*x)"), const(0.0), 1.0, 1.0))

    def test_x_range(self):
        sol = solve_homogeneous(BoundedProblem(parse_expr("sin(pi*x)"), const(0.0), 0.25, 1.0))
        with pytest.raises(Exception):
            sol.eval(0.1, 1.5)

    def test_needs_homogeneous(self):
        p = BoundedProblem(const(1.0), const(1.0), 0.25, 1.0, h=const(1.0), l=const(1.0))
        with pytest.raises(ValueError):
            solve_homogeneous(p)

    @pytest.mark.parametrize("bc, f, boundary", [
        (DIRICHLET, "sin(pi*x) + 0.3*sin(3*pi*x)", ODD),
        (NEUMANN, "cos(pi*x) + 0.2*cos(2*pi*x)", EVEN),
    ])
    def test_oracle(self, bc, f, boundary):
        T, L = 0.3, 1.0
        p = BoundedProblem(parse_expr(f), const(0.0), T, L, bc)
        sol = solve_homogeneous(p)
        grid = FDGrid.interval(L, T, nx=1000, boundary=boundary)
        fd = fd_forward(p.f, sol.velocity(), T, grid, stride=25)
        assert compare(sol.eval, fd)["oracle_max_dev"] <= 1e-4
        ro = residual_order(sol.eval, (0.0, T, 0.0, L), avoid=sol.kink_lines())
        assert ro.exact or ro.order >= 1.9

    # T/L = 1/3 makes every third mode of the period-2L problem resonant
    @pytest.mark.parametrize("seed", range(3))
    def test_boundary_traces(self, seed):
        rng = np.random.default_rng(seed)
        c = rng.uniform(-1, 1, 3)
        f = f"{c[0]:.5f}*sin(pi*x) + {c[1]:.5f}*sin(4*pi*x)"
        g = f"{c[2]:.5f}*sin(2*pi*x)"
        sol = solve_homogeneous(BoundedProblem(parse_expr(f), parse_expr(g), 1 / 3, 1.0))
        ts = rng.uniform(0, 1 / 3, 100)
        assert np.max(np.abs(sol.eval(ts, 0.0))) <= 1e-7
        assert np.max(np.abs(sol.eval(ts, 1.0))) <= 1e-7


class TestExtension:
    def test_zero(self):
        ext = extend_boundary_dirichlet(const(0.0), const(0.0), 0.25, 1.0)
        assert np.max(np.abs(ext.fn(np.linspace(-1.25, 1.25, 51)))) == 0.0

    def test_constant_right(self):
        ext = extend_boundary_dirichlet(const(0.0), const(1.0), 0.25, 1.0)
        assert ext.residual(const(1.0)) <= 1e-8
        assert ext.junction_max <= 1e-6

    @pytest.mark.parametrize("seed", range(4))
    def test_random_dirichlet(self, seed):
        y = traveling(np.random.default_rng(seed))
        p = traveling_problem(y, 0.4, 1.0, DIRICHLET)
        ext = extend_boundary_dirichlet(p.h, p.l, 0.4, 1.0)
        assert ext.residual(p.l) <= 1e-8
        assert ext.junction_max <= 1e-6

    def test_neumann_zero(self):
        ext = extend_boundary_neumann(const(0.0), const(0.0), 0.25, 1.0)
        assert np.max(np.abs(ext.fn(np.linspace(-1, 1.25, 51)))) == 0.0

    def test_neumann_constant(self):
        ext = extend_boundary_neumann(const(0.0), const(1.0), 0.25, 1.0)
        assert ext.residual(const(1.0)) <= 1e-8

    @pytest.mark.parametrize("seed", range(4))
    def test_random_neumann(self, seed):
        y = traveling(np.random.default_rng(100 + seed))
        p = traveling_problem(y, 0.4, 1.0, NEUMANN)
        ext = extend_boundary_neumann(p.H, p.K, 0.4, 1.0)
        assert ext.residual(p.K) <= 1e-8
        assert ext.junction_max <= 1e-6

    def test_horizon(self):
        with pytest.raises(HorizonError):
            extend_boundary_neumann(const(0.0), const(0.0), 1.5, 1.0)
        with pytest.raises(HorizonError):
            extend_boundary_dirichlet(const(0.0), const(0.0), 1.0, 1.0)

    def test_hermite_matches_ends(self):
        p = hermite(0.5, 2.0, [1.0, -2.0, 3.0, 0.5], [0.0, 1.0, -1.0, 2.0])
        for j, (a, b) in enumerate(zip([1.0, -2.0, 3.0, 0.5], [0.0, 1.0, -1.0, 2.0])):
            assert p.deriv(0.5, j) == pytest.approx(a, abs=1e-9)
            assert p.deriv(2.0, j) == pytest.approx(b, abs=1e-9)


class TestLift:
    def test_identity_lift(self):
        p = BoundedProblem(parse_expr("sin(pi*x)"), const(0.0), 0.25, 1.0, h=const(0.0), l=const(0.0))
        ext = extend_boundary_dirichlet(p.left(), p.right(), p.T, p.L)
        q = lift_dirichlet(p, ext)
        xs = np.linspace(0, 1, 11)
        np.testing.assert_allclose(q.f(xs), p.f(xs), atol=1e-15)
        assert q.homogeneous

    def test_constant_lift(self):
        one = const(1.0)
        p = BoundedProblem(one, one, 0.25, 1.0, h=one, l=one)
        ext = extend_boundary_dirichlet(one, one, 0.25, 1.0)
        q = lift_dirichlet(p, ext)
        xs = np.linspace(0, 1, 11)
        assert np.max(np.abs(q.f(xs))) <= 1e-12 and np.max(np.abs(q.g(xs))) <= 1e-12

    def test_neumann_linear(self):
        one = const(1.0)
        p = BoundedProblem(parse_expr("x"), parse_expr("x"), 0.25, 1.0, NEUMANN, H=one, K=one)
        ext = extend_boundary_neumann(one, one, 0.25, 1.0)
        q = lift_neumann(p, ext)
        xs = np.linspace(0, 1, 11)
        assert np.max(np.abs(q.f(xs))) <= 1e-10

    def test_neumann_identity(self):
        p = BoundedProblem(parse_expr("cos(pi*x)"), const(0.0), 0.25, 1.0, NEUMANN, H=const(0.0), K=const(0.0))
        q = lift_neumann(p, extend_boundary_neumann(const(0.0), const(0.0), 0.25, 1.0))
        assert q.f(0.3) == pytest.approx(math.cos(0.3 * math.pi))

    def test_kind_mismatch(self):
        one = const(1.0)
        p = BoundedProblem(one, one, 0.25, 1.0, h=one, l=one)
        with pytest.raises(ValueError):
            lift_neumann(p, extend_boundary_dirichlet(one, one, 0.25, 1.0))

    @pytest.mark.parametrize("bc", [DIRICHLET, NEUMANN])
    def test_random_lift_endpoints(self, bc):
        y = traveling(np.random.default_rng(7))
        p = traveling_problem(y, 0.4, 1.0, bc)
        if bc == DIRICHLET:
            q = lift_dirichlet(p, extend_boundary_dirichlet(p.h, p.l, 0.4, 1.0))
            ends = [q.f(0.0), q.f(1.0), q.g(0.0), q.g(1.0)]
        else:
            q = lift_neumann(p, extend_boundary_neumann(p.H, p.K, 0.4, 1.0))
            ends = [q.f.deriv(0.0, 1), q.f.deriv(1.0, 1), q.g.deriv(0.0, 1), q.g.deriv(1.0, 1)]
        assert max(abs(e) for e in ends) <= 1e-6


class TestInhomogeneous:
    def test_zero(self):
        z = const(0.0)
        sol = solve_inhomogeneous(BoundedProblem(z, z, 0.25, 1.0, h=z, l=z))
        assert sol.eval(0.1, 0.4) == 0.0

    def test_constant(self):
        one = const(1.0)
        sol = solve_inhomogeneous(BoundedProblem(one, one, 0.25, 1.0, h=one, l=one))
        t = np.linspace(0, 0.25, 6)[:, None]
        x = np.linspace(0, 1, 21)[None, :]
        assert np.max(np.abs(sol.eval(t, x) - 1.0)) <= 1e-9

    def test_zero_boundary_matches_homogeneous(self):
        f = parse_expr("sin(pi*x)")
        z = const(0.0)
        a = solve_inhomogeneous(BoundedProblem(f, z, 0.25, 1.0, h=z, l=z))
        b = solve_homogeneous(BoundedProblem(f, z, 0.25, 1.0))
        t = np.linspace(0, 0.25, 6)[:, None]
        x = np.linspace(0, 1, 21)[None, :]
        assert np.max(np.abs(a.eval(t, x) - b.eval(t, x))) <= 1e-12

    def test_neumann_horizon(self):
        y = traveling(np.random.default_rng(3))
        with pytest.raises(HorizonError):
            solve_inhomogeneous(traveling_problem(y, 1.5, 1.0, NEUMANN))

    @pytest.mark.parametrize("bc, T, tol", [(DIRICHLET, 0.4, 1e-6), (NEUMANN, 0.4, 1e-5), (DIRICHLET, 1.7, 1e-6)])
    def test_random_traveling(self, bc, T, tol):
        y = traveling(np.random.default_rng(11))
        p = traveling_problem(y, T, 1.0, bc)
        sol = solve_bounded(p)
        m = sol.measure()
        assert m["initial_error"] <= 1e-6 and m["terminal_error"] <= 1e-6
        assert m["boundary_error"] <= tol
        # the traveling wave is one solution; ours may differ inside but not at the ends
        assert sol.diagnostics.get("axis_exchange", False) == (T > 1.0)

    def test_axis_exchange_against_oracle(self):
        y = traveling(np.random.default_rng(5))
        T, L = 1.7, 1.0
        p = traveling_problem(y, T, L, DIRICHLET)
        sol = solve_inhomogeneous(p)
        grid = FDGrid.interval(L, T, nx=1000, boundary=ODD)
        fd = fd_forward(p.f, sol.velocity(), T, grid, left=p.h, right=p.l, stride=50)
        assert compare(sol.eval, fd)["oracle_max_dev"] <= 1e-4

    def test_exchange_axes_roles(self):
        p = BoundedProblem(parse_expr("x"), parse_expr("2*x"), 1.5, 1.0, h=const(0.0), l=parse_expr("1+x"))
        q = exchange_axes(p)
        assert (q.T, q.L) == (1.0, 1.5)
        assert q.f(0.5) == 0.0 and q.g(0.5) == 1.5 and q.l(0.5) == 1.0


@settings(max_examples=6, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), bc=st.sampled_from([DIRICHLET, NEUMANN]))
def test_lift_round_trip(seed, bc):
    y = traveling(np.random.default_rng(seed))
    p = traveling_problem(y, 0.3, 1.0, bc)
    sol = solve_inhomogeneous(p)
    m = sol.measure()
    assert m["initial_error"] <= 1e-6 and m["terminal_error"] <= 1e-6
    assert sol.diagnostics["functional_residual"] <= 1e-8
