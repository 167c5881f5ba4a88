import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from wavetbvp.errors import DomainError, InvalidNullVelocity
from wavetbvp.funcrep import const, parse_expr
from wavetbvp.line1d import (
    LineProblem,
    add_null_velocity,
    dalembert_eval,
    line_problem,
    normalize_speed,
    quadrilateral_check,
    reduce_target,
    reduced_from_values,
    seam_jumps,
    seed_polynomial,
    seed_trig,
    solve_line,
    solve_vector_line,
    synth_velocity,
    volterra_residual,
)
from wavetbvp.verify import FDGrid, compare, fd_forward

from .conftest import random_smooth_pair


def _one_sided(u, x, s, eps):
    """Second-order one-sided difference at x looking in direction s, Richardson-extrapolated."""
    def d(e):
        return s * (-3 * u(x) + 4 * u(x + s * e) - u(x + 2 * s * e)) / (2 * e)
    return (4 * d(eps / 2) - d(eps)) / 3


def seed_conditions(u, rt, T):
    """The three moment conditions by scipy quadrature and one-sided differences."""
    breaks = [float(b) for b in getattr(u, "breaks", [-T, T])]
    inner = [b for b in breaks if -T < b < T]
    gap = min(np.diff(sorted({-T, T, *inner})))
    eps = min(1e-4 * T, gap / 4)
    integral = quad(u, -T, T, points=inner or None, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    slope = _one_sided(u, T, -1.0, eps) - _one_sided(u, -T, 1.0, eps)
    return (integral - 2 * rt.a0, u(T) - u(-T) - 2 * rt.b0, slope - 2 * rt.c0)


class TestNormalize:
    def test_unit_speed_unchanged(self):
        p = line_problem("sin(x)", "0", 1.0)
        assert normalize_speed(p) is p

    def test_rescaled_data(self):
        p = line_problem("sin(x)", "0", 1.0, c=2.0)
        q = normalize_speed(p)
        assert q.c == 1.0 and q.xscale == 2.0
        assert q.f(0.3) == pytest.approx(math.sin(0.6))

    def test_constant_data_any_speed(self):
        sol = solve_line(line_problem("1.5", "1.5", 0.8, c=0.5))
        xs = np.linspace(-3, 3, 13)
        for t in (0.0, 0.3, 0.8):
            np.testing.assert_allclose(sol.eval(t, xs), 1.5, atol=1e-12)

    def test_speed_two_against_oracle(self):
        sol = solve_line(line_problem("sin(x)", "cos(x)", 0.7, c=2.0))
        assert sol.terminal_error() <= 1e-7
        grid = FDGrid.line(-4.0, 4.0, 0.7, nx=800, lam=1.0, c=2.0)
        fd = fd_forward(sol.problem.f, sol.velocity, 0.7, grid, stride=40)
        dev = compare(sol.eval, fd)
        assert dev["oracle_max_dev"] <= 1e-4

    def test_bad_speed(self):
        with pytest.raises(ValueError):
            line_problem("0", "0", 1.0, c=0.0)
        with pytest.raises(ValueError):
            line_problem("0", "0", 0.0)


class TestReduce:
    def test_constants(self):
        rt = reduce_target(line_problem("3", "3", 1.0))
        assert rt.ftilde(np.linspace(-2, 2, 5)) == pytest.approx(np.zeros(5))

    def test_linear(self):
        rt = reduce_target(line_problem("x", "x", 1.0))
        assert np.max(np.abs(rt.ftilde(np.linspace(-4, 4, 17)))) <= 1e-14

    def test_identity_target(self):
        rt = reduce_target(line_problem("0", "x", 1.0))
        assert (rt.a0, rt.b0, rt.c0) == (0.0, 1.0, 0.0)

    def test_cached_values_match(self):
        rt = reduce_target(line_problem("sin(2*x)", "exp(-x^2)", 0.6))
        assert rt.a0 == pytest.approx(rt.ftilde(0.0), abs=1e-10)
        assert rt.b0 == pytest.approx(rt.ftilde.deriv(0.0, 1), abs=1e-10)
        assert rt.c0 == pytest.approx(rt.ftilde.deriv(0.0, 2), abs=1e-10)

    def test_needs_unit_speed(self):
        with pytest.raises(ValueError):
            reduce_target(line_problem("0", "0", 1.0, c=3.0))


class TestSeeds:
    def test_polynomial_constant(self):
        sd = seed_polynomial(reduced_from_values(1, 0, 0), 1.0)
        np.testing.assert_allclose(sd.u(np.linspace(-1, 1, 7)), 1.0)
        assert quad(sd.u, -1, 1)[0] == pytest.approx(2.0, abs=1e-12)

    def test_polynomial_linear(self):
        sd = seed_polynomial(reduced_from_values(0, 1, 0), 1.0)
        assert sd.u(0.4) == pytest.approx(0.4)
        assert sd.u(1.0) - sd.u(-1.0) == pytest.approx(2.0)

    def test_polynomial_quadratic(self):
        sd = seed_polynomial(reduced_from_values(0, 0, 1), 1.0)
        assert sd.u(0.5) == pytest.approx(0.125 - 1 / 6)
        assert quad(sd.u, -1, 1)[0] == pytest.approx(0.0, abs=1e-12)
        assert sd.u.deriv(1.0, 1) - sd.u.deriv(-1.0, 1) == pytest.approx(2.0)

    def test_trig_zero(self):
        sd = seed_trig(reduced_from_values(0, 0, 0), 1.0)
        assert np.max(np.abs(sd.u(np.linspace(-1, 1, 21)))) == 0.0

    @pytest.mark.parametrize("make", [seed_polynomial, seed_trig])
    def test_unit_value(self, make):
        rt = reduced_from_values(1, 0, 0)
        assert max(abs(r) for r in seed_conditions(make(rt, 1.0).u, rt, 1.0)) <= 1e-8

    @pytest.mark.parametrize("make", [seed_polynomial, seed_trig])
    def test_nonpositive_T(self, make):
        with pytest.raises(ValueError):
            make(reduced_from_values(0, 0, 0), 0.0)

    @pytest.mark.parametrize("make", [seed_polynomial, seed_trig])
    def test_internal_residuals_agree(self, make):
        rt = reduced_from_values(0.3, -0.7, 0.9)
        sd = make(rt, 2.0)
        assert sd.admissible(rt)
        np.testing.assert_allclose(sd.residuals(rt), seed_conditions(sd.u, rt, 2.0), atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-1, 1), b=st.floats(-1, 1), c=st.floats(-1, 1), T=st.sampled_from([0.5, 1.0, 2.0]),
       kind=st.sampled_from(["polynomial", "trig"]))
def test_seed_conditions_property(a, b, c, T, kind):
    rt = reduced_from_values(a, b, c)
    sd = (seed_polynomial if kind == "polynomial" else seed_trig)(rt, T)
    assert max(abs(r) for r in seed_conditions(sd.u, rt, T)) <= 1e-8


class TestVelocity:
    def test_zero_target(self):
        rt = reduced_from_values(0, 0, 0)
        v = synth_velocity(seed_polynomial(rt, 1.0), rt, 1.0)
        assert np.max(np.abs(v(np.linspace(-9, 9, 101)))) == 0.0

    def test_identity_telescopes(self):
        p = line_problem("0", "x", 1.0)
        rt = reduce_target(p)
        v = synth_velocity(seed_polynomial(rt, 1.0), rt, 1.0)
        xs = np.linspace(-11, 11, 441)
        np.testing.assert_allclose(v(xs), xs, atol=1e-12)

    def test_quadratic_target_continuous(self):
        p = line_problem("0", "x^2", 1.0)
        rt = reduce_target(p)
        v = synth_velocity(seed_polynomial(rt, 1.0), rt, 1.0)
        for s in (1.0, 3.0, -1.0, -3.0):
            assert abs(v.one_sided(s, "+") - v.one_sided(s, "-")) <= 1e-9

    @pytest.mark.parametrize("kind", ["polynomial", "trig"])
    def test_seam_scan(self, kind, rng):
        for _ in range(5):
            f, g = random_smooth_pair(rng)
            sol = solve_line(line_problem(f, g, rng.uniform(0.3, 2.0)), seed=kind, check=False)
            jumps = seam_jumps(sol.v, 5)
            assert jumps[0] <= 1e-7 and jumps[1] <= 1e-7


class TestEvaluate:
    def test_free_constant(self):
        p = line_problem("2", "2", 1.0)
        assert dalembert_eval(const(0.0), p, 0.5, 3.0) == 2.0

    def test_initial_exact(self):
        p = line_problem("sin(x)", "0", 1.0)
        xs = np.linspace(-3, 3, 11)
        np.testing.assert_array_equal(dalembert_eval(const(5.0), p, np.zeros_like(xs), xs), np.sin(xs))

    def test_identity_closed_form(self):
        p = line_problem("0", "x", 1.0)
        xs = np.linspace(-4, 4, 9)
        np.testing.assert_allclose(dalembert_eval(parse_expr("x"), p, np.ones_like(xs), xs), xs, atol=1e-12)

    def test_time_outside_strip(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        with pytest.raises(DomainError):
            sol.eval(1.5, 0.0)
        with pytest.raises(DomainError):
            sol.eval(-0.1, 0.0)


class TestSolve:
    def test_zero(self):
        sol = solve_line(line_problem("0", "0", 1.0))
        assert np.max(np.abs(sol.v(np.linspace(-9, 9, 31)))) == 0.0
        assert sol.eval(0.5, 0.2) == 0.0

    def test_identity(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        xs = np.linspace(-10, 10, 201)
        assert np.max(np.abs(sol.velocity(xs) - xs)) <= 1e-10

    def test_sin_cos(self):
        sol = solve_line(line_problem("sin(x)", "cos(x)", 0.7))
        xs = np.linspace(-10, 10, 2001)
        assert sol.terminal_error(xs) <= 1e-7
        assert sol.initial_error(xs) <= 1e-9

    def test_sin_cos_oracle(self):
        sol = solve_line(line_problem("sin(x)", "cos(x)", 0.7))
        grid = FDGrid.line(-3.0, 3.0, 0.7, nx=1000)
        fd = fd_forward(sol.problem.f, sol.velocity, 0.7, grid, stride=25)
        assert compare(sol.eval, fd)["oracle_max_dev"] <= 1e-4

    def test_derivative_channels(self):
        sol = solve_line(line_problem("sin(x)", "cos(x)", 0.7))
        t, x, h = 0.3, 0.4, 1e-4
        yt = (sol.eval(t + h, x) - sol.eval(t - h, x)) / (2 * h)
        yx = (sol.eval(t, x + h) - sol.eval(t, x - h)) / (2 * h)
        assert sol.eval(t, x, dt=1) == pytest.approx(yt, abs=1e-7)
        assert sol.eval(t, x, dx=1) == pytest.approx(yx, abs=1e-7)

    def test_not_twice_differentiable(self):
        with pytest.raises(DomainError):
            solve_line(line_problem("ln(x)", "0", 1.0))

    def test_unknown_seed(self):
        with pytest.raises(ValueError):
            solve_line(line_problem("0", "x", 1.0), seed="spline")

    def test_kink_lines_shape(self):
        sol = solve_line(line_problem("sin(x)", "cos(x)", 0.5))
        lines = sol.kink_lines(-1.0, 1.0)
        assert lines and all(abs(b) == 1.0 for _, b in lines)


class TestNullVelocity:
    def test_zero_identical(self):
        sol = solve_line(line_problem("sin(x)", "x", 1.0))
        other = add_null_velocity(sol, const(0.0))
        xs = np.linspace(-3, 3, 31)
        np.testing.assert_array_equal(other.eval(1.0, xs), sol.eval(1.0, xs))

    @pytest.mark.parametrize("src", ["sin(pi*x/1.3)", "cos(pi*x/1.3)"])
    def test_endpoints_fixed(self, src):
        T = 1.3
        sol = solve_line(line_problem("exp(-x^2)", "sin(x)", T))
        other = add_null_velocity(sol, parse_expr(src))
        xs = np.linspace(-8, 8, 801)
        assert np.max(np.abs(other.eval(T, xs) - sol.eval(T, xs))) <= 1e-7
        assert np.max(np.abs(other.eval(0.0, xs) - sol.eval(0.0, xs))) <= 1e-7
        assert np.max(np.abs(other.velocity(xs) - sol.velocity(xs))) >= 0.9

    def test_rejects_nonzero_mean(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        with pytest.raises(InvalidNullVelocity):
            add_null_velocity(sol, parse_expr("1 + sin(pi*x)"))

    def test_rejects_wrong_period(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        with pytest.raises(InvalidNullVelocity):
            add_null_velocity(sol, parse_expr("sin(x)"))


class TestDiagnostics:
    def test_volterra_zero(self):
        sol = solve_line(line_problem("0", "0", 1.0))
        assert volterra_residual(sol, sol.reduced, np.linspace(-5, 5, 11)) == 0.0

    def test_volterra_identity(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        assert volterra_residual(sol, sol.reduced, np.linspace(-5, 5, 101)) <= 1e-10

    def test_volterra_random(self, rng):
        for _ in range(5):
            f, g = random_smooth_pair(rng)
            sol = solve_line(line_problem(f, g, rng.uniform(0.3, 2.0)), check=False)
            assert volterra_residual(sol, sol.reduced, np.linspace(-10, 10, 401)) <= 1e-7

    def test_quadrilateral_degenerate(self):
        sol = solve_line(line_problem("sin(x)", "x", 1.0))
        assert quadrilateral_check(sol, 0.4, 0.4, 0.1) == 0.0

    def test_quadrilateral_identity(self, rng):
        sol = solve_line(line_problem("0", "x", 1.0))
        for _ in range(20):
            t1, t2 = sorted(rng.uniform(0, 1, 2))
            assert quadrilateral_check(sol, t1, t2, rng.uniform(-5, 5)) <= 1e-9

    def test_quadrilateral_random(self, rng):
        f, g = random_smooth_pair(rng)
        T = 1.1
        sol = solve_line(line_problem(f, g, T), check=False)
        worst = 0.0
        for _ in range(100):
            t1, t2 = sorted(rng.uniform(0, T, 2))
            worst = max(worst, quadrilateral_check(sol, t1, t2, rng.uniform(-6, 6)))
        assert worst <= 1e-7

    def test_quadrilateral_outside(self):
        sol = solve_line(line_problem("0", "x", 1.0))
        with pytest.raises(DomainError):
            quadrilateral_check(sol, 0.5, 1.5, 0.0)


class TestVector:
    def test_single_component(self):
        p = line_problem("sin(x)", "x", 1.0)
        [a] = solve_vector_line([p])
        b = solve_line(p)
        xs = np.linspace(-3, 3, 21)
        np.testing.assert_array_equal(a.eval(0.6, xs), b.eval(0.6, xs))

    def test_two_components(self):
        sols = solve_vector_line([line_problem("0", "x", 1.0), line_problem("sin(x)", "0", 1.0)])
        assert all(s.terminal_error() <= 1e-7 for s in sols)

    def test_closed_to_open(self):
        T = 0.9
        comps = [line_problem("cos(x)", "x", T), line_problem("sin(x)", "0", T)]
        assert all(s.terminal_error() <= 1e-7 for s in solve_vector_line(comps))

    def test_mismatched(self):
        with pytest.raises(ValueError):
            solve_vector_line([line_problem("0", "x", 1.0), line_problem("0", "x", 2.0)])

    def test_empty(self):
        assert solve_vector_line([]) == []


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), T=st.floats(0.25, 2.5))
def test_terminal_exactness_property(seed, T):
    f, g = random_smooth_pair(np.random.default_rng(seed))
    sol = solve_line(line_problem(f, g, T))
    assert sol.diagnostics["terminal_error"] <= 1e-7
    assert sol.initial_error() <= 1e-9
