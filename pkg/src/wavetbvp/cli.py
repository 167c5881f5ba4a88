"""Command-line front end: ``wavetbvp solve|verify|frames|info``.

Exit codes: 0 success with every tolerance met, 1 operational failure
(I/O, parse errors, tolerance misses), 2 mathematical rejection of the
problem data. Rejections still write manifest.json with a ``reason``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bounded import DIRICHLET, NEUMANN, BoundedProblem, check_compat, solve_bounded
from .curvflow import FlowProblem, emit_frames, solve_flow
from .errors import (
    AdmissibilityError,
    CompatibilityError,
    HorizonError,
    ResonanceObstruction,
    ResonantRatio,
    TBVPError,
)
from .funcrep import ExprFn, Fn, SampledFn, const
from .funcrep import expr as E
from .io import write_csv, write_json
from .line1d import LineProblem, reduce_target, seam_jumps, solve_line, solve_vector_line
from .nd3 import Field3, problem3d, solve_point, wave_residual_3d
from .nonlinear import WaveMapProblem, check_nonneg_condition, check_ordering, solve_wavemap
from .periodic import PeriodicProblem, recognize_ratio, resonance_obstruction, solve_periodic
from .verify import Diagnostics, FDGrid, compare, fd_forward, residual_order

OUT_ENV = "WAVETBVP_OUT"
DEFAULT_OUT = "wavetbvp_out"
ORACLE_NX = 1000
ORACLE_SLICES = 40


class ProblemFileError(TBVPError):
    """Malformed or incomplete problem file."""


# ---------------------------------------------------------------- parsing

def load_problem(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: {exc.msg} at line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise ProblemFileError(f"{path}: top level must be a JSON object")
    return doc


def _rename(node: E.Node, old: str) -> E.Node:
    """Rename variable ``old`` to x."""
    if isinstance(node, E.Var):
        return E.Var("x") if node.name == old else node
    if isinstance(node, E.Neg):
        return E.Neg(_rename(node.a, old))
    if isinstance(node, E.Bin):
        return E.Bin(node.op, _rename(node.a, old), _rename(node.b, old))
    if isinstance(node, E.Call):
        return E.Call(node.name, _rename(node.arg, old))
    return node


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return str(obj)


class Job:
    """One problem kind: parsing, admissibility, solve, tables, oracle."""

    kind = ""
    required: tuple = ()
    var = "x"
    terminal_tol = 1e-7

    def __init__(self, doc: dict, base: Path):
        self.doc, self.base = doc, base
        missing = [k for k in self.required if k not in doc]
        if missing:
            raise ProblemFileError(f"kind {self.kind!r} needs field(s): {', '.join(missing)}")
        out = doc.get("output", {}) or {}
        self.nx = int(out.get("nx", 201))
        self.nt = int(out.get("nt", 11))
        if self.nx < 2 or self.nt < 2:
            raise ProblemFileError("output.nx and output.nt must be at least 2")
        tol = doc.get("tol", {}) or {}
        self.tol = {
            "terminal": float(tol.get("terminal", self.terminal_tol)),
            "initial": float(tol.get("initial", self.terminal_tol)),
            "oracle": float(tol.get("oracle", 1e-4)),
            "solver": float(tol.get("solver", 1e-8)),
            "order": float(tol.get("order", 1.9)),
        }
        self.sol = None
        self.build()

    # -- field helpers
    def scalar(self, name: str, default: float | None = None, positive: bool = True) -> float:
        if name not in self.doc:
            if default is None:
                raise ProblemFileError(f"missing scalar {name!r}")
            return float(default)
        val = self.doc[name]
        if isinstance(val, str):
            try:
                val = E.evaluate(E.parse(val, ()), {})
            except TBVPError as exc:
                raise ProblemFileError(f"field {name!r}: {exc}") from exc
        if not isinstance(val, (int, float, np.floating)) or isinstance(val, bool):
            raise ProblemFileError(f"field {name!r} must be a number")
        val = float(val)
        if positive and not val > 0:
            raise ProblemFileError(f"field {name!r} must be positive, got {val!r}")
        return val

    def fn(self, name: str, item: Any = None, period: float | None = None, var: str | None = None) -> Fn:
        item = self.doc.get(name) if item is None else item
        var = var or self.var
        if item is None:
            raise ProblemFileError(f"missing function {name!r}")
        if isinstance(item, bool):
            raise ProblemFileError(f"field {name!r} must be an expression, number or CSV reference")
        if isinstance(item, (int, float)):
            fn = const(float(item))
            fn.period = period
            return fn
        if isinstance(item, str):
            try:
                node = E.parse(item, (var,) if var == "x" else (var, "x"))
            except TBVPError as exc:
                raise ProblemFileError(f"field {name!r}: {exc}") from exc
            return ExprFn(_rename(node, var), period=period, src=item)
        if isinstance(item, dict) and "csv" in item:
            path = Path(item["csv"])
            if not path.is_absolute():
                path = self.base / path
            try:
                return SampledFn.from_csv(path, period=item.get("period", period))
            except (OSError, ValueError, IndexError) as exc:
                raise ProblemFileError(f"field {name!r}: {exc}") from exc
        raise ProblemFileError(f"field {name!r} must be an expression, number or CSV reference")

    def span(self, default: tuple[float, float]) -> tuple[float, float]:
        rng = (self.doc.get("output", {}) or {}).get("x", default)
        try:
            a, b = float(rng[0]), float(rng[1])
        except (TypeError, ValueError, IndexError) as exc:
            raise ProblemFileError("output.x must be a pair of numbers") from exc
        if not b > a:
            raise ProblemFileError("output.x must be increasing")
        return a, b

    def grid(self) -> np.ndarray:
        a, b = self.xr
        return np.linspace(a, b, self.nx)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.nt)

    def hs(self, width: float) -> tuple[float, float, float]:
        h = min(0.02, width / 40.0)
        return (h, h / 2, h / 4)

    # -- to override
    def build(self) -> None:
        raise NotImplementedError

    def admissibility(self) -> dict:
        return {}

    def solve(self) -> Diagnostics:
        raise NotImplementedError

    def tables(self) -> dict[str, tuple[list[str], list]]:
        raise NotImplementedError

    def oracle(self) -> Diagnostics:
        raise NotImplementedError

    def summary(self) -> dict:
        return {"kind": self.kind, "T": self.T}

    def field_table(self, evaluator, names: Sequence[str] = ("y",)):
        xs = self.grid()
        tt, xx = np.meshgrid(self.times(), xs, indexing="ij")
        vals = evaluator(tt.ravel(), xx.ravel())
        cols = [tt.ravel(), xx.ravel()] + [np.asarray(v).ravel() for v in vals]
        return ["t", self.axis] + list(names), cols

    axis = "x"


def _stride(nt: int) -> int:
    return max(1, nt // ORACLE_SLICES)


def _residual(d: Diagnostics, evaluator, domain, hs, tol, **kw) -> None:
    r = residual_order(evaluator, domain, hs, n=21, min_order=tol, **kw)
    d.add("residual_exact", r.exact)
    d.add("residual_max", max(r.residuals))
    d.add("residual_order", r.order if r.order is not None else "exact")
    d.add("residual_passed", 1.0 if r.passed else 0.0, 1.0, lower=True)


class LineJob(Job):
    kind = "line"
    required = ("f", "g", "T")

    def build(self):
        self.T = self.scalar("T")
        self.c = self.scalar("c", 1.0)
        self.f, self.g = self.fn("f"), self.fn("g")
        self.seed = self.doc.get("seed", "polynomial")
        if self.seed not in ("polynomial", "trig"):
            raise ProblemFileError("seed must be 'polynomial' or 'trig'")
        w = self.c * self.T + 2.0
        self.xr = self.span((-w, w))

    def problem(self) -> LineProblem:
        return LineProblem(self.f, self.g, self.T, self.c)

    def solve(self):
        self.sol = solve_line(self.problem(), self.seed)
        d = Diagnostics()
        d.add("terminal_error", self.sol.diagnostics["terminal_error"], self.tol["terminal"])
        d.add("initial_error", self.sol.initial_error(), self.tol["initial"])
        d.add("seed_residuals", self.sol.diagnostics["seed_residuals"])
        d.add("seam_jumps", {str(k): v for k, v in seam_jumps(self.sol.v).items()})
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "c": self.c, "seed": self.seed}

    def tables(self):
        xs = self.grid()
        return {
            "v.csv": (["x", "v"], [xs, self.sol.velocity(xs)]),
            "y.csv": self.field_table(lambda t, x: [self.sol.eval(t, x)]),
        }

    def oracle(self):
        a, b = self.xr
        grid = FDGrid.line(a, b, self.T, ORACLE_NX, 1.0, self.c)
        fd = fd_forward(self.f, self.sol.velocity, self.T, grid, stride=_stride(grid.nt))
        d = compare(self.sol.eval, fd, tol=self.tol["oracle"])
        _residual(d, self.sol.eval, (0.0, self.T, a, b), self.hs(min(self.T, b - a)), self.tol["order"],
                  c=self.c, avoid=self.sol.kink_lines(a, b))
        return d


class StringJob(LineJob):
    """Several line problems sharing T (a string in orthogonal gauge)."""

    kind = "string"
    required = ("components", "T")

    def build(self):
        self.T = self.scalar("T")
        self.c = self.scalar("c", 1.0)
        comps = self.doc["components"]
        if not isinstance(comps, list) or not comps:
            raise ProblemFileError("components must be a non-empty list of {f, g} objects")
        self.fg = []
        for i, comp in enumerate(comps):
            if not isinstance(comp, dict) or "f" not in comp or "g" not in comp:
                raise ProblemFileError(f"component {i} needs f and g")
            self.fg.append((self.fn(f"components[{i}].f", comp["f"]), self.fn(f"components[{i}].g", comp["g"])))
        self.seed = self.doc.get("seed", "polynomial")
        w = self.c * self.T + 2.0
        self.xr = self.span((-w, w))

    def solve(self):
        probs = [LineProblem(f, g, self.T, self.c) for f, g in self.fg]
        self.sols = solve_vector_line(probs, seed=self.seed)
        d = Diagnostics()
        d.add("terminal_error", max(s.diagnostics["terminal_error"] for s in self.sols), self.tol["terminal"])
        d.add("initial_error", max(s.initial_error() for s in self.sols), self.tol["initial"])
        d.add("components", len(self.sols))
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "c": self.c, "components": len(self.fg)}

    def tables(self):
        xs = self.grid()
        n = len(self.sols)
        return {
            "v.csv": (["x"] + [f"v{i + 1}" for i in range(n)], [xs] + [s.velocity(xs) for s in self.sols]),
            "y.csv": self.field_table(lambda t, x: [s.eval(t, x) for s in self.sols],
                                      [f"y{i + 1}" for i in range(n)]),
        }

    def oracle(self):
        a, b = self.xr
        d = Diagnostics()
        for i, ((f, _), s) in enumerate(zip(self.fg, self.sols)):
            grid = FDGrid.line(a, b, self.T, ORACLE_NX, 1.0, self.c)
            fd = fd_forward(f, s.velocity, self.T, grid, stride=_stride(grid.nt))
            sub = compare(s.eval, fd, tol=self.tol["oracle"])
            _residual(sub, s.eval, (0.0, self.T, a, b), self.hs(min(self.T, b - a)), self.tol["order"],
                      c=self.c, avoid=s.kink_lines(a, b))
            d.merge(sub, f"y{i + 1}.")
        return d


class PeriodicJob(Job):
    kind = "periodic"
    required = ("f", "g", "T", "L")

    def build(self):
        self.T = self.scalar("T")
        self.L = self.period()
        self.f, self.g = self.fn("f", period=self.L), self.fn("g", period=self.L)
        self.xr = (0.0, self.L)

    def period(self) -> float:
        return self.scalar("L")

    def grid(self):
        return np.arange(self.nx) * (self.L / self.nx)

    def problem(self) -> PeriodicProblem:
        return PeriodicProblem(self.f, self.g, self.T, self.L)

    def admissibility(self):
        ratio = recognize_ratio(self.T, self.L)
        rep = {"p": ratio.p, "q": ratio.q}
        if ratio.q == 1:
            obs = resonance_obstruction(self.problem())
            rep["obstruction_residual"] = obs.residual
            bound = max(self.tol["solver"], 1e-7)
            if obs.residual > bound:
                raise ResonanceObstruction(
                    f"2T/L = {ratio.p}: terminal profile is not reachable (residual {obs.residual:.3e})",
                    residual=obs.residual, ratio=ratio.p)
            raise ResonantRatio(
                f"2T/L = {ratio.p} is an integer: every mode is resonant "
                f"(obstruction residual {obs.residual:.3e})", residual=obs.residual, ratio=ratio.p)
        rep["Cs"] = ratio.Cs
        return rep

    def solve(self):
        self.sol, self.v = solve_periodic(self.problem(), self.tol["solver"])
        dg = self.sol.diagnostics
        d = Diagnostics()
        d.add("terminal_error", dg["terminal_error"], self.tol["terminal"])
        d.add("initial_error", dg["initial_error"], self.tol["initial"])
        d.add("K", self.sol.K)
        d.add("tail_bound", dg.get("tail_bound"))
        d.add("coefficients", "coefficients.json")
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "L": self.L}

    def tables(self):
        xs = self.grid()
        return {
            "v.csv": (["x", "v"], [xs, self.v(xs)]),
            "y.csv": self.field_table(lambda t, x: [self.sol.eval(t, x)]),
        }

    def extra(self, out: Path) -> None:
        write_json(out / "coefficients.json", _jsonable(self.sol.manifest()))

    def oracle(self):
        grid = FDGrid.periodic(0.0, self.L, self.T, ORACLE_NX, 0.5)
        fd = fd_forward(self.f, self.v, self.T, grid, stride=_stride(grid.nt), track_energy=True)
        d = compare(lambda t, x: self.sol.eval(t, x), fd, interior=0, tol=self.tol["oracle"])
        d.add("energy_drift", fd.energy_drift, 1e-10)
        _residual(d, lambda t, x: self.sol.eval(t, x), (0.0, self.T, 0.0, self.L),
                  self.hs(min(self.T, self.L)), self.tol["order"])
        return d


class CircleJob(PeriodicJob):
    kind = "circle"
    required = ("f", "g", "T")

    def period(self):
        return 2.0 * math.pi


class BoundedJob(Job):
    kind = DIRICHLET
    required = ("f", "g", "T", "L")
    bc = DIRICHLET
    names = ("h", "l")

    def build(self):
        self.T, self.L = self.scalar("T"), self.scalar("L")
        self.f, self.g = self.fn("f"), self.fn("g")
        self.bdata = {k: self.fn(k, var="t") for k in self.names if k in self.doc}
        other = {"h", "l", "H", "K"} - set(self.names)
        extra = sorted(other & set(self.doc))
        if extra:
            raise ProblemFileError(f"kind {self.kind!r} does not take boundary field(s) {', '.join(extra)}")
        self.xr = (0.0, self.L)

    def problem(self) -> BoundedProblem:
        return BoundedProblem(self.f, self.g, self.T, self.L, self.bc, **self.bdata)

    def admissibility(self):
        p = self.problem()
        rep = check_compat(p)
        out = {"compatibility": rep.residuals, "compatibility_worst": rep.worst}
        if not rep.passed:
            raise CompatibilityError(
                f"compatibility conditions fail (worst residual {rep.worst:.3e})", residuals=rep.residuals)
        if self.bc == NEUMANN and not p.homogeneous and not self.T < self.L:
            raise HorizonError(f"Neumann boundary data need T < L (T={self.T:g}, L={self.L:g})",
                               T=self.T, L=self.L)
        r = recognize_ratio(self.T, 2.0 * self.L)
        out.update(p=r.p, q=r.q)
        return out

    def solve(self):
        self.sol = solve_bounded(self.problem(), self.tol["solver"])
        m = self.sol.measure()
        d = Diagnostics()
        d.add("terminal_error", m["terminal_error"], self.tol["terminal"])
        d.add("initial_error", m["initial_error"], self.tol["initial"])
        btol = float((self.doc.get("tol") or {}).get("boundary", 1e-7 if self.bc == DIRICHLET else 1e-5))
        d.add("boundary_error", m["boundary_error"], btol)
        for k in ("junction_max", "functional_residual", "axis_exchange"):
            if k in self.sol.diagnostics:
                d.add(k, self.sol.diagnostics[k])
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "L": self.L, "boundary_data": sorted(self.bdata)}

    def tables(self):
        xs = self.grid()
        return {
            "v.csv": (["x", "v"], [xs, self.sol.velocity()(xs)]),
            "y.csv": self.field_table(lambda t, x: [self.sol.eval(t, x)]),
        }

    def oracle(self):
        grid = FDGrid.interval(self.L, self.T, ORACLE_NX, 0.5, "odd" if self.bc == DIRICHLET else "even")
        left, right = (self.bdata.get(k) for k in self.names)
        fd = fd_forward(self.f, self.sol.velocity(), self.T, grid, left, right, stride=_stride(grid.nt))
        d = compare(self.sol.eval, fd, interior=0, tol=self.tol["oracle"])
        _residual(d, self.sol.eval, (0.0, self.T, 0.0, self.L), self.hs(min(self.T, self.L)), self.tol["order"],
                  avoid=self.sol.kink_lines())
        return d


class NeumannJob(BoundedJob):
    kind = NEUMANN
    bc = NEUMANN
    names = ("H", "K")


class WaveMapJob(Job):
    kind = "wavemap"
    required = ("f", "g", "T")

    def build(self):
        self.T = self.scalar("T")
        self.f, self.g = self.fn("f"), self.fn("g")
        w = self.T + 2.0
        self.xr = self.span((-w, w))

    def problem(self):
        return WaveMapProblem(self.f, self.g, self.T)

    def admissibility(self):
        p = self.problem()
        rep = {"ordering": check_ordering(p)}
        rt = reduce_target(LineProblem(p.fhat, p.ghat, p.T))
        cond = check_nonneg_condition(rt.ftilde, p.T)
        rep["nonneg_condition"] = cond.as_dict()
        return rep

    def solve(self):
        self.sol = solve_wavemap(self.problem())
        r = self.sol.report
        d = Diagnostics()
        d.add("terminal_error", r["terminal_error"], self.tol["terminal"])
        d.add("initial_error", r["initial_error"], self.tol["initial"])
        d.add("z_min", r["z_min"], 0.0, lower=True)
        d.add("v_min", r["v_min"])
        d.add("seed_kind", r["seed_kind"])
        return d

    def tables(self):
        xs = self.grid()
        vz = self.sol.v(xs)
        return {
            "v.csv": (["x", "v_z", "v_y"], [xs, vz, self.sol.eval(np.zeros_like(xs), xs, 1, 0)]),
            "y.csv": self.field_table(lambda t, x: [self.sol.eval(t, x)]),
        }

    def oracle(self):
        a, b = self.xr
        p = self.problem()
        grid = FDGrid.line(a, b, self.T, ORACLE_NX, 1.0)
        fd = fd_forward(p.fhat, self.sol.v, self.T, grid, stride=_stride(grid.nt))
        d = compare(self.sol.z, fd, tol=self.tol["oracle"])
        _residual(d, self.sol.eval, (0.0, self.T, a, b), self.hs(min(self.T, b - a)), self.tol["order"],
                  rhs=lambda yt, yx: yt * yt - yx * yx, avoid=self.sol.linear.kink_lines(a, b))
        return d


class FlowJob(Job):
    kind = "curvflow"
    required = ("f", "L", "T")
    axis = "s"

    def build(self):
        self.T, self.L = self.scalar("T"), self.scalar("L")
        self.kstar = self.scalar("kstar", 1.0)
        self.f = self.fn("f", period=self.L)
        self.xr = (0.0, self.L)
        self.frames = int((self.doc.get("output", {}) or {}).get("frames", 9))

    def grid(self):
        return np.arange(self.nx) * (self.L / self.nx)

    def problem(self):
        return FlowProblem(self.f, self.L, self.T, self.kstar)

    def admissibility(self):
        self.problem()
        r = recognize_ratio(self.T, self.L)
        if r.q == 1:
            raise ResonantRatio(f"2T/L = {r.p} is an integer: every mode is resonant", ratio=r.p)
        return {"p": r.p, "q": r.q, "Cs": r.Cs}

    def solve(self):
        self.sol = solve_flow(self.problem(), self.tol["solver"])
        dg = self.sol.diagnostics
        s = np.linspace(0.0, self.L, 257)
        tt, ss = np.meshgrid(np.linspace(0.0, self.T, 65), s, indexing="ij")
        kmin = float(np.min(self.sol.kbar(tt, ss)))
        d = Diagnostics()
        d.add("terminal_constancy", dg["terminal_constancy"], self.tol["terminal"])
        d.add("initial_error", dg["initial_error"], self.tol["initial"])
        d.add("kbar_min", kmin, -1e-9, lower=True)
        d.add("M", self.sol.M)
        d.add("k0", self.sol.k0)
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "L": self.L, "kstar": self.kstar}

    def tables(self):
        xs = self.grid()
        return {
            "v.csv": (["s", "v", "vbar"], [xs, self.sol.v(xs), self.sol.vbar(xs)]),
            "y.csv": self.field_table(lambda t, x: [self.sol.kbar(t, x)], ("k",)),
        }

    def oracle(self):
        grid = FDGrid.periodic(0.0, self.L, self.T, ORACLE_NX, 0.5)
        fd = fd_forward(self.f, self.sol.vbar, self.T, grid, stride=_stride(grid.nt), track_energy=True)
        d = compare(self.sol.kbar, fd, interior=0, tol=self.tol["oracle"])
        _residual(d, self.sol.kbar, (0.0, self.T, 0.0, self.L), self.hs(min(self.T, self.L)), self.tol["order"])
        return d


class Wave3DJob(Job):
    kind = "wave3d"
    required = ("f", "g", "T", "points")
    terminal_tol = 1e-4

    def build(self):
        self.T = self.scalar("T")
        try:
            self.F, self.G = Field3(self.doc["f"]), Field3(self.doc["g"])
        except TBVPError as exc:
            raise ProblemFileError(f"3-D data: {exc}") from exc
        pts = self.doc["points"]
        if not isinstance(pts, list) or not pts or any(
                not isinstance(p, list) or len(p) != 3 for p in pts):
            raise ProblemFileError("points must be a non-empty list of 3-vectors")
        self.points = [tuple(float(c) for c in p) for p in pts]
        self.rprobe = self.scalar("rprobe", 1e-3)

    def solve(self):
        p = self.problem3d = problem3d(self.F, self.G, self.T, self.points)
        self.sols = [solve_point(p, x, self.rprobe) for x in self.points]
        X = np.array(self.points)
        yT = np.array([s.eval(self.T) for s in self.sols])
        y0 = np.array([s.eval(0.0) for s in self.sols])
        d = Diagnostics()
        d.add("terminal_error", float(np.max(np.abs(yT - self.G(X)))), self.tol["terminal"])
        d.add("initial_error", float(np.max(np.abs(y0 - self.F(X)))), self.tol["initial"])
        return d

    def summary(self):
        return {"kind": self.kind, "T": self.T, "points": len(self.points), "rprobe": self.rprobe}

    def tables(self):
        ts = self.times()
        rows = [(t, *x, s.eval(t)) for x, s in zip(self.points, self.sols) for t in ts]
        r = np.linspace(0.0, self.T, self.nx)
        vrows = [(i, rr, vv) for i, s in enumerate(self.sols) for rr, vv in zip(r, s.radial.velocity(r))]
        return {
            "v.csv": (["point", "r", "v"], [list(c) for c in zip(*vrows)]),
            "y.csv": (["t", "x1", "x2", "x3", "y"], [list(c) for c in zip(*rows)]),
        }

    def oracle(self):
        # no 3-D grid oracle: compare the Richardson limit with the plain
        # difference quotient at half the probe radius, and the radial PDE
        d = Diagnostics()
        spread = 0.0
        for s in self.sols:
            ts = self.times()
            rp = 0.5 * s.rprobe
            raw = np.asarray(s.radial.eval(ts, np.full_like(ts, rp))) / rp
            spread = max(spread, float(np.max(np.abs(raw - s.eval(ts)))))
        d.add("richardson_spread", spread, self.tol["oracle"])
        s = self.sols[0]
        _residual(d, s.radial.eval, (0.0, self.T, -1.0, 1.0), self.hs(min(self.T, 2.0)), self.tol["order"])
        # reported without a tolerance: the pointwise construction need not solve the 3-D equation
        h = min(0.02, self.T / 4.0)
        d.add("pde_residual_3d", wave_residual_3d(self.problem3d, self.points[0], 0.5 * self.T, h, self.rprobe))
        return d


JOBS = {cls.kind: cls for cls in (LineJob, StringJob, PeriodicJob, CircleJob, BoundedJob, NeumannJob,
                                  WaveMapJob, FlowJob, Wave3DJob)}


def make_job(doc: dict, base: Path) -> Job:
    kind = doc.get("kind")
    if kind not in JOBS:
        raise ProblemFileError(f"kind must be one of {', '.join(sorted(JOBS))}, got {kind!r}")
    return JOBS[kind](doc, base)


# ------------------------------------------------------------- commands

def _manifest(doc: dict, problem_file: Path, status: str, **parts) -> dict:
    m = {
        "version": __version__,
        "status": status,
        "problem_file": str(problem_file),
        "problem": doc,
    }
    m.update(_jsonable(parts))
    return m


def _rejection(exc: AdmissibilityError) -> dict:
    return {"reason": exc.reason, "message": str(exc), "details": exc.details}


def _out_dir(arg: str | None) -> Path:
    return Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)


def cmd_solve(args) -> int:
    problem_file = Path(args.problem).resolve()
    out = _out_dir(args.out)
    doc = load_problem(problem_file)
    job = make_job(doc, problem_file.parent)
    try:
        adm = job.admissibility()
        d = job.solve()
    except AdmissibilityError as exc:
        rej = _rejection(exc)
        write_json(out / "manifest.json", _manifest(doc, problem_file, "rejected", **rej))
        print(f"rejected ({exc.reason}): {exc}", file=sys.stderr)
        return 2
    files = {}
    for name, (header, cols) in job.tables().items():
        write_csv(out / name, header, cols)
        files[name[:-4]] = name
    if hasattr(job, "extra"):
        job.extra(out)
    status = "ok" if d.passed else "tolerance-not-met"
    manifest = _manifest(
        doc, problem_file, status,
        summary=job.summary(),
        admissibility=adm,
        tolerances=job.tol,
        diagnostics=d.as_dict(),
        outputs={"velocity": files.get("v"), "field": files.get("y")},
    )
    if not d.passed:
        manifest["reason"] = "tolerance-not-met"
    write_json(out / "manifest.json", manifest)
    print(f"{job.kind}: {status}; wrote {out}")
    return 0 if d.passed else 1


def cmd_verify(args) -> int:
    out = Path(args.dir)
    mpath = out / "manifest.json"
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ProblemFileError(f"cannot read {mpath}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{mpath}: {exc.msg} at line {exc.lineno}, column {exc.colno}") from exc
    if manifest.get("status") == "rejected":
        print(f"solve was rejected ({manifest.get('reason')}); nothing to verify", file=sys.stderr)
        return 2
    doc = manifest["problem"]
    base = Path(manifest.get("problem_file", mpath)).parent
    job = make_job(doc, base)
    try:
        job.admissibility()
        d = job.solve()
    except AdmissibilityError as exc:
        print(f"rejected ({exc.reason}): {exc}", file=sys.stderr)
        return 2
    d.merge(job.oracle())
    write_json(out / "verify.json", {"kind": job.kind, "diagnostics": _jsonable(d.as_dict())})
    for name, ok in d.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name} = {d.values[name]}")
    for name, val in d.values.items():
        if name not in d.tolerances and isinstance(val, (int, float)) and not isinstance(val, bool):
            print(f"INFO  {name} = {val}")
    return 0 if d.passed else 1


def cmd_frames(args) -> int:
    problem_file = Path(args.problem).resolve()
    out = _out_dir(args.out)
    doc = load_problem(problem_file)
    job = make_job(doc, problem_file.parent)
    if not isinstance(job, FlowJob):
        raise ProblemFileError("frames are only produced for kind 'curvflow'")
    try:
        job.admissibility()
        job.solve()
    except AdmissibilityError as exc:
        write_json(out / "manifest.json", _manifest(doc, problem_file, "rejected", **_rejection(exc)))
        print(f"rejected ({exc.reason}): {exc}", file=sys.stderr)
        return 2
    n = args.frames if args.frames is not None else job.frames
    info = emit_frames(job.sol, n, out, args.points)
    print(f"wrote {len(info['frames'])} frames to {out}")
    return 0


def cmd_info(args) -> int:
    problem_file = Path(args.problem).resolve()
    doc = load_problem(problem_file)
    job = make_job(doc, problem_file.parent)
    report = {"summary": job.summary()}
    code = 0
    try:
        report["admissibility"] = job.admissibility()
        report["admissible"] = True
    except AdmissibilityError as exc:
        report["admissible"] = False
        report.update(_rejection(exc))
        code = 2
    sys.stdout.write(json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavetbvp", description="Two-point boundary value problems for the wave equation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="solve a problem file and write manifest.json, v.csv, y.csv")
    s.add_argument("--problem", required=True)
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    s.set_defaults(func=cmd_solve)
    v = sub.add_parser("verify", help="re-run diagnostics and the finite-difference oracle on a solve directory")
    v.add_argument("dir")
    v.set_defaults(func=cmd_verify)
    f = sub.add_parser("frames", help="write SVG frames of the evolving curve (curvflow only)")
    f.add_argument("--problem", required=True)
    f.add_argument("--out")
    f.add_argument("--frames", type=int)
    f.add_argument("--points", type=int, default=512)
    f.set_defaults(func=cmd_frames)
    i = sub.add_parser("info", help="print the problem summary and admissibility checks")
    i.add_argument("--problem", required=True)
    i.set_defaults(func=cmd_info)
    return ap


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdmissibilityError as exc:
        print(f"rejected ({exc.reason}): {exc}", file=sys.stderr)
        return 2
    except (TBVPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
