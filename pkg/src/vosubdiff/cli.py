"""Scenario runner.

Usage::

    vosubdiff run scenario.json [--out DIR] [--solver spectral|oracle|hybrid|both] [--refine K]
    vosubdiff classify scenario.json [--out DIR]

Exit codes: 0 all enabled checks pass, 1 a check failed, 2 invalid scenario or
usage, 3 the requested solver does not apply to the scenario.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import (
    TruncationWarning,
    density_check,
    msd_compute,
    msd_largetime_exponent,
    msd_smalltime_check,
)
from .fields import SpatialGrid, SpectralField, SymbolSpec
from .modes import LHParams, MemoryReport, OrderFunction, classify_memory
from .oracle import field_oracle
from .spectral import (
    SolverApplicabilityError,
    SolverConfig,
    fundamental_solution,
    reduce_early_window,
    reduce_late_window,
)
from .voops import QuadratureSpec

SOLVERS = ("spectral", "oracle", "hybrid", "both")


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the offending field."""


@dataclass(frozen=True)
class Checks:
    tail_tol: float = 1.0e-3
    negativity_tol: float = 1.0e-6
    symbol_tol: float = 5.0e-3
    field_tol: float = 1.0e-3
    msd_agreement: float = 0.01
    smalltime_tol: float = 0.02
    largetime: bool = False
    largetime_tol: float = 0.05


@dataclass(frozen=True)
class Scenario:
    name: str
    lh: LHParams
    of: OrderFunction
    symbol: SymbolSpec
    grid: SpatialGrid
    times: tuple[float, ...]
    solver: str
    config: SolverConfig
    oracle_step: QuadratureSpec
    checks: Checks
    output: str | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _get(d: dict, key: str, path: str, kind=None, default: Any = ...):
    if key not in d:
        if default is ...:
            raise ScenarioError(f"{path}.{key}: missing required field")
        return default
    v = d[key]
    if kind is float:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioError(f"{path}.{key}: expected a finite number, got {v!r}")
        return float(v)
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ScenarioError(f"{path}.{key}: expected an integer, got {v!r}")
        return v
    if kind is not None and not isinstance(v, kind):
        raise ScenarioError(f"{path}.{key}: expected {kind.__name__}, got {v!r}")
    return v


def _wrap(path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ScenarioError:
        raise
    except (ValueError, TypeError, ArithmeticError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _times(spec, path: str) -> tuple[float, ...]:
    if isinstance(spec, list):
        if not spec:
            raise ScenarioError(f"{path}: empty time list")
        ts = []
        for i, v in enumerate(spec):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not (v > 0 and math.isfinite(v)):
                raise ScenarioError(f"{path}[{i}]: expected a positive finite time, got {v!r}")
            ts.append(float(v))
    elif isinstance(spec, dict):
        a = _get(spec, "t_start", path, float)
        b = _get(spec, "t_end", path, float)
        n = _get(spec, "count", path, int)
        spacing = _get(spec, "spacing", path, str, "linear")
        if not 0 < a < b:
            raise ScenarioError(f"{path}: need 0 < t_start < t_end, got {a}, {b}")
        if n < 2:
            raise ScenarioError(f"{path}.count: need at least 2 times, got {n}")
        if spacing == "linear":
            ts = np.linspace(a, b, n).tolist()
        elif spacing == "log":
            ts = np.geomspace(a, b, n).tolist()
        else:
            raise ScenarioError(f"{path}.spacing: expected 'linear' or 'log', got {spacing!r}")
    else:
        raise ScenarioError(f"{path}: expected a list or an object")
    if any(x >= y for x, y in zip(ts, ts[1:])):
        raise ScenarioError(f"{path}: times must be strictly increasing")
    return tuple(ts)


def parse_scenario(data: dict) -> Scenario:
    """Validate a decoded scenario document."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object")
    name = _get(data, "name", "scenario", str)
    lh_d = _get(data, "lh", "scenario", dict, {})
    lh = _wrap(
        "scenario.lh", LHParams, _get(lh_d, "mu", "scenario.lh", float, 1.0), _get(lh_d, "nu", "scenario.lh", float, 0.0)
    )
    od = _get(data, "order", "scenario", dict)
    bps = _get(od, "breakpoints", "scenario.order", list, [])
    vals = _get(od, "values", "scenario.order", list)
    of = _wrap("scenario.order", OrderFunction, bps, vals)
    _wrap("scenario.lh", classify_memory, of, lh)

    sd = _get(data, "symbol", "scenario", dict)
    family = _get(sd, "family", "scenario.symbol", str)
    if family == "quadratic_form":
        mat = _get(sd, "matrix", "scenario.symbol", list)
        sym = _wrap("scenario.symbol", SymbolSpec, family, matrix=mat, dim=len(mat))
    elif family == "riesz":
        sym = _wrap(
            "scenario.symbol", SymbolSpec, family,
            alpha=_get(sd, "alpha", "scenario.symbol", float), dim=_get(sd, "dimension", "scenario.symbol", int, 1),
        )
    else:
        raise ScenarioError(f"scenario.symbol.family: expected 'quadratic_form' or 'riesz', got {family!r}")

    gd = _get(data, "grid", "scenario", dict)
    grid = _wrap(
        "scenario.grid", SpatialGrid,
        _get(gd, "dimension", "scenario.grid", int, sym.dim),
        _get(gd, "points", "scenario.grid", int),
        _get(gd, "x_halfwidth", "scenario.grid", float),
    )
    if grid.dim != sym.dim:
        raise ScenarioError(f"scenario.grid.dimension: {grid.dim} does not match the symbol dimension {sym.dim}")
    times = _times(_get(data, "times", "scenario"), "scenario.times")

    solver = _get(data, "solver", "scenario", str, "spectral")
    if solver not in SOLVERS:
        raise ScenarioError(f"scenario.solver: expected one of {SOLVERS}, got {solver!r}")

    qd = _get(data, "quadrature", "scenario", dict, {})
    grading = _get(qd, "grading_exponent", "scenario.quadrature", float, 2.0)
    hybrid_step = _wrap(
        "scenario.quadrature", QuadratureSpec, _get(qd, "hybrid_step", "scenario.quadrature", float, 2.0e-3), grading
    )
    config = _wrap(
        "scenario.quadrature", SolverConfig,
        _get(qd, "nodes_per_window", "scenario.quadrature", int, 512),
        _get(qd, "first_cell_nodes", "scenario.quadrature", int, 16),
        hybrid_step,
    )
    oracle_step = _wrap(
        "scenario.quadrature", QuadratureSpec, _get(qd, "oracle_step", "scenario.quadrature", float, 5.0e-3), grading
    )

    cd = _get(data, "checks", "scenario", dict, {})
    known = set(Checks.__dataclass_fields__)
    for key in cd:
        if key not in known:
            raise ScenarioError(f"scenario.checks.{key}: unknown check option")
    ck = {k: (_get(cd, k, "scenario.checks", bool) if k == "largetime" else _get(cd, k, "scenario.checks", float)) for k in cd}
    checks = Checks(**ck)
    out = _get(data, "output", "scenario", str, None)
    return Scenario(name, lh, of, sym, grid, times, solver, config, oracle_step, checks, out)


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_scenario(data)


# {{{ output


def fmt(x) -> str:
    """Shortest round-trip representation of a float."""
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")


def write_memory_report(path: Path, report: MemoryReport) -> None:
    _write_csv(
        path,
        ["T", "class", "t_low", "t_high"],
        ((c.T, c.memory_class.value, c.t_low, c.t_high) for c in report),
    )


def _grid_rows(t: float, axes, values: np.ndarray):
    if len(axes) == 1:
        for a, v in zip(axes[0], values):
            yield (t, a, v)
    else:
        for i, a in enumerate(axes[0]):
            for j, b in enumerate(axes[1]):
                yield (t, a, b, values[i, j])


def write_fields(out: Path, fld: SpectralField, prefix: str = "") -> None:
    g = fld.grid
    xh = ["x"] if g.dim == 1 else ["x1", "x2"]
    kh = ["xi"] if g.dim == 1 else ["xi1", "xi2"]
    for m, t in enumerate(fld.times):
        _write_csv(out / f"{prefix}field_t{m:03d}.csv", ["t", *xh, "U"], _grid_rows(t, [g.x] * g.dim, fld.values[m]))
        _write_csv(out / f"{prefix}symbol_t{m:03d}.csv", ["t", *kh, "S"], _grid_rows(t, [g.xi] * g.dim, fld.symbol[m]))


# }}}


@dataclass
class Outcome:
    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    def check(self, ok: bool, label: str) -> None:
        self.lines.append(f"[{'PASS' if ok else 'FAIL'}] {label}")
        if not ok:
            self.failures.append(label)

    def note(self, text: str) -> None:
        self.lines.append(text)


def _solve(sc: Scenario, solver: str, config: SolverConfig, oracle_q: QuadratureSpec) -> SpectralField:
    if solver == "oracle":
        return field_oracle(sc.symbol, sc.of, sc.lh, sc.grid, sc.times, oracle_q, sc.checks.tail_tol)
    return fundamental_solution(
        sc.symbol, sc.of, sc.lh, sc.grid, sc.times, config, solver, sc.checks.tail_tol
    )


def run_scenario(sc: Scenario, out: Path, solver: str | None = None, refine: int = 0) -> Outcome:
    """Execute the pipeline, write all artifacts to ``out`` and return the check outcome."""
    solver = solver or sc.solver
    out.mkdir(parents=True, exist_ok=True)
    res = Outcome()
    report = classify_memory(sc.of, sc.lh)
    write_memory_report(out / "memory_report.csv", report)
    res.note(f"scenario: {sc.name}")
    res.note(f"mu = {fmt(sc.lh.mu)}, nu = {fmt(sc.lh.nu)}; orders {list(sc.of.values)} at {list(sc.of.breakpoints)}")
    for c in report:
        res.note(f"mode change T = {fmt(c.T)}: {c.memory_class.value} memory, window [{fmt(c.t_low)}, {fmt(c.t_high)}]")

    config = sc.config.refined(refine) if refine else sc.config
    oracle_q = QuadratureSpec(sc.oracle_step.base_step / 2**refine, sc.oracle_step.grading_exponent)
    primary = solver
    if solver == "both":
        primary = "spectral" if sc.lh.nu == 0 else "hybrid"
    res.note(f"solver: {solver} (primary path: {primary}, refine = {refine})")
    if primary == "hybrid" and not report.has_long_memory:
        res.note(reduce_late_window(sc.of, sc.lh)[1].describe())

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        fld = _solve(sc, primary, config, oracle_q)
        write_fields(out, fld)
        res.note(f"max symbol tail |S(t, xi_max)| = {fmt(max(fld.meta['symbol_tail']))}")

        dens = density_check(fld, negativity_tol=sc.checks.negativity_tol)
        for m, t in enumerate(fld.times):
            res.check(bool(dens.symbol_ok[m]), f"t = {fmt(t)}: S(t, 0) = {fmt(dens.symbol_at_zero[m])}")
            res.check(bool(dens.positivity_ok[m]), f"t = {fmt(t)}: min U / max U = {fmt(dens.min_ratio[m])}")
            res.check(bool(dens.mass_ok[m]), f"t = {fmt(t)}: mass = {fmt(dens.mass[m])}")
            res.note(f"t = {fmt(t)}: symmetry defect = {fmt(dens.symmetry_defect[m])}")

        msd_rows = []
        if sc.symbol.family == "quadratic_form":
            grid_msd = msd_compute(fld, "grid_moment")
            spec_msd = msd_compute(fld, "spectral_laplacian")
            small = msd_smalltime_check(grid_msd, sc.of, sc.lh, sc.symbol, sc.checks.smalltime_tol)
            for m, t in enumerate(fld.times):
                agree = abs(grid_msd.values[m] / spec_msd.values[m] - 1.0) <= sc.checks.msd_agreement
                res.check(agree, f"t = {fmt(t)}: MSD methods agree ({fmt(grid_msd.values[m])} vs {fmt(spec_msd.values[m])})")
                ok_small = bool(small.rel_dev[m] <= small.tolerance)
                if small.in_scope[m]:
                    res.check(ok_small, f"t = {fmt(t)}: small-time MSD law, deviation {fmt(small.rel_dev[m])}")
                msd_rows.append(
                    (t, grid_msd.values[m], spec_msd.values[m], small.reference[m],
                     str(bool(small.in_scope[m])).lower(), str(ok_small).lower(), str(bool(agree)).lower())
                )
            if sc.checks.largetime:
                slope = msd_largetime_exponent(spec_msd)
                target = sc.of.values[-1]
                res.check(
                    abs(slope - target) <= sc.checks.largetime_tol,
                    f"large-time MSD exponent {fmt(slope)} vs beta_N = {fmt(target)}",
                )
        else:
            res.note("MSD checks skipped: infinite second moment for Riesz symbols")
        _write_csv(
            out / "msd.csv",
            ["t", "msd_grid", "msd_spectral", "smalltime_ref", "in_smalltime_window", "smalltime_pass", "methods_agree"],
            msd_rows,
        )

        if solver == "both":
            ora = _solve(sc, "oracle", config, oracle_q)
            write_fields(out, ora, prefix="oracle_")
            dsym = np.abs(ora.symbol - fld.symbol).reshape(len(sc.times), -1).max(axis=1)
            dfld = np.abs(ora.values - fld.values).reshape(len(sc.times), -1).max(axis=1)
            _write_csv(out / "comparison.csv", ["t", "max_symbol_diff", "max_field_diff"], zip(fld.times, dsym, dfld))
            res.check(float(dsym.max()) <= sc.checks.symbol_tol, f"{primary} vs oracle max symbol discrepancy {fmt(dsym.max())}")
            res.check(float(dfld.max()) <= sc.checks.field_tol, f"{primary} vs oracle max field discrepancy {fmt(dfld.max())}")
    for msg in dict.fromkeys(str(w.message) for w in caught):
        res.note(f"warning: {msg}")

    res.note(f"result: {'all checks passed' if not res.failures else f'{len(res.failures)} check(s) failed'}")
    (out / "report.txt").write_text("\n".join(res.lines) + "\n", encoding="utf-8")
    return res


def _out_dir(sc: Scenario, arg: str | None) -> Path:
    if arg:
        return Path(arg)
    return Path(sc.output) if sc.output else Path("out") / sc.name


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vosubdiff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="solve a scenario and write CSV artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("--out")
    p_run.add_argument("--solver", choices=SOLVERS)
    p_run.add_argument("--refine", type=int, default=0)
    p_cls = sub.add_parser("classify", help="write the memory report only")
    p_cls.add_argument("scenario")
    p_cls.add_argument("--out")
    args = parser.parse_args(argv)

    try:
        sc = load_scenario(args.scenario)
        if args.command == "run" and args.refine < 0:
            raise ScenarioError(f"--refine: must be >= 0, got {args.refine}")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(sc, args.out)

    if args.command == "classify":
        out.mkdir(parents=True, exist_ok=True)
        report = classify_memory(sc.of, sc.lh)
        write_memory_report(out / "memory_report.csv", report)
        print((out / "memory_report.csv").read_text(encoding="utf-8"), end="")
        return 0

    try:
        res = run_scenario(sc, out, args.solver, args.refine)
    except SolverApplicabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(res.lines))
    return 0 if not res.failures else 1


if __name__ == "__main__":
    raise SystemExit(main())
