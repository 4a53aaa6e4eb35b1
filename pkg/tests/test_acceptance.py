"""End-to-end acceptance criteria with their tolerances and time budgets.

Each test carries a ``criterion`` mark; ``conftest.py`` turns the outcomes
into one PASS/FAIL line per criterion at the end of the run.
"""

import math
import time
import warnings
from pathlib import Path

import numpy as np
import pytest
from scipy.special import erfcx

from vosubdiff import cli
from vosubdiff.analysis import TruncationWarning, density_check, msd_compute, msd_largetime_exponent, msd_smalltime_check
from vosubdiff.fields import SpatialGrid, SymbolSpec
from vosubdiff.mlf import mlf_asymptotic_check, mlf_eval
from vosubdiff.modes import LHParams, MemoryClass, OrderFunction, classify_memory
from vosubdiff.oracle import critical_points, field_oracle
from vosubdiff.spectral import (
    SolverConfig,
    assemble_solution_symbol,
    build_symbol_table,
    fundamental_solution,
    reduce_early_window,
    reduce_late_window,
)
from vosubdiff.voops import (
    QuadratureSpec,
    build_mesh,
    caputo_weights,
    rl_deriv,
    vo_caputo,
    vo_integral,
    vo_integral_power,
)

SCENARIOS = sorted((Path(__file__).resolve().parents[1] / "scenarios").glob("*.json"))
LAP = SymbolSpec.laplacian(1)
TWO = OrderFunction([1.0], [0.8, 0.5])
GRID = SpatialGrid(1, 1024, 20.0)


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


def quiet(fn, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return fn(*args, **kw)


# 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1, "Mittag-Leffler suite")
def test_mittag_leffler_suite(record_property):
    with Budget(5) as b:
        z = np.linspace(-30, 30, 6001)
        rel_exp = float(np.max(np.abs(mlf_eval(1.0, z) / np.exp(z) - 1)))
        erfc_err = abs(mlf_eval(0.5, -1.0) - erfcx(1.0))
        mono = []
        t = np.logspace(-2, 2, 400)
        for beta in (0.3, 0.5, 0.8):
            e = mlf_eval(beta, -t)
            d1 = np.diff(e) / np.diff(t)
            d2 = np.diff(d1) / (0.5 * (t[2:] - t[:-2]))
            mono.append(d1.max() <= 1e-9 and d2.min() >= -1e-9)
        asym = mlf_asymptotic_check(0.5, 1e4)
    record_property("measured", f"exp rel {rel_exp:.1e}, erfc {erfc_err:.1e}, product {asym:.4f}, {b.elapsed:.1f} s")
    assert rel_exp <= 1e-12
    assert erfc_err <= 1e-10
    assert all(mono)
    assert abs(asym - 1) <= 0.02


# 2 -------------------------------------------------------------------------


def _sides_seen(T, lh, t, n=4001):
    s = lh.mu * t + lh.nu * np.linspace(0.0, t, n)
    return bool(np.any(s < T)), bool(np.any(s >= T))


@pytest.mark.criterion(2, "memory classifier")
def test_memory_classifier(record_property):
    examples = [
        (1.0, 0.5, 0.25, MemoryClass.SHORT, 4 / 3, 2.0),
        (1.0, 0.0, 1.0, MemoryClass.LONG, 1.0, math.inf),
        (5.0, 1.0, 0.0, MemoryClass.NONE, 5.0, 5.0),
        (1.0, 0.8, -0.3, MemoryClass.SHORT, 1.25, 2.0),
    ]
    with Budget(10) as b:
        mismatches = 0
        for T, mu, nu, cls, lo, hi in examples:
            (c,) = classify_memory(OrderFunction([T], [0.8, 0.5]), LHParams(mu, nu))
            mismatches += c.memory_class is not cls
            mismatches += not math.isclose(c.t_low, lo, rel_tol=1e-15)
            mismatches += not (c.t_high == hi or math.isclose(c.t_high, hi, rel_tol=1e-15))
        rng = np.random.default_rng(1000)
        draws = 0
        while draws < 1000:
            mu, nu = rng.uniform(0, 1), rng.uniform(-1, 1)
            if not (0 <= mu + nu <= 1) or mu == 0.0 and nu == 0.0:
                continue
            draws += 1
            lh = LHParams(mu, nu)
            T = rng.uniform(0.1, 5.0)
            (c,) = classify_memory(OrderFunction([T], [0.7, 0.4]), lh)
            finite = [x for x in (c.t_low, c.t_high) if math.isfinite(x)]
            for t in rng.uniform(1e-3, 3.0 * max(finite), 20):
                if any(abs(t - x) < 1e-3 * x for x in finite):
                    continue
                want = (True, False) if t < c.t_low else (False, True) if t > c.t_high else (True, True)
                mismatches += _sides_seen(T, lh, t) != want
            mismatches += (c.memory_class is MemoryClass.LONG) != math.isinf(c.t_high)
    record_property("measured", f"{mismatches} mismatches, {b.elapsed:.1f} s")
    assert mismatches == 0


# 3 -------------------------------------------------------------------------

FINE = QuadratureSpec(1e-3)
ONE = lambda x: np.ones_like(x)


def _caputo_square_exact(of, lh, t):
    """Caputo derivative of tau**2 piece by piece in ``r = t - tau``."""
    taus = [(T - lh.mu * t) / lh.nu for T in of.breakpoints] if lh.nu else []
    cuts = [0.0, *sorted(x for x in taus if 0 < x < t), t]
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        beta = of(lh.mu * t + lh.nu * 0.5 * (a + b))
        anti = lambda r: 2 * t * r ** (1 - beta) / (1 - beta) - 2 * r ** (2 - beta) / (2 - beta)
        total += (anti(t - a) - anti(t - b)) / math.gamma(1 - beta)
    return total


@pytest.mark.criterion(3, "quadrature suite")
def test_quadrature_closed_forms_and_order(record_property):
    with Budget(60) as b:
        of = OrderFunction([1.0], [0.8, 0.4])
        cases = [
            (vo_caputo(lambda x: x, OrderFunction.constant(0.5), LHParams(), 1.0, FINE), 1 / math.gamma(1.5)),
            (
                vo_caputo(lambda x: x, of, LHParams(0.5, 0.25), 1.5, FINE),
                (1.5**0.2 - 0.5**0.2) / 0.2 / math.gamma(0.2) + 0.5**0.6 / 0.6 / math.gamma(0.6),
            ),
            (vo_integral(ONE, OrderFunction.constant(0.3), LHParams(), 2.0, FINE), 2.0**0.3 / math.gamma(1.3)),
            (vo_integral(lambda x: x, OrderFunction.constant(0.5), LHParams(), 1.0, FINE), 1 / math.gamma(2.5)),
            (vo_integral_power(ONE, OrderFunction.constant(0.5), 0.5, 4, FINE), 0.125),
            (rl_deriv(lambda x: 2.5 + 0 * x, 0.3, 1.0, 3.0, FINE), 2.5 * 2.0**-0.3 / math.gamma(0.7)),
            (rl_deriv(lambda x: x - 1.0, 0.5, 1.0, 2.0, FINE), 1 / math.gamma(1.5)),
        ]
        closed = max(abs(got - want) for got, want in cases)
        orders = []
        for of_, lh, t in [
            (OrderFunction.constant(0.5), LHParams(), 1.0),
            (OrderFunction.constant(0.9), LHParams(), 1.0),
            (OrderFunction([1.0], [0.8, 0.4]), LHParams(0.5, 0.25), 1.5),
            (OrderFunction([1.0], [0.4, 0.8]), LHParams(0.8, -0.3), 1.5),
            (OrderFunction([0.5, 1.0], [0.3, 0.7, 0.5]), LHParams(), 1.4),
        ]:
            exact = _caputo_square_exact(of_, lh, t)
            errs = np.array([abs(vo_caputo(lambda x: x**2, of_, lh, t, QuadratureSpec(h)) - exact) for h in (4e-3, 2e-3, 1e-3)])
            orders.append(np.log2(errs[:-1] / errs[1:]).min() - (2 - of_.beta_max - 0.2))
    record_property("measured", f"closed forms {closed:.1e}, order margin {min(orders):+.2f}")
    assert closed <= 1e-6
    assert min(orders) >= 0


def _lemma_bound(of, k, T):
    bstar = of.beta_min
    psi = T**bstar if T < 1 else T
    return psi**k / math.gamma(k * bstar + 1)


@pytest.mark.criterion(3, "quadrature suite")
@pytest.mark.xfail(strict=True, reason="the estimate needs k beta_* >= 2; an unrestricted draw leaves that scope")
def test_lemma_estimate_unrestricted_draw(record_property):
    rng = np.random.default_rng(2026)
    q = QuadratureSpec(2e-2)
    worst = []
    with Budget(60):
        for _ in range(100):
            k = int(rng.integers(1, 7))
            n = int(rng.integers(0, 4))
            of = OrderFunction(np.sort(rng.uniform(0.05, 2.0, n)), rng.uniform(0.05, 1.0, n + 1))
            mu = rng.uniform(0.1, 1.0)
            lh = LHParams(mu, rng.uniform(-mu, 1 - mu))
            T = rng.uniform(0.05, 2.0)
            got = max(abs(vo_integral_power(ONE, of, float(s), k, q, lh)) for s in np.linspace(T / 50, T, 50))
            ratio = got / _lemma_bound(of, k, T)
            if ratio > 1 + 1e-12:
                worst.append(f"k={k}, beta_*={of.beta_min:.2f}: {ratio:.3f}x bound")
    record_property("measured", f"lemma: {len(worst)}/100 violations ({', '.join(worst)})")
    assert not worst


# 4 -------------------------------------------------------------------------


@pytest.mark.criterion(4, "constant-order collapse")
def test_constant_order_collapse(record_property):
    with Budget(30) as b:
        xi = GRID.xi
        worst = 0.0
        for beta in (0.3, 0.6, 1.0):
            for of in (OrderFunction.constant(beta), OrderFunction([0.7, 1.5], [beta] * 3)):
                for t in (0.5, 1.0, 2.3):
                    got = assemble_solution_symbol(t, xi, LAP, of, LHParams())
                    worst = max(worst, float(np.max(np.abs(got - mlf_eval(beta, -(t**beta) * xi**2)))))
    record_property("measured", f"max deviation {worst:.1e}, {b.elapsed:.1f} s")
    assert worst <= 1e-9


# 5 -------------------------------------------------------------------------


@pytest.mark.criterion(5, "spectral-oracle equivalence")
def test_spectral_matches_oracle(record_property):
    times = [0.5, 1.5, 3.0]
    with Budget(600) as b:
        spec = fundamental_solution(LAP, TWO, LHParams(), GRID, times, method="spectral")
        sym, fld = [], []
        for h in (0.02, 0.01, 0.005, 0.0025):
            ora = field_oracle(LAP, TWO, LHParams(), GRID, times, QuadratureSpec(h))
            sym.append(float(np.max(np.abs(ora.symbol - spec.symbol))))
            fld.append(float(np.max(np.abs(ora.values - spec.values))))
    record_property("measured", f"symbol {' > '.join(f'{x:.1e}' for x in sym)}, field {fld[-1]:.1e}, {b.elapsed:.0f} s")
    assert all(a > c for a, c in zip(sym, sym[1:]))
    assert sym[-1] <= 5e-3
    assert fld[-1] <= 1e-3


# 6 -------------------------------------------------------------------------


@pytest.mark.criterion(6, "density properties")
@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_density_every_scenario(path, record_property):
    sc = cli.load_scenario(path)
    fields = []
    if sc.solver in ("oracle", "both"):
        fields.append(field_oracle(sc.symbol, sc.of, sc.lh, sc.grid, sc.times, sc.oracle_step, sc.checks.tail_tol))
    if sc.solver != "oracle":
        method = "spectral" if sc.lh.nu == 0 and not sc.lh.is_long_memory else "hybrid"
        fields.append(fundamental_solution(sc.symbol, sc.of, sc.lh, sc.grid, sc.times, sc.config, method, sc.checks.tail_tol))
    worst = []
    for f in fields:
        rep = density_check(f, symbol_tol=1e-9, negativity_tol=1e-6, mass_tol=1e-6)
        worst.append((f.source, np.abs(rep.symbol_at_zero - 1).max(), rep.min_ratio.min(), np.abs(rep.mass - 1).max()))
        assert rep.passed, rep
    record_property(
        "measured", f"{path.stem}: " + ", ".join(f"{s} S0 {a:.0e} min {m:.0e} mass {c:.0e}" for s, a, m, c in worst)
    )


# 7 -------------------------------------------------------------------------


@pytest.mark.criterion(7, "small-time MSD law")
def test_smalltime_msd(record_property):
    devs = []
    with Budget(300) as b:
        for lh in (LHParams(), LHParams(0.5, 0.25), LHParams(0.8, -0.3)):
            t_star = reduce_early_window(TWO, lh)
            times = np.linspace(0.1, 0.85, 6) * t_star
            f = field_oracle(LAP, TWO, lh, GRID, times, QuadratureSpec(1e-2))
            rep = msd_smalltime_check(quiet(msd_compute, f), TWO, lh, LAP)
            assert np.all(rep.in_scope)
            devs.append(float(rep.rel_dev.max()))
    record_property("measured", f"max rel deviation {max(devs):.1e}, {b.elapsed:.0f} s")
    assert max(devs) <= 0.02


# 8 -------------------------------------------------------------------------


@pytest.mark.criterion(8, "large-time MSD exponent")
def test_largetime_exponent(record_property):
    grid = SpatialGrid(1, 4096, 150.0)
    slopes = []
    with Budget(600) as b:
        for values in ([0.9, 0.5], [0.4, 0.8]):
            of = OrderFunction([1.0], values)
            T_star, _ = reduce_late_window(of, LHParams())
            times = np.logspace(1, 2, 8) * T_star
            f = field_oracle(LAP, of, LHParams(), grid, times, QuadratureSpec(0.05))
            series = quiet(msd_compute, f, "spectral_laplacian")
            slopes.append(msd_largetime_exponent(series, 10 * T_star, 100 * T_star) - values[-1])
    record_property("measured", f"slope - beta_N: {', '.join(f'{s:+.4f}' for s in slopes)}, {b.elapsed:.0f} s")
    assert max(abs(s) for s in slopes) <= 0.05


# 9 -------------------------------------------------------------------------


def _late_residual(mesh, U, lam, of, lh, start):
    """Relative L1 residual of the constant-``beta_N`` equation at nodes past ``start``.

    Also returns the largest gap between the variable-order weights and the
    constant-order ones there, which vanishes once only ``beta_N`` is seen.
    """
    cst = OrderFunction.constant(of.values[-1])
    dU = np.diff(U, axis=0)
    res, gap = [], 0.0
    for n in range(1, mesh.size):
        if mesh[n] < start:
            continue
        w = caputo_weights(mesh[: n + 1], mesh[n], of, lh, left=True)
        wc = caputo_weights(mesh[: n + 1], mesh[n], cst, LHParams(), left=True)
        gap = max(gap, float(np.max(np.abs(w - wc))))
        res.append(np.abs(wc @ dU[:n] - lam * U[n]))
    scale = np.abs(lam * U[mesh >= start]).max(axis=0)
    return float(np.max(np.array(res) / scale)), gap


@pytest.mark.criterion(9, "window reductions")
def test_window_reductions(record_property):
    of, lh = TWO, LHParams(0.5, 0.25)
    lam = -np.array([1.0, 10.0, 100.0])
    t_star = reduce_early_window(of, lh)
    T_star, _ = reduce_late_window(of, lh)
    # outside the onset layer (t - T*)**beta_N right after T*, where the L1
    # truncation error does not shrink with the step
    layer = 0.05
    early, resid, gaps = [], [], []
    with Budget(300) as b:
        for h in (0.02, 0.01, 0.005):
            mesh = build_mesh(2 * T_star, QuadratureSpec(h), critical_points(of, lh))
            table = build_symbol_table(lam, mesh, of, lh, SolverConfig(256, step=QuadratureSpec(h)), "hybrid")
            U = np.asarray(table.symbol)
            sel = mesh < t_star
            exact = mlf_eval(of.values[0], np.outer(mesh[sel] ** of.values[0], lam))
            early.append(float(np.max(np.abs(U[sel] - exact))))
            r, gap = _late_residual(mesh, U, lam, of, lh, T_star + layer)
            resid.append(r)
            gaps.append(gap)
    rates = [a / c for a, c in zip(resid, resid[1:])]
    record_property(
        "measured",
        f"early {max(early):.1e}, late residual {' > '.join(f'{r:.1e}' for r in resid)}, {b.elapsed:.0f} s",
    )
    assert max(early) <= 1e-6
    assert max(gaps) == 0.0
    # L1 consistency: order 2 - beta_N = 1.5 nominal, at least a factor 2 per halving
    assert min(rates) >= 2.0
    assert max(resid) <= 1e-3


# 10 ------------------------------------------------------------------------


@pytest.mark.criterion(10, "CLI determinism")
def test_cli_determinism(tmp_path, capsys, record_property):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        for path in SCENARIOS:
            cli.main(["run", str(path), "--out", str(out / path.stem)])
        runs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*.csv"))})
    capsys.readouterr()
    record_property("measured", f"{len(runs[0])} CSV files compared")
    assert runs[0].keys() == runs[1].keys() and runs[0]
    assert all(runs[0][k] == runs[1][k] for k in runs[0])
