"""Brute-force reference solver: implicit L1 stepping per frequency.

For every frequency the symbol solves the scalar problem
``D^{beta(t)}_{mu,nu} y = lam y``, ``y(0) = y0``. The discrete operator at a
node ``t_n`` is ``sum_i w_i (y_{i+1} - y_i)`` with the weights of
:func:`vosubdiff.voops.caputo_weights`; only the last weight multiplies the
unknown, so each step is a single division.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .fields import SpatialGrid, SpectralField, SymbolSpec, synthesize_field
from .modes import LHParams, OrderFunction, classify_memory, symbol_tail_coefficient
from .voops import QuadratureSpec, SampledFunction, build_mesh, caputo_weights

__all__ = [
    "ScalarVOProblem",
    "critical_points",
    "field_oracle",
    "march",
    "picard_first_interval",
    "picard_tail_bound",
    "solve_frequencies",
    "step_solve",
]


@dataclass(frozen=True)
class ScalarVOProblem:
    lam: float
    of: OrderFunction
    lh: LHParams = LHParams()
    y0: float = 1.0
    t_end: float = 1.0
    q: QuadratureSpec = QuadratureSpec(base_step=1.0e-2)

    def __post_init__(self) -> None:
        if not self.lam <= 0:
            raise ValueError(f"lambda must be <= 0: got {self.lam}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive and finite: got {self.t_end}")
        if not math.isfinite(self.y0):
            raise ValueError("y0 must be finite")


def critical_points(of: OrderFunction, lh: LHParams) -> list[float]:
    """Finite critical times of all mode changes, where the solution loses smoothness."""
    if not of.breakpoints:
        return []
    report = classify_memory(of, lh)
    pts = {x for c in report for x in (c.t_low, c.t_high) if math.isfinite(x) and x > 0}
    return sorted(pts)


def march(
    nodes: np.ndarray,
    Y: np.ndarray,
    start: int,
    lam: np.ndarray,
    of: OrderFunction,
    lh: LHParams,
) -> np.ndarray:
    """Fill rows ``start+1 ..`` of ``Y`` (nodes x frequencies) by implicit L1 steps.

    Rows ``0 .. start`` are the given history.
    """
    lam = np.asarray(lam, dtype=np.float64)
    dY = np.zeros_like(Y)
    dY[:start] = np.diff(Y[: start + 1], axis=0)
    for n in range(start + 1, nodes.size):
        # the step over (t_{n-1}, t_n] is governed by the order holding there,
        # so a node on a critical time still uses the outgoing mode
        w = caputo_weights(nodes[: n + 1], nodes[n], of, lh, left=True)
        diag = w[-1] - lam
        assert np.all(diag > 0), "vanishing diagonal coefficient"
        hist = w[:-1] @ dY[: n - 1] if n > 1 else 0.0
        # solve for the increment: (w_n - lam) dy = lam y_{n-1} - hist
        dY[n - 1] = (lam * Y[n - 1] - hist) / diag
        Y[n] = Y[n - 1] + dY[n - 1]
    return Y


def solve_frequencies(
    lam,
    of: OrderFunction,
    lh: LHParams,
    t_end: float,
    q: QuadratureSpec,
    y0: float = 1.0,
    points: Sequence[float] = (),
) -> tuple[np.ndarray, np.ndarray]:
    """Step all ``lam`` values at once; returns ``(mesh, Y)`` with ``Y[n, j] ~ y_j(mesh[n])``.

    The mesh is graded towards every critical time and contains ``points``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if np.any(lam > 0):
        raise ValueError("all lambda values must be <= 0")
    mesh = build_mesh(t_end, q, critical_points(of, lh))
    extra = [p for p in points if 0 < p < t_end]
    if extra:
        mesh = np.union1d(mesh, extra)
    Y = np.empty((mesh.size, lam.size))
    Y[0] = y0
    return mesh, march(mesh, Y, 0, lam, of, lh)


def step_solve(p: ScalarVOProblem) -> SampledFunction:
    """Solve one scalar problem on its graded mesh."""
    mesh, Y = solve_frequencies([p.lam], p.of, p.lh, p.t_end, p.q, p.y0)
    return SampledFunction(mesh, Y[:, 0])


def _first_window(p: ScalarVOProblem) -> float:
    return min((c.t_low for c in classify_memory(p.of, p.lh)), default=math.inf)


def picard_first_interval(p: ScalarVOProblem, m: int) -> SampledFunction:
    """``m``-th Picard iterate ``y0 sum_{k<=m} (lam t**b0)**k / Gamma(b0 k + 1)``.

    Each iterate applies ``y0 + lam J^{b0}`` to the previous one; on monomials
    the integral is the power rule, so the iterates are exact.
    """
    if m < 0:
        raise ValueError(f"iteration count must be >= 0: got {m}")
    if not p.t_end < _first_window(p):
        raise ValueError(
            f"t_end = {p.t_end} is not below the first critical time {_first_window(p)}"
        )
    b0 = p.of.values[0]
    grid = build_mesh(p.t_end, p.q)
    tb = grid**b0
    coef = p.y0
    term = np.full_like(grid, coef)
    total = term.copy()
    for k in range(1, m + 1):
        # J^{b0} t^{b0 (k-1)} = Gamma(b0 (k-1) + 1) / Gamma(b0 k + 1) t^{b0 k}
        coef = coef * p.lam * math.exp(gammaln(b0 * (k - 1) + 1) - gammaln(b0 * k + 1))
        term = coef * tb**k
        total = total + term
    return SampledFunction(grid, total)


def picard_tail_bound(p: ScalarVOProblem, m: int, terms: int = 400) -> float:
    """``|y0| sum_{k>m} |lam psi(T)|**k / Gamma(b0 k + 1)`` with ``psi`` as in the integral estimate."""
    b0 = p.of.values[0]
    bstar = p.of.beta_min
    T = p.t_end
    psi = T**bstar if T < 1 else T
    x = abs(p.lam) * psi
    if x == 0:
        return 0.0
    ks = np.arange(m + 1, m + 1 + terms)
    logs = ks * math.log(x) - gammaln(b0 * ks + 1)
    return abs(p.y0) * float(np.exp(logs).sum())


def field_oracle(
    spec: SymbolSpec,
    of: OrderFunction,
    lh: LHParams,
    grid: SpatialGrid,
    times: Sequence[float],
    q: QuadratureSpec = QuadratureSpec(base_step=1.0e-2),
    tail_tol: float | None = 1.0e-3,
) -> SpectralField:
    """Fields from per-frequency stepping on the same grid as the spectral path."""
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0 or np.any(times <= 0):
        raise ValueError("times must be a non-empty list of positive values")
    lam_grid = spec(*grid.frequency_mesh())
    lam, inverse = np.unique(lam_grid, return_inverse=True)
    mesh, Y = solve_frequencies(lam, of, lh, float(times.max()), q, points=times)
    idx = np.searchsorted(mesh, times)
    assert np.all(mesh[idx] == times)
    symbols = Y[idx][:, inverse.reshape(lam_grid.shape)]
    coef = [symbol_tail_coefficient(of, lh, float(x)) for x in times]
    return synthesize_field(
        grid, times, symbols, "oracle", tail_tol, {"base_step": q.base_step, "mesh_size": int(mesh.size)},
        spec=spec, tail_coef=coef,
    )
