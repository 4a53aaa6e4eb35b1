"""Closed-form solution symbols and fundamental solutions.

Per frequency, with ``lam = A(xi)``, the symbol ``u(t) = S(t, xi)`` solves
``D^{beta(t)} u = lam u`` with ``u(0) = 1``. On mode window ``k`` (ordered by
the critical times ``t_k``) the equation splits into a constant-order
problem based at ``t_k`` and a memory forcing from the completed history::

    u(t) = S_k(t - t_k) u(t_k) + P_k(t),
    P_k(t) = int_{t_k}^t e_k(t - s) R_k(s) ds,
    R_k(s) = -1/Gamma(1 - b_k) int_0^{t_k} (s - tau)**(-b_k) u'(tau) dtau,

with ``S_k(r) = E_{b_k}(lam r**b_k)`` and the resolvent kernel
``e_k(r) = r**(b_k - 1) E_{b_k,b_k}(lam r**b_k)``. Unrolling the recursion
gives the products ``M_k`` of the window propagators plus the propagated
forcing terms.

Numerics: ``u`` is exact on the first window; ``R_k`` is the L1 sum over the
stored history; ``P_k`` is integrated exactly against piecewise-linear ``R_k``
using the moments ``int_0^r e = r**b E_{b,b+1}(lam r**b)`` and
``int_0^r int_0^rho e = r**(b+1) E_{b,b+2}(lam r**b)``, which stay bounded for
any stiffness ``|lam|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve
from scipy.special import rgamma

from .fields import SpatialGrid, SpectralField, SymbolSpec, synthesize_field
from .mlf import mittag_leffler, mlf_deriv, mlf_eval
from .modes import LHParams, OrderFunction, classify_memory, symbol_tail_coefficient
from .oracle import critical_points, march
from .voops import QuadratureSpec, build_mesh, l1_weight_matrix

__all__ = [
    "CriticalSchedule",
    "LateWindowPlan",
    "SolverApplicabilityError",
    "SolverConfig",
    "SymbolTable",
    "assemble_solution_symbol",
    "build_symbol_table",
    "fundamental_solution",
    "reduce_early_window",
    "reduce_late_window",
    "symbol_M",
    "symbol_R",
    "symbol_S",
]


class SolverApplicabilityError(ValueError):
    """The requested solution path is not valid for the scenario."""


@dataclass(frozen=True)
class SolverConfig:
    """Discretization knobs of the symbol solvers.

    ``nodes_per_window`` sets the history mesh of every closed window and the
    product-integration mesh of every evaluation; ``step`` controls the
    stepping inside mixing windows (hybrid path only).
    """

    nodes_per_window: int = 512
    first_cell_nodes: int = 16
    step: QuadratureSpec = QuadratureSpec(base_step=2.0e-3)

    def __post_init__(self) -> None:
        if self.nodes_per_window < 8:
            raise ValueError(f"nodes_per_window must be >= 8: got {self.nodes_per_window}")
        if self.first_cell_nodes < 2:
            raise ValueError(f"first_cell_nodes must be >= 2: got {self.first_cell_nodes}")

    def refined(self, k: int) -> SolverConfig:
        """Configuration with all steps halved ``k`` times."""
        return SolverConfig(
            self.nodes_per_window * 2**k,
            self.first_cell_nodes,
            QuadratureSpec(self.step.base_step / 2**k, self.step.grading_exponent),
        )


@dataclass(frozen=True)
class CriticalSchedule:
    """Critical times ``0 = t_0 < t_1 < ... < t_N`` with ``t_j = T_j / (mu + nu)``."""

    t_cr: tuple[float, ...]

    def __post_init__(self) -> None:
        t = self.t_cr
        if not t or t[0] != 0.0:
            raise ValueError("schedule must start at t_0 = 0")
        if any(a >= b for a, b in zip(t, t[1:])):
            raise ValueError(f"critical times must be strictly increasing: {t}")

    @classmethod
    def from_modes(cls, of: OrderFunction, lh: LHParams) -> CriticalSchedule:
        s = lh.mu + lh.nu
        if s == 0:
            raise SolverApplicabilityError(
                "mu + nu = 0: critical times are infinite (long memory)"
            )
        return cls((0.0, *(T / s for T in of.breakpoints)))

    @property
    def n_changes(self) -> int:
        return len(self.t_cr) - 1

    def window(self, t: float) -> int:
        """Index ``k`` with ``t_k <= t < t_{k+1}``."""
        if t < 0:
            raise ValueError(f"t must be non-negative: got {t}")
        return int(np.searchsorted(self.t_cr, t, side="right") - 1)


def _lam(xi, spec: SymbolSpec) -> np.ndarray:
    if spec.dim == 1:
        return np.asarray(spec(xi), dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape[-1] != spec.dim:
        raise ValueError(f"xi must have a trailing axis of length {spec.dim}")
    return np.asarray(spec(*np.moveaxis(xi, -1, 0)), dtype=np.float64)


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def _check_schedule(of: OrderFunction, sched: CriticalSchedule) -> None:
    if sched.n_changes != of.n_changes:
        raise ValueError(
            f"schedule has {sched.n_changes} changes, order function {of.n_changes}"
        )


def symbol_S(j: int, t: float, xi, spec: SymbolSpec, of: OrderFunction, sched: CriticalSchedule):
    """``S_j = E_{b_j}((t - t_j)**b_j A(xi))``."""
    _check_schedule(of, sched)
    if not 0 <= j <= sched.n_changes:
        raise IndexError(f"mode index {j} out of range")
    tj = sched.t_cr[j]
    if t < tj:
        raise ValueError(f"symbol_S({j}) needs t >= t_{j} = {tj}: got t = {t}")
    b = of.values[j]
    return _ret(mlf_eval(b, (t - tj) ** b * _lam(xi, spec)))


def symbol_M(k: int, t: float, xi, spec: SymbolSpec, of: OrderFunction, sched: CriticalSchedule):
    """Current propagator times all completed-window propagators."""
    if k < 1:
        raise ValueError(f"symbol_M needs k >= 1: got {k}")
    out = symbol_S(k, t, xi, spec, of, sched)
    for j in range(k):
        out = out * symbol_S(j, sched.t_cr[j + 1], xi, spec, of, sched)
    return _ret(out)


def _r1_closed(lam: float, b0: float, b1: float, t1: float, t: float) -> float:
    if lam == 0.0 or b1 == 1.0:
        return 0.0
    # u0'(tau) = lam b0 tau**(b0-1) E_b0'(lam tau**b0); tau**(b0-1) is a quad weight
    f = lambda tau: lam * b0 * mlf_deriv(b0, lam * tau**b0) * (
        (t - tau) ** (-b1) if t > t1 else 1.0
    )
    wvar = (b0 - 1.0, -b1 if t == t1 else 0.0)
    val, err = integrate.quad(f, 0.0, t1, weight="alg", wvar=wvar, limit=400, epsabs=1e-13, epsrel=1e-11)
    if not math.isfinite(val):
        raise ArithmeticError(f"R_1 quadrature failed at t = {t}, lambda = {lam}")
    return -val / math.gamma(1.0 - b1)


def symbol_R(
    k: int,
    t: float,
    xi,
    spec: SymbolSpec,
    of: OrderFunction,
    sched: CriticalSchedule,
    config: SolverConfig = SolverConfig(),
):
    """Memory forcing ``R_k(t)`` of window ``k`` from the history on ``[0, t_k]``.

    ``R_1`` is an adaptive quadrature of the exact derivative of the first
    window; higher ``k`` use the assembled history.
    """
    _check_schedule(of, sched)
    if not 1 <= k <= sched.n_changes:
        raise IndexError(f"mode index {k} out of range")
    if t < sched.t_cr[k]:
        raise ValueError(f"symbol_R({k}) needs t >= t_{k} = {sched.t_cr[k]}: got t = {t}")
    lam = _lam(xi, spec)
    if k == 1:
        flat = [
            _r1_closed(float(x), of.values[0], of.values[1], sched.t_cr[1], t)
            for x in np.ravel(lam)
        ]
        return _ret(np.reshape(flat, np.shape(lam)))
    eng = _Engine.closed_form(np.ravel(lam), of, sched, config)
    return _ret(eng.forcing(k, t).reshape(np.shape(lam)))


# {{{ engine


def _moments(beta: float, lam: np.ndarray, r: np.ndarray):
    """``G(r) = int_0^r e``, ``H(r) = int_0^r G`` for the kernel of order ``beta``.

    ``r`` has shape ``(n,)``, ``lam`` shape ``(m,)``; results are ``(n, m)``.
    """
    r = np.asarray(r, dtype=np.float64)[:, None]
    rb = r**beta
    z = rb * lam[None, :]
    G = rb * mittag_leffler(beta, beta + 1.0, z)
    H = rb * r * mittag_leffler(beta, beta + 2.0, z)
    return G, H


def _duhamel(beta: float, lam: np.ndarray, s: np.ndarray, R: np.ndarray) -> np.ndarray:
    """``int_{s_0}^{s_n} e(s_n - sigma) R(sigma) d sigma`` for piecewise-linear ``R``."""
    t = s[-1]
    G, H = _moments(beta, lam, t - s)
    h = np.diff(s)[:, None]
    slope = np.diff(R, axis=0) / h
    ga, gb = G[:-1], G[1:]
    ha, hb = H[:-1], H[1:]
    return np.sum(R[:-1] * (ga - gb) + slope * (ha - hb - h * gb), axis=0)


def _duhamel_uniform(beta: float, lam: np.ndarray, h: float, R: np.ndarray) -> np.ndarray:
    """Duhamel integral at every node of a uniform mesh (Toeplitz convolution)."""
    m = R.shape[0] - 1
    G, H = _moments(beta, lam, h * np.arange(m + 2))
    a = G[1:] - G[:-1]  # a_j, j = 1 .. m+1
    b = (H[1:] - H[:-1] - h * G[:-1]) / h
    kappa = np.empty((m + 1, lam.size))
    kappa[0] = b[0]
    kappa[1:] = a[: m] - b[: m] + b[1 : m + 1]
    P = fftconvolve(R, kappa, axes=0)[: m + 1] - R[0][None, :] * b[: m + 1]
    P[0] = 0.0
    return P


def _graded(a: float, b: float, m: int, g: float) -> np.ndarray:
    x = a + (b - a) * (np.arange(m + 1) / m) ** g
    x[-1] = b
    return x


@dataclass
class _Window:
    kind: str  # "closed" | "stepped" | "duhamel"
    start: float
    end: float
    beta: float
    first: int  # history index of the node at ``start``


class _Engine:
    """Builds and evaluates the symbol for a vector of ``lam`` values."""

    def __init__(self, lam: np.ndarray, beta0: float, t_early: float, config: SolverConfig):
        self.lam = np.asarray(lam, dtype=np.float64)
        self.config = config
        self.beta0 = beta0
        self.windows = [_Window("closed", 0.0, t_early, beta0, 0)]
        self.nodes = np.zeros(1)
        self.values = np.ones((1, self.lam.size))
        if math.isfinite(t_early):
            m = config.nodes_per_window
            g = min(max((2.0 - beta0) / beta0, 1.0), 5.0)
            nodes = _graded(0.0, t_early, m, g)
            self.nodes = nodes
            self.values = mlf_eval(beta0, np.outer(nodes**beta0, self.lam))

    # construction

    @classmethod
    def closed_form(cls, lam, of: OrderFunction, sched: CriticalSchedule, config: SolverConfig):
        t = sched.t_cr
        eng = cls(lam, of.values[0], t[1] if len(t) > 1 else math.inf, config)
        for k in range(1, len(t)):
            end = t[k + 1] if k + 1 < len(t) else math.inf
            eng.add_duhamel(of.values[k], end)
        return eng

    def add_duhamel(self, beta: float, end: float) -> None:
        """Append a window of constant order ``beta`` from the current history end."""
        start = float(self.nodes[-1])
        self.windows.append(_Window("duhamel", start, end, beta, self.nodes.size - 1))
        if not math.isfinite(end):
            return
        m = self.config.nodes_per_window
        h = (end - start) / m
        s = start + h * np.arange(m + 1)
        s[-1] = end
        c = self.values[-1]
        # resolve the start of the window, where u behaves like (s - start)**beta
        nf = self.config.first_cell_nodes
        rho = h * (np.arange(1, nf) / nf) ** 3
        if beta == 1.0:
            P = np.zeros((m + 1, self.lam.size))
            Pf = np.zeros((nf - 1, self.lam.size))
        else:
            R = self._forcing_at(beta, s, self.nodes.size)
            P = _duhamel_uniform(beta, self.lam, h, R)
            G, H = _moments(beta, self.lam, rho)
            Pf = R[0] * G + ((R[1] - R[0]) / h) * H
        fine = start + rho
        Sf = mlf_eval(beta, np.outer(rho**beta, self.lam))
        S = mlf_eval(beta, np.outer((s[1:] - start) ** beta, self.lam))
        new_nodes = np.concatenate([fine, s[1:]])
        new_vals = np.concatenate([Sf * c + Pf, S * c + P[1:]])
        self.nodes = np.concatenate([self.nodes, new_nodes])
        self.values = np.concatenate([self.values, new_vals])

    def add_stepped(self, end: float, of: OrderFunction, lh: LHParams, points: Sequence[float]) -> None:
        """Append implicit L1 steps up to ``end`` (mixing windows)."""
        start = float(self.nodes[-1])
        self.windows.append(_Window("stepped", start, end, math.nan, self.nodes.size - 1))
        q = self.config.step
        crit = [p for p in critical_points(of, lh) if start < p < end]
        seg = build_mesh(end - start, q, [p - start for p in crit]) + start
        extra = [p for p in points if start < p < end]
        if extra:
            seg = np.union1d(seg, extra)
        seg[-1] = end
        nodes = np.concatenate([self.nodes, seg[1:]])
        Y = np.empty((nodes.size, self.lam.size))
        Y[: self.nodes.size] = self.values
        march(nodes, Y, self.nodes.size - 1, self.lam, of, lh)
        self.nodes = nodes
        self.values = Y

    # evaluation

    def _forcing_at(self, beta: float, s: np.ndarray, nhist: int) -> np.ndarray:
        if beta == 1.0:
            return np.zeros((s.size, self.lam.size))
        W = l1_weight_matrix(self.nodes[:nhist], s, beta)
        return -(W @ np.diff(self.values[:nhist], axis=0))

    def _window_of(self, t: float) -> int:
        for i, w in enumerate(self.windows):
            if t < w.end or i == len(self.windows) - 1:
                return i
        raise AssertionError

    def forcing(self, k: int, t: float) -> np.ndarray:
        w = self.windows[k]
        if w.kind != "duhamel":
            raise ValueError(f"window {k} carries no Duhamel forcing")
        return self._forcing_at(w.beta, np.array([t]), w.first + 1)[0]

    def components(self, t: float) -> dict:
        """Window index, propagator, carried value, forcing and Duhamel term at ``t``."""
        i = self._window_of(t)
        w = self.windows[i]
        if w.kind == "closed":
            S = mlf_eval(w.beta, t**w.beta * self.lam)
            one = np.ones_like(self.lam)
            return {"k": i, "S": S, "carry": one, "R": 0 * one, "P": 0 * one, "value": S}
        if w.kind == "stepped":
            j = int(np.searchsorted(self.nodes, t))
            if j >= self.nodes.size or self.nodes[j] != t:
                raise ValueError(f"t = {t} is not a node of the stepping mesh")
            v = self.values[j]
            nan = np.full_like(v, np.nan)
            return {"k": i, "S": nan, "carry": nan, "R": nan, "P": nan, "value": v}
        c = self.values[w.first]
        dt = t - w.start
        S = mlf_eval(w.beta, dt**w.beta * self.lam)
        if dt == 0.0 or w.beta == 1.0:
            P = np.zeros_like(self.lam)
            R = self._forcing_at(w.beta, np.array([t]), w.first + 1)[0]
        else:
            s = _graded(w.start, t, self.config.nodes_per_window, 2.0)
            Rs = self._forcing_at(w.beta, s, w.first + 1)
            P = _duhamel(w.beta, self.lam, s, Rs)
            R = Rs[-1]
        return {"k": i, "S": S, "carry": c, "R": R, "P": P, "value": S * c + P}

    def value(self, t: float) -> np.ndarray:
        return self.components(t)["value"]


# }}}


@dataclass(frozen=True)
class SymbolTable:
    """Frozen per-time, per-frequency symbol values.

    Row ``m`` of every array belongs to ``times[m]``; columns to ``lam``.
    ``window[m]`` is the mode window of ``times[m]``; ``M``, ``R``, ``P`` are
    the propagator product, memory forcing and Duhamel term of that window
    (``NaN`` inside stepped mixing windows).
    """

    lam: np.ndarray
    times: np.ndarray
    window: np.ndarray
    S: np.ndarray
    M: np.ndarray
    R: np.ndarray
    P: np.ndarray
    symbol: np.ndarray
    method: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.symbol)):
            raise ArithmeticError("non-finite symbol values")
        for a in (self.lam, self.times, self.window, self.S, self.M, self.R, self.P, self.symbol):
            a.setflags(write=False)


def reduce_early_window(of: OrderFunction, lh: LHParams) -> float:
    """End ``t*`` of the window where only the initial order is seen."""
    if not of.breakpoints:
        return math.inf
    T1 = of.breakpoints[0]
    by_mu = T1 / lh.mu if lh.mu != 0 else math.inf
    by_sum = T1 / (lh.mu + lh.nu) if lh.mu + lh.nu != 0 else math.inf
    return min(by_mu, by_sum)


@dataclass(frozen=True)
class LateWindowPlan:
    """For ``t > T_star`` the symbol solves the order-``beta_N`` problem based at ``T_star``."""

    T_star: float
    beta_N: float

    def describe(self) -> str:
        return (
            f"for t > {self.T_star:g}: constant order {self.beta_N:g} based at T* "
            "with initial data u(T*) and forcing from the history on [0, T*]"
        )


def reduce_late_window(of: OrderFunction, lh: LHParams, spec: SymbolSpec | None = None):
    """Return ``(T_star, plan)``; rejects long-memory parameters."""
    if lh.mu == 0 or lh.mu + lh.nu == 0:
        raise SolverApplicabilityError(
            f"long memory (mu = {lh.mu}, mu + nu = {lh.mu + lh.nu}): the superseded "
            "orders never leave the kernel, so no late constant-order window exists"
        )
    if not of.breakpoints:
        return 0.0, LateWindowPlan(0.0, of.values[0])
    TN = of.breakpoints[-1]
    T_star = max(TN / lh.mu, TN / (lh.mu + lh.nu))
    return T_star, LateWindowPlan(T_star, of.values[-1])


def _build_engine(
    lam: np.ndarray,
    of: OrderFunction,
    lh: LHParams,
    config: SolverConfig,
    method: str,
    times: Sequence[float],
) -> _Engine:
    if method == "spectral":
        if lh.nu != 0:
            t_star = reduce_early_window(of, lh)
            if max(times, default=0.0) < t_star:
                return _Engine(lam, of.values[0], math.inf, config)
            if lh.is_long_memory:
                reason = "the scenario has long memory (mu = 0 or mu + nu = 0)"
            else:
                reason = f"nu = {lh.nu} != 0 and times reach the mixing window t >= t* = {t_star:g}"
            raise SolverApplicabilityError(
                f"closed-form path refused: {reason}; use the hybrid or oracle solver"
            )
        merged = of.merged()
        return _Engine.closed_form(lam, merged, CriticalSchedule.from_modes(merged, lh), config)
    if method != "hybrid":
        raise ValueError(f"unknown method {method!r}")
    t_star = reduce_early_window(of, lh)
    eng = _Engine(lam, of.values[0], t_star, config)
    if not math.isfinite(t_star):
        return eng
    if lh.is_long_memory:
        eng.add_stepped(max(max(times), t_star), of, lh, times)
        return eng
    T_star, plan = reduce_late_window(of, lh)
    if T_star > t_star:
        eng.add_stepped(T_star, of, lh, times)
    eng.add_duhamel(plan.beta_N, math.inf)
    return eng


def build_symbol_table(
    lam,
    times: Sequence[float],
    of: OrderFunction,
    lh: LHParams,
    config: SolverConfig = SolverConfig(),
    method: str = "spectral",
) -> SymbolTable:
    """Symbol values for the (unique, non-positive) ``lam`` values at ``times``.

    ``method="spectral"`` is the closed-form recursion (requires ``nu = 0``
    unless every time precedes ``t*``); ``"hybrid"`` uses the closed form for
    ``t < t*``, stepping on ``[t*, T*]`` and the order-``beta_N`` Duhamel
    reduction beyond ``T*``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if lam.ndim != 1 or np.any(lam > 0) or not np.all(np.isfinite(lam)):
        raise ValueError("lam must be a 1D array of finite values <= 0")
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise ValueError("times must be finite and non-negative")
    eng = _build_engine(lam, of, lh, config, method, times.tolist())
    rows = [eng.components(float(t)) for t in times]
    window = np.array([r["k"] for r in rows], dtype=int)
    S = np.array([r["S"] for r in rows]).reshape(times.size, lam.size)
    R = np.array([r["R"] for r in rows]).reshape(times.size, lam.size)
    P = np.array([r["P"] for r in rows]).reshape(times.size, lam.size)
    carry = np.array([r["carry"] for r in rows]).reshape(times.size, lam.size)
    symbol = np.array([r["value"] for r in rows]).reshape(times.size, lam.size)
    # M_k: propagator products of the closed recursion (carry excludes forcing)
    M = np.full_like(symbol, np.nan)
    if method == "spectral":
        betas = [w.beta for w in eng.windows]
        starts = [w.start for w in eng.windows]
        for m, (t, k) in enumerate(zip(times, window)):
            prod = mlf_eval(betas[k], (t - starts[k]) ** betas[k] * lam)
            for j in range(k):
                prod = prod * mlf_eval(betas[j], (starts[j + 1] - starts[j]) ** betas[j] * lam)
            M[m] = prod
    return SymbolTable(
        lam, times, window, S, M, R, P, symbol, method,
        {"carry": carry, "windows": [(w.kind, w.start, w.end, w.beta) for w in eng.windows]},
    )


def assemble_solution_symbol(
    t: float,
    xi,
    spec: SymbolSpec,
    of: OrderFunction,
    lh: LHParams,
    config: SolverConfig = SolverConfig(),
):
    """Closed-form solution symbol ``S(t, xi)`` (``nu = 0`` only)."""
    if lh.nu != 0:
        raise SolverApplicabilityError(
            f"the closed-form representation requires nu = 0 (got nu = {lh.nu}); "
            "use the hybrid solver"
        )
    lam = _lam(xi, spec)
    flat = np.ravel(lam)
    u, inv = np.unique(flat, return_inverse=True)
    table = build_symbol_table(u, [t], of, lh, config)
    return _ret(table.symbol[0][inv].reshape(np.shape(lam)))


def fundamental_solution(
    spec: SymbolSpec,
    of: OrderFunction,
    lh: LHParams,
    grid: SpatialGrid,
    t,
    config: SolverConfig = SolverConfig(),
    method: str = "auto",
    tail_tol: float | None = 1.0e-3,
) -> SpectralField:
    """Fundamental solution ``U(t, x)`` by inverse DFT of the symbol on ``grid``.

    ``t`` may be a scalar or a sequence. ``method="auto"`` uses the closed form
    for ``nu = 0`` and the hybrid path otherwise.
    """
    if spec.dim != grid.dim:
        raise ValueError(f"symbol dimension {spec.dim} != grid dimension {grid.dim}")
    times = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(times <= 0):
        raise ValueError("fundamental solution requires t > 0")
    if method == "auto":
        method = "spectral" if lh.nu == 0 else "hybrid"
    lam_grid = spec(*grid.frequency_mesh())
    lam, inverse = np.unique(lam_grid, return_inverse=True)
    table = build_symbol_table(lam, times, of, lh, config, method)
    symbols = table.symbol[:, inverse.reshape(lam_grid.shape)]
    coef = [symbol_tail_coefficient(of, lh, float(x)) for x in times]
    return synthesize_field(
        grid, times, symbols, method, tail_tol,
        {"nodes_per_window": config.nodes_per_window, "windows": table.meta["windows"]},
        spec=spec, tail_coef=coef,
    )
