"""Product-integration quadrature for variable-order fractional operators.

All operators act on piecewise-linear data. On every sub-interval where the
kernel order is constant the moments of ``(t - tau)**(-b)`` (or
``(t - tau)**(p - 1)``) against linear functions are integrated in closed
form, so the weak singularity at ``tau = t`` needs no special treatment
(the L1 scheme, accuracy ``O(h**(2 - b))`` for smooth data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import rgamma

from .modes import LHParams, OrderFunction, kernel_breakpoints

__all__ = [
    "QuadratureSpec",
    "SampledFunction",
    "build_mesh",
    "caputo_weights",
    "l1_weight_matrix",
    "rl_deriv",
    "vo_caputo",
    "vo_integral",
    "vo_integral_power",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Mesh controls: base step ``h`` and grading exponent near segment starts."""

    base_step: float = 1.0e-3
    grading_exponent: float = 2.0

    def __post_init__(self) -> None:
        if not self.base_step > 0:
            raise ValueError(f"base_step must be positive: got {self.base_step}")
        if not self.grading_exponent >= 1:
            raise ValueError(
                f"grading_exponent must be >= 1: got {self.grading_exponent}"
            )


@dataclass(frozen=True)
class SampledFunction:
    """Piecewise-linear function given by nodal values on ``grid`` (starting at 0).

    ``values`` may carry trailing axes; the interpolant then acts channel-wise.
    """

    grid: np.ndarray
    values: np.ndarray

    def __init__(self, grid, values) -> None:
        grid = np.asarray(grid, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be one-dimensional with at least two nodes")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if values.shape[0] != grid.size:
            raise ValueError(
                f"values has {values.shape[0]} rows for a grid of {grid.size} nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, f: Callable, grid) -> SampledFunction:
        grid = np.asarray(grid, dtype=np.float64)
        return cls(grid, f(grid))

    def __call__(self, t):
        if self.values.ndim == 1:
            return np.interp(t, self.grid, self.values)
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 2)
        a, b = self.grid[idx], self.grid[idx + 1]
        w = ((t - a) / (b - a)).reshape((-1,) + (1,) * (self.values.ndim - 1))
        return (1 - w) * self.values[idx] + w * self.values[idx + 1]

    def truncated(self, t: float) -> SampledFunction:
        """Restriction to ``[grid[0], t]`` with an interpolated final node at ``t``."""
        if t > self.grid[-1] * (1 + 1e-14) or t < self.grid[0]:
            raise ValueError(
                f"t = {t} is outside the sampled range [{self.grid[0]}, {self.grid[-1]}]"
            )
        keep = self.grid < t * (1 - 1e-15) if t > 0 else self.grid < t
        grid = np.append(self.grid[keep], t)
        last = self(np.array([t]))
        values = np.concatenate([self.values[keep], np.reshape(last, (1,) + self.values.shape[1:])])
        return SampledFunction(grid, values)


FunctionLike = Union[SampledFunction, Callable]


def build_mesh(
    t: float, q: QuadratureSpec, points: Sequence[float] = (), start: float = 0.0
) -> np.ndarray:
    """Mesh on ``[start, t]`` through ``points``, graded towards each segment start.

    Every segment ``[a, b]`` between consecutive special points receives
    ``ceil((b - a) / h)`` intervals at nodes ``a + (b - a) (i/m)**gamma``.
    """
    special = sorted({start, t, *(p for p in points if start < p < t)})
    nodes = [np.array([start])]
    for a, b in zip(special, special[1:]):
        m = max(int(math.ceil((b - a) / q.base_step - 1e-9)), 2)
        x = (np.arange(1, m + 1) / m) ** q.grading_exponent
        nodes.append(a + (b - a) * x)
    mesh = np.concatenate(nodes)
    mesh[-1] = t
    return mesh


def _power_diff(ra, h, p):
    """``ra**p - (ra - h)**p`` for ``ra >= h > 0`` without cancellation."""
    ra = np.asarray(ra, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = -(ra**p) * np.expm1(p * np.log1p(-h / ra))
    # log1p(-1) = -inf gives expm1(-inf) = -1, i.e. ra**p, at the endpoint
    return np.where(ra > 0, diff, 0.0)


def _pieces(nodes: np.ndarray, t: float, of: OrderFunction, lh: LHParams, left: bool = False):
    """Sub-intervals of the node intervals on which the kernel order is constant.

    Returns ``(owner, a, b, beta)``: owning node interval and piece bounds.
    With ``left`` the order is the limit from below in ``t`` (relevant only
    when ``mu t + nu tau`` hits a breakpoint exactly).
    """
    end = nodes[-1]
    cuts = [x for x in kernel_breakpoints(of, lh, t) if nodes[0] < x < end] if t > 0 else []
    if cuts:
        pts = np.union1d(nodes, cuts)
    else:
        pts = nodes
    a = pts[:-1]
    b = pts[1:]
    owner = np.searchsorted(nodes, a, side="right") - 1
    s = lh.mu * t + lh.nu * 0.5 * (a + b)
    side = "left" if left else "right"
    idx = np.searchsorted(of.breakpoints, np.maximum(s, 0.0), side=side)
    return owner, a, b, np.asarray(of.values)[idx]


def caputo_weights(
    nodes: np.ndarray, t: float, of: OrderFunction, lh: LHParams, left: bool = False
) -> np.ndarray:
    """Weights ``w`` with ``D f(t) = sum_i w_i (f_{i+1} - f_i)`` for piecewise-linear ``f``.

    ``nodes`` covers the history ``[0, nodes[-1]]`` with ``nodes[-1] <= t``.
    Pieces of order 1 contribute only when they end at ``tau = t``, where the
    operator is the ordinary derivative of the last linear piece. ``left``
    selects the order holding just before ``t`` (see :func:`_pieces`).
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    owner, a, b, beta = _pieces(nodes, t, of, lh, left)
    ra, rb = t - a, t - b
    frac = beta < 1.0
    bf = np.where(frac, beta, 0.5)
    integral = np.where(frac, _power_diff(ra, b - a, 1.0 - bf) * rgamma(2.0 - bf), 0.0)
    # an order-1 piece ending at tau = t is a unit mass there: the slope of
    # the owning interval
    integral = np.where((~frac) & (rb <= 0.0), 1.0, integral)
    h = np.diff(nodes)
    w = np.zeros(nodes.size - 1)
    np.add.at(w, owner, integral / h[owner])
    return w


def l1_weight_matrix(nodes: np.ndarray, times: np.ndarray, beta: float) -> np.ndarray:
    """Constant-order L1 weights ``W[m, i]`` for evaluation times ``times >= nodes[-1]``.

    ``sum_i W[m, i] (f_{i+1} - f_i)`` approximates
    ``1/Gamma(1-beta) int_{nodes[0]}^{nodes[-1]} (t_m - tau)**(-beta) f'(tau) dtau``.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    h = np.diff(nodes)
    if beta == 1.0:
        w = np.zeros((times.size, h.size))
        w[np.abs(times - nodes[-1]) <= 0.0, -1] = 1.0 / h[-1]
        return w
    ra = times[:, None] - nodes[None, :-1]
    return _power_diff(ra, h[None, :], 1.0 - beta) / (gamma_fn(2.0 - beta) * h[None, :])


def _as_sampled(f: FunctionLike, t: float, q: QuadratureSpec, points=()) -> SampledFunction:
    if isinstance(f, SampledFunction):
        return f.truncated(t)
    if callable(f):
        return SampledFunction.from_callable(f, build_mesh(t, q, points))
    raise TypeError(f"expected SampledFunction or callable, got {type(f).__name__}")


def _check_time(t: float) -> None:
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"evaluation time must be finite and non-negative: got {t}")


def vo_caputo(
    f: FunctionLike,
    of: OrderFunction,
    lh: LHParams,
    t: float,
    q: QuadratureSpec = QuadratureSpec(),
):
    """Variable-order Caputo derivative ``int_0^t K(t, tau) f'(tau) dtau``.

    ``K(t, tau) = (t - tau)**(-b) / Gamma(1 - b)`` with ``b = beta(mu t + nu tau)``.
    """
    _check_time(t)
    if t == 0:
        return 0.0
    fs = _as_sampled(f, t, q, kernel_breakpoints(of, lh, t))
    w = caputo_weights(fs.grid, t, of, lh)
    return np.tensordot(w, np.diff(fs.values, axis=0), axes=(0, 0))[()]


def _integral_pieces(fs: SampledFunction, t: float, of: OrderFunction, lh: LHParams, k: int):
    owner, a, b, beta = _pieces(fs.grid, t, of, lh)
    p = k * beta
    ra, rb = t - a, t - b
    fa = fs(a)
    fb = fs(b)
    h = b - a
    i0 = _power_diff(ra, h, p) / p
    # int_{rb}^{ra} r**(p-1) (r - rb) dr
    i1 = _power_diff(ra, h, p + 1.0) / (p + 1.0) - rb * i0
    shape = (-1,) + (1,) * (fs.values.ndim - 1)
    g = rgamma(p).reshape(shape)
    return (fb * i0.reshape(shape) + (fa - fb) * (i1 / h).reshape(shape)) * g


def vo_integral_power(
    f: FunctionLike,
    of: OrderFunction,
    t: float,
    k: int,
    q: QuadratureSpec = QuadratureSpec(),
    lh: LHParams = LHParams(),
):
    """Integral ``int_0^t (t - tau)**(k b - 1) f(tau) / Gamma(k b) dtau`` with ``b = beta(mu t + nu tau)``."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer: got {k}")
    _check_time(t)
    if t == 0:
        return 0.0
    fs = _as_sampled(f, t, q, kernel_breakpoints(of, lh, t))
    return np.sum(_integral_pieces(fs, t, of, lh, int(k)), axis=0)[()]


def vo_integral(
    f: FunctionLike,
    of: OrderFunction,
    lh: LHParams,
    t: float,
    q: QuadratureSpec = QuadratureSpec(),
):
    """Variable-order integral ``int_0^t (t - tau)**(b - 1) f(tau) / Gamma(b) dtau``."""
    return vo_integral_power(f, of, t, 1, q, lh)


def rl_deriv(
    g: FunctionLike,
    alpha: float,
    t0: float,
    t: float,
    q: QuadratureSpec = QuadratureSpec(),
):
    """Riemann-Liouville derivative of order ``alpha`` based at ``t0``.

    Computed as the Caputo derivative plus ``g(t0) (t - t0)**(-alpha) / Gamma(1 - alpha)``.
    A sampled ``g`` must have its grid starting at ``t0``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1): got {alpha}")
    if t < t0:
        raise ValueError(f"t = {t} precedes the base point t0 = {t0}")
    if isinstance(g, SampledFunction):
        if abs(g.grid[0] - t0) > 1e-14 * max(1.0, abs(t0)):
            raise ValueError("sampled g must start at the base point t0")
        gs = g.truncated(t) if t > t0 else None
        g0 = g.values[0]
    else:
        gs = SampledFunction.from_callable(g, build_mesh(t, q, start=t0)) if t > t0 else None
        g0 = np.asarray(g(np.array([t0])))[0]
    if t == t0:
        if np.any(np.asarray(g0) != 0):
            raise ValueError("RL derivative is singular at t = t0 when g(t0) != 0")
        return 0.0 * g0
    nodes = gs.grid - t0
    w = l1_weight_matrix(nodes, np.array([t - t0]), alpha)[0]
    caputo = np.tensordot(w, np.diff(gs.values, axis=0), axes=(0, 0))
    return (caputo + g0 * (t - t0) ** (-alpha) / math.gamma(1.0 - alpha))[()]
