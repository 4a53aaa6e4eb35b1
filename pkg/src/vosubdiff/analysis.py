"""Density properties and mean-square displacement of fundamental solutions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fields import SpectralField, SymbolSpec
from .modes import LHParams, OrderFunction
from .spectral import reduce_early_window

__all__ = [
    "DensityReport",
    "MSDSeries",
    "SmallTimeReport",
    "TruncationWarning",
    "density_check",
    "msd_compute",
    "msd_largetime_exponent",
    "msd_smalltime_check",
]

SYMBOL_TOL = 1.0e-9
NEGATIVITY_TOL = 1.0e-6
MASS_TOL = 1.0e-6
BOUNDARY_TOL = 1.0e-10


class TruncationWarning(UserWarning):
    """The field carries non-negligible mass at the edge of the spatial box."""


@dataclass(frozen=True)
class DensityReport:
    """Per-time density diagnostics; arrays are indexed like ``field.times``."""

    times: np.ndarray
    symbol_at_zero: np.ndarray
    min_ratio: np.ndarray
    mass: np.ndarray
    symmetry_defect: np.ndarray
    symbol_tol: float = SYMBOL_TOL
    negativity_tol: float = NEGATIVITY_TOL
    mass_tol: float = MASS_TOL

    @property
    def symbol_ok(self) -> np.ndarray:
        return np.abs(self.symbol_at_zero - 1.0) <= self.symbol_tol

    @property
    def positivity_ok(self) -> np.ndarray:
        return self.min_ratio >= -self.negativity_tol

    @property
    def mass_ok(self) -> np.ndarray:
        return np.abs(self.mass - 1.0) <= self.mass_tol

    @property
    def passed(self) -> bool:
        return bool(np.all(self.symbol_ok & self.positivity_ok & self.mass_ok))


def _zero_index(field: SpectralField) -> tuple[int, ...]:
    return (field.grid.points // 2,) * field.grid.dim


def _reflect(u: np.ndarray, dim: int) -> np.ndarray:
    """``u(-x)`` on the periodic grid ``x_j = -L/2 + j dx``."""
    for ax in range(1, dim + 1):
        u = np.roll(np.flip(u, axis=ax), 1, axis=ax)
    return u


def density_check(
    field: SpectralField,
    symbol_tol: float = SYMBOL_TOL,
    negativity_tol: float = NEGATIVITY_TOL,
    mass_tol: float = MASS_TOL,
) -> DensityReport:
    """Normalization, positivity, mass and symmetry of a fundamental solution.

    Positivity is measured as ``min U / max U``. In two dimensions with order
    below one the density is unbounded at the origin, so the grid maximum and
    the truncation undershoot both depend on the resolution there.
    """
    u = field.values
    nt = u.shape[0]
    flat = u.reshape(nt, -1)
    umax = flat.max(axis=1)
    s0 = field.symbol[(slice(None), *_zero_index(field))]
    mass = flat.sum(axis=1) * field.grid.cell_volume
    sym = np.abs(u - _reflect(u, field.grid.dim)).reshape(nt, -1).max(axis=1) / umax
    return DensityReport(
        field.times.copy(), s0, flat.min(axis=1) / umax, mass, sym, symbol_tol, negativity_tol, mass_tol
    )


@dataclass(frozen=True)
class MSDSeries:
    times: np.ndarray
    values: np.ndarray
    method: str
    truncated: np.ndarray

    def __post_init__(self) -> None:
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("MSD times must be strictly increasing")
        if self.method not in ("grid_moment", "spectral_laplacian"):
            raise ValueError(f"unknown MSD method {self.method!r}")


def _boundary_ratio(field: SpectralField) -> np.ndarray:
    u = np.abs(field.values)
    nt = u.shape[0]
    edge = np.zeros(nt)
    for ax in range(1, field.grid.dim + 1):
        edge = np.maximum(edge, np.take(u, 0, axis=ax).reshape(nt, -1).max(axis=1))
    return edge / u.reshape(nt, -1).max(axis=1)


def msd_compute(field: SpectralField, method: str = "grid_moment") -> MSDSeries:
    """Second moment ``int |x|**2 U dx`` per time.

    ``grid_moment`` sums over the spatial grid; ``spectral_laplacian`` applies
    ``-Laplace`` to the symbol at ``xi = 0`` with fourth-order central
    differences of one frequency cell.
    """
    grid = field.grid
    if method == "grid_moment":
        r2 = sum(x * x for x in grid.space_mesh())
        vals = np.tensordot(field.values, r2, axes=grid.dim) * grid.cell_volume
    elif method == "spectral_laplacian":
        z = grid.points // 2
        h = grid.dxi
        vals = np.zeros(field.times.size)
        for ax in range(grid.dim):
            idx = [slice(None)] + [z] * grid.dim

            def at(k, idx=idx, ax=ax):
                i = list(idx)
                i[ax + 1] = z + k
                return field.symbol[tuple(i)]

            d2 = (-at(2) + 16 * at(1) - 30 * at(0) + 16 * at(-1) - at(-2)) / (12 * h * h)
            vals = vals - d2
    else:
        raise ValueError(f"unknown MSD method {method!r}")
    ratio = _boundary_ratio(field)
    truncated = ratio > BOUNDARY_TOL
    if np.any(truncated):
        warnings.warn(
            f"boundary density up to {ratio.max():.2e} of the maximum; "
            "the spatial box may truncate the second moment",
            TruncationWarning,
            stacklevel=2,
        )
    return MSDSeries(field.times.copy(), np.asarray(vals, dtype=np.float64), method, truncated)


@dataclass(frozen=True)
class SmallTimeReport:
    times: np.ndarray
    reference: np.ndarray
    rel_dev: np.ndarray
    in_scope: np.ndarray
    t_star: float
    tolerance: float = 0.02

    @property
    def passed(self) -> bool:
        return bool(np.all(self.rel_dev[self.in_scope] <= self.tolerance))


def smalltime_msd(t, beta0: float, spec: SymbolSpec):
    """``Tr(-A) t**beta0 / Gamma(beta0 + 1)``."""
    return spec.trace_neg * np.asarray(t, dtype=np.float64) ** beta0 / math.gamma(beta0 + 1.0)


def msd_smalltime_check(
    series: MSDSeries, of: OrderFunction, lh: LHParams, spec: SymbolSpec, tolerance: float = 0.02
) -> SmallTimeReport:
    """Compare against the exact law on ``(0, 0.9 t*)``; later samples are reported only."""
    t_star = reduce_early_window(of, lh)
    ref = smalltime_msd(series.times, of.values[0], spec)
    dev = np.abs(series.values / ref - 1.0)
    scope = (series.times > 0) & (series.times < 0.9 * t_star)
    return SmallTimeReport(series.times.copy(), ref, dev, scope, t_star, tolerance)


def msd_largetime_exponent(
    series: MSDSeries, t_min: float | None = None, t_max: float | None = None
) -> float:
    """Least-squares slope of ``log MSD`` against ``log t`` on ``[t_min, t_max]``.

    Defaults to the last decade of the series.
    """
    t = series.times
    hi = float(t[-1]) if t_max is None else t_max
    lo = hi / 10.0 if t_min is None else t_min
    if not (lo > 0 and hi >= 10.0 * lo * (1 - 1e-12)):
        raise ValueError(f"fit window [{lo}, {hi}] spans less than one decade")
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if t[sel].size < 3 or t[sel].min() > lo * 1.5 or t[sel].max() < hi / 1.5:
        raise ValueError(f"series does not cover the decade [{lo}, {hi}]")
    if np.any(series.values[sel] <= 0):
        raise ValueError("MSD values must be positive for a log-log fit")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(series.values[sel]), 1)
    return float(slope)
