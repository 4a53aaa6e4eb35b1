"""Order functions, Lorenzo-Hartley kernels and memory-regime classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "DegenerateKernelError",
    "LHParams",
    "MemoryClass",
    "MemoryReport",
    "ModeChange",
    "OrderFunction",
    "classify_memory",
    "critical_times",
    "kernel_breakpoints",
    "kernel_eval",
    "order_at",
    "symbol_tail_coefficient",
]

#: relative tolerance for window-membership tests on critical times
WINDOW_RTOL = 1.0e-12


class DegenerateKernelError(ValueError):
    """Raised when the kernel is evaluated on a piece with order 1.

    With order 1 the operator is the plain first derivative and the kernel
    has no pointwise value.
    """


@dataclass(frozen=True)
class OrderFunction:
    """Piecewise-constant order ``beta(s) = values[k]`` for ``s`` in ``[T_k, T_{k+1})``.

    ``breakpoints`` holds ``T_1 < ... < T_N``; ``T_0 = 0`` and ``T_{N+1} = inf``
    are implicit, so ``values`` has one more entry than ``breakpoints``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def __init__(self, breakpoints: Sequence[float], values: Sequence[float]) -> None:
        bps = tuple(float(b) for b in breakpoints)
        vals = tuple(float(v) for v in values)
        if len(vals) != len(bps) + 1:
            raise ValueError(
                f"need len(values) == len(breakpoints) + 1: got {len(vals)} values "
                f"for {len(bps)} breakpoints"
            )
        if bps and not bps[0] > 0:
            raise ValueError(f"breakpoints must be positive: got {bps[0]}")
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {bps}")
        if not all(math.isfinite(b) for b in bps):
            raise ValueError("breakpoints must be finite")
        for k, v in enumerate(vals):
            if not (0.0 < v <= 1.0):
                raise ValueError(f"values[{k}] = {v} is outside (0, 1]")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, beta: float) -> OrderFunction:
        return cls((), (beta,))

    @property
    def n_changes(self) -> int:
        return len(self.breakpoints)

    @property
    def beta_min(self) -> float:
        return min(self.values)

    @property
    def beta_max(self) -> float:
        return max(self.values)

    def __call__(self, s):
        return order_at(self, s)

    def piece_index(self, s):
        """Index ``k`` with ``s`` in ``[T_k, T_{k+1})`` (vectorized)."""
        return np.searchsorted(self.breakpoints, s, side="right")

    def merged(self) -> OrderFunction:
        """Equivalent order function with equal neighbouring pieces joined."""
        bps: list[float] = []
        vals = [self.values[0]]
        for b, v in zip(self.breakpoints, self.values[1:]):
            if v != vals[-1]:
                bps.append(b)
                vals.append(v)
        return OrderFunction(bps, vals)

    def scaled(self, c: float) -> OrderFunction:
        return OrderFunction([c * b for b in self.breakpoints], self.values)


@dataclass(frozen=True)
class LHParams:
    """Lorenzo-Hartley parameters ``(mu, nu)``; the kernel order is read at ``mu t + nu tau``."""

    mu: float = 1.0
    nu: float = 0.0

    def __post_init__(self) -> None:
        mu, nu = self.mu, self.nu
        if not (math.isfinite(mu) and math.isfinite(nu)):
            raise ValueError("mu and nu must be finite")
        if not (0.0 <= mu <= 1.0 and -1.0 <= nu <= 1.0 and 0.0 <= mu + nu <= 1.0):
            raise ValueError(
                f"(mu, nu) = ({mu}, {nu}) is outside the causality parallelogram "
                "0 <= mu <= 1, -1 <= nu <= 1, 0 <= mu + nu <= 1"
            )

    @property
    def is_long_memory(self) -> bool:
        return self.mu == 0.0 or self.mu + self.nu == 0.0


def order_at(of: OrderFunction, s):
    """Order ``beta(s)`` with the right-open convention at breakpoints."""
    s_arr = np.asarray(s, dtype=np.float64)
    if np.any(s_arr < 0):
        raise ValueError(f"order function is defined for s >= 0 only: got {s}")
    vals = np.asarray(of.values)[of.piece_index(s_arr)]
    return float(vals) if np.ndim(s) == 0 else vals


def kernel_eval(
    of: OrderFunction, lh: LHParams, t: float, tau: float
) -> float:
    """Kernel ``1 / (Gamma(1 - b) (t - tau)**b)`` with ``b = beta(mu t + nu tau)``."""
    if not tau < t:
        raise ValueError(f"kernel requires tau < t: got tau={tau}, t={t}")
    if tau < 0:
        raise ValueError(f"kernel requires tau >= 0: got {tau}")
    s = lh.mu * t + lh.nu * tau
    assert s >= -1e-15 * max(1.0, t), "mu t + nu tau < 0 is impossible inside the parallelogram"
    b = order_at(of, max(s, 0.0))
    if b == 1.0:
        raise DegenerateKernelError(
            f"order 1 at s = {s}: the operator is d/dt and the kernel has no value"
        )
    return 1.0 / (math.gamma(1.0 - b) * (t - tau) ** b)


def kernel_breakpoints(of: OrderFunction, lh: LHParams, t: float) -> list[float]:
    """Points ``tau_j = (T_j - mu t) / nu`` in ``(0, t)`` where the kernel order jumps."""
    if not t > 0:
        raise ValueError(f"t must be positive: got {t}")
    if lh.nu == 0.0:
        return []
    taus = [(b - lh.mu * t) / lh.nu for b in of.breakpoints]
    return sorted(x for x in taus if 0.0 < x < t)


def symbol_tail_coefficient(of: OrderFunction, lh: LHParams, t: float) -> float:
    """``K(t, 0) = t**-b / Gamma(1 - b)``, the large-``|lam|`` limit of ``-lam S(t, lam)``.

    ``b`` is the order at ``mu t`` taken from below, matching the continuity of
    the solution in ``t``; an order-1 piece gives 0.
    """
    if not t > 0:
        raise ValueError(f"t must be positive: got {t}")
    b = of.values[int(np.searchsorted(of.breakpoints, lh.mu * t, side="left"))]
    if b == 1.0:
        return 0.0
    return t**-b / math.gamma(1.0 - b)


def critical_times(T: float, lh: LHParams) -> tuple[float, float]:
    """``(T/mu, T/(mu + nu))`` with ``inf`` for vanishing denominators."""
    by_mu = T / lh.mu if lh.mu != 0.0 else math.inf
    by_sum = T / (lh.mu + lh.nu) if lh.mu + lh.nu != 0.0 else math.inf
    return by_mu, by_sum


class MemoryClass(str, Enum):
    SHORT = "short"
    LONG = "long"
    NONE = "none"


@dataclass(frozen=True)
class ModeChange:
    """Memory diagnosis for one mode-change time ``T``.

    For ``t < t_low`` the old order governs the whole history, for
    ``t > t_high`` the new one does, and in between both are mixed.
    """

    T: float
    memory_class: MemoryClass
    t_low: float
    t_high: float

    def __post_init__(self) -> None:
        if not self.t_low <= self.t_high:
            raise ValueError(f"t_low > t_high: {self.t_low} > {self.t_high}")
        if (self.memory_class is MemoryClass.LONG) != math.isinf(self.t_high):
            raise ValueError("long memory is equivalent to t_high = inf")
        if self.memory_class is MemoryClass.NONE and self.t_low != self.t_high:
            raise ValueError("'none' memory requires an empty mixing window")

    @property
    def pure_old_interval(self) -> tuple[float, float]:
        return (0.0, self.t_low)

    @property
    def mixing_interval(self) -> tuple[float, float]:
        return (self.t_low, self.t_high)

    @property
    def pure_new_interval(self) -> tuple[float, float]:
        return (self.t_high, math.inf)

    @property
    def has_mixing(self) -> bool:
        return self.t_high > self.t_low


@dataclass(frozen=True)
class MemoryReport:
    lh: LHParams
    changes: tuple[ModeChange, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.changes)

    def __len__(self) -> int:
        return len(self.changes)

    def __getitem__(self, i: int) -> ModeChange:
        return self.changes[i]

    @property
    def has_long_memory(self) -> bool:
        return any(c.memory_class is MemoryClass.LONG for c in self.changes)

    @property
    def t_star(self) -> float:
        """End of the pure initial-order window (``inf`` with no mode changes)."""
        return min((c.t_low for c in self.changes), default=math.inf)

    @property
    def T_star(self) -> float:
        """Start of the pure final-order window (``0`` with no mode changes)."""
        return max((c.t_high for c in self.changes), default=0.0)


def _classify_one(T: float, lh: LHParams) -> ModeChange:
    mu, nu = lh.mu, lh.nu
    by_mu, by_sum = critical_times(T, lh)
    if mu == 0.0:
        # nu > 0 here: the old order is seen until T/nu, the new one never alone
        return ModeChange(T, MemoryClass.LONG, by_sum, math.inf)
    if mu + nu == 0.0:
        return ModeChange(T, MemoryClass.LONG, by_mu, math.inf)
    if math.isinf(by_mu) or math.isinf(by_sum):
        raise OverflowError(
            f"critical time for T = {T} overflows with (mu, nu) = ({mu}, {nu})"
        )
    if nu > 0.0:
        return ModeChange(T, MemoryClass.SHORT, by_sum, by_mu)
    if nu < 0.0:
        return ModeChange(T, MemoryClass.SHORT, by_mu, by_sum)
    cls = MemoryClass.NONE if mu == 1.0 else MemoryClass.SHORT
    return ModeChange(T, cls, by_mu, by_mu)


def classify_memory(of: OrderFunction, lh: LHParams) -> MemoryReport:
    """Classify every mode change of ``of`` under the parameters ``lh``."""
    if lh.mu == 0.0 and lh.nu == 0.0:
        raise ValueError("mu = nu = 0 gives a degenerate operator with a frozen order")
    return MemoryReport(lh, tuple(_classify_one(T, lh) for T in of.breakpoints))
