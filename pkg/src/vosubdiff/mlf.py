"""Mittag-Leffler functions of real argument.

Evaluates the two-parameter function

.. math::

    E_{\\alpha,\\gamma}(z) = \\sum_{n \\ge 0} \\frac{z^n}{\\Gamma(\\alpha n + \\gamma)},
    \\qquad 0 < \\alpha \\le 1,

for real (vectorized) ``z``. The one-parameter function is ``E_beta = E_{beta,1}``.

Regimes are selected on ``q = |z|**(1/alpha)``, which controls both the size of
the largest series term (about ``exp(q)``) and the accuracy of the asymptotic
expansion (about ``exp(-q)``):

* ``q < 1`` (or ``z < 0`` and ``q <= Q_DOUBLE``): plain double-precision
  Horner sum of the series;
* ``z < 0`` and ``Q_DOUBLE < q <= Q_DD``: the series summed in double-double
  arithmetic with coefficients rounded from multiprecision values;
* ``z < 0`` and ``q > Q_DD``: the algebraic asymptotic expansion
  ``-sum_k z**-k / Gamma(gamma - alpha k)`` truncated at its smallest term,
  plus the exponentially small pair from ``zeta = q exp(+-i pi/alpha)`` with
  Berry's smooth Stokes multiplier (this pair is what remains as ``alpha -> 1``);
* ``z > 0``: the series up to ``Q_POS`` (no cancellation), otherwise the
  exponential leading term plus the algebraic expansion.

Both negative-axis methods carry an a-posteriori error estimate (cancellation
for the series, smallest included term for the expansion). Points where the
chosen method misses ``FALLBACK_RTOL`` try the other one and, failing that, are
summed in multiprecision. In practice this only happens for orders close to 1
near ``q = Q_DD``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import erfc, rgamma

__all__ = [
    "MLParams",
    "mittag_leffler",
    "mlf_asymptotic_check",
    "mlf_deriv",
    "mlf_eval",
]

#: largest ``q`` summed in plain double precision for negative arguments
Q_DOUBLE = 2.0
#: switch from the double-double series to the asymptotic expansion
Q_DD = 36.0
#: bin edges in ``q`` for the double-double series (term counts per bin)
_DD_BINS = (Q_DOUBLE, 4.0, 8.0, 12.0, 18.0, 26.0, Q_DD)
#: switch from the series to the exponential asymptotics for positive arguments
Q_POS = 40.0
#: largest ``z**(1/alpha)`` accepted for positive arguments (``exp`` overflow)
Q_OVERFLOW = 700.0
#: estimated relative error above which a negative-axis value is recomputed
FALLBACK_RTOL = 1.0e-14
#: largest ``q`` at which the series is tried as an alternative to the expansion
Q_SERIES_ALT = 60.0
#: largest ``q`` summed in multiprecision; beyond it the expansion is kept
Q_MP = 200.0

_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class MLParams:
    """Order and accuracy target for Mittag-Leffler evaluation."""

    beta: float
    target_rel_err: float = 1.0e-12

    def __post_init__(self) -> None:
        _check_order(self.beta)
        if not self.target_rel_err > 0:
            raise ValueError(
                f"target_rel_err must be positive: got {self.target_rel_err}"
            )


def _check_order(beta: float) -> None:
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"Mittag-Leffler order must lie in (0, 1]: got {beta}")


# {{{ double-double helpers


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _dd_add_dd(ahi, alo, bhi, blo):
    s, e = _two_sum(ahi, bhi)
    e = e + (alo + blo)
    t = s + e
    return t, e - (t - s)


@lru_cache(maxsize=64)
def _dd_coefficients(alpha: float, gamma: float, nterms: int):
    """``1/Gamma(alpha n + gamma)`` for ``n < nterms`` as (hi, lo) arrays."""
    with mpmath.workdps(40):
        a = mpmath.mpf(alpha)
        g = mpmath.mpf(gamma)
        hi = np.empty(nterms)
        lo = np.empty(nterms)
        for n in range(nterms):
            c = mpmath.rgamma(a * n + g)
            h = float(c)
            hi[n] = h
            lo[n] = float(c - h)
    return hi, lo


# }}}


def _series_nterms(alpha: float, gamma: float, xmax: float, log_tol: float) -> int:
    """Number of series terms needed so that the tail is below ``exp(log_tol)``."""
    if xmax == 0.0:
        return 1
    logx = math.log(xmax)
    n = 1
    while True:
        # terms are log-concave in n: once past the peak and below tol, stop
        lt = n * logx - math.lgamma(alpha * n + gamma)
        nxt = (n + 1) * logx - math.lgamma(alpha * (n + 1) + gamma)
        if lt < log_tol and nxt < lt:
            return n + 1
        n += 1


def _series_double(alpha: float, gamma: float, z: np.ndarray) -> np.ndarray:
    nterms = _series_nterms(alpha, gamma, float(np.max(np.abs(z))), -40.0)
    coeffs = rgamma(alpha * np.arange(nterms) + gamma)
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _series_dd(alpha: float, gamma: float, z: np.ndarray) -> np.ndarray:
    nterms = _series_nterms(alpha, gamma, float(np.max(np.abs(z))), -80.0)
    # round the term count up so the coefficient cache is reused across calls
    nterms = int(2 ** math.ceil(math.log2(max(nterms, 16))))
    chi, clo = _dd_coefficients(float(alpha), float(gamma), nterms)
    hi = np.zeros_like(z)
    lo = np.zeros_like(z)
    zh, zl = _split(z)
    for n in range(nterms - 1, -1, -1):
        # (hi, lo) * z with z split once outside the loop
        p = hi * z
        ah, al = _split(hi)
        e = ((ah * zh - p) + ah * zl + al * zh) + al * zl + lo * z
        hi = p + e
        lo = e - (hi - p)
        hi, lo = _dd_add_dd(hi, lo, chi[n], clo[n])
    return hi + lo


def _asymptotic_negative(alpha: float, gamma: float, z: np.ndarray):
    """Expansion for ``z < 0``; returns ``(value, error estimate)``.

    The coefficients ``1/Gamma(gamma - alpha k)`` are formed by reflection from
    the exact offsets ``d + k (1 - alpha)`` to the poles, so orders within an ulp
    of 1 keep full relative accuracy.
    """
    x = -z
    logx = np.log(x)
    eps = 1.0 - alpha
    n_g = round(gamma)
    d_g = gamma - n_g
    acc = np.zeros_like(z)
    err = np.zeros_like(z)
    active = np.ones(z.shape, dtype=bool)
    prev_env = None
    for k in range(1, 401):
        w = gamma - alpha * k
        if w > 0.5:
            logc, coef = -math.lgamma(w), 1.0
        else:
            # 1/Gamma(w) = sin(pi w) Gamma(1 - w) / pi
            logc = math.lgamma(1.0 - w) - math.log(math.pi)
            coef = math.sin(math.pi * (d_g + k * eps)) * (-1.0) ** ((n_g - k) % 2)
        env = logc - k * logx
        if 1.0 - w > 1.5:
            # past the smallest term, or negligible against the running sum
            stop = np.zeros(z.shape, dtype=bool) if prev_env is None else env > prev_env
            with np.errstate(divide="ignore"):
                stop |= (acc != 0) & (env < np.log(np.abs(acc)) - 40.0)
            active &= ~stop
            prev_env = env
        if not active.any():
            break
        mag = np.exp(np.where(active, env, -np.inf))
        term = -((-1.0) ** k) * coef * mag
        err = np.where(active, np.abs(term), err)
        acc = acc + term
    if alpha > 2.0 / 3.0:
        # exp(zeta) for zeta = q exp(i (pi + th)) and its conjugate, switched on
        # by erfc(sigma) across the Stokes line at th = 0
        q = x ** (1.0 / alpha)
        th = math.pi * eps / alpha
        c, sn = math.cos(th), math.sin(th)
        sigma = q * sn / np.sqrt(2.0 * q * c)
        phase = (1.0 - gamma) * (math.pi + th) - q * sn
        acc = acc + q ** (1.0 - gamma) * np.exp(-q * c) * np.cos(phase) * erfc(sigma) / alpha
    return acc, err


def _series_mp(alpha: float, gamma: float, z: float, hint: float) -> float:
    """Series in multiprecision with enough digits for the cancellation."""
    q = abs(z) ** (1.0 / alpha)
    small = -math.log(abs(hint)) if hint != 0 and math.isfinite(hint) else 2.0 * q
    digits = 30 + int((q + max(small, 0.0)) / math.log(10.0))
    with mpmath.workdps(digits):
        a, g, zz = mpmath.mpf(alpha), mpmath.mpf(gamma), mpmath.mpf(z)
        tol = mpmath.mpf(10) ** (-25)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        n = 0
        while True:
            term = power * mpmath.rgamma(a * n + g)
            total += term
            if alpha * n > q + 10 and abs(term) <= tol * abs(total):
                return float(total)
            power *= zz
            n += 1


def _dd_error(alpha: float, gamma: float, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    # the sum of |terms| is E_{alpha,gamma}(q**alpha) ~ q**(1-gamma) e**q / alpha
    with np.errstate(divide="ignore", over="ignore"):
        return 2.0**-104 * np.exp(q) * np.maximum(q, 1.0) ** (1.0 - gamma) / alpha / np.abs(v)


def _asymptotic_positive(alpha: float, gamma: float, z: np.ndarray) -> np.ndarray:
    q = z ** (1.0 / alpha)
    if np.any(q > Q_OVERFLOW):
        raise OverflowError(
            f"Mittag-Leffler value overflows: z**(1/alpha) = {float(q.max()):.6g} "
            f"exceeds {Q_OVERFLOW}"
        )
    lead = z ** ((1.0 - gamma) / alpha) * np.exp(q) / alpha
    return lead + _algebraic_tail(alpha, gamma, z)


def _algebraic_tail(alpha: float, gamma: float, z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    zinv = 1.0 / z
    power = np.ones_like(z)
    for k in range(1, 8):
        power = power * zinv
        acc = acc - power * rgamma(gamma - alpha * k)
    return acc


def mittag_leffler(alpha: float, gamma: float, z):
    """Two-parameter Mittag-Leffler function ``E_{alpha,gamma}(z)`` for real ``z``.

    ``alpha`` must lie in ``(0, 1]`` and ``gamma > 0``. Returns a float for
    scalar input and an array otherwise.
    """
    _check_order(alpha)
    if not gamma > 0:
        raise ValueError(f"second parameter must be positive: got {gamma}")

    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("Mittag-Leffler argument must be finite")

    flat = z.ravel()
    out = np.empty_like(flat)

    if alpha == 1.0 and gamma == 1.0:
        if np.any(flat > Q_OVERFLOW):
            raise OverflowError(f"exp overflow for argument {float(flat.max()):.6g}")
        out[:] = np.exp(flat)
    else:
        q = np.abs(flat) ** (1.0 / alpha)
        neg = flat < 0.0
        small = (q < 1.0) | (neg & (q <= Q_DOUBLE))
        mid = neg & ~small & (q <= Q_DD)
        far = neg & (q > Q_DD)
        pos_series = ~neg & ~small & (q <= Q_POS)
        pos_far = ~neg & (q > Q_POS)

        if small.any():
            out[small] = _series_double(alpha, gamma, flat[small])
        rel = np.zeros_like(flat)
        for lo, hi in zip(_DD_BINS, _DD_BINS[1:]):
            sel = mid & (q > lo) & (q <= hi)
            if sel.any():
                out[sel] = _series_dd(alpha, gamma, flat[sel])
                rel[sel] = _dd_error(alpha, gamma, q[sel], out[sel])
        if far.any():
            v, e = _asymptotic_negative(alpha, gamma, flat[far])
            out[far] = v
            with np.errstate(divide="ignore"):
                rel[far] = e / np.abs(v)
        _repair(alpha, gamma, flat, q, out, rel, mid, far)
        if pos_series.any():
            out[pos_series] = _series_double(alpha, gamma, flat[pos_series])
        if pos_far.any():
            out[pos_far] = _asymptotic_positive(alpha, gamma, flat[pos_far])

    out = out.reshape(z.shape)
    return float(out) if scalar else out


def _repair(alpha, gamma, flat, q, out, rel, mid, far) -> None:
    """Recompute negative-axis points whose error estimate misses ``FALLBACK_RTOL``."""
    bad = (mid | far) & ~(rel <= FALLBACK_RTOL) & (q <= Q_MP)
    if not bad.any():
        return
    idx = np.flatnonzero(bad)
    in_mid = mid[idx]
    idx_far = idx[~in_mid]
    tries = q[idx_far] <= Q_SERIES_ALT
    # the other fast method first
    alt = np.empty(idx.size)
    alt_rel = np.empty(idx.size)
    if in_mid.any():
        v, e = _asymptotic_negative(alpha, gamma, flat[idx[in_mid]])
        alt[in_mid] = v
        with np.errstate(divide="ignore", invalid="ignore"):
            alt_rel[in_mid] = e / np.abs(v)
    alt[~in_mid] = np.nan
    alt_rel[~in_mid] = np.inf
    if tries.any():
        j = idx_far[tries]
        v = _series_dd(alpha, gamma, flat[j])
        sub = np.flatnonzero(~in_mid)[tries]
        alt[sub] = v
        alt_rel[sub] = _dd_error(alpha, gamma, q[j], v)
    better = alt_rel < rel[idx]
    out[idx[better]] = alt[better]
    rel[idx[better]] = alt_rel[better]
    for i in idx[~(rel[idx] <= FALLBACK_RTOL)]:
        out[i] = _series_mp(alpha, gamma, float(flat[i]), float(out[i]))


def mlf_eval(beta: float, z, target_rel_err: float = 1.0e-12):
    """One-parameter Mittag-Leffler function ``E_beta(z)``.

    ``E_beta(0) == 1`` exactly and ``E_1 == exp``. Positive arguments are
    supported while ``z**(1/beta) <= 700``; beyond that ``OverflowError`` is
    raised.
    """
    MLParams(beta, target_rel_err)
    return mittag_leffler(beta, 1.0, z)


def mlf_deriv(beta: float, z, target_rel_err: float = 1.0e-12):
    """Derivative ``d/dz E_beta(z)``, computed as ``E_{beta,beta}(z) / beta``."""
    MLParams(beta, target_rel_err)
    return mittag_leffler(beta, beta, z) / beta


def mlf_asymptotic_check(beta: float, t: float) -> float:
    """Return ``E_beta(-t) * Gamma(1 - beta) * t``, which tends to 1 as ``t -> oo``."""
    _check_order(beta)
    if beta == 1.0:
        raise ValueError("asymptotic check is undefined for beta = 1 (Gamma(0) pole)")
    if t < 50:
        raise ValueError(f"asymptotic check requires t >= 50: got {t}")
    return mlf_eval(beta, -t) * math.gamma(1.0 - beta) * t
