"""Bessel J0/J1, zeros of J1, arcsine Taylor data, lens areas.

The Bessel routines are self-contained and vectorised.  Three regimes:

* ``x < 8``: the power series (largest term < 120, so cancellation costs
  at most two digits);
* ``8 <= x < 25``: Miller's backward recurrence normalised by
  ``J0 + 2 (J2 + J4 + ...) = 1``;
* ``x >= 25``: Hankel's asymptotic expansion, summed until the terms drop
  below 1e-17 (the smallest term there is about ``exp(-2x)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError

SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 25.0


def _series(x: np.ndarray, order: int) -> np.ndarray:
    h = x / 2.0
    q = -h * h
    term = np.ones_like(x) if order == 0 else h.copy()
    total = term.copy()
    for k in range(1, 60):
        term = term * q / (k * (k + order))
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _miller(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xmax = float(np.max(x))
    m = 2 * int((xmax + 30 + math.sqrt(40 * xmax)) / 2 + 1)
    jp = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    j1 = np.zeros_like(x)
    for k in range(m, 0, -1):
        jm = (2.0 * k / x) * j - jp
        jp, j = j, jm
        # j now holds J_{k-1}, jp holds J_k (unnormalised)
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 == 1:
            j1 = j.copy()
        big = np.abs(j) > 1e200
        if np.any(big):
            j[big] *= 1e-200
            jp[big] *= 1e-200
            norm[big] *= 1e-200
            j1[big] *= 1e-200
    norm += j  # J_0 term
    return j / norm, j1 / norm


def _hankel(x: np.ndarray, order: int) -> np.ndarray:
    mu = 4.0 * order * order
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 60):
        new = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if np.all(np.abs(new) >= np.abs(term)) and k > 2:
            break
        term = new
        sign = (-1) ** (k // 2)
        if k % 2 == 0:
            p += sign * term
        else:
            q += sign * term
        if np.all(np.abs(term) < 1e-17):
            break
    chi = x - (0.5 * order + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _bessel(x, order: int):
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    a = np.atleast_1d(arr).astype(float)
    if np.any(a < 0):
        raise ValueError("argument must be non-negative")
    out = np.empty_like(a)
    lo = a < SERIES_MAX
    hi = a >= ASYMPTOTIC_MIN
    mid = ~(lo | hi)
    if np.any(lo):
        out[lo] = _series(a[lo], order)
    if np.any(mid):
        j0, j1 = _miller(a[mid])
        out[mid] = j0 if order == 0 else j1
    if np.any(hi):
        out[hi] = _hankel(a[hi], order)
    return float(out[0]) if scalar else out


def bessel_j0(x):
    """J0 on ``x >= 0``; absolute error below 1e-12 on ``[0, 1e4]``."""
    return _bessel(x, 0)


def bessel_j1(x):
    """J1 on ``x >= 0``; absolute error below 1e-12 on ``[0, 1e4]``."""
    return _bessel(x, 1)


def bessel_j1_zero(t: int, tol: float = 1e-13, max_iter: int = 60) -> float:
    """The ``t``-th positive zero of J1.

    Newton from McMahon's leading term ``(t + 1/4) pi``; falls back to
    bisection on ``((t - 1/4) pi, (t + 3/4) pi)``, which holds exactly one zero.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    lo, hi = (t - 0.25) * math.pi, (t + 0.75) * math.pi
    x = (t + 0.25) * math.pi
    for _ in range(max_iter):
        f = bessel_j1(x)
        df = bessel_j0(x) - f / x
        step = f / df
        x -= step
        if not (lo < x < hi):
            break
        if abs(step) < tol * max(1.0, x):
            return x
    flo, fhi = bessel_j1(lo), bessel_j1(hi)
    if flo * fhi > 0:
        raise ConvergenceError(f"no sign change of J1 around zero #{t}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = bessel_j1(mid)
        if fm == 0 or hi - lo < tol * mid:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    raise ConvergenceError(f"bisection for zero #{t} did not converge")


def mcmahon_constant(t: int) -> float:
    """Observed ``t * |j_{1,t} - (t + 1/4) pi|``."""
    return t * abs(bessel_j1_zero(t) - (t + 0.25) * math.pi)


# --- arcsine -------------------------------------------------------------------

MAX_TAYLOR_ORDER = 200
_MAJORANT_C = 1.0 / (2.0 * math.sqrt(math.pi))


def arcsin_majorant(k):
    """Upper bound for the ``k``-th arcsine Taylor coefficient, ``k >= 1``."""
    k = np.asarray(k, dtype=float)
    return _MAJORANT_C * k**-1.5 * (1 + 0.25 / k)


@dataclass(frozen=True)
class TaylorTail:
    """Coefficients ``a_0..a_K`` of ``arcsin t = sum a_k t^(2k+1)`` and tail bounds."""

    K: int
    coefficients: tuple[float, ...]

    def partial_sum(self, t):
        t = np.asarray(t, dtype=float)
        t2 = t * t
        acc = np.zeros_like(t)
        for a in reversed(self.coefficients):
            acc = acc * t2 + a
        return acc * t

    def full_tail(self) -> float:
        """Certified upper bound for ``sum_{k > K} a_k``."""
        exact = (math.pi / 2 - math.fsum(self.coefficients)) * (1 + 1e-12) + 1e-15
        if self.K == 0:
            return exact
        K = self.K
        integral = _MAJORANT_C * (2 * K**-0.5 + K**-1.5 / 6)
        return min(exact, integral)

    def tail_bound(self, t_max: float) -> float:
        """Bound on ``|arcsin t - partial_sum(t)|`` over ``|t| <= t_max``."""
        t = abs(float(t_max))
        if t > 1:
            raise ValueError("t_max must be <= 1")
        rest = self.full_tail()
        if t == 1.0:
            return rest
        p = t ** (2 * self.K + 3)
        a_next = self.coefficients[-1] * (2 * self.K + 1) ** 2 / ((2 * self.K + 2) * (2 * self.K + 3))
        return min(a_next * p / (1 - t * t), rest * p)


def arcsin_coefficients(K: int) -> TaylorTail:
    if not (0 <= K <= MAX_TAYLOR_ORDER):
        raise ValueError("Taylor order unsupported")
    coeffs = [1.0]
    for k in range(1, K + 1):
        coeffs.append(coeffs[-1] * (2 * k - 1) ** 2 / (2 * k * (2 * k + 1)))
    return TaylorTail(K=K, coefficients=tuple(coeffs))


# --- geometry --------------------------------------------------------------------


def lens_area(d, s):
    """Area of the intersection of two radius-``s`` discs at centre distance ``d``."""
    d = np.asarray(d, dtype=float)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    out = np.zeros_like(d)
    inside = d < 2 * s
    theta = np.arccos(d[inside] / (2 * s))
    # s^2 (2 theta - sin 2 theta) avoids the cancellation of the textbook form near tangency
    out[inside] = s * s * (2 * theta - np.sin(2 * theta))
    return float(out[0]) if scalar else out


def nearest_integer_distance(t):
    t = np.asarray(t, dtype=float)
    r = np.abs(t - np.round(t))
    return float(r) if r.ndim == 0 else r
