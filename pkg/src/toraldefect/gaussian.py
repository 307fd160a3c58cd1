"""Analytic defect variance for arithmetic random waves.

For a centred unit-variance Gaussian field with covariance ``r``, the defect
over a ball ``B(s)`` has variance

    Var = (2 / (pi^3 s^4)) * int_{|u| <= 2s} arcsin(r(u)) W_s(|u|) du,

with ``W_s`` the lens area.  Expanding ``arcsin`` in its Taylor series turns
each term into a restricted moment of ``r_n``, and each restricted moment is
a finite Bessel sum over the distinct sum-vectors of ``l``-tuples of lattice
points.  The sum-vectors come from the multiset convolutions in
:mod:`toraldefect.lattice`.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from . import lattice
from .errors import ConvergenceError, EmptySpectrumError, UnsupportedLengthError
from .lattice import EnergyLevel
from .specfun import (
    arcsin_coefficients,
    bessel_j1,
    bessel_j1_zero,
    lens_area,
)

MAX_MOMENT_LENGTH = 8
MAX_VARIANCE_ORDER = 3  # 2K + 1 <= 7


def _require_radius(s: float) -> None:
    if not (0 < s < 0.5):
        raise ValueError("radius out of range")


def _require_level(level: EnergyLevel) -> None:
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")


def covariance(level: EnergyLevel, x) -> np.ndarray | float:
    """``r_n(x) = (1/N) sum_lambda cos(2 pi <lambda, x>)``; ``x`` has shape ``(..., 2)``."""
    _require_level(level)
    x = np.asarray(x, dtype=float)
    phase = 2 * np.pi * (x[..., None, 0] * level.array[:, 0] + x[..., None, 1] * level.array[:, 1])
    r = np.cos(phase).mean(axis=-1)
    return float(r) if r.ndim == 0 else r


def covariance_grid(level: EnergyLevel, G: int) -> np.ndarray:
    """``r_n`` on the ``G x G`` torus grid ``(i/G, j/G)``, via a separable product."""
    _require_level(level)
    t = np.arange(G) / G
    U = np.exp(2j * np.pi * np.outer(t, level.array[:, 0]))
    V = np.exp(2j * np.pi * np.outer(t, level.array[:, 1]))
    return (U @ V.T).real / level.multiplicity


def torus_moment_grid(level: EnergyLevel, l: int, G: int = 512) -> float:
    """Riemann sum of ``r_n^l`` over the torus; exact once ``G > l sqrt(n)``."""
    r = covariance_grid(level, G)
    return float(np.mean(r**l))


@dataclass
class MomentValue:
    n: int
    l: int
    s: float
    value: float
    diagonal_part: float
    offdiagonal_part: float


def moment_integral(level: EnergyLevel, s: float, l: int) -> MomentValue:
    """``int int_{B(s)^2} r_n(x - y)^l dx dy`` as an exact Bessel sum."""
    _require_level(level)
    _require_radius(s)
    if not (1 <= l <= MAX_MOMENT_LENGTH):
        raise UnsupportedLengthError("correlation length unsupported")
    N = level.multiplicity
    vec, cnt = lattice.sum_multiset(level, l)
    norm2 = vec[:, 0] ** 2 + vec[:, 1] ** 2
    zero = norm2 == 0
    n_zero = int(cnt[zero].sum())
    nz2 = norm2[~zero]
    c = cnt[~zero]
    order = np.lexsort((vec[~zero][:, 1], vec[~zero][:, 0]))
    rad = np.sqrt(nz2.astype(float))
    terms = c.astype(float) * bessel_j1(2 * np.pi * s * rad) ** 2 / nz2
    scale = float(N) ** -l
    diag = (math.pi * s * s) ** 2 * n_zero * scale
    off = s * s * scale * math.fsum(terms[order].tolist())
    return MomentValue(n=level.n, l=l, s=s, value=diag + off, diagonal_part=diag, offdiagonal_part=off)


def _zero_data(T: float) -> tuple[int, float, float]:
    x = 2 * T - 0.25
    t = math.floor(x + 0.5)
    rho = x - t
    t_eff = max(t, 1)
    return t, rho, abs(2 * math.pi * T - bessel_j1_zero(t_eff))


@dataclass
class BesselZeroReport:
    t: int
    rho: float
    distance: float
    observed_C: float


def bessel_zero_report(T: float) -> BesselZeroReport:
    """Write ``2T - 1/4 = t + rho`` and measure ``|2 pi T - j_{1,t}|``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    t, rho, dist = _zero_data(T)
    return BesselZeroReport(t=t, rho=rho, distance=dist, observed_C=abs(dist - math.pi * abs(rho)) * T)


def lower_bound(T: float) -> float:
    """``(2/pi^3) J1(2 pi T)^2 / T^2``: the first term of the variance series."""
    return 2.0 / math.pi**3 * bessel_j1(2 * math.pi * T) ** 2 / T**2


@dataclass
class VarianceReport:
    n: int
    s: float
    T: float
    K: int
    value: float
    tail_bound: float
    per_k: list[tuple[int, float]]
    bessel_zero_distance: float
    rho: float
    lower_bound: float = 0.0
    quadrature: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_k"] = [[k, v] for k, v in self.per_k]
        return d


def analytic_variance(level: EnergyLevel, s: float, K: int) -> VarianceReport:
    """Truncated arcsine series for the defect variance with a certified tail.

    Since ``|r_n| <= 1``, every dropped term obeys
    ``|r|^(2k+1) <= r^(2K+2)`` for ``k > K``, so the remainder is at most
    ``(2/(pi^3 s^4)) * sum_{k>K} a_k * M_{2K+2}`` with ``M_l`` the restricted
    moment.  The cruder bound ``(2/pi) sum_{k>K} a_k`` (``|r| <= 1`` and the
    ball-pair volume) is also computed and the smaller one reported.
    """
    _require_level(level)
    _require_radius(s)
    if not (0 <= K <= MAX_VARIANCE_ORDER):
        raise UnsupportedLengthError("Taylor order exceeds the moment budget")
    T = s * math.sqrt(level.n)
    taylor = arcsin_coefficients(K)
    pref = 2.0 / (math.pi**3 * s**4)
    lb = lower_bound(T)
    per_k = [(0, lb)]
    for k in range(1, K + 1):
        m = moment_integral(level, s, 2 * k + 1).value
        per_k.append((k, pref * taylor.coefficients[k] * m))
    # all terms are non-negative; fsum rounds correctly so value >= lb
    value = math.fsum(v for _, v in per_k)
    rest = taylor.full_tail()
    even = moment_integral(level, s, 2 * K + 2).value
    tail = min(pref * rest * even, 2.0 / math.pi * rest)
    tail = tail * (1 + 1e-12) + 1e-15
    t, rho, dist = _zero_data(T)
    return VarianceReport(
        n=level.n,
        s=s,
        T=T,
        K=K,
        value=value,
        tail_bound=tail,
        per_k=per_k,
        bessel_zero_distance=dist,
        rho=rho,
        lower_bound=lb,
    )


def arcsin_variance_quadrature(
    level: EnergyLevel, s: float, epsabs: float = 1e-9, epsrel: float = 1e-9, return_error: bool = False
):
    """``(2/(pi^3 s^4)) int_{|u|<=2s} arcsin(r_n(u)) W_s(|u|) du`` by adaptive quadrature.

    ``E_n`` is invariant under the dihedral group of the square, hence so is
    ``r_n``; the angular integral runs over ``[0, pi/4]`` and is multiplied by 8.
    """
    _require_level(level)
    _require_radius(s)
    pts = level.array.astype(float)

    def inner(rho: float) -> float:
        def f(theta: float) -> float:
            u = (rho * math.cos(theta), rho * math.sin(theta))
            r = np.cos(2 * np.pi * (pts[:, 0] * u[0] + pts[:, 1] * u[1])).mean()
            return math.asin(min(1.0, max(-1.0, r)))

        val, _ = integrate.quad(f, 0.0, math.pi / 4, epsabs=epsabs, epsrel=epsrel, limit=200)
        return 8.0 * val * rho * lens_area(rho, s)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(inner, 0.0, 2 * s, epsabs=epsabs * s * s, epsrel=epsrel, limit=200)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature did not reach tolerance: {exc}") from exc
    pref = 2.0 / (math.pi**3 * s**4)
    if return_error:
        return pref * val, pref * err
    return pref * val


def special_tuple_contribution(level: EnergyLevel, s: float, m: int) -> float:
    """Contribution of the ``N_n`` tuples ``(lam, ..., lam, i lam, ..., i lam)``.

    With ``a`` copies of ``lam`` and ``b`` copies of ``i lam``, the sum is
    ``(a + i b) lam`` of squared norm ``m n`` where ``m = a^2 + b^2``.  The
    length ``a + b = 2k + 1`` is odd because ``m`` is.
    """
    _require_level(level)
    _require_radius(s)
    if m < 1 or m % 2 == 0:
        raise ValueError("m must be a positive odd integer")
    rep = None
    for a in range(1, math.isqrt(m) + 1):
        b2 = m - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            rep = (a, b)
            break
    if rep is None:
        raise ValueError(f"{m} is not a sum of two squares")
    a, b = rep
    k = (a + b - 1) // 2
    for lam in level.points:
        rot = lam.rotate()
        sx, sy = a * lam.x + b * rot.x, a * lam.y + b * rot.y
        if sx * sx + sy * sy != m * level.n:
            raise AssertionError("special tuple has the wrong norm")
    coeff = arcsin_coefficients(k).coefficients[k]
    N = level.multiplicity
    nm = level.n * m
    return 2.0 / (math.pi**3 * s * s) * coeff * float(N) ** (-2 * k) * bessel_j1(2 * math.pi * s * math.sqrt(nm)) ** 2 / nm


# --- Diophantine maximin ----------------------------------------------------------


def primes_one_mod_four(K: int) -> list[int]:
    if K < 2:
        return []
    sieve = np.ones(K + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(K) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.flatnonzero(sieve) if p % 4 == 1]


def sqrt_distance(x: int) -> float:
    """Distance from ``sqrt(x)`` to the nearest integer, without cancellation.

    With ``m = isqrt(x)``, the two candidate gaps are rewritten as
    ``(x - m^2)/(sqrt x + m)`` and ``((m+1)^2 - x)/(sqrt x + m + 1)`` whose
    numerators are exact integers.
    """
    m = math.isqrt(x)
    r = math.sqrt(x)
    lo = (x - m * m) / (r + m)
    hi = ((m + 1) ** 2 - x) / (r + m + 1)
    return min(lo, hi)


def diophantine_maximin(q: int, K: int) -> tuple[int, float]:
    """``max_{p in P_K} <q sqrt p>`` over primes ``p <= K``, ``p = 1 mod 4``."""
    primes = primes_one_mod_four(K)
    if not primes:
        raise ValueError("no primes p = 1 mod 4 up to K")
    best = max(primes, key=lambda p: (sqrt_distance(q * q * p), -p))
    return best, sqrt_distance(q * q * best)


def diophantine_maximin_many(qs, K: int) -> np.ndarray:
    """Vectorised maximin values for an integer array ``qs`` (``q^2 K < 2^62``)."""
    primes = primes_one_mod_four(K)
    if not primes:
        raise ValueError("no primes p = 1 mod 4 up to K")
    q = np.asarray(qs, dtype=np.int64)
    best = np.zeros(q.shape)
    for p in primes:
        x = q * q * p
        m = np.floor(np.sqrt(x.astype(float))).astype(np.int64)
        m -= (m * m > x).astype(np.int64)
        m += ((m + 1) * (m + 1) <= x).astype(np.int64)
        r = np.sqrt(x.astype(float))
        lo = (x - m * m) / (r + m)
        hi = ((m + 1) ** 2 - x) / (r + m + 1)
        best = np.maximum(best, np.minimum(lo, hi))
    return best


# --- batch -------------------------------------------------------------------------


def run_batch(path: str) -> list[VarianceReport]:
    """Analytic variances for every ``n,s,K`` row of a CSV file."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n", "s", "K"]:
            raise ValueError("batch header must be exactly n,s,K")
        for row in reader:
            level = lattice.enumerate_lattice_points(int(row["n"]))
            out.append(analytic_variance(level, float(row["s"]), int(row["K"])))
    return out
