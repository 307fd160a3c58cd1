"""Lattice points on circles and their additive combinatorics.

Everything here is exact integer arithmetic.  Multisets of ``k``-fold sums of
lattice points are represented as a pair ``(vectors, counts)`` with
``vectors`` an ``(M, 2)`` int64 array of distinct sum vectors (sorted
lexicographically) and ``counts`` the number of ordered ``k``-tuples hitting
each one.  Convolving two such multisets is how all correlation counts are
obtained without touching ``N**l`` tuples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import mpmath
import numpy as np

from .errors import BudgetError, EmptySpectrumError, UnsupportedLengthError

MAX_CORRELATION_LENGTH = 8
DEFAULT_MEMORY_CAP = 2 * 1024**3


class LatticePoint(tuple):
    """An integer vector ``(x, y)``; a tuple so it hashes and sorts."""

    __slots__ = ()

    def __new__(cls, x: int, y: int):
        return super().__new__(cls, (int(x), int(y)))

    @property
    def x(self) -> int:
        return self[0]

    @property
    def y(self) -> int:
        return self[1]

    @property
    def norm2(self) -> int:
        return self[0] * self[0] + self[1] * self[1]

    def __neg__(self) -> "LatticePoint":
        return LatticePoint(-self[0], -self[1])

    def rotate(self) -> "LatticePoint":
        """Multiplication by i."""
        return LatticePoint(-self[1], self[0])

    def __repr__(self) -> str:
        return f"({self[0]}, {self[1]})"


@dataclass(frozen=True)
class EnergyLevel:
    n: int
    points: tuple[LatticePoint, ...]
    multiplicity: int
    array: np.ndarray = field(repr=False, compare=False)

    @property
    def is_empty(self) -> bool:
        return self.multiplicity == 0

    def half_spectrum(self) -> np.ndarray:
        """One representative of each antipodal pair: angle in ``[0, pi)``."""
        a = self.array
        keep = (a[:, 1] > 0) | ((a[:, 1] == 0) & (a[:, 0] > 0))
        return a[keep]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "points": [list(p) for p in self.points],
            "multiplicity": self.multiplicity,
        }


@dataclass
class CorrelationReport:
    n: int
    l: int
    count: int
    tuples: list[tuple[LatticePoint, ...]] | None = None
    minimal_count: int | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "l": self.l,
            "count": self.count,
            "tuples": None if self.tuples is None else [[list(p) for p in t] for t in self.tuples],
            "minimal_count": self.minimal_count,
        }


@dataclass
class AngularMeasure:
    angles: np.ndarray
    star_discrepancy: float

    def to_dict(self) -> dict:
        return {"angles": self.angles.tolist(), "star_discrepancy": self.star_discrepancy}


def r2_divisor_formula(n: int) -> int:
    """r_2(n) = 4 (d_1(n) - d_3(n)), divisors counted by residue mod 4."""
    if n < 1:
        raise ValueError("n must be positive")
    total = 0
    for d in range(1, math.isqrt(n) + 1):
        if n % d:
            continue
        for e in {d, n // d}:
            if e % 4 == 1:
                total += 1
            elif e % 4 == 3:
                total -= 1
    return 4 * total


def is_sum_of_two_squares(n: int) -> bool:
    if n < 1:
        raise ValueError("n must be positive")
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            if p % 4 == 3 and e % 2:
                return False
        p += 1
    return not (m > 1 and m % 4 == 3)


@lru_cache(maxsize=4096)
def enumerate_lattice_points(n: int) -> EnergyLevel:
    """All ``(x, y)`` with ``x^2 + y^2 = n``, ordered by angle in ``[0, 2 pi)``."""
    if n < 1:
        raise ValueError("n must be positive")
    pts = []
    r = math.isqrt(n)
    for x in range(-r, r + 1):
        rem = n - x * x
        y = math.isqrt(rem)
        if y * y != rem:
            continue
        pts.append((x, y))
        if y:
            pts.append((x, -y))
    pts.sort(key=lambda p: math.atan2(p[1], p[0]) % (2 * math.pi))
    if len(pts) != r2_divisor_formula(n):
        raise AssertionError(f"lattice scan disagrees with divisor formula at n={n}")
    points = tuple(LatticePoint(*p) for p in pts)
    arr = np.array(pts, dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    return EnergyLevel(n=n, points=points, multiplicity=len(points), array=arr)


def angular_measure(level: EnergyLevel) -> AngularMeasure:
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    a = level.array
    theta = np.mod(np.arctan2(a[:, 1], a[:, 0]), 2 * np.pi)
    theta.sort()
    u = theta / (2 * np.pi)
    N = len(u)
    i = np.arange(1, N + 1)
    dstar = float(max(np.max(i / N - u), np.max(u - (i - 1) / N)))
    return AngularMeasure(angles=theta, star_discrepancy=dstar)


# --- sum multisets -------------------------------------------------------------


def _reduce(vectors: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(vectors, axis=0, return_inverse=True)
    out = np.zeros(len(uniq), dtype=np.int64)
    np.add.at(out, inv.ravel(), counts)
    return uniq, out


def convolve_multisets(a, b, memory_cap: int = DEFAULT_MEMORY_CAP):
    """Multiset of ``u + v`` for ``u`` in ``a``, ``v`` in ``b`` with multiplied counts."""
    va, ca = a
    vb, cb = b
    pairs = len(va) * len(vb)
    # two int64 coordinates + one count, times a factor for np.unique's copies
    if pairs * 8 * 3 * 4 > memory_cap:
        raise BudgetError(f"sum multiset convolution needs ~{pairs * 96} bytes, cap {memory_cap}")
    sums = (va[:, None, :] + vb[None, :, :]).reshape(-1, 2)
    cnt = (ca[:, None] * cb[None, :]).ravel()
    return _reduce(sums, cnt)


@lru_cache(maxsize=256)
def _sum_multiset_cached(n: int, k: int):
    level = enumerate_lattice_points(n)
    base = (level.array.copy(), np.ones(level.multiplicity, dtype=np.int64))
    if k == 0:
        return np.zeros((1, 2), dtype=np.int64), np.ones(1, dtype=np.int64)
    if k == 1:
        return _reduce(*base)
    h = k // 2
    return convolve_multisets(_sum_multiset_cached(n, h), _sum_multiset_cached(n, k - h))


def sum_multiset(level: EnergyLevel, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct ``k``-fold sums of points of ``level`` with their tuple counts."""
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    v, c = _sum_multiset_cached(level.n, k)
    return v.copy(), c.copy()


def _count_at(vectors: np.ndarray, counts: np.ndarray, target=(0, 0)) -> int:
    hit = (vectors[:, 0] == target[0]) & (vectors[:, 1] == target[1])
    return int(counts[hit].sum())


def _check_length(l: int, lo: int = 1, hi: int = MAX_CORRELATION_LENGTH) -> None:
    if not (lo <= l <= hi):
        raise UnsupportedLengthError("correlation length unsupported")


def correlation_count(level: EnergyLevel, l: int) -> int:
    """#P_n(l) by matching ``ceil(l/2)``-fold sums against negated ``floor(l/2)``-fold sums."""
    _check_length(l)
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    va, ca = _sum_multiset_cached(level.n, (l + 1) // 2)
    vb, cb = _sum_multiset_cached(level.n, l // 2)
    lookup = {(int(x), int(y)): int(c) for (x, y), c in zip(vb, cb)}
    total = 0
    for (x, y), c in zip(va, ca):
        m = lookup.get((-int(x), -int(y)))
        if m:
            total += int(c) * m
    return total


def zero_sum_tuples(level: EnergyLevel, l: int, max_rows: int = 5_000_000) -> np.ndarray:
    """All zero-sum ``l``-tuples as an ``(#P_n(l), l)`` array of point indices.

    Half-tuples are bucketed by their sum and matched bucket by bucket.
    """
    _check_length(l)
    count = correlation_count(level, l)
    if count > max_rows:
        raise BudgetError(f"{count} zero-sum tuples exceed the materialization cap {max_rows}")
    if count == 0:
        return np.zeros((0, l), dtype=np.int64)
    N = level.multiplicity
    pts = level.array
    h1, h2 = (l + 1) // 2, l // 2

    def halves(k):
        idx = np.indices((N,) * k).reshape(k, -1).T
        s = pts[idx].sum(axis=1)
        order = np.lexsort((s[:, 1], s[:, 0]))
        return idx[order], s[order]

    i1, s1 = halves(h1)
    i2, s2 = halves(h2)
    neg = -s2
    order2 = np.lexsort((neg[:, 1], neg[:, 0]))
    i2, neg = i2[order2], neg[order2]
    off = h1 * math.isqrt(level.n) + 1
    radix = 2 * off + 1
    key1 = (s1[:, 0] + off) * radix + (s1[:, 1] + off)
    key2 = (neg[:, 0] + off) * radix + (neg[:, 1] + off)
    k1u, st1, cnt1 = np.unique(key1, return_index=True, return_counts=True)
    k2u, st2, cnt2 = np.unique(key2, return_index=True, return_counts=True)
    common, a_idx, b_idx = np.intersect1d(k1u, k2u, return_indices=True)
    blocks = []
    for ai, bi in zip(a_idx, b_idx):
        left = i1[st1[ai] : st1[ai] + cnt1[ai]]
        right = i2[st2[bi] : st2[bi] + cnt2[bi]]
        blk = np.concatenate(
            [np.repeat(left, len(right), axis=0), np.tile(right, (len(left), 1))], axis=1
        )
        blocks.append(blk)
    out = np.concatenate(blocks, axis=0)
    if len(out) != count:
        raise AssertionError("tuple materialization disagrees with the multiset count")
    return out


def correlation_set(level: EnergyLevel, l: int, tuple_cap: int = 0) -> CorrelationReport:
    _check_length(l)
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    count = correlation_count(level, l)
    tuples = None
    if 0 < count <= tuple_cap:
        idx = zero_sum_tuples(level, l)
        tuples = [tuple(level.points[i] for i in row) for row in idx]
    elif count == 0 and tuple_cap > 0:
        tuples = []
    return CorrelationReport(n=level.n, l=l, count=count, tuples=tuples)


def _strict_norm2_threshold(n: int, exponent) -> int:
    """Smallest integer ``T`` with ``m < n**exponent  <=>  m < T`` for integers ``m``."""
    with mpmath.workdps(50):
        x = mpmath.power(n, mpmath.mpf(exponent))
        return int(mpmath.ceil(x))


def quasi_correlation_count(level: EnergyLevel, l: int, epsilon: float) -> int:
    """Tuples with ``0 < |sum| < n^(1/2 - epsilon)``."""
    _check_length(l, 2, 6)
    if not (0 < epsilon < 0.5):
        raise ValueError("epsilon must lie in (0, 1/2)")
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    thr = _strict_norm2_threshold(level.n, 1 - 2 * mpmath.mpf(epsilon))
    v, c = _sum_multiset_cached(level.n, l)
    m = v[:, 0] ** 2 + v[:, 1] ** 2
    return int(c[(m > 0) & (m < thr)].sum())


def minimal_correlation_count(level: EnergyLevel, l: int) -> int:
    """Zero-sum ``l``-tuples none of whose proper non-empty subsums vanish."""
    _check_length(l, 4, 6)
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    idx = zero_sum_tuples(level, l)
    if len(idx) == 0:
        return 0
    pts = level.array
    vec = pts[idx]  # (M, l, 2)
    ok = np.ones(len(idx), dtype=bool)
    # a subset vanishes iff its complement does, so sizes up to l//2 suffice
    for size in range(2, l // 2 + 1):
        for sub in combinations(range(l), size):
            s = vec[:, list(sub), :].sum(axis=1)
            ok &= ~((s[:, 0] == 0) & (s[:, 1] == 0))
    return int(ok.sum())


def close_pairs_count(level: EnergyLevel, eta: float) -> int:
    """Ordered pairs with ``0 < |l1 - l2| < n^(1/2 - eta)``."""
    if not (0 < eta < 0.5):
        raise ValueError("eta must lie in (0, 1/2)")
    if level.is_empty:
        return 0
    thr = _strict_norm2_threshold(level.n, 1 - 2 * mpmath.mpf(eta))
    a = level.array
    d = a[:, None, :] - a[None, :, :]
    m = d[..., 0] ** 2 + d[..., 1] ** 2
    return int(((m > 0) & (m < thr)).sum())


@dataclass
class AxiomReport:
    n: int
    multiplicity: int
    epsilon: float
    l_max: int
    quasi_counts: dict[int, int]
    axiom_A_holds: bool
    axiom_A_by_length: dict[int, bool]
    tame_ratios: dict[int, float]
    minimal_counts: dict[int, int]
    observed_F_exponent: dict[int, float | None]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "multiplicity": self.multiplicity,
            "epsilon": self.epsilon,
            "l_max": self.l_max,
            "quasi_counts": {str(k): v for k, v in self.quasi_counts.items()},
            "axiom_A_holds": self.axiom_A_holds,
            "axiom_A_by_length": {str(k): v for k, v in self.axiom_A_by_length.items()},
            "tame_ratios": {str(k): v for k, v in self.tame_ratios.items()},
            "minimal_counts": {str(k): v for k, v in self.minimal_counts.items()},
            # log(#minimal correlations)/log(N_n): an observation, never a certificate
            "observed_F_exponent": {str(k): v for k, v in self.observed_F_exponent.items()},
        }


def axiom_scan(levels, epsilon: float, l_max: int) -> list[AxiomReport]:
    if not (2 <= l_max <= 6):
        raise UnsupportedLengthError("correlation length unsupported")
    reports = []
    for level in levels:
        if level.is_empty:
            continue
        N = level.multiplicity
        quasi = {l: quasi_correlation_count(level, l, epsilon) for l in range(2, l_max + 1)}
        tame = {2 * k: correlation_count(level, 2 * k) / N**k for k in range(1, l_max // 2 + 1)}
        minimal = {l: minimal_correlation_count(level, l) for l in range(4, l_max + 1)}
        expo = {
            l: (math.log(c) / math.log(N) if c > 0 and N > 1 else None) for l, c in minimal.items()
        }
        reports.append(
            AxiomReport(
                n=level.n,
                multiplicity=N,
                epsilon=epsilon,
                l_max=l_max,
                quasi_counts=quasi,
                axiom_A_holds=all(v == 0 for v in quasi.values()),
                axiom_A_by_length={l: v == 0 for l, v in quasi.items()},
                tame_ratios=tame,
                minimal_counts=minimal,
                observed_F_exponent=expo,
            )
        )
    return reports
