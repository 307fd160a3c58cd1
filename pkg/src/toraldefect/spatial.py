"""Spatial defect statistics of deterministic eigenfunctions.

``f`` is evaluated once on a ``G x G`` torus grid.  The defect of every ball of
radius ``s`` is then a circular correlation of ``sign(f)`` with a disc
kernel, done by FFT.  The disc kernel carries fractional boundary weights from
4 x 4 supersampling of each pixel and is normalised to unit mass, so ``Y`` is
a weighted average of signs and ``|Y| <= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .arw_sim import WaveSample, wave_from_coefficients
from .errors import BudgetError, EmptySpectrumError
from .lattice import EnergyLevel

DEFAULT_GRID = 1024
DEFAULT_CENTERS = 128
SUPERSAMPLE = 4
GRID_BUDGET = 4096


def bourgain_wave(level: EnergyLevel, phases=None, seed: int | None = None, index: int = 0) -> WaveSample:
    """Flat wave ``a_lam = e(phase_lam)`` on the half-spectrum."""
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    H = level.multiplicity // 2
    if phases is None:
        if seed is None:
            raise ValueError("give phases or a seed")
        phases = rng.Stream(seed, index).uniform(H)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (H,):
        raise ValueError(f"expected {H} phases, got {phases.shape[0] if phases.ndim else 0}")
    return wave_from_coefficients(level, np.exp(2j * np.pi * phases), kind="bourgain")


# --- involution -----------------------------------------------------------------------


@dataclass
class InvolutionReport:
    n: int
    reduced_n: int
    reductions: int
    kind: str  # "tau" or "rho"
    shift: tuple[float, float]
    max_residual: float
    verified: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def involution_shift(n: int) -> tuple[str, int, int, tuple[float, float]]:
    """The half-period ``v`` with ``f(x + v) = -f(x)`` for every eigenfunction on ``E_n``.

    Odd ``n``: exactly one of ``lam1, lam2`` is odd, so ``v = (1/2, 1/2)``.
    ``n = 2 mod 4``: both are odd, so ``v = (1/2, 0)``.  ``4 | n``:
    ``E_n = 2 E_{n/4}`` and the shift of ``n/4`` halves.
    """
    m, j = n, 0
    while m % 4 == 0:
        m //= 4
        j += 1
    scale = 0.5 ** (j + 1)
    if m % 2 == 1:
        return "tau", m, j, (scale, scale)
    return "rho", m, j, (scale, 0.0)


def involution_report(level: EnergyLevel, samples: int = 5, seed: int = 0) -> InvolutionReport:
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    from .arw_sim import sample_arw

    kind, m, j, v = involution_shift(level.n)
    worst = 0.0
    for i in range(samples):
        w = sample_arw(level, seed, i)
        x = rng.Stream(seed, 10_000 + i).uniform(2 * 64).reshape(64, 2)
        a = w(x)
        b = w(x + np.array(v))
        worst = max(worst, float(np.max(np.abs(a + b))))
    return InvolutionReport(level.n, m, j, kind, v, worst, worst <= 1e-12 * math.sqrt(level.multiplicity))


# --- disc kernels and the global grid ---------------------------------------------------------


def disc_kernel(s: float, G: int) -> tuple[np.ndarray, float]:
    """Fractional-coverage disc kernel on the ``G x G`` torus grid (unit mass).

    Returns the kernel, centred at index ``(0, 0)`` with wrap-around, and the
    boundary slack: the mass of partially covered pixels.
    """
    R = int(math.ceil(s * G)) + 1
    if 2 * R + 1 > G:
        raise BudgetError("ball does not fit on the torus grid")
    off = np.arange(-R, R + 1)
    sub = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    px = (off[:, None] + sub[None, :]).ravel() / G  # (2R+1)*S sample abscissae
    inside = (px[:, None] ** 2 + px[None, :] ** 2) < s * s
    cov = inside.reshape(2 * R + 1, SUPERSAMPLE, 2 * R + 1, SUPERSAMPLE).mean(axis=(1, 3))
    total = cov.sum()
    partial = cov[(cov > 0) & (cov < 1)].sum()
    kern = np.zeros((G, G))
    idx = off % G
    kern[np.ix_(idx, idx)] = cov / total
    return kern, float(partial / total)


def sign_grid(wave: WaveSample, G: int, antisymmetrize: bool = True) -> np.ndarray:
    """``sign(f)`` on the ``G x G`` torus grid.

    With ``antisymmetrize`` the values are projected onto ``f(x+v) = -f(x)``
    (an identity for every eigenfunction) so that rounding cannot break the
    sign pairing between ``x`` and ``x + v``.
    """
    if G > GRID_BUDGET:
        raise BudgetError(f"global grid {G}^2 exceeds the budget {GRID_BUDGET}^2")
    t = np.arange(G) / G
    F = wave.on_grid(t, t)
    if antisymmetrize:
        _, _, _, v = involution_shift(wave.level.n)
        sx, sy = v[0] * G, v[1] * G
        if sx == int(sx) and sy == int(sy):
            F = 0.5 * (F - np.roll(F, (-int(sx), -int(sy)), axis=(0, 1)))
    return np.sign(F)


def _correlate(field_hat: np.ndarray, kern: np.ndarray) -> np.ndarray:
    return np.fft.irfft2(field_hat * np.conj(np.fft.rfft2(kern)), s=kern.shape)


def ball_averages(signs: np.ndarray, s: float) -> tuple[np.ndarray, float]:
    """Kernel average of ``signs`` over ``B_x(s)`` for every grid point ``x``."""
    kern, slack = disc_kernel(s, signs.shape[0])
    return _correlate(np.fft.rfft2(signs), kern), slack


@dataclass
class SpatialField:
    wave: WaveSample = field(repr=False)
    s: float
    centers_per_axis: int
    values: np.ndarray = field(repr=False)
    spatial_mean: float
    spatial_variance: float
    delta_grid: float
    grid_per_axis: int

    def to_dict(self) -> dict:
        return {
            "n": self.wave.level.n,
            "kind": self.wave.kind,
            "s": self.s,
            "centers_per_axis": self.centers_per_axis,
            "grid_per_axis": self.grid_per_axis,
            "spatial_mean": self.spatial_mean,
            "spatial_variance": self.spatial_variance,
            "delta_grid": self.delta_grid,
        }


def _centers_step(G: int, C: int) -> int:
    if G % C or C % 2:
        raise ValueError("centers_per_axis must be even and divide grid_per_axis")
    return G // C


def spatial_defect_field(
    wave: WaveSample, s: float, centers_per_axis: int = DEFAULT_CENTERS, grid_per_axis: int = DEFAULT_GRID
) -> SpatialField:
    if not (0 < s < 0.5):
        raise ValueError("radius out of range")
    step = _centers_step(grid_per_axis, centers_per_axis)
    Y, slack = ball_averages(sign_grid(wave, grid_per_axis), s)
    vals = Y[::step, ::step]
    mean = math.fsum(vals.ravel().tolist()) / vals.size
    var = math.fsum(((vals - mean) ** 2).ravel().tolist()) / vals.size
    return SpatialField(wave, s, centers_per_axis, vals, mean, var, slack, grid_per_axis)


def spatial_variance_curve(
    level: EnergyLevel,
    wave_seed: int | WaveSample,
    s_values,
    centers_per_axis: int = DEFAULT_CENTERS,
    grid_per_axis: int = DEFAULT_GRID,
) -> list[tuple[float, float, float]]:
    """Rows ``(s, T, Var)`` with ``T = s sqrt(n)``; the global sign grid is shared."""
    wave = wave_seed if isinstance(wave_seed, WaveSample) else bourgain_wave(level, seed=wave_seed)
    step = _centers_step(grid_per_axis, centers_per_axis)
    signs = sign_grid(wave, grid_per_axis)
    sh = np.fft.rfft2(signs)
    rows = []
    for s in s_values:
        T = s * math.sqrt(level.n)
        if T < 1:
            raise ValueError("s must be above the Planck scale (s sqrt(n) >= 1)")
        if not (0 < s < 0.5):
            raise ValueError("radius out of range")
        kern, _ = disc_kernel(s, grid_per_axis)
        vals = _correlate(sh, kern)[::step, ::step]
        mean = vals.mean()
        rows.append((float(s), float(T), float(np.mean((vals - mean) ** 2))))
    return rows


@dataclass
class SandwichResult:
    residual: float
    ratio: float
    slack: float


def sandwich_residual(
    wave, r1: float, r2: float, centers: int = 64, grid_per_axis: int = DEFAULT_GRID, signs: np.ndarray | None = None
) -> SandwichResult:
    """``max_x |Y_{r2}(x) - avg_{B_x(r2)} Y_{r1}|`` over a centre grid.

    ``signs`` overrides ``sign(f)`` (e.g. a constant harness field).
    """
    if not (0 < r1 < r2 < 0.5):
        raise ValueError("need 0 < r1 < r2 < 1/2")
    step = _centers_step(grid_per_axis, centers)
    if signs is None:
        signs = sign_grid(wave, grid_per_axis)
    sh = np.fft.rfft2(signs)
    k1, d1 = disc_kernel(r1, grid_per_axis)
    k2, d2 = disc_kernel(r2, grid_per_axis)
    y1 = _correlate(sh, k1)
    y2 = _correlate(sh, k2)
    avg = _correlate(np.fft.rfft2(y1), k2)
    res = float(np.max(np.abs(y2 - avg)[::step, ::step]))
    return SandwichResult(res, res / (r1 / r2), d1 + d2)
