"""Monte Carlo for arithmetic random waves and Berry's planar random waves.

A wave on ``E_n`` is stored on the half-spectrum (one point of each antipodal
pair, angle in ``[0, pi)``), which enforces ``a_{-lam} = conj(a_lam)``:

    f(x) = (2 / sqrt(2N)) * sum_half Re(a_lam e(<x, lam>)),   e(t) = exp(2 pi i t).

Grid evaluation factorises ``e(<x, lam>) = e(x1 lam1) e(x2 lam2)``, so a
``G1 x G2`` grid costs one complex ``(G1, H) @ (H, G2)`` product.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .errors import EmptySpectrumError
from .lattice import EnergyLevel

KINDS = ("gaussian", "bourgain", "explicit")


@dataclass(frozen=True)
class WaveSample:
    level: EnergyLevel
    half: np.ndarray  # (H, 2) int64 representatives
    coefficients: np.ndarray  # (H,) complex
    kind: str = "gaussian"

    @property
    def norm(self) -> float:
        return 2.0 / math.sqrt(2 * self.level.multiplicity)

    def scaled(self, c: float) -> "WaveSample":
        return WaveSample(self.level, self.half, self.coefficients * c, self.kind)

    def __call__(self, x) -> np.ndarray | float:
        return evaluate_wave(self, x)

    def on_grid(self, xs, ys) -> np.ndarray:
        """``f(xs[i], ys[j])`` as an ``(len(xs), len(ys))`` array."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        U = np.exp(2j * np.pi * np.outer(xs, self.half[:, 0])) * self.coefficients
        V = np.exp(2j * np.pi * np.outer(ys, self.half[:, 1]))
        return self.norm * (U @ V.T).real

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ph = 2 * np.pi * (x[..., None, 0] * self.half[:, 0] + x[..., None, 1] * self.half[:, 1])
        d = -(self.coefficients * np.exp(1j * ph)).imag * 2 * np.pi
        return self.norm * np.stack([d @ self.half[:, 0], d @ self.half[:, 1]], axis=-1)


def wave_from_coefficients(level: EnergyLevel, coefficients, kind: str = "explicit") -> WaveSample:
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    half = level.half_spectrum()
    a = np.asarray(coefficients, dtype=complex)
    if a.shape != (len(half),):
        raise ValueError(f"expected {len(half)} coefficients, got {a.shape}")
    if kind not in KINDS:
        raise ValueError(f"unknown wave kind {kind!r}")
    return WaveSample(level, half, a, kind)


def sample_arw(level: EnergyLevel, rng_seed: int, index: int) -> WaveSample:
    """Gaussian sample: ``a_lam = b_lam + i c_lam`` with i.i.d. standard normals."""
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    H = level.multiplicity // 2
    z = rng.normals(rng_seed, index, 2 * H).reshape(H, 2)
    return wave_from_coefficients(level, z[:, 0] + 1j * z[:, 1], kind="gaussian")


def evaluate_wave(w: WaveSample, x) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    ph = 2 * np.pi * (x[..., None, 0] * w.half[:, 0] + x[..., None, 1] * w.half[:, 1])
    val = w.norm * (w.coefficients * np.exp(1j * ph)).real.sum(axis=-1)
    return float(val) if val.ndim == 0 else val


# --- grid defect --------------------------------------------------------------------


def cell_centres(s: float, grid_per_axis: int) -> np.ndarray:
    """Centres of the ``g`` cells of side ``2s/g`` covering ``[-s, s]``."""
    h = 2 * s / grid_per_axis
    return -s + h * (np.arange(grid_per_axis) + 0.5)


def disc_mask(s: float, grid_per_axis: int) -> np.ndarray:
    t = cell_centres(s, grid_per_axis)
    return t[:, None] ** 2 + t[None, :] ** 2 < s * s


def grid_slack(s: float, grid_per_axis: int) -> float:
    """Area of the cells meeting the circle ``|x| = s``, over ``pi s^2``."""
    h = 2 * s / grid_per_axis
    t = cell_centres(s, grid_per_axis)
    d = np.sqrt(t[:, None] ** 2 + t[None, :] ** 2)
    boundary = np.abs(d - s) <= h / math.sqrt(2)
    return float(boundary.sum()) * h * h / (math.pi * s * s)


def _defect_from_values(values: np.ndarray, mask: np.ndarray, s: float, grid_per_axis: int) -> np.ndarray:
    h = 2 * s / grid_per_axis
    signs = np.sign(values)
    return (signs * mask).sum(axis=(-2, -1)) * h * h / (math.pi * s * s)


def empirical_defect(w: WaveSample, center, s: float, grid_per_axis: int) -> float:
    """Signed area fraction of ``B_center(s)`` by cell-centre sign sampling."""
    if not (0 < s < 0.5):
        raise ValueError("radius out of range")
    if grid_per_axis < 16:
        raise ValueError("grid_per_axis must be >= 16")
    t = cell_centres(s, grid_per_axis)
    vals = w.on_grid(center[0] + t, center[1] + t)
    return float(_defect_from_values(vals, disc_mask(s, grid_per_axis), s, grid_per_axis))


def _batch_defects(level, s, seed, indices, grid_per_axis, center=(0.0, 0.0)) -> np.ndarray:
    t = cell_centres(s, grid_per_axis)
    half = level.half_spectrum()
    H = len(half)
    Ux = np.exp(2j * np.pi * np.outer(center[0] + t, half[:, 0]))
    Vy = np.exp(2j * np.pi * np.outer(center[1] + t, half[:, 1]))
    mask = disc_mask(s, grid_per_axis)
    out = np.empty(len(indices))
    coeffs = np.empty((len(indices), H), dtype=complex)
    for j, i in enumerate(indices):
        z = rng.normals(seed, int(i), 2 * H).reshape(H, 2)
        coeffs[j] = z[:, 0] + 1j * z[:, 1]
    # the positive factor 2/sqrt(2N) cannot change signs and is omitted
    vals = np.einsum("ih,bh,jh->bij", Ux, coeffs, Vy, optimize=True).real
    out[:] = _defect_from_values(vals, mask, s, grid_per_axis)
    return out


@dataclass
class MCReport:
    n: int
    s: float
    n_samples: int
    seed: int
    grid_points_per_axis: int
    mean: float
    variance: float
    mean_stderr: float
    variance_stderr: float
    analytic_reference: float | None = None
    analytic_tail: float | None = None
    delta_grid: float = 0.0
    rng_algorithm: str = rng.ALGORITHM

    def to_dict(self) -> dict:
        return asdict(self)


def moment_summary(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, unbiased variance and their plug-in standard errors."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    mean = math.fsum(x.tolist()) / m
    dev = x - mean
    var = math.fsum((dev**2).tolist()) / (m - 1)
    m2 = math.fsum((dev**2).tolist()) / m
    m4 = math.fsum((dev**4).tolist()) / m
    var_se = math.sqrt(max(m4 - (m - 3) / (m - 1) * m2 * m2, 0.0) / m)
    return mean, var, math.sqrt(var / m), var_se


def mc_defects(level, s, n_samples, seed, grid_per_axis, threads=1, batch=32, center=(0.0, 0.0)) -> np.ndarray:
    """Per-sample grid defects, ordered by sample index whatever the thread count."""
    if level.is_empty:
        raise EmptySpectrumError("empty spectrum")
    chunks = [np.arange(i, min(i + batch, n_samples)) for i in range(0, n_samples, batch)]
    job = lambda idx: _batch_defects(level, s, seed, idx, grid_per_axis, center)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return np.concatenate(parts)


def mc_defect_moments(
    level: EnergyLevel,
    s: float,
    n_samples: int,
    seed: int,
    grid_per_axis: int,
    threads: int = 1,
    csv_path: str | None = None,
    with_reference: bool = True,
    center=(0.0, 0.0),
) -> MCReport:
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    if not (0 < s < 0.5):
        raise ValueError("radius out of range")
    d = mc_defects(level, s, n_samples, seed, grid_per_axis, threads, center=center)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index", "defect"])
            for i, v in enumerate(d):
                wr.writerow([i, repr(float(v))])
    return report_from_defects(level, s, d, seed, grid_per_axis, with_reference)


def report_from_defects(level, s, defects, seed, grid_per_axis, with_reference: bool = True) -> MCReport:
    mean, var, mse, vse = moment_summary(defects)
    ref = tail = None
    if with_reference:
        from .gaussian import analytic_variance

        rep = analytic_variance(level, s, 3)
        ref, tail = rep.value, rep.tail_bound
    return MCReport(
        n=level.n,
        s=s,
        n_samples=len(defects),
        seed=seed,
        grid_points_per_axis=grid_per_axis,
        mean=mean,
        variance=var,
        mean_stderr=mse,
        variance_stderr=vse,
        analytic_reference=ref,
        analytic_tail=tail,
        delta_grid=grid_slack(s, grid_per_axis),
    )


# --- Berry's random wave model ---------------------------------------------------------


@dataclass(frozen=True)
class BerryWave:
    """``g(x) = M^{-1/2} sum_j (b_j cos(k_j.x) + c_j sin(k_j.x))`` with unit wave vectors ``k_j``."""

    directions: np.ndarray  # (M, 2)
    b: np.ndarray
    c: np.ndarray

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ph = x[..., None, 0] * self.directions[:, 0] + x[..., None, 1] * self.directions[:, 1]
        return (self.b * np.cos(ph) + self.c * np.sin(ph)).sum(axis=-1) / math.sqrt(len(self.b))

    def on_grid(self, xs, ys) -> np.ndarray:
        U = np.exp(1j * np.outer(np.asarray(xs, dtype=float), self.directions[:, 0])) * (self.b - 1j * self.c)
        V = np.exp(1j * np.outer(np.asarray(ys, dtype=float), self.directions[:, 1]))
        return (U @ V.T).real / math.sqrt(len(self.b))


def sample_berry(num_directions: int, rng_seed: int, index: int) -> BerryWave:
    if num_directions < 64:
        raise ValueError("num_directions must be >= 64")
    st = rng.Stream(rng_seed, index)
    theta = 2 * np.pi * st.uniform(num_directions)
    z = st.normal(2 * num_directions)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return BerryWave(dirs, z[:num_directions], z[num_directions:])


def berry_covariance(lags, n_samples: int, M: int, seed: int) -> np.ndarray:
    """Empirical ``E[g(0) g(r e_1)]`` for each lag ``r``."""
    lags = np.asarray(lags, dtype=float)
    acc = np.zeros((n_samples, len(lags)))
    for i in range(n_samples):
        w = sample_berry(M, seed, i)
        g0 = w.b.sum() / math.sqrt(M)
        pts = np.stack([lags, np.zeros_like(lags)], axis=1)
        acc[i] = g0 * w(pts)
    return acc.mean(axis=0)


@dataclass
class BerryRow:
    R: float
    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    grid_per_axis: int


def berry_defect(w: BerryWave, R: float, spacing: float = 0.5) -> tuple[float, int]:
    """Defect of ``w`` over the disc of radius ``R`` about the origin."""
    g = max(16, 2 * math.ceil(R / spacing))
    t = cell_centres(R, g)
    vals = w.on_grid(t, t)
    return float(_defect_from_values(vals, disc_mask(R, g), R, g)), g


def berry_defect_variance(R_values, n_samples: int, M: int, seed: int, spacing: float = 0.5):
    """Empirical ``Var(X_R)`` per ``R`` and the fitted log-log slope."""
    rows = []
    for R in R_values:
        if not (4 <= R <= 128):
            raise ValueError("R must lie in [4, 128]")
        vals = []
        g = 0
        for i in range(n_samples):
            d, g = berry_defect(sample_berry(M, seed, i), R, spacing)
            vals.append(d)
        mean, var, mse, vse = moment_summary(np.array(vals))
        rows.append(BerryRow(float(R), mean, mse, var, vse, g))
    slope = None
    if len(rows) >= 2:
        slope = float(np.polyfit(np.log([r.R for r in rows]), np.log([r.variance for r in rows]), 1)[0])
    return rows, slope


def small_values_measure(field, region, eta: float, grid: int = 256) -> float:
    """Fraction of grid points of ``region = (x0, y0, x1, y1)`` where ``|field| < eta``."""
    if eta < 0:
        raise ValueError("eta must be non-negative")
    x0, y0, x1, y1 = region
    xs = x0 + (x1 - x0) * (np.arange(grid) + 0.5) / grid
    ys = y0 + (y1 - y0) * (np.arange(grid) + 0.5) / grid
    vals = field.on_grid(xs, ys)
    return float(np.mean(np.abs(vals) < eta))
