import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given
from hypothesis import strategies as st

from oracles import lens_by_chords, mp_bessel
from toraldefect.specfun import (
    arcsin_coefficients,
    arcsin_majorant,
    bessel_j0,
    bessel_j1,
    bessel_j1_zero,
    lens_area,
    mcmahon_constant,
    nearest_integer_distance,
)


def test_bessel_values():
    assert bessel_j0(0.0) == 1.0
    assert bessel_j1(0.0) == 0.0
    assert abs(bessel_j0(2.404825557695773)) < 1e-10
    assert bessel_j0(10.0) == pytest.approx(mp_bessel(0, 10.0), abs=1e-12)
    assert bessel_j1(5.0) == pytest.approx(mp_bessel(1, 5.0), abs=1e-12)
    assert bessel_j1(1e-4) / 1e-4 == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("x", [0.3, 3.7, 7.99, 8.0, 12.0, 19.3, 24.99, 25.0, 25.01, 31.4, 60.0])
def test_bessel_vs_extended_precision(x):
    terms = 40 if x < 20 else 200
    assert bessel_j0(x) == pytest.approx(mp_bessel(0, x, terms), abs=1e-12)
    assert bessel_j1(x) == pytest.approx(mp_bessel(1, x, terms), abs=1e-12)


def test_bessel_dense_grid_vs_scipy():
    x = np.concatenate([np.linspace(0, 50, 50_001), np.linspace(50, 1e4, 100_001)])
    assert np.max(np.abs(bessel_j0(x) - sp.j0(x))) < 1e-12
    assert np.max(np.abs(bessel_j1(x) - sp.j1(x))) < 1e-12


def test_bessel_j1_envelope():
    x = np.linspace(1e-6, 1e3, 400_001)
    assert np.all(np.abs(bessel_j1(x)) <= np.minimum(x**-0.5, x))


def test_bessel_zeros():
    assert bessel_j1_zero(1) == pytest.approx(3.8317059702, abs=1e-10)
    assert bessel_j1_zero(2) == pytest.approx(7.0155866698, abs=1e-10)
    for t in range(1, 101):
        assert abs(bessel_j1(bessel_j1_zero(t))) < 1e-9
    for t, ref in ((1, 3.8317059702075125), (2, 7.015586669815619)):
        assert bessel_j1_zero(t) == pytest.approx(ref, abs=1e-10)
    assert bessel_j1_zero(1) == pytest.approx(sp.jn_zeros(1, 1)[0], abs=1e-10)


def test_bessel_zero_asymptotics():
    cs = [mcmahon_constant(t) for t in (1, 10, 100, 1000, 10_000)]
    assert max(cs) < 0.125
    d = [abs(bessel_j1_zero(t) - (t + 0.25) * math.pi) for t in (10, 100, 1000)]
    assert d[0] > d[1] > d[2]


def test_arcsin_coefficients():
    tt = arcsin_coefficients(5)
    assert tt.coefficients[0] == 1.0
    assert tt.coefficients[1] == pytest.approx(1 / 6, rel=1e-15)
    assert tt.coefficients[2] == pytest.approx(3 / 40, rel=1e-15)
    for k, a in enumerate(arcsin_coefficients(200).coefficients):
        assert a == pytest.approx(math.comb(2 * k, k) / (4**k * (2 * k + 1)), rel=1e-12)
    with pytest.raises(ValueError):
        arcsin_coefficients(201)


def test_majorant_validated():
    # the majorant is checked against exact coefficients on a long range
    k = np.arange(1, 100_001)
    a = np.empty(len(k))
    a[0] = 1 / 6
    for i in range(1, len(k)):
        kk = k[i]
        a[i] = a[i - 1] * (2 * kk - 1) ** 2 / (2 * kk * (2 * kk + 1))
    assert np.all(a <= arcsin_majorant(k))


def test_arcsin_partial_sums_reach_half_pi():
    tt = arcsin_coefficients(200)
    partial = np.cumsum(tt.coefficients)
    assert np.all(np.diff(partial) > 0)
    assert 0 <= math.pi / 2 - partial[-1] <= tt.tail_bound(1.0)


@pytest.mark.parametrize("K", [2, 10, 50])
def test_arcsin_tail_bound(K):
    tt = arcsin_coefficients(K)
    t = np.random.default_rng(K).uniform(-0.999, 0.999, 1000)
    with mpmath.workdps(200):
        coeffs = [mpmath.mpf(math.comb(2 * k, k)) / (4**k * (2 * k + 1)) for k in range(K + 1)]
        for v in t:
            x = mpmath.mpf(v)
            err = abs(mpmath.asin(x) - mpmath.fsum(c * x ** (2 * k + 1) for k, c in enumerate(coeffs)))
            assert err <= tt.tail_bound(abs(v))


@given(st.integers(0, 60), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_tail_bound_monotone(K, a, b):
    tt = arcsin_coefficients(K)
    lo, hi = sorted((a, b))
    assert tt.tail_bound(lo) <= tt.tail_bound(hi)


def test_lens_area():
    assert lens_area(0.0, 0.3) == pytest.approx(math.pi * 0.09)
    assert lens_area(0.6, 0.3) == 0.0
    assert lens_area(1.0, 1.0) == pytest.approx(1.228369698609, abs=1e-12)
    assert lens_area(1.0, 1.0) == pytest.approx(lens_by_chords(1.0, 1.0), abs=1e-10)


@given(st.floats(0.0, 2.0), st.floats(0.01, 5.0))
def test_lens_scale_invariance(u, s):
    d = u * s
    assert lens_area(d, s) / s**2 == pytest.approx(lens_area(u, 1.0), abs=1e-12)
    assert lens_area(d, s) == pytest.approx(lens_by_chords(d, s), abs=1e-9 * s * s)


def test_nearest_integer_distance():
    assert nearest_integer_distance(0.25) == 0.25
    assert nearest_integer_distance(3.5) == 0.5
    assert nearest_integer_distance(2 * math.sqrt(5)) == pytest.approx(0.47213595499958, abs=1e-12)
