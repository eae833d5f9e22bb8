import math

import numpy as np
import pytest
from scipy import integrate

from wittenlab.errors import DegenerateDataError, InputError
from wittenlab.prefactor import (KappaSystem, LogValue, MorseDatum, as1d_rate, circulant_kappa,
                                 circulant_rates, circulant_singular_values, degenerate_min_rate,
                                 harmonic_mean, kappa_rates, kappa_singular_values, laplace_integral,
                                 log_laplace_integral, mexican_hat_rate, morse_rate, piecewise_affine_rate,
                                 quartic_family_constant, quartic_family_integral)


def test_logvalue_arithmetic():
    a, b = LogValue.of(3.0), LogValue.of(-0.5)
    assert (a * b).value == pytest.approx(-1.5)
    assert (a / b).value == pytest.approx(-6.0)
    assert a.ratio(LogValue.of(1.5)) == pytest.approx(2.0)
    assert LogValue.of(0.0).value == 0.0
    assert LogValue(-1e6).value == 0.0   # underflows but the log is kept


def test_morse_datum_validation():
    with pytest.raises(DegenerateDataError):
        MorseDatum(0.0, (), (0.0,))
    with pytest.raises(InputError):
        MorseDatum(0.0, (1.0,), ())
    y = MorseDatum(1.0, (-2.0,), (3.0, 4.0))
    assert (y.index, y.dim) == (1, 3)
    assert y.log_abs_det() == pytest.approx(math.log(24))


def test_morse_rate_one_dimensional():
    x = MorseDatum(0.0, (), (2.0,))
    y = MorseDatum(1.0, (-3.0,), ())
    h = 0.1
    expect = (h / math.pi) * math.sqrt(2.0 * 3.0) * math.exp(-2 / h)
    assert morse_rate(x, y, 1, h).value == pytest.approx(expect, rel=1e-13)


def test_morse_rate_two_dimensional():
    x = MorseDatum(0.0, (), (1.0, 4.0))
    y = MorseDatum(0.5, (-2.0,), (3.0,))
    h = 0.2
    expect = 2.0 * (h / math.pi) * 2.0 * math.sqrt(4.0) / math.sqrt(6.0) * math.exp(-1 / h)
    assert morse_rate(x, y, 2.0, h).value == pytest.approx(expect, rel=1e-13)


def test_morse_rate_rejects_bad_pairs():
    x = MorseDatum(0.0, (), (1.0,))
    with pytest.raises(InputError):
        morse_rate(x, MorseDatum(-1.0, (-1.0,), ()), 1, 0.1)
    with pytest.raises(InputError):
        morse_rate(x, MorseDatum(1.0, (), (1.0,)), 1, 0.1)
    with pytest.raises(InputError):
        morse_rate(x, MorseDatum(1.0, (-1.0,), ()), 1, 0.0)


@pytest.mark.parametrize("h", [1.0, 0.1, 1e-3, 1e-6])
def test_gaussian_laplace_integral(h):
    assert laplace_integral(lambda t: t * t, h) == pytest.approx(math.sqrt(math.pi * h), rel=1e-8)


def test_laplace_integral_two_minima():
    # (t^2 - 1)^2 has two wells of curvature 8: two Gaussians of width sqrt(h/4)
    h = 1e-3
    got = laplace_integral(lambda t: (t * t - 1) ** 2, h)
    assert got == pytest.approx(2 * math.sqrt(math.pi * h / 4), rel=5e-3)


def test_log_laplace_integral_shift():
    assert log_laplace_integral(lambda t: 5 + t * t, 0.01) == pytest.approx(
        -5 / 0.01 + 0.5 * math.log(math.pi * 0.01), rel=1e-10)


def test_quartic_constants():
    oracle, _ = integrate.quad(lambda x: math.exp(-x ** 4 / 4), -np.inf, np.inf)
    assert quartic_family_constant(0.0) == pytest.approx(oracle, rel=1e-10)
    assert quartic_family_constant(0.0) == pytest.approx(2.563693, rel=1e-6)
    assert quartic_family_integral(0.0, 1.0) == pytest.approx(oracle, rel=1e-8)
    assert quartic_family_constant(0.5) == pytest.approx(2 * math.sqrt(math.pi / 0.5))
    assert quartic_family_constant(-0.5) == pytest.approx(math.sqrt(2 * math.pi / 0.5))


@pytest.mark.parametrize("delta", [0.5, -0.5])
def test_quartic_family_small_h(delta):
    h = 1e-4
    assert quartic_family_integral(delta, h) / math.sqrt(h) == pytest.approx(
        quartic_family_constant(delta), rel=2e-3)


def test_quartic_family_h_quarter_scaling():
    h = 1e-3
    assert quartic_family_integral(0.0, h) / h ** 0.25 == pytest.approx(quartic_family_constant(0.0), rel=1e-8)


def test_degenerate_rate_reduces_to_morse():
    # a Gaussian basin of curvature a gives back the Morse formula
    a, b, h = 2.0, 3.0, 0.05
    x = MorseDatum(0.0, (), (a,))
    y = MorseDatum(1.0, (-b,), ())
    basin = math.sqrt(math.pi * h / a)
    assert degenerate_min_rate(y, basin, 1.0, h).value == pytest.approx(morse_rate(x, y, 1, h).value, rel=1e-12)
    with pytest.raises(DegenerateDataError):
        degenerate_min_rate(y, 0.0, 1.0, h)


def test_harmonic_mean_and_piecewise_rate():
    assert harmonic_mean(1.0, 3.0) == 1.5
    h = 0.1
    r = piecewise_affine_rate((-1.0, 2.0), (3.0, -1.0), 0.5, h)
    assert r.value == pytest.approx(harmonic_mean(1, 3) * harmonic_mean(2, 1) * math.exp(-1 / h))
    with pytest.raises(DegenerateDataError):
        piecewise_affine_rate((0.0, 1.0), (1.0, -1.0), 0.5, h)
    with pytest.raises(InputError):
        piecewise_affine_rate((1.0, 1.0), (1.0, -1.0), 0.5, h)


def test_as1d_rate_matches_morse_for_small_h():
    f = lambda t: -math.cos(t)
    x = MorseDatum(-1.0, (), (1.0,))
    y = MorseDatum(1.0, (-1.0,), ())
    h = 0.01
    r = as1d_rate(f, 0.0, math.pi, (-2.0, 2.0), (1.5, 4.5), h)
    # one exit saddle: the capacity formula gives the Morse value
    assert r.ratio(morse_rate(x, y, 1, h)) == pytest.approx(1.0, rel=2e-2)


def test_circulant_singular_values():
    assert circulant_singular_values(4) == pytest.approx([math.sqrt(2), 2.0, math.sqrt(2), 0.0])
    M = np.array(circulant_kappa(5), dtype=float)
    assert np.sort(np.linalg.svd(M, compute_uv=False)) == pytest.approx(np.sort(circulant_singular_values(5)), abs=1e-14)


def test_circulant_rates_agree_with_kappa_system():
    K, h = 4, 0.1
    x = MorseDatum(-1.0, (), (16.0,))
    y = MorseDatum(1.0, (-16.0,), ())
    sys = KappaSystem(circulant_kappa(K), (x,) * K, (y,) * K)
    assert sys.rank() == K - 1
    a = sorted(v.log for v in circulant_rates(K, x, y, h) if v.sign)
    b = sorted(v.log for v in kappa_rates(sys, h) if v.sign)
    assert a == pytest.approx(b, abs=1e-12)
    assert sum(1 for v in kappa_rates(sys, h) if not v.sign) == 1


def test_kappa_system_validation():
    x = MorseDatum(0.0, (), (1.0,))
    y = MorseDatum(1.0, (-1.0,), ())
    with pytest.raises(InputError):
        KappaSystem(((1, 1),), (x,), (y,))
    with pytest.raises(InputError):
        KappaSystem(((1,),), (y,), (x,))


def test_kappa_graded_singular_values_keep_relative_accuracy():
    # offsets of 40 h separate the two values by e^-40; both stay accurate
    x1, x2 = MorseDatum(0.0, (), (2.0,)), MorseDatum(0.0, (), (3.0,))
    y1, y2 = MorseDatum(1.0, (-1.5,), ()), MorseDatum(1.0, (-4.0,), ())
    h = 0.05
    sys = KappaSystem(((1, -1), (0, 1)), (x1, x2), (y1, y2), 40 * h, (-1, 0), (0, 0))
    s = kappa_singular_values(sys, h)
    small = 0.5 * (math.log(h / math.pi) + 0.5 * math.log(2 * 1.5)) - (1 + 40 * h) / h
    assert s[1].log == pytest.approx(small, abs=1e-12)


def test_mexican_hat_small_h():
    h = 0.005
    expect = 2 * math.sqrt(2) * math.sqrt(h) / math.sqrt(math.pi) * math.exp(-1 / (2 * h))
    assert mexican_hat_rate(h).value / expect == pytest.approx(1.0, rel=5e-3)
