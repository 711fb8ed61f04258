import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from juliadim.dynamics import RayParameter
from juliadim.linearization import (ChartRadiusError, KoenigsChart, calibrate_radius,
                                    koenigs_forward, koenigs_inverse, make_chart, shifted_map)


# At delta = 0 the chart at p = 2 is known in closed form: with z = 2 cosh s the map
# doubles s, so Phi(u) = arccosh(1 + u/2)^2 and Phi^{-1}(w) = 2 cosh(sqrt w) - 2.
def phi0(u):
    return cmath.acosh(1 + u / 2) ** 2


def phi0_inv(w):
    return 2 * cmath.cosh(cmath.sqrt(w)) - 2


@pytest.fixture(scope="module")
def chart0():
    return make_chart(0)


def test_origin_is_fixed(chart0):
    assert koenigs_forward(chart0, 0) == 0
    assert koenigs_inverse(chart0, 0) == 0


def test_closed_form_at_zero(chart0):
    for u in (0.01, -0.02 + 0.01j, 0.03j):
        assert abs(koenigs_forward(chart0, u) - phi0(u)) < 1e-10
        assert abs(koenigs_inverse(chart0, u) - phi0_inv(u)) < 1e-10
    assert abs(koenigs_forward(chart0, 0.01) - phi0(0.01)) < 1e-8


def test_truncation_error_shrinks_by_lambda(chart0):
    lim = phi0(0.01)
    errs = [abs(chart0.forward_terms(0.01, n) - lim) for n in range(3, 9)]
    ratios = [b / a for a, b in zip(errs, errs[1:])]
    assert all(abs(r - 0.25) < 0.02 for r in ratios)


def test_quadratic_coefficient_of_inverse(chart0):
    # Richardson-extrapolated second difference at 0; the closed form gives 1/12
    def a0(h, n):
        g = lambda w: chart0.inverse_terms(w, n)
        return ((g(h) + g(-h)) / (2 * h * h)).real
    for n in (20, 30, 40):
        est = (4 * a0(1e-3, n) - a0(2e-3, n)) / 3
        assert abs(est - 1 / 12) < 1e-6


def test_derivative_normalization_is_second_order(chart0):
    errs = []
    for h in (1e-2, 5e-3, 2.5e-3):
        d = (koenigs_forward(chart0, h) - koenigs_forward(chart0, -h)) / (2 * h)
        errs.append(abs(d - 1))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


deltas = st.builds(lambda a, t: RayParameter(a, t).delta,
                   st.floats(0.01, 2 * math.pi - 0.01), st.floats(1e-4, 0.12))


@given(deltas)
def test_conjugacy_and_round_trip(delta):
    chart = make_chart(delta)
    lam = chart.lam
    rng = np.random.default_rng(0)
    z = chart.r_z / 8 * np.sqrt(rng.random(20)) * np.exp(2j * np.pi * rng.random(20))
    lhs = koenigs_forward(chart, shifted_map(delta, z))
    assert np.max(np.abs(lhs - lam * koenigs_forward(chart, z))) < 1e-9
    w = chart.r_z / 4 * np.sqrt(rng.random(100)) * np.exp(2j * np.pi * rng.random(100))
    back = koenigs_inverse(chart, koenigs_forward(chart, w))
    assert np.max(np.abs(back - w)) < 1e-9


@given(deltas)
def test_near_identity_on_validity_disc(delta):
    chart = make_chart(delta)
    z = chart.r_z * 0.999 * np.exp(2j * np.pi * np.arange(37) / 37) * np.linspace(0.2, 1, 37)
    assert np.max(np.abs(koenigs_forward(chart, z) / z - 1)) < 0.5
    assert np.max(np.abs(koenigs_inverse(chart, z) / z - 1)) < 0.5


def test_calibration_examples():
    assert calibrate_radius(0) >= 0.05
    assert calibrate_radius(-0.1) > 0
    radii = [calibrate_radius(RayParameter(a, t).delta)
             for a in np.linspace(0.1, 2 * math.pi - 0.1, 9) for t in (0.05, 0.02, 0.005)]
    radii.append(calibrate_radius(0))
    assert max(radii) / min(radii) < 2
    with pytest.raises(ValueError):
        calibrate_radius(0.2)


def test_radius_violation():
    chart = KoenigsChart(0, 0.1)
    with pytest.raises(ChartRadiusError):
        koenigs_forward(chart, 0.2)
    with pytest.raises(ChartRadiusError):
        koenigs_inverse(chart, 0.1j)


def test_uniform_convergence_in_delta():
    # |Phi_n - Phi_2n| <= C |lambda|^-n with one C across parameters
    consts = []
    for delta in (0, -0.1, 0.05j, 0.05 * cmath.exp(2.5j), -0.01):
        chart = make_chart(delta)
        z = chart.r_z * 0.9 * np.exp(2j * np.pi * np.arange(16) / 16)
        lam = abs(chart.lam)
        for n in (4, 6, 8):
            dev = np.max(np.abs(chart.forward_terms(z, n) - chart.forward_terms(z, 2 * n)))
            consts.append(dev * lam ** n)
    assert max(consts) / min(consts) < 10
