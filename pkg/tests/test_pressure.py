import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from juliadim.dynamics import RayParameter, default_base, tree_level
from juliadim.pressure import (AdmissibilityError, DepthCapWarning, NoBracketError, aitken,
                               dimension, dimension_scan, fit_sqrt_law, increment_root,
                               log_partition, pressure_at, pressure_curve)


def chebyshev_pressure(tau, n, theta0):
    """P_n(tau) at delta = 0 from angles: the depth-n preimages of 2cos(theta0)
    are 2cos(phi) with 2^n phi = +-theta0 mod 2pi, phi in [0, pi], and
    |(f^n)'| = 2^n sin(theta0) / sin(phi)."""
    N = 2 ** n
    k = np.arange(N)
    phi = np.concatenate([(2 * np.pi * k + theta0) / N, (2 * np.pi * (k + 1) - theta0) / N])
    phi = phi[phi <= np.pi]
    assert len(phi) == N
    logd = n * math.log(2) + math.log(math.sin(theta0)) - np.log(np.sin(phi))
    m = np.max(-tau * logd)
    return (m + math.log(np.sum(np.exp(-tau * logd - m)))) / n


def test_default_base_at_zero_is_minus_one():
    assert default_base(0) == -1


@pytest.mark.parametrize("n", [1, 2, 5, 10, 16, 20])
def test_pressure_at_zero_against_angle_oracle(n):
    theta0 = 2 * math.pi / 3          # 2cos(theta0) = -1
    for tau in (0.5, 1.0, 1.3):
        assert abs(pressure_at(0, tau, n) - chebyshev_pressure(tau, n, theta0)) < 1e-12


def test_pressure_at_one_decays_like_one_over_n():
    for n in (4, 8, 12, 16, 20):
        assert abs(pressure_at(0, 1.0, n)) < 0.75 / n


@pytest.mark.parametrize("delta", [0, -0.1, 0.02j, 0.05 * np.exp(2j)])
def test_pressure_at_zero_exponent_counts_branches(delta):
    for n in (1, 7, 15, 22):
        assert pressure_at(delta, 0.0, n) == math.log(2)


def test_negative_pressure_outside_connectedness_locus():
    assert pressure_at(-0.1, 1.0, 18) < 0


def test_streamed_depth_matches_materialized_sum():
    # depth 21 streams over depth-20 subtrees; compare with an explicit level
    delta = -0.05
    ld = tree_level(delta, 21, base=default_base(delta)).log_derivative
    assert abs(pressure_at(delta, 0.9, 21) - log_partition(ld, 0.9) / 21) < 1e-13


@settings(max_examples=15)
@given(st.floats(0.02, 2 * math.pi - 0.02), st.floats(1e-3, 0.1))
def test_curve_strictly_decreasing(alpha, t):
    curve = pressure_curve(RayParameter(alpha, t).delta, 12, np.linspace(0, 2, 21))
    assert curve.is_decreasing()
    assert curve.root_estimate is not None


def test_conformal_sum_at_root_is_one():
    delta = -0.04 + 0.01j
    n = 16
    curve = pressure_curve(delta, n, np.linspace(0.5, 1.5, 11))
    ld = tree_level(delta, n, base=default_base(delta)).log_derivative
    total = math.fsum(np.exp(-curve.root_estimate * ld))
    assert abs(total - 1) < 1e-12


def test_base_point_independence():
    delta = -0.05 + 0.02j
    other = complex(tree_level(delta, 3, base=default_base(delta)).points[5])
    scaled = []
    for n in (6, 10, 14, 18):
        gap = abs(pressure_at(delta, 1.0, n) - pressure_at(delta, 1.0, n, base=other))
        scaled.append(gap * n)
    assert max(scaled) < 2 * min(scaled) + 1e-12
    assert scaled[-1] / 18 < 0.02


def test_depth_limits():
    with pytest.raises(ValueError):
        pressure_at(0, 1, 0)
    with pytest.raises(ValueError):
        pressure_at(0, 1, 27)


# --- dimension ---------------------------------------------------------------------

def test_dimension_at_zero():
    est = dimension(0, 1e-6)
    assert abs(est.d_value - 1) < 2e-3
    assert 0.5 < est.d_value < 1.5 and est.extrapolation_error >= 0


def test_real_ray_square_root_law_point():
    est = dimension(-0.0025, 1e-7)
    assert abs((1 - est.d_value) / (0.375 * 0.05) - 1) < 0.25


def test_imaginary_ray_tends_to_one():
    ds = [dimension(RayParameter(math.pi / 2, t).delta, 1e-7).d_value for t in (0.04, 0.01, 0.0025)]
    assert all(d < 1 for d in ds)
    assert ds[0] < ds[1] < ds[2]


def test_refusals():
    with pytest.raises(AdmissibilityError):
        dimension(1e-6)
    with pytest.raises(AdmissibilityError):
        dimension(0.1)              # inside the connectedness locus
    with pytest.raises(ValueError):
        dimension(-0.01, max_depth=25)
    with pytest.raises(ValueError):
        dimension(-0.01, 0)


def test_no_bracket():
    ld0 = np.zeros(2)
    ld1 = np.zeros(4)
    with pytest.raises(NoBracketError):
        increment_root(ld0, ld1)


def test_depth_cap_warning():
    with pytest.warns(DepthCapWarning):
        est = dimension(-0.01, 1e-14, max_depth=12)
    assert not est.converged


def test_aitken():
    # exact on a geometric sequence
    r = [1 + 0.5 ** k for k in range(3)]
    assert aitken(*r) == pytest.approx(1, abs=1e-15)
    assert aitken(1.0, 1.0, 1.0) == 1.0
    assert aitken(0.0, 1.0, 1.5) == pytest.approx(2.0)


def test_deterministic_and_thread_invariant():
    a = dimension(0.03j, 1e-8, threads=1)
    b = dimension(0.03j, 1e-8, threads=1)
    c = dimension(0.03j, 1e-8, threads=3)
    assert a.d_value == b.d_value == c.d_value
    assert a.roots == c.roots


def test_scan_records_row_errors_and_repeats_exactly():
    rows = dimension_scan([(math.pi, 0.01), (math.pi, 1e-7), (math.pi, 0.01)], 1e-7)
    assert rows[1].error and math.isnan(rows[1].d)
    assert rows[0].d == rows[2].d and not rows[0].error


def test_fitted_real_ray_constant():
    ts = [0.04, 0.01, 0.0025]
    rows = dimension_scan([(math.pi, t) for t in ts], 1e-7)
    c = fit_sqrt_law(ts, [r.d for r in rows])
    assert 0.30 <= c <= 0.45


def test_fit_sqrt_law_is_least_squares():
    assert fit_sqrt_law([0.04, 0.01], [1 - 0.2 * 0.2, 1 - 0.2 * 0.1]) == pytest.approx(0.2)
