import cmath
import io
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from juliadim._numerics import csqrt
from juliadim.dynamics import (BranchError, EscapeStatus, RayParameter, apply, apply_word,
                               escape_ellipse, escape_test, fixed_point, inverse_branch,
                               is_admissible, julia_sample, orbit_derivative, word_code,
                               word_string)

small_delta = st.builds(lambda a, t: RayParameter(a, t).delta,
                        st.floats(0.01, 2 * math.pi - 0.01), st.floats(1e-4, 0.2))


# --- square root convention -------------------------------------------------

def test_csqrt_positive_real_part_and_upper_cut():
    assert csqrt(-4) == 2j
    assert csqrt(complex(-4, -0.0)) == 2j
    assert csqrt(4) == 2
    z = csqrt(complex(-1, -1e-3))
    assert z.real > 0


# --- fixed point --------------------------------------------------------------

def test_fixed_point_at_zero():
    fp = fixed_point(0)
    assert fp.p == 2 and fp.lam == 4


def test_fixed_point_real_negative_quadratic_formula():
    # z^2 - z - 2 + delta = 0, larger root by the real quadratic formula
    delta = -0.1
    ref = (1 + math.sqrt(1 + 4 * (2 - delta))) / 2
    fp = fixed_point(delta)
    assert abs(fp.p - ref) < 1e-14
    # the quoted 2.0329686 / 4.0659372 agree with the root to about 2e-6
    assert abs(fp.p - 2.0329686) < 1e-5
    assert abs(fp.lam - 4.0659372) < 2e-5
    assert abs(fp.lam - 2 * ref) < 1e-14


def test_fixed_point_imaginary_matches_series():
    delta = 0.09j
    series = 2 - delta / 3 - delta ** 2 / 27
    fp = fixed_point(delta)
    assert abs(fp.p.imag - (-0.03)) < 0.003
    assert abs(fp.p - series) < abs(delta) ** 3


@given(small_delta)
def test_fixed_point_residual(delta):
    p = fixed_point(delta).p
    assert abs(p * p - 2 + delta - p) < 1e-12 * (1 + abs(p))


# --- forward map and derivative -------------------------------------------------

def test_apply_examples():
    assert apply(0, 2, 5) == 2
    assert apply(0, 0, 2) == 2
    assert apply(0.01, 0, 1) == pytest.approx(-1.99, abs=1e-15)
    assert apply(0.3, 1.5 + 0.2j, 0) == 1.5 + 0.2j


def test_orbit_derivative_examples():
    assert orbit_derivative(0, 2, 3) == 64
    for k in range(1, 8):
        d = orbit_derivative(0, -2, k)
        assert d == -4 * 4 ** (k - 1)
        assert abs(d) == 4 ** k


@given(st.floats(-1.999, 1.999), st.integers(1, 20))
def test_chebyshev_derivative_law(x, n):
    orbit = [x]
    for _ in range(n):
        orbit.append(orbit[-1] ** 2 - 2)
    # the closed form is ill-conditioned where 4 - f^k(x)^2 is tiny: one rounding
    # of f^k is amplified by 1 / (4 - f^k(x)^2), so such orbits are skipped
    assume(min(4 - v * v for v in orbit) > 1e-4)
    fn = orbit[-1]
    ref = 2 ** n * math.sqrt((4 - fn * fn) / (4 - x * x))
    assert abs(abs(orbit_derivative(0, x, n)) - ref) <= 1e-10 * ref


def test_orbit_derivative_matches_product_oracle():
    delta, z = -0.05 + 0.02j, 0.7 - 0.1j
    w, prod = z, 1
    for _ in range(6):
        prod *= 2 * w
        w = w * w - 2 + delta
    assert abs(orbit_derivative(delta, z, 6) - prod) < 1e-12 * abs(prod)


# --- inverse branches ---------------------------------------------------------

def test_inverse_branch_examples():
    assert inverse_branch(0, 2, "+") == 2
    with pytest.raises(ValueError):
        inverse_branch(0, -2, "+")
    assert inverse_branch(0, 0, "+") == pytest.approx(math.sqrt(2), abs=1e-15)
    assert inverse_branch(0, 0, "-") == pytest.approx(-math.sqrt(2), abs=1e-15)


@given(small_delta, st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False))
def test_branch_round_trip(delta, w):
    for s in "+-":
        z = inverse_branch(delta, w, s)
        assert abs(z * z - 2 + delta - w) <= 1e-12 * max(1.0, abs(w))
        if z.real != 0:
            back = inverse_branch(delta, z * z - 2 + delta, "+" if z.real > 0 else "-")
            assert abs(back - z) <= 1e-12 * max(1.0, abs(z))


# --- escape ellipse and admissibility ---------------------------------------------

def test_escape_examples():
    assert escape_test(-0.01, 3) == EscapeStatus.ESCAPED
    assert escape_test(-0.01, 0) == EscapeStatus.INSIDE_BOUND
    assert escape_test(-0.04, 0.5j) == EscapeStatus.ESCAPED
    E = escape_ellipse(-0.04)
    assert E.semi_minor == pytest.approx(1.2 - 1 / 1.2)
    with pytest.raises(ValueError):
        escape_test(0, 1)


def test_admissibility():
    assert is_admissible(-0.1)
    assert is_admissible(0.01j)
    assert not is_admissible(0.1)       # real positive parameters lie in the connectedness locus


# --- words and trees -----------------------------------------------------------

@given(st.text(alphabet="+-", min_size=1, max_size=30))
def test_word_code_round_trip(w):
    assert word_string(word_code(w), len(w)) == w


def test_tree_nodes_follow_their_words():
    delta = -0.03 + 0.02j
    ps = julia_sample(delta, 6)
    z0 = fixed_point(delta).p
    for i in (0, 5, 17, 40, 63):
        assert abs(apply_word(delta, ps.words[i], z0) - ps.points[i]) < 1e-13


def test_julia_sample_depth_one_at_zero():
    ps = julia_sample(0, 1)
    assert sorted(ps.points.real) == [-2, 2]
    assert ps.words == ["+", "-"]


def test_julia_sample_depth_two_multiplicity_at_zero():
    ps = julia_sample(0, 2)
    assert sorted(ps.points.real) == [-2, 0, 0, 2]
    mult = dict(zip(ps.points.real, ps.multiplicity))
    assert mult[0.0] == 2 and mult[2.0] == 1 and mult[-2.0] == 1
    col = ps.collapse()
    assert len(col) == 3
    buf = io.StringIO()
    ps.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "word,re,im,multiplicity"
    assert len(lines) == 5


def test_julia_sample_strip_bound():
    ps = julia_sample(-0.1, 12)
    assert len(ps) == 4096
    assert np.all(np.abs(ps.points.imag) <= 2 * math.sqrt(0.1))


@given(small_delta)
def test_containment_and_symmetry(delta):
    ps = julia_sample(delta, 10)
    assert all(escape_test(delta, z) == EscapeStatus.INSIDE_BOUND for z in ps.points)
    # f is even: the + and - halves of the tree are negatives of each other
    z = ps.points
    assert np.array_equal(z[0::2], -z[1::2])


def test_random_walk_is_seeded():
    a = julia_sample(-0.02, 30, mode="random_walk", seed=7, size=100)
    b = julia_sample(-0.02, 30, mode="random_walk", seed=7, size=100)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, julia_sample(-0.02, 30, mode="random_walk", seed=8,
                                                     size=100).points)


def test_depth_limits():
    with pytest.raises(ValueError):
        julia_sample(0, 0)
    with pytest.raises(ValueError):
        julia_sample(0, 25)


def test_threads_do_not_change_samples():
    a = julia_sample(-0.01j, 16, threads=1).points
    b = julia_sample(-0.01j, 16, threads=4).points
    assert np.array_equal(a, b)
