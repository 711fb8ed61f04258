import math
from fractions import Fraction

import numpy as np
from hypothesis import given, strategies as st

from juliadim._numerics import (block_sums, chunked_apply, content_hash, csqrt, log_sum_exp,
                                stable_sum, unit_direction)


@given(st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=3000))
def test_stable_sum_is_accurate(xs):
    exact = float(sum(Fraction(x) for x in xs))
    assert abs(stable_sum(np.array(xs)) - exact) <= 1e-12 * (1 + sum(abs(x) for x in xs))


def test_stable_sum_cancellation():
    xs = np.array([1e16, 1.0, -1e16] * 1000)
    assert stable_sum(xs) == 1000.0


@given(st.lists(st.floats(-700, 700), min_size=1, max_size=100))
def test_log_sum_exp(xs):
    ref = math.log(math.fsum(math.exp(x - max(xs)) for x in xs)) + max(xs)
    assert abs(log_sum_exp(np.array(xs)) - ref) < 1e-12 * (1 + abs(ref))


def test_block_sums():
    assert block_sums(np.arange(8.0), 4).tolist() == [6.0, 22.0]


def test_chunked_apply_keeps_order():
    x = np.arange(300000, dtype=float)
    out = chunked_apply(lambda a: a * 2, [x], threads=4, min_chunk=1000)
    assert np.array_equal(out, 2 * x)


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_csqrt_branch(w):
    r = csqrt(w)
    assert abs(r * r - w) <= 1e-12 * max(1, abs(w))
    assert r.real > 0 or (r.real == 0 and r.imag >= 0)


def test_content_hash_is_stable():
    assert content_hash({"b": 1, "a": [1, 2]}) == content_hash({"a": [1, 2], "b": 1})
    assert content_hash("x") != content_hash("y")


def test_unit_direction_exact_axes():
    assert unit_direction(math.pi) == -1
    assert unit_direction(math.pi / 2) == 1j
    assert unit_direction(3 * math.pi / 2) == -1j
