import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specdraft.errors import ConvergenceError, DomainError
from specdraft.numerics import (
    INV_E,
    LambertBranch,
    finite_difference,
    golden_section_minimize,
    lambert_w,
    lambert_wm1_exp,
)

from oracles import lambert_w_bisect

P, M1 = LambertBranch.PRINCIPAL, LambertBranch.NEGATIVE_ONE


def test_known_values():
    assert lambert_w(P, 0.0) == 0.0
    assert lambert_w(M1, -INV_E) == pytest.approx(-1.0, abs=1e-12)
    assert lambert_w(P, math.e) == pytest.approx(1.0, abs=1e-15)
    assert lambert_w(M1, -0.1) == pytest.approx(-3.577152063957297, abs=1e-12)


@pytest.mark.parametrize("x", [-0.3, -0.1, -1e-3, -1e-8, -1e-100])
def test_negative_branch_vs_bisection(x):
    assert lambert_w(M1, x) == pytest.approx(lambert_w_bisect(x, -1), rel=1e-12)


@pytest.mark.parametrize("x", [-0.36, -0.2, 1e-9, 0.5, 3.0, 1e3, 1e100])
def test_principal_vs_bisection(x):
    assert lambert_w(P, x) == pytest.approx(lambert_w_bisect(x, 0), rel=1e-12, abs=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        lambert_w(P, -0.5)
    with pytest.raises(DomainError):
        lambert_w(M1, 0.0)
    with pytest.raises(DomainError):
        lambert_w(M1, 0.2)
    with pytest.raises(DomainError):
        lambert_w(P, float("nan"))
    with pytest.raises(DomainError):
        lambert_wm1_exp(-0.5)


def test_array_input_keeps_shape():
    x = np.array([[-0.2, -0.1], [-0.05, -0.01]])
    w = lambert_w(M1, x)
    assert w.shape == x.shape
    np.testing.assert_allclose(w * np.exp(w), x, rtol=1e-13)


def test_log_form_matches_direct_where_both_work():
    s = np.linspace(-700, -1.0001, 200)
    np.testing.assert_allclose(lambert_wm1_exp(s), lambert_w(M1, -np.exp(s)), rtol=1e-13)


def test_log_form_past_underflow():
    # x = -exp(s) is not representable for s = -1e5; check w + ln(-w) = s instead
    for s in (-1e3, -1e5, -1e12):
        w = lambert_wm1_exp(s)
        assert w + math.log(-w) == pytest.approx(s, rel=1e-14)


def test_finite_difference_examples():
    assert finite_difference(lambda x: x * x, 3.0, 1e-5) == pytest.approx(6.0, abs=1e-6)
    assert finite_difference(lambda x: 4.2, 7.0, 0.3) == 0.0
    assert finite_difference(math.sin, 0.0, 1e-5) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(DomainError):
        finite_difference(math.sin, 0.0, 0.0)


def test_finite_difference_propagates():
    def bad(x):
        raise ZeroDivisionError
    with pytest.raises(ZeroDivisionError):
        finite_difference(bad, 0.0, 1e-3)


def test_golden_section():
    assert golden_section_minimize(lambda x: (x - 0.3) ** 2, 0, 1) == pytest.approx(0.3, abs=1e-8)
    with pytest.raises(DomainError):
        golden_section_minimize(abs, 1, 0)
    with pytest.raises(ConvergenceError):
        golden_section_minimize(abs, -1, 1, tol=1e-30, max_iter=5)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-INV_E, max_value=1e300, allow_nan=False))
def test_principal_identity_property(x):
    w = lambert_w(P, x)
    assert w >= -1
    assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x)) or \
        w + math.log(w) == pytest.approx(math.log(x), rel=1e-14)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-INV_E, max_value=-1e-300, allow_nan=False))
def test_negative_identity_property(x):
    w = lambert_w(M1, x)
    assert w <= -1
    assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-INV_E, max_value=-1e-300), st.floats(min_value=-INV_E, max_value=-1e-300))
def test_negative_branch_decreasing_property(a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert lambert_w(M1, lo) >= lambert_w(M1, hi)
