import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from srcurv.jets import (
    Jet,
    UnsupportedOrderError,
    coordinate_jets,
    jcos,
    jexp,
    jrecip,
    jsin,
    jet_table,
)


def test_coordinate_jets_values_and_partials():
    t = jet_table(3, 4)
    pts = np.array([[0.5, -1.0, 2.0], [0.1, 0.2, 0.3]])
    x, y, z = coordinate_jets(pts, t)
    assert np.allclose(x.value(), pts[:, 0])
    assert np.allclose(x.diff(0).value(), 1.0)
    assert np.allclose(x.diff(1).value(), 0.0)


def test_product_reproduces_polynomial_derivatives():
    t = jet_table(2, 4)
    pts = np.array([[1.5, -0.7]])
    x, y = coordinate_jets(pts, t)
    f = x * x * y + 2.0 * y  # x^2 y + 2y
    # d^3/dx^2 dy = 2
    d = f.diff(0).diff(0).diff(1)
    assert np.allclose(d.value(), 2.0)
    assert np.allclose(f.value(), 1.5 ** 2 * -0.7 + 2 * -0.7)


def test_trig_and_recip_jets_match_finite_differences():
    t = jet_table(1, 4)
    pts = np.array([[0.73]])
    (x,) = coordinate_jets(pts, t)
    for fn, ref in [(jsin, np.sin), (jcos, np.cos), (jexp, np.exp),
                    (jrecip, lambda v: 1.0 / v)]:
        j = fn(x)
        h = 1e-5
        fd = (ref(0.73 + h) - ref(0.73 - h)) / (2 * h)
        assert abs(j.diff(0).value()[0] - fd) < 1e-8
        fd2 = (ref(0.73 + h) - 2 * ref(0.73) + ref(0.73 - h)) / h ** 2
        half = j.diff(0).diff(0).value()[0]
        assert abs(half - fd2) < 1e-5


def test_quotient_matches_cot_derivative():
    t = jet_table(1, 3)
    pts = np.array([[1.1]])
    (th,) = coordinate_jets(pts, t)
    cot = jcos(th) / jsin(th)
    assert abs(cot.value()[0] - 1 / np.tan(1.1)) < 1e-14
    assert abs(cot.diff(0).value()[0] + 1 / np.sin(1.1) ** 2) < 1e-12


def test_exact_to_tracking_raises_past_order():
    t = jet_table(2, 2)
    pts = np.array([[0.3, 0.4]])
    x, y = coordinate_jets(pts, t)
    f = jsin(x * y)
    g = f.diff(0).diff(1).diff(0)
    with pytest.raises(UnsupportedOrderError):
        g.value()


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_jet_linearity(a, b, x0, y0):
    t = jet_table(2, 3)
    pts = np.array([[x0, y0]])
    x, y = coordinate_jets(pts, t)
    f = x * x * y
    g = y * y
    lhs = (a * f + b * g).diff(0).diff(1)
    rhs = a * f.diff(0).diff(1) + b * g.diff(0).diff(1)
    assert np.allclose(lhs.value(), rhs.value(), atol=1e-12)


def test_mixed_partials_commute():
    t = jet_table(3, 4)
    pts = np.array([[0.2, -0.4, 1.3]])
    x, y, z = coordinate_jets(pts, t)
    f = jsin(x) * y * z + jexp(0.3 * z) * x
    d1 = f.diff(0).diff(2).value()
    d2 = f.diff(2).diff(0).value()
    assert np.allclose(d1, d2, atol=1e-14)


def test_stack_and_getitem():
    t = jet_table(2, 2)
    pts = np.array([[1.0, 2.0], [3.0, 4.0]])
    x, y = coordinate_jets(pts, t)
    s = Jet.stack([x, y], axis=1)  # batch (2, 2)
    assert s.batch_shape == (2, 2)
    assert np.allclose(s[(slice(None), 1)].value(), pts[:, 1])
