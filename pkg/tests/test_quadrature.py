import numpy as np
from hypothesis import given, settings, strategies as st

from annulus_rotor.quadrature import (ZGrid, gauss_rule, geometric_edges,
                                      indefinite_weights, lobatto_rule,
                                      mapped_rule)


def test_gauss_rule_exactness():
    x, w = gauss_rule(8)
    for k in range(0, 16):            # exact through degree 2n-1
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert abs(np.dot(w, x ** k) - exact) < 1e-13


def test_lobatto_includes_endpoints_positive_weights():
    x, w = lobatto_rule(12)
    assert x[0] == -1.0 and x[-1] == 1.0
    assert np.all(w > 0)
    assert abs(np.sum(w) - 2.0) < 1e-13
    for k in range(0, 22):            # exact through degree 2n-3
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert abs(np.dot(w, x ** k) - exact) < 1e-12


def test_indefinite_weights_exact_for_polynomials():
    x, w = gauss_rule(12)
    W = indefinite_weights(x, w)
    for k in range(12):
        vals = W @ (x ** k)
        exact = (x ** (k + 1) - (-1.0) ** (k + 1)) / (k + 1)
        assert np.max(np.abs(vals - exact)) < 1e-13


def test_zgrid_left_right_split():
    zg = ZGrid(24)
    np.testing.assert_allclose(zg.w_left + zg.w_right,
                               np.tile(zg.w, (zg.n, 1)), atol=1e-14)
    assert abs(np.sum(zg.w) - 2.0) < 1e-13


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 1), width=st.floats(0.1, 4), n=st.integers(4, 40))
def test_geometric_edges_cover_interval(a, width, n):
    b = a + width
    for toward in ("left", "right"):
        e = geometric_edges(a, b, toward, n)
        assert e[0] == a and e[-1] == b
        assert np.all(np.diff(e) > 0)


def test_mapped_rule_integrates():
    x, w = mapped_rule(0.0, 3.0, 20)
    assert abs(np.dot(w, np.exp(-x)) - (1.0 - np.exp(-3.0))) < 1e-14
