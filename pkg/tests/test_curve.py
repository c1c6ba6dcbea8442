import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tubebound import cross_section as csm
from tubebound.curve import (CurveSpec, GeometryError, PiecewisePolynomial, check_H2,
                             decomposition_T, export_embedding_csv, frenet_integrate,
                             lemma1_gap, matrix_A, metric, metric_arrays)


def pw(*pieces):
    return PiecewisePolynomial.from_pieces([{"s_range": [a, b], "poly_coeffs": c}
                                            for a, b, c in pieces])


def test_piecewise_evaluation_and_extrema():
    f = pw((0, 1, [0.0, 2.0]), (1, 3, [1.0, 0.0, -1.0]))
    assert f(0.5) == pytest.approx(1.0)
    # coefficients are in powers of (s - s0) of the piece
    assert f(2.0) == pytest.approx(0.0)
    assert f(1.0) == pytest.approx(1.0)
    assert f.sup() == pytest.approx(2.0)  # right end of piece 1 (one-sided)
    assert f.inf() == pytest.approx(-3.0)
    assert f.max_degree == 2 and not f.is_constant()


def test_pieces_must_tile():
    with pytest.raises(GeometryError):
        pw((0, 1, [1.0]), (1.5, 2, [1.0]))


def test_from_samples_linear_interpolation():
    f = PiecewisePolynomial.from_samples([0, 1, 3], [0, 2, 0])
    assert f(0.5) == pytest.approx(1.0)
    assert f(2.0) == pytest.approx(1.0)
    assert f.sup() == pytest.approx(2.0)


def test_curve_spec_properties():
    c = CurveSpec.constant(3, 2.0, 0.3, 1.0)
    assert c.length == 2.0 and c.kappa1_norm() == pytest.approx(0.3)
    assert not c.planar()
    K = c.curvature_matrix(np.array(0.4))
    assert np.allclose(K, -K.T)
    assert K[0, 1] == pytest.approx(0.3) and K[1, 2] == pytest.approx(1.0)


def test_metric_straight_is_identity():
    m = metric(CurveSpec.constant(3, 1.0, 0.0, 0.0), 0.3, [0.2, -0.1])
    assert np.allclose(m.G, np.eye(3)) and np.allclose(m.Ginv, np.eye(3))


def test_metric_hand_example_d3():
    c = CurveSpec.constant(3, 1.0, 0.5, 2.0)
    u2, u3 = 0.4, -0.3
    m = metric(c, 0.5, [u2, u3])
    h = 1 - 0.5 * u2
    hmu = np.array([-2.0 * u3, 2.0 * u2])
    assert m.h == pytest.approx(h)
    assert np.allclose(m.h_mu, hmu)
    G = np.array([[h * h + hmu @ hmu, hmu[0], hmu[1]], [hmu[0], 1, 0], [hmu[1], 0, 1]])
    assert np.allclose(m.G, G, atol=1e-15)
    assert np.allclose(m.Ginv @ m.G, np.eye(3), atol=1e-13)
    assert np.linalg.det(m.G) == pytest.approx(h * h)


def test_metric_rejects_nonpositive_h():
    with pytest.raises(GeometryError, match="H2"):
        metric(CurveSpec.constant(2, 1.0, 2.0), 0.0, [0.6])


def test_decomposition_T_and_A():
    c = CurveSpec.constant(3, 1.0, 0.5, 2.0)
    m = metric(c, 0.1, [0.3, 0.2])
    T = decomposition_T(m)
    D = np.diag([m.h ** -2, 1.0, 1.0])
    assert np.allclose(D + T / m.h ** 2, m.Ginv)
    A = matrix_A(m)
    assert np.all(np.linalg.eigvalsh(A) >= -1e-12)
    assert np.allclose(m.Ginv - np.diag([0.0, 1.0, 1.0]), A / m.h ** 2)
    # T vanishes without higher curvatures, whatever kappa_1 is
    planar = metric(CurveSpec.constant(3, 1.0, 0.7, 0.0), 0.1, [0.3, 0.2])
    assert np.allclose(decomposition_T(planar), 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-3, 3), st.floats(-0.7, 0.7), st.floats(-0.7, 0.7),
       st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_metric_gap_nonnegative(k1, k2, u2, u3, xi):
    c = CurveSpec.constant(3, 1.0, k1, k2)
    m = metric(c, 0.5, [u2, u3])
    gap, closed = lemma1_gap(m, xi)
    scale = max(1.0, float(np.dot(xi, xi))) / m.h ** 2
    assert gap >= -1e-12 * scale
    assert abs(gap - closed) <= 1e-12 * scale


def test_metric_arrays_vectorised_matches_pointwise():
    rng = np.random.default_rng(1)
    k = rng.uniform(-1, 1, (50, 2))
    u = rng.uniform(-0.4, 0.4, (50, 2))
    h, hmu, Ginv = metric_arrays(k, u)
    for i in range(50):
        c = CurveSpec.constant(3, 1.0, *k[i])
        m = metric(c, 0.0, u[i])
        assert np.allclose(m.Ginv, Ginv[i], atol=1e-14)


def test_frenet_circle():
    R = 2.0
    c = CurveSpec.constant(2, math.pi * R, 1 / R)
    st_ = frenet_integrate(c, 0.01)[-1]
    # half circle of radius R: endpoint (0, 2R), tangent reversed
    assert np.allclose(st_.point, [0.0, 2 * R], atol=1e-8)
    assert np.allclose(st_.frame[0], [-1.0, 0.0], atol=1e-8)


def test_frenet_helix():
    k, t = 0.6, 0.8  # unit-speed helix with radius k/(k^2+t^2), pitch t/(k^2+t^2)
    L = 3.0
    c = CurveSpec.constant(3, L, k, t)
    st_ = frenet_integrate(c, 0.005)[-1]
    w = math.hypot(k, t)
    r, p = k / w ** 2, t / w ** 2
    # start frame = identity: e1 = x, e2 = y, e3 = z
    # closed form in the frame (T0, N0, B0)
    a = w * L
    x_T = (k * k * math.sin(a) / w + t * t * a / w) / w ** 2
    x_N = r * (1 - math.cos(a))
    x_B = (k * t / w ** 2) * (a / w - math.sin(a) / w)
    assert np.allclose(st_.point, [x_T, x_N, x_B], atol=1e-8)
    assert p > 0


def test_frenet_orthonormal_and_piecewise():
    c = CurveSpec(3, (0.0, 2.0), (pw((0, 1, [0.5]), (1, 2, [0.0, 0.3])),
                                  pw((0, 2, [1.0, -0.5]))))
    states = frenet_integrate(c, 0.05)
    assert any(abs(s.s - 1.0) < 1e-15 for s in states)
    for s in states:
        assert np.allclose(s.frame @ s.frame.T, np.eye(3), atol=1e-12)


def test_check_H2_examples():
    cs = csm.interval(2.0)
    assert check_H2(CurveSpec.constant(2, 2.0, 0.5), cs).passed
    bad = check_H2(CurveSpec.constant(2, 2.0, 1.5), cs)
    assert not bad.h2i
    # a near-closed circle of radius 1.1 with half-width 1: opposite sides collide
    coil = check_H2(CurveSpec.constant(2, 2 * math.pi * 1.1 * 0.75, 1 / 1.1), cs)
    assert coil.h2i and not coil.h2ii
    ring = check_H2(CurveSpec.constant(2, 8.0, 2 * math.pi / 8), cs)
    assert ring.passed


def test_export_embedding_csv(tmp_path):
    states = frenet_integrate(CurveSpec.constant(2, 1.0, 0.5), 0.1)
    path = tmp_path / "emb.csv"
    export_embedding_csv(states, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(states), 1 + 2 + 4)
