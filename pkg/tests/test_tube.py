import itertools
import math

import numpy as np
import pytest

from tubebound import cross_section as csm
from tubebound import tube
from tubebound.curve import CurveSpec, GeometryError, PiecewisePolynomial, metric

from conftest import PI2, rel


def loop_assemble(p, level=0):
    """Cell-by-cell Q1 assembly with the metric inverted numerically.

    Independent of the vectorised assembler: explicit loops over cells, local
    basis written out per corner, and K = h * inv(G) from np.linalg.inv.
    """
    disc = tube.discretize(p, level, with_matrices=False)
    g, dm = disc.grid, disc.dofmap
    axes = g.axes
    D = len(axes)
    ndof = dm.max() + 1
    A = np.zeros((ndof, ndof))
    B = np.zeros((ndof, ndof))
    t, w = np.polynomial.legendre.leggauss(g.quad[0])
    tq = [np.polynomial.legendre.leggauss(q) for q in g.quad]
    node_id = np.arange(g.n_nodes).reshape(g.shape)
    for cell in itertools.product(*[range(len(x) - 1) for x in axes]):
        lo = np.array([axes[k][cell[k]] for k in range(D)])
        hi = np.array([axes[k][cell[k] + 1] for k in range(D)])
        hc = hi - lo
        corners = list(itertools.product([0, 1], repeat=D))
        dofs = [dm[node_id[tuple(cell[k] + c[k] for k in range(D))]] for c in corners]
        for qi in itertools.product(*[range(len(r[0])) for r in tq]):
            xi = np.array([0.5 * (tq[k][0][qi[k]] + 1) for k in range(D)])
            wq = np.prod([0.5 * tq[k][1][qi[k]] for k in range(D)]) * np.prod(hc)
            x = lo + xi * hc
            m = metric(p.curve, x[0], x[1:])
            K = m.h * np.linalg.inv(m.G)
            phi = np.array([np.prod([xi[k] if c[k] else 1 - xi[k] for k in range(D)]) for c in corners])
            grad = np.zeros((len(corners), D))
            for a, c in enumerate(corners):
                for j in range(D):
                    v = (1.0 if c[j] else -1.0) / hc[j]
                    for k in range(D):
                        if k != j:
                            v *= xi[k] if c[k] else 1 - xi[k]
                    grad[a, j] = v
            for a, b in itertools.product(range(len(corners)), repeat=2):
                if dofs[a] < 0 or dofs[b] < 0:
                    continue
                A[dofs[a], dofs[b]] += wq * grad[a] @ K @ grad[b]
                B[dofs[a], dofs[b]] += wq * m.h * phi[a] * phi[b]
    return A, B


def test_hand_assembly_d2_constant_bend():
    p = tube.TubeProblem(CurveSpec.constant(2, 1.0, 0.6), csm.interval(2.0),
                         s_cells=4, cross_cells=5)
    A, B = tube.assemble(p)
    A_ref, B_ref = loop_assemble(p)
    assert np.max(np.abs(A.toarray() - A_ref)) < 1e-13
    assert np.max(np.abs(B.toarray() - B_ref)) < 1e-13


def test_hand_assembly_d3_bend_twist_spot_entries():
    p = tube.TubeProblem(CurveSpec.constant(3, 1.0, 0.4, 1.3), csm.square(1.0),
                         s_cells=3, cross_cells=4)
    A, B = tube.assemble(p)
    A_ref, B_ref = loop_assemble(p)
    Af, Bf = A.toarray(), B.toarray()
    assert np.max(np.abs(Af - A_ref)) < 1e-13
    assert np.max(np.abs(Bf - B_ref)) < 1e-13
    # stored as one triangle, so exactly symmetric
    assert np.array_equal(Af, Af.T)


def test_hand_assembly_nonconstant_curvature():
    kap = PiecewisePolynomial.from_pieces([{"s_range": [0, 1], "poly_coeffs": [0.2, 0.5]},
                                           {"s_range": [1, 2], "poly_coeffs": [-0.3, 0.0, 0.4]}])
    p = tube.TubeProblem(CurveSpec(2, (0.0, 2.0), (kap,)), csm.interval(2.0),
                         s_cells=4, cross_cells=4)
    A, B = tube.assemble(p)
    A_ref, B_ref = loop_assemble(p)
    assert np.max(np.abs(A.toarray() - A_ref)) < 1e-13
    assert np.max(np.abs(B.toarray() - B_ref)) < 1e-13


def test_straight_tube_threshold_is_mu0():
    p = tube.TubeProblem(CurveSpec.constant(2, 2.0, 0.0), csm.interval(2.0),
                         s_cells=16, cross_cells=64)
    r = tube.threshold(p)
    assert rel(r.value, PI2 / 4) < 1e-6
    assert r.raw_value >= PI2 / 4


def test_straight_square_tube_d3():
    p = tube.TubeProblem(CurveSpec.constant(3, 1.0, 0.0, 0.0), csm.square(1.0),
                         s_cells=4, cross_cells=16)
    r = tube.threshold(p)
    assert rel(r.value, 2 * PI2) < 1e-4


def test_dirichlet_ends_add_longitudinal_energy():
    L = 4.0
    p = tube.TubeProblem(CurveSpec.constant(2, L, 0.0), csm.interval(2.0), ends="dirichlet",
                         s_cells=64, cross_cells=32)
    r = tube.threshold(p)
    assert rel(r.value, PI2 / 4 + (math.pi / L) ** 2) < 1e-5


def test_periodic_dofmap_identifies_ends():
    p = tube.TubeProblem(CurveSpec.constant(2, 8.0, 2 * math.pi / 8), csm.interval(2.0),
                         ends="periodic", s_cells=8, cross_cells=4)
    d = tube.discretize(p, with_matrices=False)
    dm = d.dofmap.reshape(d.grid.shape)
    assert np.array_equal(dm[0], dm[-1])


def test_breakpoints_on_mesh_lines():
    kap = PiecewisePolynomial.from_pieces([{"s_range": [0, 1.3], "poly_coeffs": [0.5]},
                                           {"s_range": [1.3, 4], "poly_coeffs": [-0.5]}])
    s = tube.s_axis(CurveSpec(2, (0.0, 4.0), (kap,)), 16)
    assert np.any(s == 1.3) and s[0] == 0 and s[-1] == 4


@pytest.mark.parametrize("build", [
    lambda: tube.TubeProblem(CurveSpec.constant(2, 1.0, 1.2), csm.interval(2.0)),
    lambda: tube.TubeProblem(CurveSpec.constant(2, 1.0, 0.1), csm.square(1.0)),
    lambda: tube.TubeProblem(CurveSpec.constant(2, 1.0, 0.1), csm.interval(2.0), ends="free"),
    lambda: tube.TubeProblem(CurveSpec.constant(2, 1.0, 0.1), csm.interval(2.0), n_levels=1),
    lambda: tube.TubeProblem(
        CurveSpec(2, (0.0, 1.0), (PiecewisePolynomial.from_pieces(
            [{"s_range": [0, 1], "poly_coeffs": [0.0, 0.5]}]),)),
        csm.interval(2.0), ends="periodic"),
])
def test_invalid_problems_rejected(build):
    with pytest.raises(GeometryError):
        build()


def test_h2_message():
    with pytest.raises(GeometryError, match="a‖κ₁‖∞ < 1"):
        tube.TubeProblem(CurveSpec.constant(2, 1.0, 1.5), csm.interval(2.0))


def test_field_export_straight_is_s_independent(tmp_path):
    p = tube.TubeProblem(CurveSpec.constant(2, 2.0, 0.0), csm.interval(2.0),
                         s_cells=8, cross_cells=16)
    r = tube.threshold(p, keep_vectors=True)
    path = tmp_path / "field.csv"
    tube.export_field(p, r, path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    with open(path) as fh:
        assert fh.readline().strip() == "s,u2,psi"
    ns = len(np.unique(data[:, 0]))
    psi = data[:, 2].reshape(ns, -1)
    assert np.max(np.abs(psi - psi[0])) < 1e-10 * np.max(np.abs(psi))
    u = data[:psi.shape[1], 1]
    prof = psi[0] / psi[0].max()
    assert np.allclose(prof, np.cos(math.pi * u / 2), atol=2e-2)


def test_field_export_disk_d3(tmp_path):
    p = tube.TubeProblem(CurveSpec.constant(3, 1.0, 0.2, 0.5), csm.disk(1.0),
                         s_cells=4, cross_cells=4)
    r = tube.threshold(p, keep_vectors=True)
    coords, vals = tube.field_on_nodes(p, r)
    assert coords.shape[1] == 3
    assert np.all(np.hypot(coords[:, 1], coords[:, 2]) <= 1 + 1e-12)
    rim = np.hypot(coords[:, 1], coords[:, 2]) > 1 - 1e-12
    assert np.all(vals[rim] == 0)


def test_field_requires_vectors():
    p = tube.TubeProblem(CurveSpec.constant(2, 1.0, 0.0), csm.interval(2.0),
                         s_cells=4, cross_cells=4)
    with pytest.raises(ValueError):
        tube.field_on_nodes(p, tube.threshold(p))
