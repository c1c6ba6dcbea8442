import math

import numpy as np
import pytest

from tubebound import cross_section as csm
from tubebound import torus

from conftest import PI2, rel

I2 = csm.interval(2.0)
COARSE = [64, 128]


def test_lambda0_at_zero_is_mu0():
    r = torus.lambda0(0.0, I2, levels=COARSE)
    assert rel(r.value, PI2 / 4) < 1e-7


@pytest.mark.parametrize("kappa", [0.3, -0.6])
def test_formulations_agree(kappa):
    w = torus.lambda0_weighted(kappa, I2, levels=COARSE)
    p = torus.lambda0_potential(kappa, I2, levels=COARSE)
    assert abs(w.value - p.value) <= w.error + p.error


def test_lambda0_below_mu0_and_even():
    vals = [torus.lambda0(k, I2, levels=COARSE).value for k in (-0.7, -0.4, 0.0, 0.4, 0.7)]
    assert vals[2] == max(vals)
    assert vals[0] == pytest.approx(vals[4], rel=1e-10)
    assert vals[1] == pytest.approx(vals[3], rel=1e-10)
    assert vals[4] < vals[3] < vals[2]


def test_small_curvature_expansion():
    # lambda0(k) = mu0 - k^2/4 + O(k^2 a^2 ...) -> below mu0 by about k^2/4 for thin omega
    thin = csm.interval(0.2)
    k = 0.5
    r = torus.lambda0(k, thin, levels=COARSE)
    assert abs(r.value - (csm.mu0(thin) - k * k / 4)) < 1e-2 * k * k


def test_asymmetric_section_not_even():
    tri = csm.polygon([[0, 0], [1, 0], [0, 1]])
    a = torus.lambda0(0.4, tri, levels=[16, 32]).value
    b = torus.lambda0(-0.4, tri, levels=[16, 32]).value
    assert abs(a - b) > 1e-3


def test_fiber_zero_equals_potential_formulation():
    fs = torus.TorusFiberSpec(0.5, I2, n=0, length=math.pi)
    f = torus.fiber_eigenvalues(fs, levels=COARSE)
    p = torus.lambda0_potential(0.5, I2, levels=COARSE)
    assert f.value == pytest.approx(p.value, rel=1e-14)


def test_fiber_energy():
    assert torus.TorusFiberSpec(0.1, I2, n=3, length=2.0).energy == pytest.approx((3 * math.pi / 2) ** 2)


def test_merged_spectrum_sorted_and_labelled():
    vals, errs, labels = torus.merged_fiber_spectrum(0.5, I2, math.pi, 3, levels=COARSE)
    assert np.all(np.diff(vals) >= 0)
    assert labels[0] == (0, 0) and len(labels) == 3
    assert np.all(errs >= 0)


@pytest.mark.parametrize("kappa", [1.0, -1.5])
def test_h2_violation(kappa):
    with pytest.raises(torus.TorusError, match="a‖κ₁‖∞ < 1"):
        torus.lambda0(kappa, I2)


def test_conditioning_floor():
    with pytest.raises(torus.TorusError, match="floor"):
        torus.lambda0(0.9999, I2)


def test_segment_curvature_limit():
    with pytest.raises(torus.TorusError):
        torus.segment_problem(0.9, I2, 8.0)
    p = torus.segment_problem(2 * math.pi / 8, I2, 8.0)
    assert p.curve.length == 8.0


def test_symmetric_grid_exact_negatives():
    g = torus.symmetric_grid(-0.9, 0.9, 21)
    assert len(g) == 21 and g[10] == 0.0
    assert np.array_equal(g, -g[::-1])
    assert np.allclose(g, np.linspace(-0.9, 0.9, 21), atol=1e-15)


def test_sweep_rows():
    res = torus.sweep_lambda0(I2, [-0.5, 0.0, 0.5], levels=COARSE)
    rows = list(res.rows())
    assert len(rows) == 3 and rows[0][3] == "64/128"
    assert res.argmin() in (0, 2)


def test_thin_width_zero_curvature():
    r = torus.thin_width_check(I2, 0.0, levels=COARSE)
    assert np.all(r.residuals == 0)
