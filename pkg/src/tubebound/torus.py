"""Torus reference eigenvalue lambda_0(kappa) and the angular fiber operators.

lambda_0 is computed two ways on the same cross-section grid: the weighted
Rayleigh quotient (stiffness and mass both weighted by 1 - kappa*u2), and the
unweighted Dirichlet Laplacian plus the potential (E_n - kappa^2/4)/(1 - kappa*u2)^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as tg
from .cross_section import CrossSection, chart, scaled
from .curve import CurveSpec, GeometryError
from .spectral import EigenResult, refine_extrapolate
from . import tube as tube_mod

# reject 1 - a|kappa| below this to keep the pencils well conditioned
CONDITION_FLOOR = 1e-3


class TorusError(GeometryError):
    pass


def _check(kappa: float, cs: CrossSection):
    margin = 1.0 - cs.a * abs(kappa)
    if margin <= 0:
        raise TorusError(f"H2(i) violated: a|kappa| = {cs.a * abs(kappa):.6g} "
                         "(need a‖κ₁‖∞ < 1)")
    if margin < CONDITION_FLOOR:
        raise TorusError(f"1 - a|kappa| = {margin:.3g} is below the conditioning floor "
                         f"{CONDITION_FLOOR:g}")


@dataclass(frozen=True)
class TorusFiberSpec:
    kappa: float
    cs: CrossSection
    n: int = 0
    length: float = math.pi
    ends: str = "neumann"

    def __post_init__(self):
        _check(self.kappa, self.cs)
        if self.n < 0:
            raise TorusError("fiber index must be >= 0")

    @property
    def energy(self) -> float:
        """E_n = (pi n / |I|)^2 (Neumann modes; Dirichlet modes start at n = 1)."""
        return (math.pi * self.n / self.length) ** 2


def _cross_pencil(cs: CrossSection, n: int, weight_kappa: float, potential):
    """Pencil on the cross-section grid with resolution ``n``.

    Stiffness density (1 - weight_kappa*u2) |grad|^2 + V(u2), mass (1 - weight_kappa*u2).
    """
    ch = chart(cs)
    g = ch.grid(n)
    dm = ch.dofmap(g)

    def coeff(pts):
        u, jinv, det = ch.map(pts)
        wgt = 1.0 - weight_kappa * u[:, 0]
        K = np.einsum("nij,nkj->nik", jinv, jinv) * (wgt * det)[:, None, None]
        V = None if potential is None else potential(u[:, 0]) * det
        return K, wgt * det, V

    return tg.assemble(g, coeff, dm)


def _levels(cs, levels):
    return list(levels) if levels else chart(cs).default_levels


def lambda0_weighted(kappa: float, cs: CrossSection, levels=None, k: int = 1,
                     tol: float = 1e-9, seed: int = 0) -> EigenResult:
    """Minimise the Rayleigh quotient with both integrals weighted by 1 - kappa*u2."""
    _check(kappa, cs)
    return refine_extrapolate(lambda n: _cross_pencil(cs, n, kappa, None),
                              _levels(cs, levels), k=k, tol=tol, seed=seed)


def fiber_potential(kappa: float, energy: float):
    return lambda u2: (energy - 0.25 * kappa * kappa) / (1.0 - kappa * u2) ** 2


def lambda0_potential(kappa: float, cs: CrossSection, levels=None, k: int = 1,
                      tol: float = 1e-9, seed: int = 0) -> EigenResult:
    """First eigenvalue of -Laplacian_D + (-kappa^2/4)/(1 - kappa*u2)^2 on unweighted L2."""
    _check(kappa, cs)
    V = fiber_potential(kappa, 0.0) if kappa != 0 else None
    return refine_extrapolate(lambda n: _cross_pencil(cs, n, 0.0, V),
                              _levels(cs, levels), k=k, tol=tol, seed=seed)


def lambda0(kappa: float, cs: CrossSection, **kw) -> EigenResult:
    return lambda0_weighted(kappa, cs, **kw)


def fiber_eigenvalues(fs: TorusFiberSpec, k: int = 1, levels=None, tol: float = 1e-9,
                      seed: int = 0) -> EigenResult:
    """k lowest eigenvalues of the n-th fiber operator."""
    V = fiber_potential(fs.kappa, fs.energy)
    return refine_extrapolate(lambda n: _cross_pencil(fs.cs, n, 0.0, V),
                              _levels(fs.cs, levels), k=k, tol=tol, seed=seed)


def merged_fiber_spectrum(kappa: float, cs: CrossSection, length: float, k: int,
                          levels=None, tol: float = 1e-9, seed: int = 0):
    """Lowest k values of the union of fiber spectra, with their error estimates.

    Fibers are added until the next fiber's bottom exceeds the current k-th value.
    """
    values, errors, labels = [], [], []
    n = 0
    while True:
        fs = TorusFiberSpec(kappa, cs, n, length)
        r = fiber_eigenvalues(fs, k=k, levels=levels, tol=tol, seed=seed)
        if len(values) >= k and r.eigenvalues[0] > sorted(values)[k - 1]:
            break
        values.extend(r.eigenvalues)
        errors.extend(r.error_estimate)
        labels.extend((n, j) for j in range(k))
        n += 1
    order = np.argsort(values)[:k]
    return (np.asarray(values)[order], np.asarray(errors)[order],
            [labels[i] for i in order])


def segment_problem(kappa: float, cs: CrossSection, length: float, k: int = 1,
                    ends: str = "neumann", **kw) -> tube_mod.TubeProblem:
    if kappa != 0 and abs(kappa) > 2 * math.pi / length * (1 + 1e-12):
        raise TorusError(f"|kappa| = {abs(kappa):g} exceeds 2 pi/|I| = {2 * math.pi / length:g}")
    _check(kappa, cs)
    d = cs.dim + 1
    curve = CurveSpec.constant(d, length, kappa)
    return tube_mod.TubeProblem(curve, cs, ends=ends, k=k, **kw)


def segment_spectrum_direct(kappa: float, cs: CrossSection, length: float, k: int = 1,
                            **kw) -> EigenResult:
    """k lowest eigenvalues of the full (s, u) constant-curvature segment, Neumann ends."""
    return tube_mod.threshold(segment_problem(kappa, cs, length, k=k, **kw))


@dataclass
class SweepResult:
    kappa: np.ndarray
    value: np.ndarray
    error: np.ndarray
    mesh_level: str
    extra: dict = field(default_factory=dict)

    def argmin(self) -> int:
        return int(np.argmin(self.value))

    def rows(self):
        for k, v, e in zip(self.kappa, self.value, self.error):
            yield float(k), float(v), float(e), self.mesh_level


def symmetric_grid(lo: float, hi: float, num: int) -> np.ndarray:
    """Uniform grid whose points are exact negatives of each other when lo = -hi."""
    g = np.linspace(lo, hi, num)
    if math.isclose(lo, -hi) and num % 2 == 1:
        half = np.linspace(0.0, hi, num // 2 + 1)
        g = np.concatenate([-half[:0:-1], half])
    return g


def default_kappa_grid(cs: CrossSection, num: int = 21) -> np.ndarray:
    return symmetric_grid(-0.9 / cs.a, 0.9 / cs.a, num)


def sweep_lambda0(cs: CrossSection, kappa_grid=None, levels=None, tol: float = 1e-9,
                  seed: int = 0) -> SweepResult:
    """lambda_0 over a kappa grid, all points on one mesh hierarchy."""
    grid = default_kappa_grid(cs) if kappa_grid is None else np.asarray(kappa_grid, float)
    lv = _levels(cs, levels)
    vals, errs = [], []
    for kap in grid:
        r = lambda0_weighted(float(kap), cs, levels=lv, tol=tol, seed=seed)
        vals.append(r.value)
        errs.append(r.error)
    return SweepResult(grid, np.array(vals), np.array(errs), "/".join(map(str, lv)))


@dataclass
class ThinWidthResult:
    scales: np.ndarray
    residuals: np.ndarray  # lambda0^{eps omega}(kappa) - mu0^{eps omega} + kappa^2/4
    order: float

    def rows(self):
        return list(zip(self.scales.tolist(), self.residuals.tolist()))


def thin_width_check(cs: CrossSection, kappa: float, scales=(0.4, 0.2, 0.1),
                     levels=None, tol: float = 1e-9, seed: int = 0) -> ThinWidthResult:
    """Residual lambda0 - mu0 + kappa^2/4 on shrinking copies eps*omega.

    mu0 of each scaled copy comes from the same mesh (kappa = 0 solve) so the
    discretisation error cancels in the difference. The fitted order is the
    least-squares slope of log|residual| against log eps.
    """
    res = []
    for eps in scales:
        c = scaled(cs, eps)
        if kappa == 0:
            res.append(0.0)
            continue
        lam = lambda0_weighted(kappa, c, levels=levels, tol=tol, seed=seed).value
        m0 = lambda0_weighted(0.0, c, levels=levels, tol=tol, seed=seed).value
        res.append(lam - m0 + 0.25 * kappa * kappa)
    res = np.asarray(res)
    eps = np.asarray(scales, dtype=float)
    if np.all(res == 0):
        order = float("inf")
    else:
        order = float(np.polyfit(np.log(eps), np.log(np.abs(res)), 1)[0])
    return ThinWidthResult(eps, res, order)

