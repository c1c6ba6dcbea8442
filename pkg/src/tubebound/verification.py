"""Executable checks of the lower bound and its companion estimates."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import cross_section as csm
from .cross_section import CrossSection
from .curve import CurveSpec, PiecewisePolynomial, check_H2
from .spectral import bessel_first_zero, sphere_measure
from . import torus
from .tube import TubeProblem, threshold

ROUNDOFF = 1e-10


class UnsupportedCombination(ValueError):
    pass


def faber_krahn_constant(d: int, a: float, area: float) -> float:
    """Geometry-only lower bound c for lambda_0 on (-1/a, 1/a)."""
    if d < 2 or a <= 0 or area <= 0:
        raise ValueError("need d >= 2, a > 0, area > 0")
    base = sphere_measure(d - 1) / (d * sphere_measure(1) * a * area)
    return base ** (2.0 / d) * bessel_first_zero((d - 2) / 2.0) ** 2


def ae_bound(d: int, N: int) -> float:
    """Earlier lower-bound ratio (bound / mu0) for circular tubes with N bound states."""
    if d == 2 and N >= 1:
        return 3.0 ** (1 - N) * (bessel_first_zero(0.0) / bessel_first_zero(1.0)) ** 2
    if d == 3 and N == 1:
        return (math.pi / bessel_first_zero(1.5)) ** 2
    raise UnsupportedCombination(f"no comparison bound for d={d}, N={N}")


def circular_cross_section(d: int, radius: float = 1.0) -> CrossSection:
    """The (d-1)-ball of the given radius: an interval for d=2, a disk for d=3."""
    if d == 2:
        return csm.interval(2 * radius)
    if d == 3:
        return csm.disk(radius)
    raise UnsupportedCombination("circular cross-sections are provided for d = 2, 3")


def compare_bounds(d: int, N: int, cs: CrossSection | None = None,
                   kappa_range: tuple | None = None) -> list:
    """Rows (name, ratio to mu0) for the earlier bound, the uniform constant and,
    when ``kappa_range = (inf kappa1, sup kappa1)`` is given, the torus bound."""
    cs = cs or circular_cross_section(d)
    m0 = csm.mu0(cs)
    rows = [("ae_circular", ae_bound(d, N)),
            ("faber_krahn", faber_krahn_constant(d, cs.a, cs.area) / m0)]
    if kappa_range is not None:
        lo, hi = kappa_range
        rhs = min(torus.lambda0(lo, cs).value, torus.lambda0(hi, cs).value)
        rows.append(("torus_bound", rhs / m0))
    return rows


@dataclass
class BoundReport:
    name: str
    lhs_raw: float
    lhs: float
    lhs_error: float
    sup_kappa1: float
    inf_kappa1: float
    lambda0_sup: float
    lambda0_sup_error: float
    lambda0_inf: float
    lambda0_inf_error: float
    rhs: float
    rhs_error: float
    c: float
    pointwise_value: float
    margin: float
    margin_rhs_c: float
    verdict: bool
    uniform_ok: bool
    pointwise_consistent: bool
    equality_case: bool
    sharp: bool | None
    h2: dict = field(default_factory=dict)
    mesh: list = field(default_factory=list)

    @property
    def rhs_lower(self) -> float:
        return self.rhs - self.rhs_error

    @property
    def combined_error(self) -> float:
        return self.lhs_error + self.rhs_error

    @property
    def passed(self) -> bool:
        ok = self.verdict and self.uniform_ok and self.pointwise_consistent
        return ok and (self.sharp is not False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rhs_lower"] = self.rhs_lower
        out["combined_error"] = self.combined_error
        out["passed"] = self.passed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BoundReport":
        keys = cls.__dataclass_fields__.keys()
        return cls(**{k: data[k] for k in keys})


def _pointwise_kappas(curve: CurveSpec, num: int = 101) -> np.ndarray:
    """kappa_1 on a uniform s-grid plus one-sided limits at every piece end."""
    s = np.linspace(curve.interval[0], curve.interval[1], num)
    vals = list(np.atleast_1d(curve.kappa1(s)))
    for p in curve.kappa1.pieces:
        vals += [float(p(p.s0)), float(p(p.s1))]
    return np.unique(np.asarray(vals))


def is_torus_segment(curve: CurveSpec) -> bool:
    return curve.kappa1.is_constant() and curve.planar()


def verify_theorem1(p: TubeProblem, torus_levels=None) -> BoundReport:
    """Compare the tube threshold with min{lambda0(sup k1), lambda0(inf k1)}.

    The verdict uses the raw conforming eigenvalue (an upper bound of the true
    threshold) against the extrapolated right side minus its error estimate.
    """
    h2 = check_H2(p.curve, p.cs)
    lhs = threshold(p)
    sup_k, inf_k = p.curve.sup_kappa1(), p.curve.inf_kappa1()
    cache = {}

    def lam(k):
        k = float(k)
        if k not in cache:
            cache[k] = torus.lambda0_weighted(k, p.cs, levels=torus_levels,
                                              tol=p.tol, seed=p.seed)
        return cache[k]

    r_sup, r_inf = lam(sup_k), lam(inf_k)
    best = r_sup if r_sup.value <= r_inf.value else r_inf
    rhs, rhs_err = best.value, best.error
    t2 = min(lam(k).value for k in _pointwise_kappas(p.curve))
    c = faber_krahn_constant(p.curve.d, p.cs.a, p.cs.area)
    lhs_raw, lhs_ext, lhs_err = lhs.raw_value, lhs.value, lhs.error
    verdict = lhs_raw >= rhs - rhs_err - ROUNDOFF * abs(rhs)
    eq = is_torus_segment(p.curve) and p.ends in ("neumann", "periodic")
    sharp = abs(lhs_ext - rhs) <= 2.0 * (lhs_err + rhs_err) if eq else None
    return BoundReport(
        name=p.name, lhs_raw=lhs_raw, lhs=lhs_ext, lhs_error=lhs_err,
        sup_kappa1=sup_k, inf_kappa1=inf_k,
        lambda0_sup=r_sup.value, lambda0_sup_error=r_sup.error,
        lambda0_inf=r_inf.value, lambda0_inf_error=r_inf.error,
        rhs=rhs, rhs_error=rhs_err, c=c, pointwise_value=t2,
        margin=lhs_raw - rhs, margin_rhs_c=rhs - c, verdict=bool(verdict),
        uniform_ok=bool(rhs - rhs_err >= c),
        pointwise_consistent=bool(abs(t2 - rhs) <= ROUNDOFF * abs(rhs)),
        equality_case=eq, sharp=None if sharp is None else bool(sharp),
        h2=h2.to_dict(), mesh=[list(x) for x in p.level_sizes()],
    )


def sweep_dirichlet_ends(cs: CrossSection, length: float, kappa_grid, s_cells=None,
                         cross_cells=None, tol: float = 1e-9, seed: int = 0):
    """lambda_0^D(kappa, |I|) for constant-curvature segments with Dirichlet ends."""
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    limit = 2 * math.pi / length
    if np.any(np.abs(kappa_grid) > limit * (1 + 1e-12)):
        raise ValueError("kappa grid must lie in [-2 pi/|I|, 2 pi/|I|]")
    vals, errs = [], []
    for k in kappa_grid:
        p = torus.segment_problem(float(k), cs, length, ends="dirichlet",
                                  s_cells=s_cells, cross_cells=cross_cells, tol=tol, seed=seed)
        r = threshold(p)
        vals.append(r.value)
        errs.append(r.error)
    p0 = torus.segment_problem(0.0, cs, length, s_cells=s_cells, cross_cells=cross_cells)
    res = torus.SweepResult(kappa_grid, np.array(vals), np.array(errs),
                            "/".join(f"{a}x{b}" for a, b in p0.level_sizes()))
    i = res.argmin()
    res.extra = {"argmin_kappa": float(kappa_grid[i]), "min_value": float(res.value[i]),
                 "mu0": csm.mu0(cs), "monotone_from": 4 * cs.a * math.pi ** 2 / length ** 2,
                 "monotone_to": limit}
    return res


# built-in regression geometries ------------------------------------------------

def _pw(pieces) -> PiecewisePolynomial:
    return PiecewisePolynomial.from_pieces(
        [{"s_range": [a, b], "poly_coeffs": c} for a, b, c in pieces])


def regression_suite() -> list:
    """Eight tube geometries covering the cases the bound has to handle."""
    I2 = csm.interval(2.0)
    Q1 = csm.square(1.0)
    ring_len = 8.0
    cases = [
        TubeProblem(CurveSpec.constant(2, 2.0, 0.0), I2, name="straight"),
        TubeProblem(CurveSpec.constant(2, 2.0, 0.5), I2, name="constant-bend"),
        TubeProblem(CurveSpec(2, (0.0, 4.0), (_pw([(0, 2, [0.5]), (2, 4, [-0.5])]),)),
                    I2, name="s-curve"),
        TubeProblem(CurveSpec(2, (0.0, 3.0), (_pw([(0, 1, [0.0]), (1, 2, [0.6]), (2, 3, [0.3])]),)),
                    I2, name="piecewise-bend"),
        TubeProblem(CurveSpec.constant(3, 2.0, 0.0, 1.0), Q1, name="twist-3d"),
        TubeProblem(CurveSpec.constant(3, 2.0, 0.3, 1.0), Q1, name="helix-3d"),
        TubeProblem(CurveSpec(2, (0.0, 2.0), (_pw([(0, 2, [-0.9, 0.9])]),)),
                    I2, name="near-critical"),
        TubeProblem(CurveSpec.constant(2, ring_len, 2 * math.pi / ring_len), I2,
                    ends="periodic", name="periodic-ring"),
    ]
    return cases


SUITES = {"regression": regression_suite}


def run_suite(name: str, **overrides) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    return [verify_theorem1(p.with_(**overrides) if overrides else p) for p in SUITES[name]()]
