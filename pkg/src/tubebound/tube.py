"""Full curved-tube eigenproblem in curvilinear coordinates on I x omega (d = 2, 3)."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import grid as tg
from .cross_section import Chart, CrossSection, chart
from .curve import CurveSpec, GeometryError, metric_arrays
from .spectral import EigenResult, refine_extrapolate

ENDS = ("neumann", "dirichlet", "periodic")
# smallest admissible Jacobian factor h at a quadrature point
H_FLOOR = 1e-3

DEFAULT_MESH = {2: (256, 64), 3: (64, 24)}


@dataclass(frozen=True)
class TubeProblem:
    curve: CurveSpec
    cs: CrossSection
    ends: str = "neumann"
    s_cells: int | None = None
    cross_cells: int | None = None
    n_levels: int = 2
    k: int = 1
    tol: float = 1e-9
    seed: int = 0
    method: str = "auto"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.ends not in ENDS:
            raise GeometryError(f"ends must be one of {ENDS}")
        if self.curve.d not in (2, 3):
            raise GeometryError("full tube solves support d = 2 and 3 only")
        if self.cs.dim != self.curve.d - 1:
            raise GeometryError(f"cross-section of dimension {self.cs.dim} does not fit d={self.curve.d}")
        if self.cs.a * self.curve.kappa1_norm() >= 1.0:
            raise GeometryError(
                f"H2(i) violated: a*||kappa_1||_inf = {self.cs.a * self.curve.kappa1_norm():.6g}"
                " (need a‖κ₁‖∞ < 1)")
        if self.ends == "periodic":
            for kf in self.curve.curvatures:
                left = float(kf.pieces[0](kf.s0))
                right = float(kf.pieces[-1](kf.s1))
                if abs(left - right) > 1e-12 * max(1.0, abs(left)):
                    raise GeometryError("periodic ends need kappa_i(s0) = kappa_i(s1)")
        if self.n_levels < 2:
            raise GeometryError("at least two mesh levels are needed for extrapolation")

    @property
    def mesh(self) -> tuple:
        ds, dc = DEFAULT_MESH[self.curve.d]
        return (self.s_cells or ds, self.cross_cells or dc)

    def level_sizes(self) -> list:
        ns, nc = self.mesh
        return [(ns * 2 ** j, nc * 2 ** j) for j in range(self.n_levels)]

    def with_(self, **kw) -> "TubeProblem":
        return replace(self, **kw)


def s_axis(curve: CurveSpec, cells: int) -> np.ndarray:
    """Nodes along I with every curvature breakpoint on a mesh line."""
    bps = curve.breakpoints()
    L = curve.length
    parts = []
    for a, b in zip(bps[:-1], bps[1:]):
        n = max(1, int(round(cells * (b - a) / L)))
        parts.append(np.linspace(a, b, n + 1)[:-1])
    parts.append([bps[-1]])
    return np.concatenate(parts)


@dataclass
class Discretization:
    grid: tg.TensorGrid
    dofmap: np.ndarray
    chart: Chart
    A: object = None
    B: object = None


def _grid_for(p: TubeProblem, level: int):
    ch = chart(p.cs)
    ns, nc = p.mesh
    s = s_axis(p.curve, ns)
    for _ in range(level):
        s = tg.refine_axis(s)
    cross = ch.axes(nc * 2 ** level)
    nonconst = any(k.max_degree > 0 for k in p.curve.curvatures)
    quad = ((3 if nonconst else 2),) + ch.quad()
    g = tg.TensorGrid(tuple([s] + cross), quad)
    rules = ch.rules(offset=1)
    dirichlet = list(rules["dirichlet"])
    periodic = list(rules["periodic"])
    if p.ends == "dirichlet":
        dirichlet += [(0, 0), (0, 1)]
    elif p.ends == "periodic":
        periodic = [0] + periodic
    mask = ch.node_mask(cross)
    if mask is not None:
        mask = np.broadcast_to(mask, g.shape)
    dm = tg.build_dofmap(g.shape, dirichlet, periodic, rules["collapse"], mask)
    return g, dm, ch


def tube_coefficients(curve: CurveSpec, ch: Chart):
    """Coefficient callback for the form  int grad^T (h Ginv) grad  and weight h."""

    def coeff(pts):
        s = pts[:, 0]
        u, jinv, det = ch.map(pts[:, 1:])
        kv = curve.curvature_values(s)
        h, _, Ginv = metric_arrays(kv, u)
        hmin = float(h.min())
        if hmin <= H_FLOOR:
            raise GeometryError(f"H2(i) violated on the mesh: h = {hmin:.3g} <= {H_FLOOR:g}")
        K = Ginv * h[:, None, None]
        Kr = np.empty_like(K)
        Kr[:, 0, 0] = K[:, 0, 0]
        Kr[:, 0, 1:] = np.einsum("nj,nij->ni", K[:, 0, 1:], jinv)
        Kr[:, 1:, 0] = Kr[:, 0, 1:]
        Kr[:, 1:, 1:] = np.einsum("nia,nab,njb->nij", jinv, K[:, 1:, 1:], jinv)
        Kr *= det[:, None, None]
        return Kr, h * det, None

    return coeff


def discretize(p: TubeProblem, level: int = 0, with_matrices: bool = True) -> Discretization:
    g, dm, ch = _grid_for(p, level)
    disc = Discretization(g, dm, ch)
    if with_matrices:
        disc.A, disc.B = tg.assemble(g, tube_coefficients(p.curve, ch), dm)
    return disc


def assemble(p: TubeProblem, level: int = 0):
    """Stiffness and mass (SparseSymmetric) of the Q1 discretisation at ``level``."""
    d = discretize(p, level)
    return d.A, d.B


def threshold(p: TubeProblem, keep_vectors: bool = False) -> EigenResult:
    """Lowest eigenvalue(s) with two-level (or more) Richardson extrapolation.

    ``raw`` carries the finest-level conforming values, which bound the true
    eigenvalues from above.
    """
    levels = list(range(p.n_levels))
    res = refine_extrapolate(lambda lv: assemble(p, lv), levels, k=p.k, tol=p.tol,
                             seed=p.seed, method=p.method, keep_vectors=keep_vectors)
    res.levels = p.level_sizes()
    return res


def field_on_nodes(p: TubeProblem, result: EigenResult, index: int = 0):
    """(physical node coordinates (N, d), values (N,)) on the finest level."""
    if result.eigenvectors is None:
        raise ValueError("eigenvectors were not kept; call threshold(..., keep_vectors=True)")
    disc = discretize(p, p.n_levels - 1, with_matrices=False)
    vals = tg.expand(result.eigenvectors[:, index], disc.dofmap)
    s = disc.grid.axes[0]
    cross = disc.chart.physical_nodes(list(disc.grid.axes[1:]))
    S = np.repeat(s, len(cross))
    U = np.tile(cross, (len(s), 1))
    return np.column_stack([S, U]), vals


def export_field(p: TubeProblem, result: EigenResult, path, index: int = 0) -> None:
    """CSV with columns s, u2[, u3], psi of the chosen eigenvector."""
    coords, vals = field_on_nodes(p, result, index)
    d = coords.shape[1]
    header = ["s"] + [f"u{i + 2}" for i in range(d - 1)] + ["psi"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, v in zip(coords, vals):
            w.writerow([f"{x:.17g}" for x in row] + [f"{v:.17g}"])
