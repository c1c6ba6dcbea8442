"""Cross-sections of the tube: centring, mirror image, first Dirichlet eigenvalue.

Each shape also exposes a *chart*: a structured reference grid, the map from
reference coordinates to the centred u-coordinates and the boundary rules the
assembler needs. Intervals and rectangles are their own charts; the disk uses
polar coordinates (exact boundary, second order); general polygons use an
embedded-boundary grid on the bounding box (first order, lower accuracy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as tg
from .spectral import EigenResult, bessel_first_zero, refine_extrapolate

KINDS = ("interval", "rectangle", "disk", "polygon")
SYMMETRY_RTOL = 1e-12


class CrossSectionError(ValueError):
    pass


@dataclass(frozen=True)
class CrossSection:
    """A centred cross-section.

    ``params`` by kind: interval ``(lo, hi)``; rectangle ``(width, height)``;
    disk ``(radius,)``; polygon a tuple of ``(x, y)`` vertices (counter-clockwise).
    """

    kind: str
    params: tuple
    a: float
    area: float
    shift: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        """Dimension of the cross-section (d - 1)."""
        return 1 if self.kind == "interval" else 2

    @property
    def symmetric(self) -> bool:
        """True when the shape equals its mirror image in {u2 = 0}."""
        return _same_shape(self, mirror(self))

    def label(self) -> str:
        if self.kind == "interval":
            return f"interval:{self.params[1] - self.params[0]:g}"
        if self.kind == "rectangle":
            w, h = self.params
            return f"square:{w:g}" if w == h else f"rectangle:{w:g}x{h:g}"
        if self.kind == "disk":
            return f"disk:{self.params[0]:g}"
        return "polygon:" + ";".join(f"{x:g},{y:g}" for x, y in self.params)

    def to_dict(self) -> dict:
        if self.kind == "interval":
            p = {"lo": self.params[0], "hi": self.params[1]}
        elif self.kind == "rectangle":
            p = {"width": self.params[0], "height": self.params[1]}
        elif self.kind == "disk":
            p = {"radius": self.params[0]}
        else:
            p = {"vertices": [list(v) for v in self.params]}
        return {"kind": self.kind, "params": p}


def _polygon_area_centroid(vertices: np.ndarray):
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if abs(area) <= 1e-300:
        raise CrossSectionError("degenerate polygon (zero area)")
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def normalize(raw: dict) -> CrossSection:
    """Translate a raw shape description so its centre of mass is the origin.

    ``raw`` is ``{"kind": ..., "params": {...}}`` as in the problem-spec JSON.
    Accepted kinds are interval (lo, hi | length), rectangle (width, height),
    square (side), disk (radius, optional center) and polygon (vertices).
    """
    kind = raw.get("kind")
    p = dict(raw.get("params", {}))
    if kind == "interval":
        if "length" in p:
            lo, hi = 0.0, float(p["length"])
        else:
            lo, hi = float(p["lo"]), float(p["hi"])
        if not hi > lo:
            raise CrossSectionError("interval needs hi > lo")
        c = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        return CrossSection("interval", (-half, half), half, hi - lo, (c,))
    if kind in ("rectangle", "square"):
        if kind == "square":
            w = h = float(p["side"])
        else:
            w, h = float(p["width"]), float(p["height"])
        if not (w > 0 and h > 0):
            raise CrossSectionError("rectangle sides must be positive")
        center = tuple(float(v) for v in p.get("center", (0.0, 0.0)))
        return CrossSection("rectangle", (w, h), 0.5 * math.hypot(w, h), w * h, center)
    if kind == "disk":
        r = float(p["radius"])
        if not r > 0:
            raise CrossSectionError("disk radius must be positive")
        center = tuple(float(v) for v in p.get("center", (0.0, 0.0)))
        return CrossSection("disk", (r,), r, math.pi * r * r, center)
    if kind == "polygon":
        v = np.asarray(p["vertices"], dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise CrossSectionError("polygon needs at least three (x, y) vertices")
        area, cen = _polygon_area_centroid(v)
        if area < 0:
            v = v[::-1]
            area = -area
        v = v - cen
        a = float(np.max(np.hypot(v[:, 0], v[:, 1])))
        verts = tuple((float(x), float(y)) for x, y in v)
        return CrossSection("polygon", verts, a, float(area), tuple(cen))
    raise CrossSectionError(f"unknown cross-section kind {kind!r}")


def interval(length: float) -> CrossSection:
    return normalize({"kind": "interval", "params": {"length": length}})


def square(side: float) -> CrossSection:
    return normalize({"kind": "square", "params": {"side": side}})


def disk(radius: float) -> CrossSection:
    return normalize({"kind": "disk", "params": {"radius": radius}})


def polygon(vertices) -> CrossSection:
    return normalize({"kind": "polygon", "params": {"vertices": vertices}})


def scaled(cs: CrossSection, eps: float) -> CrossSection:
    """The homothetic copy eps * omega."""
    if cs.kind == "interval":
        return CrossSection("interval", (cs.params[0] * eps, cs.params[1] * eps),
                            cs.a * eps, cs.area * eps, ())
    if cs.kind == "rectangle":
        w, h = cs.params
        return CrossSection("rectangle", (w * eps, h * eps), cs.a * eps, cs.area * eps ** 2, ())
    if cs.kind == "disk":
        return CrossSection("disk", (cs.params[0] * eps,), cs.a * eps, cs.area * eps ** 2, ())
    verts = tuple((x * eps, y * eps) for x, y in cs.params)
    return CrossSection("polygon", verts, cs.a * eps, cs.area * eps ** 2, ())


def mirror(cs: CrossSection) -> CrossSection:
    """Reflection through the hyperplane {u2 = 0}."""
    if cs.kind == "interval":
        lo, hi = cs.params
        return CrossSection("interval", (-hi, -lo), cs.a, cs.area, ())
    if cs.kind in ("rectangle", "disk"):
        return CrossSection(cs.kind, cs.params, cs.a, cs.area, ())
    # reversing keeps the counter-clockwise orientation, and is an involution
    verts = tuple((-x, y) for x, y in reversed(cs.params))
    return CrossSection("polygon", verts, cs.a, cs.area, ())


def _same_shape(p: CrossSection, q: CrossSection) -> bool:
    if p.kind != q.kind:
        return False
    tol = SYMMETRY_RTOL * max(p.a, 1e-300)
    if p.kind != "polygon":
        return all(abs(x - y) <= tol for x, y in zip(p.params, q.params))
    vp = np.asarray(p.params)
    vq = np.asarray(q.params)
    if vp.shape != vq.shape:
        return False
    dist = np.linalg.norm(vp[:, None, :] - vq[None, :, :], axis=2)
    return bool(np.all(dist.min(axis=1) <= tol) and np.all(dist.min(axis=0) <= tol))


def mu0_analytic(cs: CrossSection) -> float | None:
    if cs.kind == "interval":
        return (math.pi / cs.area) ** 2
    if cs.kind == "rectangle":
        w, h = cs.params
        return math.pi ** 2 * (1.0 / w ** 2 + 1.0 / h ** 2)
    if cs.kind == "disk":
        return (bessel_first_zero(0.0) / cs.params[0]) ** 2
    return None


def mu0(cs: CrossSection, numeric: bool = False, **kw) -> float:
    """First Dirichlet eigenvalue of the cross-section.

    Analytic where a closed form exists; otherwise (or with ``numeric=True``)
    the extrapolated value of :func:`mu0_numeric`.
    """
    if not numeric:
        exact = mu0_analytic(cs)
        if exact is not None:
            return exact
    return mu0_numeric(cs, **kw).value


def mu0_numeric(cs: CrossSection, levels=None, tol: float = 1e-9, seed: int = 0,
                k: int = 1) -> EigenResult:
    ch = chart(cs)
    levels = levels or ch.default_levels

    def build(n):
        g = ch.grid(n)
        dm = ch.dofmap(g)

        def coeff(pts):
            u, jinv, det = ch.map(pts)
            K = np.einsum("nij,nkj->nik", jinv, jinv) * det[:, None, None]
            return K, det, None

        return tg.assemble(g, coeff, dm)

    return refine_extrapolate(build, levels, k=k, tol=tol, seed=seed)


# charts ---------------------------------------------------------------------

def _point_in_polygon(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    """Strict interior test by ray casting; boundary points count as outside."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(verts)
    scale = max(1.0, float(np.abs(verts).max()))
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        within = ((x - x1) * (x - x2) <= 0) & ((y - y1) * (y - y2) <= 0)
        on_edge |= (np.abs(cross) <= 1e-12 * scale * scale) & within
    return inside & ~on_edge


@dataclass(frozen=True)
class Chart:
    """Structured reference grid for a cross-section."""

    cs: CrossSection

    @property
    def default_levels(self) -> list:
        return {"interval": [256, 512], "rectangle": [64, 128],
                "disk": [32, 64], "polygon": [64, 128]}[self.cs.kind]

    @property
    def exact_boundary(self) -> bool:
        return self.cs.kind != "polygon"

    def axes(self, n: int) -> list:
        cs = self.cs
        if cs.kind == "interval":
            return [np.linspace(cs.params[0], cs.params[1], n + 1)]
        if cs.kind == "rectangle":
            w, h = cs.params
            big = max(w, h)
            nw = max(2, int(round(n * w / big)))
            nh = max(2, int(round(n * h / big)))
            return [np.linspace(-w / 2, w / 2, nw + 1), np.linspace(-h / 2, h / 2, nh + 1)]
        if cs.kind == "disk":
            r = cs.params[0]
            return [np.linspace(0.0, r, n + 1), np.linspace(0.0, 2 * math.pi, 2 * n + 1)]
        v = np.asarray(cs.params)
        lo, hi = v.min(axis=0), v.max(axis=0)
        big = float((hi - lo).max())
        nx = max(2, int(round(n * (hi[0] - lo[0]) / big)))
        ny = max(2, int(round(n * (hi[1] - lo[1]) / big)))
        return [np.linspace(lo[0], hi[0], nx + 1), np.linspace(lo[1], hi[1], ny + 1)]

    def quad(self) -> tuple:
        # polar coefficients carry 1/r and cos(theta): use three points
        return (3, 3) if self.cs.kind == "disk" else (2,) * self.cs.dim

    def grid(self, n: int) -> tg.TensorGrid:
        return tg.TensorGrid(tuple(self.axes(n)), self.quad())

    def rules(self, offset: int = 0) -> dict:
        """Boundary rules for the chart axes, shifted by ``offset`` leading axes."""
        kind = self.cs.kind
        if kind == "disk":
            return {"dirichlet": [(offset, 1)], "periodic": [offset + 1],
                    "collapse": [(offset, offset + 1)]}
        if kind == "polygon":
            return {"dirichlet": [(offset, 0), (offset, 1), (offset + 1, 0), (offset + 1, 1)],
                    "periodic": [], "collapse": []}
        return {"dirichlet": [(offset + k, s) for k in range(self.cs.dim) for s in (0, 1)],
                "periodic": [], "collapse": []}

    def node_mask(self, axes: list) -> np.ndarray | None:
        """Interior-node mask for embedded-boundary shapes, else None."""
        if self.cs.kind != "polygon":
            return None
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return _point_in_polygon(pts, np.asarray(self.cs.params)).reshape(mesh[0].shape)

    def dofmap(self, g: tg.TensorGrid) -> np.ndarray:
        r = self.rules()
        return tg.build_dofmap(g.shape, r["dirichlet"], r["periodic"], r["collapse"],
                               self.node_mask(list(g.axes)))

    def map(self, pts: np.ndarray):
        """Reference points -> (u, d ref / d u, |det d u / d ref|)."""
        n, m = pts.shape
        if self.cs.kind != "disk":
            return pts, np.broadcast_to(np.eye(m), (n, m, m)), np.ones(n)
        r, th = pts[:, 0], pts[:, 1]
        c, s = np.cos(th), np.sin(th)
        u = np.stack([r * c, r * s], axis=1)
        jinv = np.empty((n, 2, 2))
        jinv[:, 0, 0], jinv[:, 0, 1] = c, s
        jinv[:, 1, 0], jinv[:, 1, 1] = -s / r, c / r
        return u, jinv, r

    def physical_nodes(self, axes: list) -> np.ndarray:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        if self.cs.kind == "disk":
            return self.map(np.maximum(pts, [1e-300, -np.inf]))[0]
        return pts


def chart(cs: CrossSection) -> Chart:
    return Chart(cs)
