"""Reference curve given by its curvatures: tube metric, Frenet integration, H2 checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cross_section import CrossSection


class GeometryError(ValueError):
    """Invalid curve input or a violated validity condition."""


@dataclass(frozen=True)
class Piece:
    s0: float
    s1: float
    coeffs: tuple  # ascending powers of (s - s0)

    @property
    def degree(self) -> int:
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        return max(0, len(c) - 1)

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s) - self.s0, self.coeffs)

    def extrema(self):
        """Exact (min, max) over the closed piece from endpoints and stationary points."""
        cands = [self.s0, self.s1]
        if self.degree >= 2:
            d = np.polynomial.polynomial.polyder(np.asarray(self.coeffs, dtype=float))
            for r in np.polynomial.polynomial.polyroots(d):
                if abs(r.imag) <= 1e-12 * max(1.0, abs(r.real)):
                    s = self.s0 + r.real
                    if self.s0 < s < self.s1:
                        cands.append(s)
        vals = [float(self(s)) for s in cands]
        return min(vals), max(vals)


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Real function on [s0, s1] given piece by piece; pieces tile the interval."""

    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise GeometryError("a curvature needs at least one piece")
        for p, q in zip(self.pieces, self.pieces[1:]):
            if not math.isclose(p.s1, q.s0, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(p.s1))):
                raise GeometryError(f"curvature pieces leave a gap or overlap at s={p.s1}")
        for p in self.pieces:
            if not p.s1 > p.s0:
                raise GeometryError("piece with empty s_range")

    @classmethod
    def constant(cls, value: float, s0: float, s1: float):
        return cls((Piece(float(s0), float(s1), (float(value),)),))

    @classmethod
    def from_pieces(cls, pieces: Sequence[dict]):
        out = []
        for p in pieces:
            a, b = p["s_range"]
            out.append(Piece(float(a), float(b), tuple(float(c) for c in p["poly_coeffs"])))
        return cls(tuple(out))

    @classmethod
    def from_samples(cls, s: Sequence[float], values: Sequence[float]):
        """Piecewise-linear interpolation of sampled values."""
        s = np.asarray(s, dtype=float)
        v = np.asarray(values, dtype=float)
        if len(s) < 2 or np.any(np.diff(s) <= 0) or len(v) != len(s):
            raise GeometryError("samples need increasing s and matching values")
        out = tuple(Piece(float(s[i]), float(s[i + 1]),
                          (float(v[i]), float((v[i + 1] - v[i]) / (s[i + 1] - s[i]))))
                    for i in range(len(s) - 1))
        return cls(out)

    @property
    def s0(self) -> float:
        return self.pieces[0].s0

    @property
    def s1(self) -> float:
        return self.pieces[-1].s1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.s0 for p in self.pieces] + [self.s1])

    @property
    def max_degree(self) -> int:
        return max(p.degree for p in self.pieces)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        inner = self.breakpoints[1:-1]
        idx = np.searchsorted(inner, s, side="right")
        out = np.empty_like(s)
        for i, p in enumerate(self.pieces):
            sel = idx == i
            if np.any(sel):
                out[sel] = p(s[sel])
        return out if out.ndim else float(out)

    def sup(self) -> float:
        return max(p.extrema()[1] for p in self.pieces)

    def inf(self) -> float:
        return min(p.extrema()[0] for p in self.pieces)

    def is_constant(self) -> bool:
        return self.max_degree == 0 and len({p.coeffs[0] for p in self.pieces}) == 1

    def to_dict(self) -> dict:
        return {"pieces": [{"s_range": [p.s0, p.s1], "poly_coeffs": list(p.coeffs)}
                           for p in self.pieces]}


@dataclass(frozen=True)
class CurveSpec:
    """Curvatures kappa_1..kappa_{d-1} on a finite arc-length interval."""

    d: int
    interval: tuple
    curvatures: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.d < 2:
            raise GeometryError("dimension must be >= 2")
        if len(self.curvatures) != self.d - 1:
            raise GeometryError(f"need {self.d - 1} curvature functions for d={self.d}")
        s0, s1 = self.interval
        if not s1 > s0:
            raise GeometryError("interval must have s1 > s0")
        for k in self.curvatures:
            if not (math.isclose(k.s0, s0, abs_tol=1e-12) and math.isclose(k.s1, s1, abs_tol=1e-12)):
                raise GeometryError("curvature pieces must cover the whole interval")

    @classmethod
    def constant(cls, d: int, length: float, *kappas: float, s0: float = 0.0):
        ks = list(kappas) + [0.0] * (d - 1 - len(kappas))
        return cls(d, (s0, s0 + length),
                   tuple(PiecewisePolynomial.constant(k, s0, s0 + length) for k in ks))

    @property
    def length(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def kappa1(self) -> PiecewisePolynomial:
        return self.curvatures[0]

    def breakpoints(self) -> np.ndarray:
        pts = np.concatenate([k.breakpoints for k in self.curvatures])
        pts = np.unique(pts)
        keep = [pts[0]]
        for p in pts[1:]:
            if p - keep[-1] > 1e-12 * max(1.0, abs(p)):
                keep.append(p)
        keep[-1] = self.interval[1]
        return np.array(keep)

    def sup_kappa1(self) -> float:
        return self.kappa1.sup()

    def inf_kappa1(self) -> float:
        return self.kappa1.inf()

    def kappa1_norm(self) -> float:
        return max(abs(self.sup_kappa1()), abs(self.inf_kappa1()))

    def planar(self) -> bool:
        return all(k.sup() == 0.0 and k.inf() == 0.0 for k in self.curvatures[1:])

    def curvature_values(self, s) -> np.ndarray:
        """Array of shape (..., d-1)."""
        return np.stack([np.asarray(k(s), dtype=float) for k in self.curvatures], axis=-1)

    def curvature_matrix(self, s) -> np.ndarray:
        """The skew-symmetric Serret-Frenet matrix at ``s`` (shape (..., d, d))."""
        kv = self.curvature_values(s)
        K = np.zeros(kv.shape[:-1] + (self.d, self.d))
        for i in range(self.d - 1):
            K[..., i, i + 1] = kv[..., i]
            K[..., i + 1, i] = -kv[..., i]
        return K

    def to_dict(self) -> dict:
        return {"dimension": self.d, "interval": list(self.interval),
                "curvatures": [k.to_dict() for k in self.curvatures]}


@dataclass
class MetricSample:
    G: np.ndarray
    Ginv: np.ndarray
    h: float
    h_mu: np.ndarray


def metric_arrays(kappas: np.ndarray, u: np.ndarray):
    """Vectorised closed-form metric pieces.

    kappas: (N, d-1) curvature values; u: (N, d-1) cross-section points.
    Returns (h, h_mu, Ginv) with Ginv built from the closed-form inverse,
    never by numerical inversion.
    """
    n, m = u.shape
    d = m + 1
    h = 1.0 - kappas[:, 0] * u[:, 0]
    # h_mu = -K_{mu nu} u_nu over the Greek block (indices 2..d)
    h_mu = np.zeros((n, m))
    for j in range(1, m):  # kappa_{j+1} couples u_{j+1} and u_{j+2} (1-based)
        kj = kappas[:, j]
        h_mu[:, j - 1] -= kj * u[:, j]
        h_mu[:, j] += kj * u[:, j - 1]
    Ginv = np.empty((n, d, d))
    Ginv[:, 0, 0] = 1.0
    Ginv[:, 0, 1:] = -h_mu
    Ginv[:, 1:, 0] = -h_mu
    Ginv[:, 1:, 1:] = h_mu[:, :, None] * h_mu[:, None, :]
    Ginv[:, 1:, 1:] += (h * h)[:, None, None] * np.eye(m)
    Ginv /= (h * h)[:, None, None]
    return h, h_mu, Ginv


def metric(spec: CurveSpec, s: float, u: Sequence[float]) -> MetricSample:
    """G, its closed-form inverse, h and h_mu at (s, u).

    Raises GeometryError when h <= 0, i.e. the sample violates H2(i).
    """
    u = np.asarray(u, dtype=float).reshape(1, -1)
    if u.shape[1] != spec.d - 1:
        raise GeometryError(f"u must have {spec.d - 1} components")
    kv = spec.curvature_values(np.array([s], dtype=float))
    h, h_mu, Ginv = metric_arrays(kv, u)
    h, h_mu, Ginv = float(h[0]), h_mu[0], Ginv[0]
    if h <= 0:
        raise GeometryError(f"h = {h:g} <= 0 at s={s}: H2(i) 'a ||kappa_1||_inf < 1' violated")
    d = spec.d
    G = np.eye(d)
    G[0, 0] = h * h + h_mu @ h_mu
    G[0, 1:] = h_mu
    G[1:, 0] = h_mu
    return MetricSample(G=G, Ginv=Ginv, h=h, h_mu=h_mu)


def decomposition_T(sample: MetricSample) -> np.ndarray:
    """The matrix T with Ginv = diag(h^-2, 1, ..., 1) + h^-2 T."""
    d = sample.G.shape[0]
    D = np.eye(d)
    D[0, 0] = sample.h ** -2
    return (sample.Ginv - D) * sample.h ** 2


def matrix_A(sample: MetricSample) -> np.ndarray:
    """diag(1, 0, ..., 0) + T, so that Ginv - diag(0, 1, ..., 1) = h^-2 A (positive semidefinite)."""
    A = decomposition_T(sample)
    A[0, 0] += 1.0
    return A


def lemma1_gap(sample: MetricSample, xi: Sequence[float]):
    """(xi^T Ginv xi - sum_mu xi_mu^2, h^-2 (-xi_1 + h_mu xi_mu)^2).

    Both numbers are the same quantity computed two ways; it is never negative.
    """
    xi = np.asarray(xi, dtype=float)
    gap = xi @ sample.Ginv @ xi - xi[1:] @ xi[1:]
    closed = (-xi[0] + sample.h_mu @ xi[1:]) ** 2 / sample.h ** 2
    return float(gap), float(closed)


@dataclass
class FrenetState:
    s: float
    point: np.ndarray
    frame: np.ndarray  # rows are e_1..e_d


def _orthonormalize(E: np.ndarray) -> np.ndarray:
    # nearest orthogonal matrix (polar factor)
    U, _, Vt = np.linalg.svd(E)
    return U @ Vt


def frenet_integrate(spec: CurveSpec, step: float) -> list:
    """RK4 integration of e_i' = K_ij e_j and Gamma' = e_1 from the identity frame.

    Steps are fitted to every curvature breakpoint so no step straddles a
    jump; the frame is re-orthonormalised after every step.
    """
    if step <= 0:
        raise GeometryError("step must be positive")
    d = spec.d
    X = np.zeros(d)
    E = np.eye(d)
    states = [FrenetState(spec.interval[0], X.copy(), E.copy())]
    bps = spec.breakpoints()
    for a, b in zip(bps[:-1], bps[1:]):
        n = max(1, int(math.ceil((b - a) / step - 1e-9)))
        hs = (b - a) / n
        # evaluate curvature inside the piece so one-sided limits are used
        def K(s):
            return spec.curvature_matrix(np.array(min(max(s, a + 1e-14 * (b - a)), b - 1e-14 * (b - a))))
        for i in range(n):
            s = a + i * hs

            def f(t, E_):
                return K(t) @ E_

            k1 = f(s, E)
            k2 = f(s + hs / 2, E + hs / 2 * k1)
            k3 = f(s + hs / 2, E + hs / 2 * k2)
            k4 = f(s + hs, E + hs * k3)
            # Gamma' = e_1 is integrated with the same stages
            X = X + hs / 6 * (E[0] + 2 * (E + hs / 2 * k1)[0] + 2 * (E + hs / 2 * k2)[0]
                              + (E + hs * k3)[0])
            E = _orthonormalize(E + hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
            states.append(FrenetState(a + (i + 1) * hs, X.copy(), E.copy()))
    return states


@dataclass
class H2Report:
    a: float
    kappa1_norm: float
    product: float
    h2i: bool
    h2ii: bool
    h2ii_method: str = "heuristic"
    min_separation: float = float("inf")

    @property
    def passed(self) -> bool:
        return self.h2i and self.h2ii

    def to_dict(self) -> dict:
        return {"a": self.a, "kappa1_norm": self.kappa1_norm,
                "a_times_kappa1_norm": self.product, "H2i": self.h2i,
                "H2ii": self.h2ii, "H2ii_method": self.h2ii_method,
                "min_separation": self.min_separation}


def check_H2(spec: CurveSpec, cs: CrossSection, samples: int = 600) -> H2Report:
    """Validity report for H2.

    H2(i) is exact: a * ||kappa_1||_inf < 1 with exact extrema. H2(ii) is a
    heuristic: along the integrated embedding, centres whose arc distance is
    at least pi*a must be more than 2a apart, so the bounding disks of the
    cross-sections cannot meet. A curve that closes up measures arc distance
    around the loop.
    """
    norm = spec.kappa1_norm()
    prod = cs.a * norm
    step = spec.length / samples
    states = frenet_integrate(spec, min(step, 1e-2))
    s = np.array([st.s for st in states])
    X = np.array([st.point for st in states])
    pick = np.unique(np.searchsorted(s, np.linspace(s[0], s[-1], samples + 1)).clip(0, len(s) - 1))
    s, X = s[pick], X[pick]
    closed = (np.linalg.norm(X[-1] - X[0]) <= 1e-6 * max(1.0, spec.length)
              and np.allclose(states[-1].frame, states[0].frame, atol=1e-6))
    ds = np.abs(s[:, None] - s[None, :])
    if closed:
        ds = np.minimum(ds, spec.length - ds)
    far = ds >= math.pi * cs.a
    dist = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=2)
    min_sep = float(dist[far].min()) if np.any(far) else float("inf")
    return H2Report(a=cs.a, kappa1_norm=norm, product=prod, h2i=prod < 1.0,
                    h2ii=min_sep > 2 * cs.a, min_separation=min_sep)


def export_embedding_csv(states: list, path) -> None:
    import csv

    d = len(states[0].point)
    header = ["s"] + [f"x{i + 1}" for i in range(d)]
    header += [f"e{i + 1}_{j + 1}" for i in range(d) for j in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for st in states:
            w.writerow([repr(float(st.s))] + [repr(float(x)) for x in st.point]
                       + [repr(float(x)) for x in st.frame.ravel()])
