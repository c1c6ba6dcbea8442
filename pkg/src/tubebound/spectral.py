"""Shared numerical machinery: sparse symmetric pencils, lowest eigenpairs,
grid refinement with Richardson extrapolation, and special-function constants.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as sla

# Above this size the shift-invert route is only used as a fallback.
DIRECT_LIMIT = 50_000
SMALL_LIMIT = 20_000


class EigenSolverError(RuntimeError):
    """Raised when an eigensolve fails; carries the best residuals reached."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = None if residuals is None else np.asarray(residuals)


class SparseSymmetric:
    """Symmetric sparse matrix held as its upper triangle.

    The full matrix is rebuilt as ``U + strict_upper(U).T`` so it is exactly
    symmetric regardless of round-off in assembly.
    """

    def __init__(self, upper):
        upper = sp.triu(sp.csr_matrix(upper), format="csr")
        upper.sum_duplicates()
        self.upper = upper
        self._full = None

    @classmethod
    def from_full(cls, matrix):
        return cls(sp.triu(sp.csr_matrix(matrix)))

    @property
    def n(self) -> int:
        return self.upper.shape[0]

    @property
    def shape(self):
        return self.upper.shape

    def full(self) -> sp.csr_matrix:
        if self._full is None:
            strict = sp.triu(self.upper, k=1)
            self._full = (self.upper + strict.T).tocsr()
        return self._full

    def diagonal(self) -> np.ndarray:
        return self.upper.diagonal()

    def toarray(self) -> np.ndarray:
        return self.full().toarray()

    def __matmul__(self, other):
        return self.full() @ other


def _as_csr(m):
    if isinstance(m, SparseSymmetric):
        return m.full()
    return sp.csr_matrix(m)


@dataclass
class EigenResult:
    """Lowest eigenvalues of a pencil, optionally from a refinement study.

    ``eigenvalues`` holds the best estimate (extrapolated when produced by
    :func:`refine_extrapolate`); ``raw`` the finest-level discrete values.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    iterations: int = 0
    eigenvectors: np.ndarray | None = None
    error_estimate: np.ndarray | None = None
    raw: np.ndarray | None = None
    level_values: list = field(default_factory=list)
    levels: list = field(default_factory=list)
    method: str = ""
    warnings: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def error(self) -> float:
        if self.error_estimate is None:
            return 0.0
        return float(self.error_estimate[0])

    @property
    def raw_value(self) -> float:
        src = self.raw if self.raw is not None else self.eigenvalues
        return float(src[0])

    def to_dict(self) -> dict:
        out = {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "iterations": int(self.iterations),
            "method": self.method,
            "warnings": list(self.warnings),
        }
        if self.error_estimate is not None:
            out["error_estimate"] = [float(x) for x in self.error_estimate]
        if self.raw is not None:
            out["raw"] = [float(x) for x in self.raw]
        if self.level_values:
            out["level_values"] = [[float(x) for x in v] for v in self.level_values]
            out["levels"] = [list(lv) if isinstance(lv, (tuple, list)) else lv
                             for lv in self.levels]
        return out


def relative_residuals(A, B, values, vectors) -> np.ndarray:
    """``||A x - lam B x|| / (|lam| ||B x||)`` for each column."""
    A = _as_csr(A)
    B = _as_csr(B)
    AX = A @ vectors
    BX = B @ vectors
    R = AX - BX * values[None, :]
    denom = np.abs(values) * np.linalg.norm(BX, axis=0)
    denom = np.where(denom > 0, denom, 1.0)
    return np.linalg.norm(R, axis=0) / denom


def _check_mass(B: sp.csr_matrix):
    d = B.diagonal()
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise EigenSolverError("mass matrix is not positive definite "
                               "(non-positive diagonal entry)")


def _normalize(values, vectors, B):
    order = np.argsort(values)
    values = np.asarray(values)[order]
    vectors = np.asarray(vectors)[:, order]
    norms = np.einsum("ij,ij->j", vectors, B @ vectors)
    if np.any(norms <= 0):
        raise EigenSolverError("mass matrix is indefinite (x^T B x <= 0)")
    vectors = vectors / np.sqrt(norms)[None, :]
    # fix the sign so the largest-magnitude entry is positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return values, vectors * signs[None, :]


def _shift_invert(A, B, k, tol, rng, maxiter):
    n = A.shape[0]
    lu = sla.splu(A.tocsc())
    op = sla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    v0 = rng.standard_normal(n)
    ncv = min(n - 1, max(2 * k + 1, 20))
    try:
        vals, vecs = sla.eigsh(A, k=k, M=B, sigma=0.0, OPinv=op, v0=v0,
                               ncv=ncv, tol=0.0, maxiter=maxiter)
    except sla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues):
            res = relative_residuals(A, B, exc.eigenvalues, exc.eigenvectors)
        else:
            res = None
        raise EigenSolverError("shift-invert Lanczos did not converge", res) from exc
    return vals, vecs, 0


def _lobpcg(A, B, k, tol, rng, maxiter):
    import pyamg

    n = A.shape[0]
    # pyamg estimates spectral radii from the legacy global RNG; pin it for
    # reproducibility and leave the caller's state untouched
    state = np.random.get_state()
    np.random.seed(int(rng.integers(2 ** 31)))
    try:
        ml = pyamg.smoothed_aggregation_solver(A, symmetry="symmetric")
    finally:
        np.random.set_state(state)
    M = ml.aspreconditioner()
    block = k + 2
    X = rng.standard_normal((n, block))
    total = 0
    res = None
    while total < maxiter:
        step = min(100, maxiter - total)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals, X = sla.lobpcg(A, X, B=B, M=M, tol=1e-3 * tol, maxiter=step,
                                 largest=False)
        total += step
        order = np.argsort(vals)
        vals, X = vals[order], X[:, order]
        res = relative_residuals(A, B, vals[:k], X[:, :k])
        if np.all(res <= tol):
            return vals[:k], X[:, :k], total
    raise EigenSolverError(f"LOBPCG did not reach tol={tol:g} in {total} iterations", res)


def lowest_eigenpairs(A, B, k: int = 1, tol: float = 1e-9, seed: int = 0,
                      method: str = "auto", maxiter: int = 2000) -> EigenResult:
    """Lowest ``k`` eigenpairs of ``A x = lam B x`` for a symmetric positive pencil.

    ``method`` is ``"lobpcg"`` (AMG-preconditioned block iteration),
    ``"shift-invert"`` (Lanczos on a sparse LU of ``A``) or ``"auto"``, which
    uses shift-invert on small pencils and LOBPCG otherwise, falling back to
    shift-invert for ``n <= DIRECT_LIMIT``. Eigenvectors are B-orthonormal.
    """
    A = _as_csr(A).astype(float)
    B = _as_csr(B).astype(float)
    n = A.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    _check_mass(B)
    rng = np.random.default_rng(seed)

    if method == "auto":
        method = "shift-invert" if n <= SMALL_LIMIT or n < 8 * (k + 2) else "lobpcg"
    if method == "lobpcg":
        try:
            vals, vecs, its = _lobpcg(A, B, k, tol, rng, maxiter)
            used = "lobpcg"
        except EigenSolverError:
            if n > DIRECT_LIMIT:
                raise
            vals, vecs, its = _shift_invert(A, B, k, tol, np.random.default_rng(seed), maxiter)
            used = "shift-invert"
    elif method == "shift-invert":
        vals, vecs, its = _shift_invert(A, B, k, tol, rng, maxiter)
        used = "shift-invert"
    else:
        raise ValueError(f"unknown method {method!r}")

    vals, vecs = _normalize(vals, vecs, B)
    res = relative_residuals(A, B, vals, vecs)
    if np.any(res > tol):
        raise EigenSolverError(f"residual above tol={tol:g}", res)
    return EigenResult(eigenvalues=vals, residuals=res, iterations=its,
                       eigenvectors=vecs, method=used)


def dense_eigenvalues(A, B) -> np.ndarray:
    """Full generalized spectrum by dense LAPACK; reference for small pencils."""
    return scipy.linalg.eigh(_as_csr(A).toarray(), _as_csr(B).toarray(), eigvals_only=True)


def richardson(coarse, fine, order: int = 2):
    """Extrapolate a ratio-2 pair; returns (value, error estimate)."""
    coarse = np.asarray(coarse, dtype=float)
    fine = np.asarray(fine, dtype=float)
    f = 2.0 ** order
    return (f * fine - coarse) / (f - 1.0), np.abs(coarse - fine) / (f - 1.0)


def refine_extrapolate(problem_builder: Callable, grid_levels: Sequence, k: int = 1,
                       tol: float = 1e-9, seed: int = 0, method: str = "auto",
                       keep_vectors: bool = False) -> EigenResult:
    """Solve on each level and Richardson-extrapolate the last two.

    ``problem_builder(level)`` returns the pencil ``(A, B)``; successive levels
    must halve the mesh size. The error estimate is ``|lam(h) - lam(h/2)| / 3``.
    Non-monotone convergence across levels is flagged, not fatal.
    """
    if len(grid_levels) < 2:
        raise ValueError("refinement needs at least two grid levels")
    per_level = []
    last = None
    for level in grid_levels:
        A, B = problem_builder(level)
        last = lowest_eigenpairs(A, B, k=k, tol=tol, seed=seed, method=method)
        per_level.append(last.eigenvalues.copy())

    ext, err = richardson(per_level[-2], per_level[-1])
    flags = []
    stack = np.vstack(per_level)
    if np.any(np.diff(stack, axis=0) > 1e-12 * np.abs(stack[:-1])):
        flags.append("non-monotone convergence across levels")
    if len(per_level) >= 3:
        d1 = np.abs(per_level[-3] - per_level[-2])
        d2 = np.abs(per_level[-2] - per_level[-1])
        if np.any(d2 > d1):
            flags.append("refinement differences not shrinking")
    for msg in flags:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return EigenResult(
        eigenvalues=ext, residuals=last.residuals, iterations=last.iterations,
        eigenvectors=last.eigenvectors if keep_vectors else None,
        error_estimate=err, raw=per_level[-1].copy(), level_values=per_level,
        levels=list(grid_levels), method=last.method, warnings=flags,
    )


def convergence_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Observed orders ``log(e_i / e_{i+1}) / log(ratio)``."""
    e = np.abs(np.asarray(errors, dtype=float))
    return np.log(e[:-1] / e[1:]) / math.log(ratio)


# special functions ----------------------------------------------------------

def bessel_j(nu: float, x: float) -> float:
    """J_nu(x) by its power series, summed with ``math.fsum``.

    Adequate for the moderate arguments (x below about 20) where first
    zeros of orders up to 5 live.
    """
    if x == 0.0:
        return 1.0 if nu == 0 else 0.0
    half = 0.5 * x
    terms = []
    # log of leading term avoids overflow in Gamma for the prefactor
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0))
    k = 0
    while True:
        terms.append(term)
        k += 1
        term *= -half * half / (k * (k + nu))
        if abs(term) < 1e-18 * max(1e-300, abs(terms[0])) and k > half:
            break
        if k > 500:
            break
    return math.fsum(terms)


def bessel_first_zero(nu: float) -> float:
    """First positive zero j_{nu,1} of J_nu for 0 <= nu <= 5.

    Brackets the sign change with a forward scan from ``nu`` (the zero lies
    above it) and bisects until the bracket stops shrinking in floating point.
    """
    if nu < 0 or nu > 5:
        raise ValueError("supported order range is 0 <= nu <= 5")
    lo = max(float(nu), 1e-3)
    hi = lo + 0.25
    while bessel_j(nu, hi) > 0:
        lo, hi = hi, hi + 0.25
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        if bessel_j(nu, mid) > 0:
            lo = mid
        else:
            hi = mid


def sphere_measure(m: int) -> float:
    """Surface measure of the unit m-sphere in R^{m+1}."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return 2.0 * math.pi ** ((m + 1) / 2.0) / math.gamma((m + 1) / 2.0)
