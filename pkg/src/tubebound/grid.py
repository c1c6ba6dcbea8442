"""Conforming multilinear (Q1) Galerkin assembly on structured tensor grids.

A grid is a list of 1D node arrays, one per reference axis. Coefficients are
supplied as callbacks evaluated exactly at Gauss points. Boundary conditions,
periodic identification and the polar-origin collapse are all expressed
through a node -> dof map, with -1 marking eliminated (Dirichlet) nodes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .spectral import SparseSymmetric

# elements per assembly chunk; bounds peak memory for 3D grids
CHUNK_ELEMENTS = 20_000


@dataclass(frozen=True)
class TensorGrid:
    axes: tuple  # node coordinates per axis
    quad: tuple  # Gauss points per cell along each axis

    def __post_init__(self):
        if len(self.axes) != len(self.quad):
            raise ValueError("one quadrature order per axis")
        for x in self.axes:
            if len(x) < 2 or np.any(np.diff(x) <= 0):
                raise ValueError("axis nodes must be strictly increasing")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(len(x) for x in self.axes)

    @property
    def cells(self) -> tuple:
        return tuple(len(x) - 1 for x in self.axes)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def node_coordinates(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def gauss_unit(n: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def _reference_basis(quad: Sequence[int]):
    """Values and unit-cell derivatives of the 2^D local basis at the tensor Gauss points."""
    dim = len(quad)
    pts = [gauss_unit(q) for q in quad]
    grids = np.meshgrid(*[p[0] for p in pts], indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=1)  # (Q, D)
    wgrids = np.meshgrid(*[p[1] for p in pts], indexing="ij")
    wq = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    corners = np.array(np.meshgrid(*[[0, 1]] * dim, indexing="ij")).reshape(dim, -1).T  # (A, D)
    val1 = np.stack([1.0 - t, t], axis=-1)  # (Q, D, 2)
    der1 = np.broadcast_to(np.array([-1.0, 1.0]), t.shape + (2,))
    nq, na = t.shape[0], corners.shape[0]
    phi = np.ones((nq, na))
    dphi = np.ones((nq, na, dim))
    for a, c in enumerate(corners):
        for k in range(dim):
            phi[:, a] *= val1[:, k, c[k]]
            for j in range(dim):
                dphi[:, a, j] *= der1[:, k, c[k]] if j == k else val1[:, k, c[k]]
    return t, wq, phi, dphi, corners


def build_dofmap(shape: Sequence[int], dirichlet=(), periodic=(), collapse=(),
                 mask: np.ndarray | None = None) -> np.ndarray:
    """Node -> dof map for a tensor grid.

    dirichlet: iterable of (axis, side) with side 0 (low) or 1 (high)
    periodic:  axes whose last node layer is identified with the first
    collapse:  (axis, along) pairs; nodes with index 0 on ``axis`` are merged
               along ``along`` (the polar origin)
    mask:      boolean node array, False marks extra eliminated nodes
    """
    shape = tuple(shape)
    n = int(np.prod(shape))
    rep = np.arange(n).reshape(shape)
    for ax in periodic:
        first = [slice(None)] * len(shape)
        last = [slice(None)] * len(shape)
        first[ax], last[ax] = 0, -1
        rep[tuple(last)] = rep[tuple(first)]
    for ax, along in collapse:
        sl = [slice(None)] * len(shape)
        sl[ax] = 0
        sub = rep[tuple(sl)]
        along_sub = along if along < ax else along - 1
        idx0 = [slice(None)] * sub.ndim
        idx0[along_sub] = slice(0, 1)
        rep[tuple(sl)] = np.broadcast_to(sub[tuple(idx0)], sub.shape)
    eliminated = np.zeros(shape, dtype=bool)
    for ax, side in dirichlet:
        sl = [slice(None)] * len(shape)
        sl[ax] = 0 if side == 0 else -1
        eliminated[tuple(sl)] = True
    if mask is not None:
        eliminated |= ~mask.reshape(shape)
    rep = rep.ravel()
    # a representative is eliminated if any node it stands for is
    dead = np.zeros(n, dtype=bool)
    np.logical_or.at(dead, rep, eliminated.ravel())
    free = ~dead[rep]
    dofmap = np.full(n, -1, dtype=np.int64)
    uniq, inv = np.unique(rep[free], return_inverse=True)
    dofmap[free] = inv
    return dofmap


def assemble(grid: TensorGrid, coefficients: Callable, dofmap: np.ndarray,
             with_mass: bool = True):
    """Assemble the stiffness and mass pencil on the free dofs.

    ``coefficients(points)`` receives reference coordinates of shape (N, D)
    and returns ``(K, w, V)``: K of shape (N, D, D) for the gradient form,
    w of shape (N,) for the mass weight, and V of shape (N,) or None for a
    potential added to the stiffness. Everything is already multiplied by the
    reference Jacobian determinant.
    """
    dim = grid.dim
    t, wq, phi, dphi, corners = _reference_basis(grid.quad)
    cells = grid.cells
    shape = grid.shape
    strides = np.array([int(np.prod(shape[k + 1:])) for k in range(dim)])
    h_axes = [np.diff(x) for x in grid.axes]
    n_dof = int(dofmap.max()) + 1
    cross_cells = int(np.prod(cells[1:])) if dim > 1 else 1
    slab = max(1, CHUNK_ELEMENTS // cross_cells)

    rows_k, cols_k, data_k = [], [], []
    data_m = []
    # element multi-indices of one slab of the first axis, built once per chunk
    for i0 in range(0, cells[0], slab):
        i1 = min(cells[0], i0 + slab)
        ranges = [np.arange(i0, i1)] + [np.arange(c) for c in cells[1:]]
        emesh = np.meshgrid(*ranges, indexing="ij")
        eidx = np.stack([m.ravel() for m in emesh], axis=1)  # (E, D)
        E = eidx.shape[0]
        h = np.stack([h_axes[k][eidx[:, k]] for k in range(dim)], axis=1)  # (E, D)
        x0 = np.stack([grid.axes[k][eidx[:, k]] for k in range(dim)], axis=1)
        vol = np.prod(h, axis=1)
        pts = x0[:, None, :] + h[:, None, :] * t[None, :, :]  # (E, Q, D)
        Q = t.shape[0]
        K, w, V = coefficients(pts.reshape(E * Q, dim))
        K = K.reshape(E, Q, dim, dim)
        scale = wq[None, :] * vol[:, None]  # (E, Q)
        Kt = K / (h[:, None, :, None] * h[:, None, None, :]) * scale[:, :, None, None]
        Ke = np.einsum("qai,eqij,qbj->eab", dphi, Kt, dphi, optimize=True)
        if V is not None:
            Ve = V.reshape(E, Q) * scale
            Ke += np.einsum("qa,eq,qb->eab", phi, Ve, phi, optimize=True)
        if with_mass:
            We = w.reshape(E, Q) * scale
            Me = np.einsum("qa,eq,qb->eab", phi, We, phi, optimize=True)

        nodes = (eidx[:, None, :] + corners[None, :, :]) @ strides  # (E, A)
        dofs = dofmap[nodes]
        r = np.broadcast_to(dofs[:, :, None], Ke.shape)
        c = np.broadcast_to(dofs[:, None, :], Ke.shape)
        keep = (r >= 0) & (c >= 0) & (r <= c)
        rows_k.append(r[keep])
        cols_k.append(c[keep])
        data_k.append(Ke[keep])
        if with_mass:
            data_m.append(Me[keep])

    rows = np.concatenate(rows_k)
    cols = np.concatenate(cols_k)
    A = sp.coo_matrix((np.concatenate(data_k), (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    A = SparseSymmetric(A)
    if not with_mass:
        return A, None
    B = sp.coo_matrix((np.concatenate(data_m), (rows, cols)), shape=(n_dof, n_dof)).tocsr()
    return A, SparseSymmetric(B)


def expand(vector: np.ndarray, dofmap: np.ndarray) -> np.ndarray:
    """Scatter a dof vector back onto all grid nodes (zeros at eliminated nodes)."""
    out = np.zeros(dofmap.shape, dtype=float)
    free = dofmap >= 0
    out[free] = vector[dofmap[free]]
    return out


def refine_axis(nodes: np.ndarray) -> np.ndarray:
    """Bisect every cell of a 1D node array."""
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    out = np.empty(2 * len(nodes) - 1)
    out[0::2] = nodes
    out[1::2] = mids
    return out
