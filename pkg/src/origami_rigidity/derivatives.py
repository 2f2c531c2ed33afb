"""Jacobian and Hessian of the consistency constraints.

At a closed configuration the derivative of a unit's loop product with
respect to crease j is the twist of that crease in the global frame, so
the Jacobian columns are simply ``x_j`` (vertex units) or
``[x_j; O_j x x_j]`` (holes), with ``x_j`` the outward crease direction.
Second derivatives are products of two twists and only couple creases of
the same unit; the Hessian is stored block-sparse per unit.

Finite-difference oracles (``fd_*``) are provided for testing.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .consistency import residual, residual_jacobian, row_layout
from .kernels import hessian_blocks
from .model import CreasedPaper

__all__ = [
    "assemble_jacobian",
    "jacobian_from_incidence",
    "assemble_hessian",
    "Hessian",
    "HessianBlock",
    "ConstraintSystem",
    "constraint_system",
    "tangent_substitution",
    "jacobian_coo",
    "fd_jacobian",
    "fd_jacobian_directional",
    "fd_hessian",
]


def assemble_jacobian(paper: CreasedPaper) -> np.ndarray:
    """Closed-form Jacobian ``JA`` of shape ``(3 I + 6 H, J)``."""
    layout = row_layout(paper)
    rows = sum(size for _, _, size in layout)
    JA = np.zeros((rows, paper.J))
    for (k, start, size), u in zip(layout, paper.units):
        for j, cid in enumerate(u.crease_ids):
            col = paper.column_of[cid]
            x = u.directions[j]
            JA[start:start + 3, col] = x
            if u.is_hole:
                JA[start + 3:start + 6, col] = np.cross(u.origins[j], x)
    return JA


def jacobian_from_incidence(paper: CreasedPaper) -> np.ndarray:
    """Jacobian stitched from the incidence reductions ``L_v`` and ``L_h``.

    Column j of ``L_v`` is scaled by the stored crease direction ``p_j``;
    column j of ``L_h`` by ``[p_j; O_j x p_j]`` with ``O_j`` the hole vertex
    on crease j.  An independent route to the same matrix.
    """
    inc = paper.incidence
    p = np.array([_unit(paper.crease_vector(c)) for c in paper.inner_crease_ids]).reshape(-1, 3)
    blocks = []
    for r in range(paper.I):
        blocks.append(inc.L_v[r][None, :] * p.T)
    for h, cyc in enumerate(paper.hole_boundaries):
        unit = paper.units[paper.I + h]
        rot = inc.L_h[h][None, :] * p.T
        if unit.from_hole:
            blocks.append(rot)
            continue
        hole_set = set(cyc)
        O = np.zeros((paper.J, 3))
        for j, cid in enumerate(paper.inner_crease_ids):
            ends = [e for e in paper.crease_by_id[cid].ends if e in hole_set]
            if ends:
                O[j] = paper.positions[ends[0]]
        blocks.append(np.vstack([rot, inc.L_h[h][None, :] * np.cross(O, p).T]))
    if not blocks:
        return np.zeros((0, paper.J))
    return np.vstack(blocks)


def _unit(v):
    return v / np.linalg.norm(v)


@dataclass(frozen=True, eq=False)
class HessianBlock:
    start: int            # first constraint row of the unit
    columns: np.ndarray   # Jacobian columns of the unit's creases (unit order)
    values: np.ndarray    # (rows, n, n)


@dataclass(frozen=True, eq=False)
class Hessian:
    """Order-3 tensor ``HA[row, j, k]`` stored as per-unit dense blocks."""

    shape: tuple[int, int, int]
    blocks: tuple[HessianBlock, ...]

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for b in self.blocks:
            r = b.values.shape[0]
            idx = np.ix_(range(b.start, b.start + r), b.columns, b.columns)
            out[idx] += b.values
        return out

    def contract(self, omega: Sequence[float]) -> np.ndarray:
        """``G[j, k] = sum_i omega_i HA[i, j, k]`` (a J x J matrix)."""
        omega = np.asarray(omega, dtype=float)
        if omega.shape != (self.shape[0],):
            raise ValueError(f"stress must have length {self.shape[0]}, got {omega.shape}")
        J = self.shape[1]
        G = np.zeros((J, J))
        for b in self.blocks:
            r = b.values.shape[0]
            w = omega[b.start:b.start + r]
            G[np.ix_(b.columns, b.columns)] += np.tensordot(w, b.values, axes=1)
        return G

    def quadratic(self, v: Sequence[float]) -> np.ndarray:
        """Vector ``v^T HA v`` of length ``rows``."""
        v = np.asarray(v, dtype=float)
        out = np.zeros(self.shape[0])
        for b in self.blocks:
            vb = v[b.columns]
            r = b.values.shape[0]
            out[b.start:b.start + r] += np.einsum("ijk,j,k->i", b.values, vb, vb)
        return out

    def coo(self):
        """Coordinate list ``(rows, j, k, values)`` of the stored nonzeros."""
        I, Jc, Kc, V = [], [], [], []
        for b in self.blocks:
            r, n, _ = b.values.shape
            ii, aa, bb = np.nonzero(b.values)
            I.append(ii + b.start)
            Jc.append(b.columns[aa])
            Kc.append(b.columns[bb])
            V.append(b.values[ii, aa, bb])
        cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
        return cat(I, int), cat(Jc, int), cat(Kc, int), cat(V, float)


def assemble_hessian(paper: CreasedPaper) -> Hessian:
    """Closed-form Hessian, symmetric in its last two indices."""
    layout = row_layout(paper)
    rows = sum(size for _, _, size in layout)
    blocks = []
    for (k, start, size), u in zip(layout, paper.units):
        if u.degree == 0:
            continue
        vals = hessian_blocks(u.directions, u.origins, u.is_hole)
        vals.setflags(write=False)
        cols = np.array([paper.column_of[c] for c in u.crease_ids], dtype=int)
        cols.setflags(write=False)
        blocks.append(HessianBlock(start, cols, vals))
    return Hessian((rows, paper.J, paper.J), tuple(blocks))


def jacobian_coo(JA: np.ndarray, tol: float = 0.0):
    """Coordinate triples ``(i, j, value)`` of entries with ``|value| > tol``."""
    ii, jj = np.nonzero(np.abs(JA) > tol)
    return ii, jj, JA[ii, jj]


# ---------------------------------------------------------------------------
# bundle used by the statics / stability layers


@dataclass(frozen=True, eq=False)
class ConstraintSystem:
    """Residual, Jacobian and Hessian of one creased paper at its stored state."""

    paper: CreasedPaper
    residual: np.ndarray
    jacobian: np.ndarray
    hessian: Hessian
    tol_rank: float = 1e-10

    @property
    def shape(self) -> tuple[int, int]:
        return self.jacobian.shape

    @cached_property
    def _svd(self):
        from .statics import svd_split
        return svd_split(self.jacobian, self.tol_rank)

    @property
    def rank(self) -> int:
        return self._svd.rank

    @property
    def flexes(self):
        return self._svd.flexes

    @property
    def stresses(self):
        return self._svd.stresses

    @property
    def m(self) -> int:
        return self.flexes.dim

    @property
    def s(self) -> int:
        return self.stresses.dim


def constraint_system(paper: CreasedPaper, tol_rank: float | None = None) -> ConstraintSystem:
    tol_rank = paper.tol.rank if tol_rank is None else tol_rank
    JA = assemble_jacobian(paper)
    JA.setflags(write=False)
    return ConstraintSystem(paper, residual(paper).values, JA, assemble_hessian(paper), tol_rank)


# ---------------------------------------------------------------------------
# t = tan(rho / 2) coordinates


def tangent_substitution(paper: CreasedPaper, include_curvature: bool = True):
    """Jacobian and dense Hessian with respect to ``t_j = tan(rho_j / 2)``.

    With ``rho = 2 atan t``: ``drho/dt = 2/(1+t^2)`` and
    ``d2rho/dt2 = -4t/(1+t^2)^2``.  The chain rule gives

        dA/dt_j        = 2/(1+t_j^2) dA/drho_j
        d2A/dt_j dt_k  = 4/((1+t_j^2)(1+t_k^2)) d2A/drho_j drho_k
                         + [j == k] dA/drho_j * d2rho_j/dt_j^2

    The last term vanishes at t = 0 and lies in the column space of the
    Jacobian; pass ``include_curvature=False`` to drop it.
    """
    rho = paper.rho
    if np.any(np.abs(rho) >= np.pi):
        bad = [paper.inner_crease_ids[j] for j in np.nonzero(np.abs(rho) >= np.pi)[0]]
        raise ValueError(f"tan(rho/2) is infinite for creases {bad}")
    t = np.tan(rho / 2.0)
    d1 = 2.0 / (1.0 + t**2)
    JA = assemble_jacobian(paper)
    HA = assemble_hessian(paper).dense()
    Jt = JA * d1[None, :]
    Ht = HA * d1[None, :, None] * d1[None, None, :]
    if include_curvature and paper.J:
        d2 = -4.0 * t / (1.0 + t**2) ** 2
        idx = np.arange(paper.J)
        Ht[:, idx, idx] += JA * d2[None, :]
    return Jt, Ht


# ---------------------------------------------------------------------------
# finite-difference oracles


def fd_jacobian_directional(paper: CreasedPaper, d: Sequence[float], h: float = 1e-5,
                            rho: Sequence[float] | None = None) -> np.ndarray:
    """Central difference ``(A(rho + h d) - A(rho - h d)) / 2h``."""
    rho = paper.rho if rho is None else np.asarray(rho, dtype=float)
    d = np.asarray(d, dtype=float)
    return (residual(paper, rho + h * d).values - residual(paper, rho - h * d).values) / (2 * h)


def fd_jacobian(paper: CreasedPaper, h: float = 1e-5, rho: Sequence[float] | None = None) -> np.ndarray:
    eye = np.eye(paper.J)
    cols = [fd_jacobian_directional(paper, eye[j], h, rho) for j in range(paper.J)]
    rows = len(residual(paper).values)
    return np.column_stack(cols) if cols else np.zeros((rows, 0))


def fd_hessian(paper: CreasedPaper, h: float = 1e-5, rho: Sequence[float] | None = None) -> np.ndarray:
    """Central differences of the exact product-rule Jacobian."""
    rho = paper.rho if rho is None else np.asarray(rho, dtype=float)
    rows = len(residual(paper).values)
    out = np.zeros((rows, paper.J, paper.J))
    for k in range(paper.J):
        e = np.zeros(paper.J)
        e[k] = h
        out[:, :, k] = (residual_jacobian(paper, rho + e) - residual_jacobian(paper, rho - e)) / (2 * h)
    return out
