"""Loop-closure (consistency) constraints of a creased paper.

Around every single unit the panels are visited in order P_0, P_1, ...,
P_{n-1} = P_{-1}.  Each crease crossing j carries two local frames with
origin on the crease and x-axis along the outward crease direction: one
attached to the panel before the crease and one to the panel after it.
They differ by the x-rotation ``Rx(rho_j)``.  Chaining
``C_j = F_{j-1}^{-1} F~_j`` (a z-rotation by the sector angle plus, for
holes, an in-plane translation) with the fold rotations closes the loop:

    T_n(rho) = prod_j C_j Rx(rho_j) = I          at a valid state.

The loop product is expressed in the global frame by conjugating with the
placement ``T' = F_{n-1}``, and the independent off-diagonal entries
(rotation rows (3,2), (1,3), (2,1), translation column for holes) are
stacked into the residual vector ``A(rho)``.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._errors import AnalysisError, ModelError
from .kernels import chain_products
from .model import CreasedPaper, SingleUnit

__all__ = [
    "UnitConstraint",
    "Residual",
    "unit_constraints",
    "unit_angles",
    "rotation_product",
    "transform_product",
    "residual",
    "residual_vector",
    "residual_jacobian",
    "closure_error",
    "is_consistent",
    "ROT_SELECT",
    "TRANS_SELECT",
]

ROT_SELECT = ((2, 1), (0, 2), (1, 0))
TRANS_SELECT = ((0, 3), (1, 3), (2, 3))


def _frame(origin: np.ndarray, x: np.ndarray, normal: np.ndarray) -> np.ndarray:
    z = normal - (normal @ x) * x
    nz = np.linalg.norm(z)
    if nz < 1e-12:
        raise ModelError("crease is parallel to its panel normal")
    z = z / nz
    F = np.eye(4)
    F[:3, 0] = x
    F[:3, 1] = np.cross(z, x)
    F[:3, 2] = z
    F[:3, 3] = origin
    return F


def _rigid_inverse(F: np.ndarray) -> np.ndarray:
    R = F[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ F[:3, 3]
    return out


def _rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class UnitConstraint:
    """Configuration-independent data of one closure loop."""

    unit: SingleUnit
    steps: np.ndarray        # (n, 4, 4) rigid transforms C_j
    placement: np.ndarray    # (4, 4) frame of the last panel, T'
    planar: tuple[bool, ...]  # whether C_j is an exact z-rotation + in-plane shift

    @property
    def sector_angles(self) -> np.ndarray:
        """Angle alpha_j (vertex) or beta_j (hole) between x_{j-1} and x_j."""
        return np.arctan2(self.steps[:, 1, 0], self.steps[:, 0, 0])

    @property
    def translations(self) -> np.ndarray:
        """In-plane offsets v_j of the frame origins, in the previous frame."""
        return self.steps[:, :3, 3].copy()

    @property
    def rows(self) -> int:
        return self.unit.rows

    def global_product(self, T: np.ndarray) -> np.ndarray:
        P = self.placement
        return P @ T @ _rigid_inverse(P)


def _build_constraint(paper: CreasedPaper, unit: SingleUnit) -> UnitConstraint:
    n = unit.degree
    normals = paper.panel_normals
    after = [_frame(unit.origins[j], unit.directions[j], normals[unit.panels[j]]) for j in range(n)]
    before = [_frame(unit.origins[j], unit.directions[j], normals[unit.panels[j - 1]]) for j in range(n)]
    steps = np.empty((n, 4, 4))
    planar = []
    for j in range(n):
        C = _rigid_inverse(after[j - 1]) @ before[j]
        flat = abs(C[2, 2] - 1.0) <= 1e-12 and abs(C[2, 3]) <= paper.tau_geom
        if flat:
            # exact z-rotation and in-plane translation, as in the closed form
            D = np.eye(4)
            D[:3, :3] = _rot_z(np.arctan2(C[1, 0], C[0, 0]))
            if unit.is_hole:
                D[:2, 3] = C[:2, 3]
            # vertex units share one origin, so their shift is exactly zero
            C = D
        steps[j] = C
        planar.append(bool(flat))
    steps.setflags(write=False)
    placement = after[n - 1] if n else np.eye(4)
    placement.setflags(write=False)
    return UnitConstraint(unit, steps, placement, tuple(planar))


_CACHE: "weakref.WeakKeyDictionary[CreasedPaper, tuple[UnitConstraint, ...]]" = weakref.WeakKeyDictionary()


def unit_constraints(paper: CreasedPaper) -> tuple[UnitConstraint, ...]:
    """Constraint data for every unit (cached per paper)."""
    out = _CACHE.get(paper)
    if out is None:
        out = tuple(_build_constraint(paper, u) for u in paper.units)
        _CACHE[paper] = out
    return out


def unit_angles(paper: CreasedPaper, unit: SingleUnit, rho: Sequence[float]) -> np.ndarray:
    """Restrict a full folding-angle vector to one unit, in unit order."""
    rho = np.asarray(rho, dtype=float)
    return rho[[paper.column_of[c] for c in unit.crease_ids]]


def _local_product(constraint: UnitConstraint, rho_local) -> np.ndarray:
    rho_local = np.asarray(rho_local, dtype=float)
    if rho_local.shape != (constraint.unit.degree,):
        raise ValueError(
            f"expected {constraint.unit.degree} angles for {constraint.unit.label()}, got {rho_local.shape}"
        )
    if constraint.unit.degree == 0:
        return np.eye(4)
    T, _ = chain_products(constraint.steps, rho_local)
    return T


def rotation_product(constraint: UnitConstraint, rho_local) -> np.ndarray:
    """``R_n(rho) = prod_j Rz(alpha_j) Rx(rho_j)`` in the unit's own frame."""
    return _local_product(constraint, rho_local)[:3, :3]


def transform_product(constraint: UnitConstraint, rho_local) -> np.ndarray:
    """Homogeneous loop product ``T_n(rho)`` in the unit's own frame."""
    return _local_product(constraint, rho_local)


def _select(M: np.ndarray, hole: bool) -> np.ndarray:
    idx = ROT_SELECT + TRANS_SELECT if hole else ROT_SELECT
    return np.array([M[i, j] for i, j in idx])


@dataclass(frozen=True, eq=False)
class Residual:
    """Stacked independent constraint values with their per-unit row layout."""

    values: np.ndarray
    layout: tuple[tuple[int, int, int], ...]  # (unit index, first row, row count)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __len__(self):
        return len(self.values)

    def block(self, k: int) -> np.ndarray:
        _, start, size = self.layout[k]
        return self.values[start:start + size]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))


def row_layout(paper: CreasedPaper) -> tuple[tuple[int, int, int], ...]:
    out, start = [], 0
    for k, u in enumerate(paper.units):
        out.append((k, start, u.rows))
        start += u.rows
    return tuple(out)


def _check_rho(paper: CreasedPaper, rho) -> np.ndarray:
    rho = paper.rho if rho is None else np.asarray(rho, dtype=float)
    if rho.shape != (paper.J,):
        raise ValueError(f"expected {paper.J} folding angles, got shape {rho.shape}")
    return rho


def residual(paper: CreasedPaper, rho: Sequence[float] | None = None) -> Residual:
    """Independent closure residual ``A(rho)`` of length ``3 I + 6 H``.

    Concurrent holes contribute three rows like a vertex.
    """
    rho = _check_rho(paper, rho)
    layout = row_layout(paper)
    vals = np.zeros(sum(size for _, _, size in layout))
    for (k, start, size), con in zip(layout, unit_constraints(paper)):
        try:
            T = _local_product(con, unit_angles(paper, con.unit, rho))
        except Exception as exc:  # pragma: no cover - defensive
            raise AnalysisError(f"evaluation failed for {con.unit.label()}: {exc}") from exc
        vals[start:start + size] = _select(con.global_product(T), con.unit.is_hole)
    vals.setflags(write=False)
    return Residual(vals, layout)


def residual_vector(paper: CreasedPaper, rho: Sequence[float] | None = None) -> np.ndarray:
    return residual(paper, rho).values


def residual_jacobian(paper: CreasedPaper, rho: Sequence[float] | None = None) -> np.ndarray:
    """Exact derivative of ``A`` at an arbitrary angle vector (product rule).

    Independent of the closed-form assembly in :mod:`derivatives`, which is
    only valid at a closed configuration; used as its oracle.
    """
    rho = _check_rho(paper, rho)
    layout = row_layout(paper)
    rows = sum(size for _, _, size in layout)
    out = np.zeros((rows, paper.J))
    for (k, start, size), con in zip(layout, unit_constraints(paper)):
        u = con.unit
        if u.degree == 0:
            continue
        _, dT = chain_products(con.steps, unit_angles(paper, u, rho))
        P = con.placement
        Pinv = _rigid_inverse(P)
        for j, cid in enumerate(u.crease_ids):
            out[start:start + size, paper.column_of[cid]] = _select(P @ dT[j] @ Pinv, u.is_hole)
    return out


def closure_error(paper: CreasedPaper, rho: Sequence[float] | None = None) -> np.ndarray:
    """Per-unit max-abs deviation of the full loop product from the identity."""
    rho = _check_rho(paper, rho)
    errs = []
    for con in unit_constraints(paper):
        T = _local_product(con, unit_angles(paper, con.unit, rho))
        G = con.global_product(T)
        if not con.unit.is_hole:
            G = G[:3, :3]
            errs.append(np.abs(G - np.eye(3)).max())
        else:
            errs.append(np.abs(G - np.eye(4)).max())
    return np.array(errs)


def is_consistent(paper: CreasedPaper, rho: Sequence[float] | None = None, tol: float | None = None) -> bool:
    """True when the selected residual is within ``tol`` *and* every full loop
    product is the identity.

    The second test rejects spurious zeros of the selected entries such as
    a half-turn ``diag(1, -1, -1)``.
    """
    tol = paper.tol.res if tol is None else tol
    if residual(paper, rho).max_abs() > tol:
        return False
    return bool(np.all(closure_error(paper, rho) <= tol))
