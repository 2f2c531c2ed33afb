"""Kernel and cokernel analysis of the rigidity matrix.

First-order flexes span ``ker(JA)``, self-stresses span ``ker(JA^T)``.  A
load (one torque per inner crease) is resolvable when ``JA^T sigma + l = 0``
has a solution, which happens exactly when the load does no work on any
flex.  Bases come from a dense SVD with a relative rank threshold.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import CreasedPaper

__all__ = [
    "FlexBasis",
    "StressBasis",
    "SVDSplit",
    "LoadResolution",
    "StaticReport",
    "CountingReport",
    "svd_split",
    "rank",
    "first_order_flexes",
    "self_stresses",
    "resolve_load",
    "load_is_orthogonal",
    "classify_static",
    "counting_report",
    "stress_report",
]


@dataclass(frozen=True, eq=False)
class FlexBasis:
    """Orthonormal columns spanning ``ker(JA)``."""

    vectors: np.ndarray  # (J, m)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.dim


@dataclass(frozen=True, eq=False)
class StressBasis:
    """Orthonormal columns spanning ``ker(JA^T)``."""

    vectors: np.ndarray  # (3I+6H, s)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return self.dim


@dataclass(frozen=True, eq=False)
class SVDSplit:
    rank: int
    singular_values: np.ndarray
    flexes: FlexBasis
    stresses: StressBasis
    range_basis: np.ndarray  # left singular vectors of the nonzero part


def svd_split(JA: np.ndarray, tol: float = 1e-10) -> SVDSplit:
    """Rank, kernel and cokernel of ``JA`` from one full SVD.

    Singular values above ``tol * sigma_max`` count towards the rank.
    """
    JA = np.asarray(JA, dtype=float)
    r_, c_ = JA.shape
    if r_ == 0 or c_ == 0:
        return SVDSplit(0, np.zeros(0), FlexBasis(np.eye(c_)), StressBasis(np.eye(r_)), np.zeros((r_, 0)))
    U, S, Vt = np.linalg.svd(JA, full_matrices=True)
    r = int(np.sum(S > tol * S[0])) if S[0] > 0 else 0
    return SVDSplit(r, S, FlexBasis(Vt[r:].T.copy()), StressBasis(U[:, r:].copy()), U[:, :r].copy())


def rank(JA: np.ndarray, tol: float = 1e-10) -> int:
    """Numerical rank: singular values above ``tol`` times the largest."""
    return svd_split(JA, tol).rank


def first_order_flexes(JA: np.ndarray, tol: float = 1e-10) -> FlexBasis:
    return svd_split(JA, tol).flexes


def self_stresses(JA: np.ndarray, tol: float = 1e-10) -> StressBasis:
    return svd_split(JA, tol).stresses


@dataclass(frozen=True, eq=False)
class LoadResolution:
    """Outcome of ``JA^T sigma + l = 0``.

    ``stress`` is the minimum-norm particular solution (least-squares when
    unresolvable); every solution is ``stress + stresses.vectors @ c``.  When
    unresolvable, ``witness`` is the unit flex along which the load works.
    """

    resolvable: bool
    stress: np.ndarray
    stresses: StressBasis
    residual: float
    witness: np.ndarray | None = None
    work: float = 0.0
    message: str = ""


def _load_tol(l: np.ndarray) -> float:
    return 1e-8 * (1.0 + float(np.max(np.abs(l), initial=0.0)))


def resolve_load(JA: np.ndarray, load: Sequence[float], tol: float = 1e-10) -> LoadResolution:
    """Solve the equilibrium equation for a crease-torque load."""
    JA = np.asarray(JA, dtype=float)
    l = np.asarray(load, dtype=float).reshape(-1)
    if l.shape != (JA.shape[1],):
        raise ValueError(f"load must have length {JA.shape[1]}, got {l.shape[0]}")
    split = svd_split(JA, tol)
    if JA.size:
        sigma, *_ = np.linalg.lstsq(JA.T, -l, rcond=tol)
    else:
        sigma = np.zeros(JA.shape[0])
    res = float(np.max(np.abs(JA.T @ sigma + l), initial=0.0))
    if res <= _load_tol(l):
        return LoadResolution(True, sigma, split.stresses, res, message="resolvable")
    F = split.flexes.vectors
    w = F @ (F.T @ l)
    w = w / np.linalg.norm(w)
    return LoadResolution(False, sigma, split.stresses, res, witness=w, work=float(l @ w),
                          message="load does work on a first-order flex")


def load_is_orthogonal(JA: np.ndarray, load: Sequence[float], tol: float = 1e-10) -> bool:
    """Solvability through the flex space: ``l . v = 0`` for every flex v."""
    l = np.asarray(load, dtype=float)
    F = first_order_flexes(JA, tol).vectors
    return bool(np.max(np.abs(F.T @ l), initial=0.0) <= _load_tol(l))


@dataclass(frozen=True)
class StaticReport:
    classification: str  # "StaticallyRigid" or "Flexible"
    rank: int
    m: int
    s: int
    rows: int
    J: int
    counting_identity: bool
    s_formula: int

    @property
    def statically_rigid(self) -> bool:
        return self.classification == "StaticallyRigid"


def classify_static(paper: CreasedPaper, tol: float | None = None, JA: np.ndarray | None = None) -> StaticReport:
    """First-order rigidity, equivalently static rigidity (``m = 0``).

    Also checks ``s = 3I - J + 6H + m``; a hole whose creases are
    concurrent only carries three rows, which is accounted for.
    """
    from .derivatives import assemble_jacobian

    tol = paper.tol.rank if tol is None else tol
    JA = assemble_jacobian(paper) if JA is None else JA
    sp = svd_split(JA, tol)
    m, s = sp.flexes.dim, sp.stresses.dim
    n_conc = sum(1 for u in paper.units if u.from_hole)
    s_formula = 3 * paper.I - paper.J + 6 * paper.H + m - 3 * n_conc
    return StaticReport(
        "StaticallyRigid" if m == 0 else "Flexible",
        sp.rank, m, s, JA.shape[0], JA.shape[1], s == s_formula, s_formula,
    )


@dataclass(frozen=True)
class CountingReport:
    """Self-stress counts of the origami, its double-coning and its body-hinge model.

    ``s1 = 3I - J + 6H + m``; ``s2`` counts the double-coning framework
    (joints ``V + 2K``, bars ``E + 2 sum |panel|``); ``s3 = 5J - 6(K-1) + m``
    from the body-hinge mobility rule.  For a disk with holes the three
    satisfy ``s1 = s2 = s3 - 3I``.  A closed surface has six extra trivial
    self-stresses in the origami count, so there ``s1 - 6 = s2 = s3 - 3I``.
    """

    s1: int
    s2: int
    s3: int
    m: int
    joints: int
    bars: int
    closed: bool
    holds: bool
    extra: dict = field(default_factory=dict)


def counting_report(paper: CreasedPaper, m: int) -> CountingReport:
    I, J, H, K = paper.I, paper.J, paper.H, paper.K
    joints = paper.V + 2 * K
    bars = paper.E + 2 * sum(len(p.vertex_cycle) for p in paper.panels)
    s1 = 3 * I - J + 6 * H + m
    s2 = bars - (3 * joints - 6 - m)
    s3 = 5 * J - 6 * (K - 1) + m
    closed = paper.is_closed
    holds = (s1 - 6 * closed == s2 == s3 - 3 * I)
    extra = {
        "joints_formula": -I + 2 * J - 2 * H + paper.Z + 2,
        "bars_formula": 5 * J + 3 * paper.Z,
        "s3_formula": 6 * I - J + 6 * H + m,
    }
    return CountingReport(s1, s2, s3, m, joints, bars, closed, holds, extra)


def stress_report(paper: CreasedPaper, sigma: Sequence[float]) -> list[dict]:
    """Per-unit grouping of a stress vector (torque, and force for holes)."""
    sigma = np.asarray(sigma, dtype=float)
    out, start = [], 0
    for u in paper.units:
        entry = {"unit": int(u.centre), "kind": "hole" if u.from_hole or u.is_hole else "vertex",
                 "torque": sigma[start:start + 3].tolist()}
        if u.is_hole:
            entry["force"] = sigma[start + 3:start + 6].tolist()
        out.append(entry)
        start += u.rows
    return out
