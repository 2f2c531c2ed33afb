"""Bar-joint frameworks and the double-coning of a creased paper.

Each panel is replaced by its boundary bars plus two apex joints on
opposite sides of the panel, each joined to every panel vertex.  Panels
sharing a crease share its bar.  The framework is first-order rigid
exactly when the creased paper is, which gives an independent check of
the origami analysis, and it resolves general (force + torque) loads on
panels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._errors import AnalysisError
from .derivatives import assemble_jacobian
from .model import CreasedPaper
from .statics import svd_split

__all__ = [
    "BarJointFramework",
    "DegenerateSpanError",
    "FrameworkRigidity",
    "BarResolution",
    "CorrespondenceReport",
    "GeneralLoadResult",
    "framework_rigidity_matrix",
    "trivial_flexes",
    "affine_dimension",
    "framework_first_order_rigid",
    "framework_resolve",
    "double_cone",
    "correspondence_check",
    "general_load_resolve",
    "framework_to_dict",
]


class DegenerateSpanError(AnalysisError):
    """Joints do not affinely span 3-space, so the 3v-6 rank test does not apply."""


@dataclass(frozen=True, eq=False)
class BarJointFramework:
    joints: np.ndarray                 # (v, 3)
    bars: np.ndarray                   # (e, 2) int
    rest_lengths: np.ndarray = None    # (e,)
    crease_bars: tuple[int, ...] = ()  # bars standing for inner creases
    panel_apexes: np.ndarray | None = None   # (K, 2) joint ids, double-cones only
    edge_bar: dict = field(default_factory=dict)  # crease id -> bar index

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=float).reshape(-1, 3)
        bars = np.asarray(self.bars, dtype=int).reshape(-1, 2)
        if bars.size and (bars.min() < 0 or bars.max() >= len(joints)):
            raise ValueError("bar references an unknown joint")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "bars", bars)
        if self.rest_lengths is None:
            lengths = np.linalg.norm(joints[bars[:, 0]] - joints[bars[:, 1]], axis=1) if bars.size else np.zeros(0)
            object.__setattr__(self, "rest_lengths", lengths)

    @property
    def v(self) -> int:
        return len(self.joints)

    @property
    def e(self) -> int:
        return len(self.bars)


def framework_rigidity_matrix(fw: BarJointFramework) -> np.ndarray:
    """``R_G`` (e x 3v): row (i, j) holds ``p_i - p_j`` at i and ``p_j - p_i`` at j."""
    R = np.zeros((fw.e, 3 * fw.v))
    for k, (i, j) in enumerate(fw.bars):
        d = fw.joints[i] - fw.joints[j]
        if np.linalg.norm(d) == 0.0:
            raise ValueError(f"bar {k} joins coincident joints {i} and {j}")
        R[k, 3 * i:3 * i + 3] = d
        R[k, 3 * j:3 * j + 3] = -d
    return R


def trivial_flexes(joints: np.ndarray) -> np.ndarray:
    """The 6 rigid-motion velocity fields (3v x 6): translations and rotations."""
    P = np.asarray(joints, dtype=float).reshape(-1, 3)
    v = len(P)
    out = np.zeros((3 * v, 6))
    for a in range(3):
        out[a::3, a] = 1.0
    for a in range(3):
        w = np.zeros(3)
        w[a] = 1.0
        out[:, 3 + a] = np.cross(w, P).reshape(-1)
    return out


def affine_dimension(joints: np.ndarray, tol: float = 1e-9) -> int:
    P = np.asarray(joints, dtype=float).reshape(-1, 3)
    if len(P) < 2:
        return 0
    X = P - P.mean(axis=0)
    s = np.linalg.svd(X, compute_uv=False)
    return int(np.sum(s > tol * max(s[0], 1e-300)))


@dataclass(frozen=True)
class FrameworkRigidity:
    rigid: bool
    rank: int
    nontrivial_flexes: int
    self_stresses: int


def framework_first_order_rigid(fw: BarJointFramework, tol: float = 1e-10) -> FrameworkRigidity:
    """Rigid iff ``rank(R_G) = 3v - 6`` (joints must span 3-space)."""
    if affine_dimension(fw.joints) < 3:
        raise DegenerateSpanError(
            "joints do not span 3-space; the 3v-6 criterion assumes a full affine span"
        )
    R = framework_rigidity_matrix(fw)
    r = svd_split(R, tol).rank
    m = 3 * fw.v - 6 - r
    return FrameworkRigidity(m == 0, r, m, fw.e - r)


@dataclass(frozen=True, eq=False)
class BarResolution:
    resolvable: bool
    stresses: np.ndarray       # axial force per length, one per bar
    residual: float
    witness: np.ndarray | None = None  # (v, 3) flex doing work, if unresolvable


def _equilibrium_error(P: np.ndarray, F: np.ndarray) -> float:
    return float(max(np.abs(F.sum(axis=0)).max(), np.abs(np.cross(P, F).sum(axis=0)).max()))


def framework_resolve(fw: BarJointFramework, forces: np.ndarray, tol: float = 1e-10,
                      equilibrium_tol: float = 1e-9) -> BarResolution:
    """Minimum-norm bar stresses with ``sigma R_G + F = 0``."""
    F = np.asarray(forces, dtype=float).reshape(fw.v, 3)
    scale = 1.0 + float(np.abs(F).max(initial=0.0)) * (1.0 + float(np.abs(fw.joints).max(initial=0.0)))
    if _equilibrium_error(fw.joints, F) > equilibrium_tol * scale:
        raise ValueError("joint forces are not in equilibrium (net force or moment is nonzero)")
    R = framework_rigidity_matrix(fw)
    f = F.reshape(-1)
    if R.size:
        sigma, *_ = np.linalg.lstsq(R.T, -f, rcond=tol)
    else:
        sigma = np.zeros(fw.e)
    res = float(np.max(np.abs(R.T @ sigma + f), initial=0.0))
    if res <= 1e-8 * (1.0 + float(np.abs(f).max(initial=0.0))):
        return BarResolution(True, sigma, res)
    sp = svd_split(R, tol)
    w = sp.flexes.vectors @ (sp.flexes.vectors.T @ f)
    w = w / np.linalg.norm(w)
    return BarResolution(False, sigma, res, w.reshape(-1, 3))


# ---------------------------------------------------------------------------
# double-coning


def double_cone(paper: CreasedPaper) -> BarJointFramework:
    """Double-coning framework of a creased paper.

    Joints: the paper's vertices, then two apexes per panel at
    ``centroid +/- h n`` with h the panel's mean edge length.  Bars: one per
    panel edge (crease order, shared between adjacent panels), then for each
    panel the bars from its upper and lower apex to every panel vertex.
    """
    P = [paper.positions]
    bars, edge_bar, crease_bars = [], {}, []
    for c in paper.creases:
        edge_bar[c.id] = len(bars)
        if c.inner:
            crease_bars.append(len(bars))
        bars.append(c.ends)
    apexes = []
    V = paper.V
    for k, pnl in enumerate(paper.panels):
        cyc = list(pnl.vertex_cycle)
        pts = paper.positions[cyc]
        h = float(np.mean(np.linalg.norm(pts - np.roll(pts, -1, axis=0), axis=1)))
        n = paper.panel_normals[k]
        c = pts.mean(axis=0)
        up, down = V + 2 * k, V + 2 * k + 1
        P.append(np.array([c + h * n, c - h * n]))
        apexes.append((up, down))
        for apex in (up, down):
            bars.extend((apex, v) for v in cyc)
    joints = np.vstack(P)
    return BarJointFramework(joints, np.array(bars, dtype=int).reshape(-1, 2),
                             crease_bars=tuple(crease_bars),
                             panel_apexes=np.array(apexes, dtype=int).reshape(-1, 2),
                             edge_bar=edge_bar)


def framework_to_dict(fw: BarJointFramework) -> dict:
    return {"joints": fw.joints.tolist(), "bars": fw.bars.tolist(), "crease_bars": list(fw.crease_bars)}


@dataclass(frozen=True)
class CorrespondenceReport:
    origami_rigid: bool
    framework_rigid: bool
    origami_flexes: int
    framework_flexes: int
    origami_stresses: int
    framework_stresses: int
    expected_framework_stresses: int
    rigidity_agrees: bool
    flex_dimension_agrees: bool
    stress_count_agrees: bool
    per_panel_rigid: bool

    @property
    def agrees(self) -> bool:
        return self.rigidity_agrees and self.flex_dimension_agrees and self.stress_count_agrees and self.per_panel_rigid


def correspondence_check(paper: CreasedPaper, tol: float | None = None) -> CorrespondenceReport:
    """Compare origami and double-coning first-order rigidity and stress counts.

    The framework's self-stress count equals the origami's plus three per
    concurrent hole (the origami keeps only its rotation rows) minus six on
    a closed surface (whose origami stresses include six trivial ones).
    """
    tol = paper.tol.rank if tol is None else tol
    sp = svd_split(assemble_jacobian(paper), tol)
    fw = double_cone(paper)
    fr = framework_first_order_rigid(fw, tol)
    n_conc = sum(1 for u in paper.units if u.from_hole)
    expected = sp.stresses.dim + 3 * n_conc - 6 * int(paper.is_closed)
    per_panel = all(_panel_cone_rigid(paper, k, tol) for k in range(paper.K))
    return CorrespondenceReport(
        sp.flexes.dim == 0, fr.rigid, sp.flexes.dim, fr.nontrivial_flexes,
        sp.stresses.dim, fr.self_stresses, expected,
        (sp.flexes.dim == 0) == fr.rigid, sp.flexes.dim == fr.nontrivial_flexes,
        fr.self_stresses == expected, per_panel,
    )


def _panel_cone_rigid(paper: CreasedPaper, k: int, tol: float) -> bool:
    fw = double_cone(paper)
    cyc = list(paper.panels[k].vertex_cycle)
    up, down = fw.panel_apexes[k]
    ids = cyc + [int(up), int(down)]
    loc = {j: i for i, j in enumerate(ids)}
    bars = [(loc[a], loc[b]) for a, b in fw.bars if a in loc and b in loc]
    sub = BarJointFramework(fw.joints[ids], np.array(bars))
    return framework_first_order_rigid(sub, tol).rigid


# ---------------------------------------------------------------------------
# general loads


@dataclass(frozen=True, eq=False)
class GeneralLoadResult:
    resolvable: bool
    joint_forces: np.ndarray          # (v, 3) equivalent forces on framework joints
    bar_stresses: np.ndarray
    residual: float
    reactions: dict                   # (panel, vertex) -> force carried by the panel at that vertex
    witness: np.ndarray | None = None
    independent_inplane_torques: int = 0


def _couple(M: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Force f with ``d x f = M`` for M perpendicular to d."""
    return np.cross(M, d) / (d @ d)


def equivalent_joint_forces(paper: CreasedPaper, fw: BarJointFramework, wrenches: np.ndarray) -> np.ndarray:
    """Replace each panel wrench (force, moment about the panel centroid) by joint forces.

    The force goes to the upper apex; the moment, corrected for that shift,
    splits into its panel-normal part (a couple on two panel vertices) and
    its in-plane part (a couple on the two apexes).
    """
    W = np.asarray(wrenches, dtype=float).reshape(paper.K, 6)
    F = np.zeros((fw.v, 3))
    for k, pnl in enumerate(paper.panels):
        force, moment = W[k, :3], W[k, 3:]
        cyc = list(pnl.vertex_cycle)
        pts = paper.positions[cyc]
        c = pts.mean(axis=0)
        up, down = fw.panel_apexes[k]
        a_up, a_dn = fw.joints[up], fw.joints[down]
        F[up] += force
        M = moment - np.cross(a_up - c, force)
        n = paper.panel_normals[k]
        # vertex pair with the longest in-plane separation
        best, pair = -1.0, (0, 1)
        for i in range(len(cyc)):
            for j in range(i + 1, len(cyc)):
                d = pts[i] - pts[j]
                dp = np.linalg.norm(d - (d @ n) * n)
                if dp > best:
                    best, pair = dp, (i, j)
        i, j = pair
        d = pts[i] - pts[j]
        e = a_up - a_dn
        if abs(d @ n) <= 1e-12 * np.linalg.norm(d):
            m_n = (M @ n) * n
            f = _couple(m_n, d)
            g = _couple(M - m_n, e)
        else:
            # non-planar panel: split the moment between the two couples by least squares
            A = np.hstack([_skew(d), _skew(e)])
            fg, *_ = np.linalg.lstsq(A, M, rcond=None)
            f, g = fg[:3], fg[3:]
        F[cyc[i]] += f
        F[cyc[j]] -= f
        F[up] += g
        F[down] -= g
    return F


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def general_load_resolve(paper: CreasedPaper, wrenches: Sequence[Sequence[float]], tol: float | None = None,
                         equilibrium_tol: float = 1e-9) -> GeneralLoadResult:
    """Resolve a set of panel wrenches through the double-coning framework.

    ``wrenches[k] = (Fx, Fy, Fz, Mx, My, Mz)`` with the moment taken about the
    centroid of panel k's vertices.  Raises ``ValueError`` when the wrench
    set is not in equilibrium.
    """
    tol = paper.tol.rank if tol is None else tol
    W = np.asarray(wrenches, dtype=float).reshape(paper.K, 6)
    cents = np.array([paper.positions[list(p.vertex_cycle)].mean(axis=0) for p in paper.panels]).reshape(-1, 3)
    net_f = W[:, :3].sum(axis=0)
    net_m = (W[:, 3:] + np.cross(cents, W[:, :3])).sum(axis=0)
    scale = 1.0 + float(np.abs(W).max(initial=0.0)) * (1.0 + float(np.abs(cents).max(initial=0.0)))
    if max(np.abs(net_f).max(initial=0.0), np.abs(net_m).max(initial=0.0)) > equilibrium_tol * scale:
        raise ValueError("panel wrenches are not in equilibrium")
    fw = double_cone(paper)
    F = equivalent_joint_forces(paper, fw, W)
    res = framework_resolve(fw, F, tol, equilibrium_tol)
    reactions = {}
    if res.resolvable:
        shared = {}
        for c in paper.creases:
            shared[fw.edge_bar[c.id]] = 0.5 if c.inner else 1.0
        for k, pnl in enumerate(paper.panels):
            up, down = fw.panel_apexes[k]
            cyc = list(pnl.vertex_cycle)
            for v in cyc:
                total = np.zeros(3)
                for b, (i, j) in enumerate(fw.bars):
                    if v not in (i, j):
                        continue
                    other = j if i == v else i
                    if other in (up, down):
                        w = 1.0
                    elif b in shared and other in cyc:
                        w = shared[b]
                    else:
                        continue
                    total += w * res.stresses[b] * (fw.joints[v] - fw.joints[other])
                reactions[(k, v)] = total
    return GeneralLoadResult(res.resolvable, F, res.stresses, res.residual, reactions, res.witness,
                             independent_inplane_torques=paper.J)
