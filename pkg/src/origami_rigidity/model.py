"""Creased-paper geometry and topology.

A creased paper is a polyhedral surface made of rigid polygonal panels
joined along straight creases.  This module loads it from JSON, derives
the inner/outer classification of vertices and creases, finds the holes,
builds the vertex/crease incidence matrix and splits the structure into
single units (one per inner vertex and one per hole), each of which
carries one closure loop of the kinematic constraints.

Conventions
-----------
* Panels are listed counter-clockwise with respect to the orientation
  normal, so every inner crease is traversed once in each direction.
* The folding angle of a crease ``from -> to`` is the rotation of the
  panel containing the directed edge ``from -> to`` (the *left* panel)
  relative to the other panel, about the unit vector ``to - from``.
  A flat crease has angle 0.
* Inner creases are numbered by increasing id; that order defines the
  Jacobian columns.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from ._errors import GeometryWarning, ModelError
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "Vertex",
    "Panel",
    "Crease",
    "CreasedPaper",
    "SingleUnit",
    "IncidenceMatrix",
    "load_creased_paper",
    "creased_paper_from_dict",
    "creased_paper_to_dict",
    "build_incidence",
    "extract_single_units",
    "newell_normal",
    "geometric_folding_angles",
    "fold_development",
]


# ---------------------------------------------------------------------------
# small geometric helpers


def newell_normal(points: np.ndarray) -> np.ndarray:
    """Area-weighted normal of a closed polygon (not normalised)."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * np.cross(p, q).sum(axis=0)


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ModelError("cannot normalise a zero vector")
    return v / n


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class Vertex:
    id: int
    position: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(-1)
        if pos.shape != (3,) or not np.all(np.isfinite(pos)):
            raise ModelError(f"vertex {self.id}: position must be 3 finite numbers")
        object.__setattr__(self, "position", _readonly(pos))


@dataclass(frozen=True)
class Panel:
    id: int
    vertex_cycle: tuple[int, ...]

    def __post_init__(self):
        cyc = tuple(int(v) for v in self.vertex_cycle)
        if len(cyc) < 3:
            raise ModelError(f"panel {self.id}: needs at least 3 vertices")
        if len(set(cyc)) != len(cyc):
            raise ModelError(f"panel {self.id}: repeated vertex in cycle {cyc}")
        object.__setattr__(self, "vertex_cycle", cyc)

    def half_edges(self):
        cyc = self.vertex_cycle
        return [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]

    def prev(self, v: int) -> int:
        cyc = self.vertex_cycle
        return cyc[cyc.index(v) - 1]


@dataclass(frozen=True)
class Crease:
    """A panel edge.  Inner creases have two adjacent panels, outer ones one.

    ``adjacent_panels`` is ``(left, right)``: the left panel traverses the
    directed edge ``direction_from -> direction_to``.  For outer creases it
    holds the single owning panel.
    """

    id: int
    ends: tuple[int, int]
    direction_from: int
    rho: float = 0.0
    adjacent_panels: tuple[int, ...] = ()

    def __post_init__(self):
        a, b = (int(e) for e in self.ends)
        if a == b:
            raise ModelError(f"crease {self.id}: both ends are vertex {a}")
        if int(self.direction_from) not in (a, b):
            raise ModelError(f"crease {self.id}: 'from' must be one of its ends")
        rho = float(self.rho)
        if not math.isfinite(rho) or abs(rho) > math.pi + 1e-12:
            raise ModelError(f"crease {self.id}: folding angle {rho} outside [-pi, pi]")
        object.__setattr__(self, "ends", (a, b))
        object.__setattr__(self, "direction_from", int(self.direction_from))
        object.__setattr__(self, "rho", rho)

    @property
    def direction_to(self) -> int:
        a, b = self.ends
        return b if self.direction_from == a else a

    @property
    def inner(self) -> bool:
        return len(self.adjacent_panels) == 2

    def key(self) -> frozenset:
        return frozenset(self.ends)


@dataclass(frozen=True, eq=False)
class SingleUnit:
    """The panels around one inner vertex or one hole.

    ``directions[j]`` is the unit vector of crease ``crease_ids[j]`` pointing
    away from the unit, ``origins[j]`` the point on that crease line used as
    frame origin (the centre vertex, the hole vertex, or the common point of
    a concurrent hole).  ``panels[j]`` is the panel entered after crossing
    crease j, so the panel before crease j is ``panels[j-1]``.
    """

    kind: str
    centre: int
    crease_ids: tuple[int, ...]
    signs: tuple[int, ...]
    directions: np.ndarray
    origins: np.ndarray
    panels: tuple[int, ...]
    origin_vertices: tuple[int, ...]
    centre_point: np.ndarray
    from_hole: bool = False

    @property
    def degree(self) -> int:
        return len(self.crease_ids)

    @property
    def rows(self) -> int:
        return 3 if self.kind == "vertex" else 6

    @property
    def is_hole(self) -> bool:
        return self.kind == "hole"

    def label(self) -> str:
        if self.from_hole:
            return f"hole {self.centre} (concurrent)"
        return f"{self.kind} {self.centre}"


@dataclass(frozen=True, eq=False)
class IncidenceMatrix:
    D: np.ndarray
    L_v: np.ndarray
    L_h: np.ndarray
    inner_vertex_ids: tuple[int, ...]
    inner_crease_ids: tuple[int, ...]


# ---------------------------------------------------------------------------
# the creased paper


@dataclass(frozen=True, eq=False)
class CreasedPaper:
    """Immutable creased paper with its derived topology.

    Construct through :func:`load_creased_paper` or
    :func:`creased_paper_from_dict`.  On construction the crease list is
    completed with the outer (boundary) edges that were not listed.
    """

    vertices: tuple[Vertex, ...]
    panels: tuple[Panel, ...]
    creases: tuple[Crease, ...]
    flat_positions: np.ndarray | None = None
    tol: Tolerances = DEFAULT

    # derived, filled in __post_init__
    positions: np.ndarray = field(init=False, repr=False)
    inner_vertex_ids: tuple[int, ...] = field(init=False)
    inner_crease_ids: tuple[int, ...] = field(init=False)
    boundary_cycles: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    outer_boundary: tuple[int, ...] | None = field(init=False, repr=False)
    hole_boundaries: tuple[tuple[int, ...], ...] = field(init=False)
    tau_geom: float = field(init=False, repr=False)

    def __post_init__(self):
        _derive_topology(self)

    # counts -------------------------------------------------------------
    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def I(self) -> int:  # noqa: E743 - paper notation
        return len(self.inner_vertex_ids)

    @property
    def J(self) -> int:
        return len(self.inner_crease_ids)

    @property
    def H(self) -> int:
        return len(self.hole_boundaries)

    @property
    def K(self) -> int:
        return len(self.panels)

    @property
    def Z(self) -> int:
        return len({v for cyc in self.boundary_cycles for v in cyc})

    @property
    def E(self) -> int:
        return len(self.creases)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary_cycles) == 0

    def counts(self) -> dict:
        return {"I": self.I, "J": self.J, "H": self.H, "K": self.K, "Z": self.Z}

    # lookups ------------------------------------------------------------
    @cached_property
    def crease_by_id(self) -> dict[int, Crease]:
        return {c.id: c for c in self.creases}

    @cached_property
    def crease_by_edge(self) -> dict[frozenset, Crease]:
        return {c.key(): c for c in self.creases}

    @cached_property
    def column_of(self) -> dict[int, int]:
        """Inner crease id -> Jacobian column."""
        return {cid: j for j, cid in enumerate(self.inner_crease_ids)}

    @cached_property
    def half_edge_panel(self) -> dict[tuple[int, int], int]:
        out = {}
        for k, p in enumerate(self.panels):
            for he in p.half_edges():
                out[he] = k
        return out

    @cached_property
    def rho(self) -> np.ndarray:
        """Stored folding angles of the inner creases (column order)."""
        return _readonly([self.crease_by_id[c].rho for c in self.inner_crease_ids])

    @cached_property
    def panel_normals(self) -> np.ndarray:
        out = []
        for p in self.panels:
            n = newell_normal(self.positions[list(p.vertex_cycle)])
            nn = np.linalg.norm(n)
            if nn <= self.tau_geom**2:
                raise ModelError(f"panel {p.id} has zero area")
            out.append(n / nn)
        return _readonly(out)

    @cached_property
    def units(self) -> tuple[SingleUnit, ...]:
        return _extract_units(self)

    @cached_property
    def incidence(self) -> IncidenceMatrix:
        return _build_incidence(self)

    def crease_vector(self, cid: int) -> np.ndarray:
        c = self.crease_by_id[cid]
        return self.positions[c.direction_to] - self.positions[c.direction_from]

    def with_rho(self, rho: Sequence[float]) -> "CreasedPaper":
        """Copy with new stored folding angles (geometry unchanged)."""
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.J,):
            raise ModelError(f"expected {self.J} folding angles, got {rho.shape}")
        new = []
        for c in self.creases:
            if c.id in self.column_of:
                c = Crease(c.id, c.ends, c.direction_from, float(rho[self.column_of[c.id]]))
            else:
                c = Crease(c.id, c.ends, c.direction_from, c.rho)
            new.append(c)
        return CreasedPaper(self.vertices, self.panels, tuple(new), self.flat_positions, self.tol)


# ---------------------------------------------------------------------------
# topology derivation


def _derive_topology(paper: CreasedPaper) -> None:
    setf = object.__setattr__
    verts = tuple(paper.vertices)
    ids = [v.id for v in verts]
    if ids != list(range(len(verts))):
        raise ModelError("vertex ids must be dense and ordered 0..V-1")
    pos = _readonly(np.array([v.position for v in verts]).reshape(-1, 3))
    setf(paper, "positions", pos)
    if len(pos):
        diag = float(np.linalg.norm(pos.max(axis=0) - pos.min(axis=0)))
    else:
        diag = 1.0
    setf(paper, "tau_geom", paper.tol.geom_rel * max(diag, 1e-300))

    panels = tuple(paper.panels)
    if [p.id for p in panels] != list(range(len(panels))):
        raise ModelError("panel ids must be dense and ordered 0..K-1")
    for p in panels:
        for v in p.vertex_cycle:
            if not 0 <= v < len(verts):
                raise ModelError(f"panel {p.id} references unknown vertex {v}")

    half: dict[tuple[int, int], int] = {}
    by_edge: dict[frozenset, list[int]] = {}
    for p in panels:
        for a, b in p.half_edges():
            if (a, b) in half:
                raise ModelError(
                    f"edge {a}->{b} is traversed in the same direction by panels "
                    f"{half[(a, b)]} and {p.id}: inconsistent orientation or non-manifold crease"
                )
            half[(a, b)] = p.id
            by_edge.setdefault(frozenset((a, b)), []).append(p.id)
    for key, owners in by_edge.items():
        if len(owners) > 2:
            a, b = sorted(key)
            raise ModelError(f"non-manifold crease {a}-{b}: {len(owners)} adjacent panels")

    # completed crease list
    given: dict[frozenset, Crease] = {}
    for c in paper.creases:
        k = c.key()
        if k in given:
            raise ModelError(f"crease {c.id} duplicates crease {given[k].id}")
        if k not in by_edge:
            raise ModelError(f"crease {c.id} {c.ends} is not an edge of any panel")
        given[k] = c
    used_ids = [c.id for c in paper.creases]
    if len(set(used_ids)) != len(used_ids):
        raise ModelError("crease ids must be unique")
    next_id = max(used_ids, default=-1) + 1
    creases = []
    for key in sorted(by_edge, key=lambda k: tuple(sorted(k))):
        owners = by_edge[key]
        c = given.get(key)
        if c is None:
            if len(owners) == 2:
                a, b = sorted(key)
                raise ModelError(f"inner crease {a}-{b} is missing from the crease list")
            # synthesize an outer crease following the owning panel's traversal
            a, b = sorted(key)
            if (a, b) not in half:
                a, b = b, a
            c = Crease(next_id, (a, b), a, 0.0)
            next_id += 1
        f, t = c.direction_from, c.direction_to
        if len(owners) == 2:
            adj = (half[(f, t)], half[(t, f)])
        else:
            adj = (owners[0],)
        creases.append(Crease(c.id, c.ends, c.direction_from, c.rho, adj))
    creases.sort(key=lambda c: c.id)
    setf(paper, "creases", tuple(creases))

    # boundary cycles from boundary half-edges
    succ: dict[int, int] = {}
    for c in creases:
        if c.inner:
            continue
        a, b = c.ends
        if (a, b) not in half:
            a, b = b, a
        if a in succ:
            raise ModelError(f"vertex {a} is a pinch point of the boundary (not supported)")
        succ[a] = b
    cycles = []
    seen: set[int] = set()
    for start in sorted(succ):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        v = succ[start]
        while v != start:
            if v in seen or v not in succ:
                raise ModelError("boundary edges do not form closed cycles")
            cyc.append(v)
            seen.add(v)
            v = succ[v]
        cycles.append(tuple(cyc))
    setf(paper, "boundary_cycles", tuple(cycles))

    boundary_vertices = {v for cyc in cycles for v in cyc}
    in_panel = {v for p in panels for v in p.vertex_cycle}
    missing = set(range(len(verts))) - in_panel
    if missing:
        raise ModelError(f"vertices {sorted(missing)} belong to no panel")
    setf(paper, "inner_vertex_ids", tuple(v for v in range(len(verts)) if v not in boundary_vertices))
    setf(paper, "inner_crease_ids", tuple(c.id for c in creases if c.inner))

    # outer boundary = the cycle with the largest projected area
    if cycles:
        ref = paper.flat_positions
        if ref is not None:
            ref = np.column_stack([np.asarray(ref, float), np.zeros(len(ref))])
        else:
            ref = pos
        areas = [np.linalg.norm(newell_normal(ref[list(c)])) for c in cycles]
        order = np.argsort(areas)[::-1]
        outer = int(order[0])
        if len(cycles) > 1:
            a0, a1 = areas[order[0]], areas[order[1]]
            if a0 - a1 <= 1e-6 * max(a0, 1e-300):
                warnings.warn(
                    "outer boundary is ambiguous: two boundary cycles have the same area",
                    GeometryWarning, stacklevel=3,
                )
        setf(paper, "outer_boundary", cycles[outer])
        holes = [c for i, c in enumerate(cycles) if i != outer]
        holes.sort(key=min)
        setf(paper, "hole_boundaries", tuple(holes))
    else:
        setf(paper, "outer_boundary", None)
        setf(paper, "hole_boundaries", ())

    # Euler characteristic of an orientable surface with b boundary cycles
    V, E, K, b = len(verts), len(creases), len(panels), len(cycles)
    if V - E + K != 2 - b:
        raise ModelError(
            f"Euler identity violated: V-E+K = {V - E + K}, expected {2 - b} "
            "(the surface must be a disk with holes or a closed sphere)"
        )

    for p in panels:
        pts = pos[list(p.vertex_cycle)]
        n = newell_normal(pts)
        nn = np.linalg.norm(n)
        if nn == 0.0:
            continue
        dev = np.abs((pts - pts.mean(axis=0)) @ (n / nn)).max()
        if dev > paper.tau_geom:
            warnings.warn(
                f"panel {p.id} is not planar (deviation {dev:.3g}); it is treated as a rigid body",
                GeometryWarning, stacklevel=3,
            )

    if paper.flat_positions is not None:
        flat = np.asarray(paper.flat_positions, dtype=float)
        if flat.shape != (len(verts), 2):
            raise ModelError("flat development must give one 2-D point per vertex")
        object.__setattr__(paper, "flat_positions", _readonly(flat))


# ---------------------------------------------------------------------------
# folding angles and the flat development


def _left_right_normals(paper: CreasedPaper, crease: Crease):
    left, right = crease.adjacent_panels
    d = _unit(paper.crease_vector(crease.id))
    nL = paper.panel_normals[left]
    nR = paper.panel_normals[right]
    # project onto the plane normal to the crease; exact for planar panels
    nL = _unit(nL - (nL @ d) * d)
    nR = _unit(nR - (nR @ d) * d)
    return d, nL, nR


def geometric_folding_angles(paper: CreasedPaper) -> np.ndarray:
    """Folding angles of the inner creases measured from the 3-D geometry."""
    out = np.empty(paper.J)
    for j, cid in enumerate(paper.inner_crease_ids):
        d, nL, nR = _left_right_normals(paper, paper.crease_by_id[cid])
        out[j] = math.atan2(d @ np.cross(nR, nL), nR @ nL)
    return out


def _rot_about_line(point: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    T = np.eye(4)
    R = Rotation.from_rotvec(_unit(axis) * angle).as_matrix()
    T[:3, :3] = R
    T[:3, 3] = point - R @ point
    return T


def fold_development(paper: CreasedPaper, rho: Sequence[float] | None = None) -> np.ndarray:
    """Fold the flat development by the given angles.

    Returns an array ``(K, 4, 4)`` of rigid transforms mapping the flat
    (z = 0) coordinates of each panel to its folded placement, with panel 0
    fixed in the flat frame.  Panels are reached by a breadth-first walk
    across inner creases.
    """
    if paper.flat_positions is None:
        raise ModelError("no flat development available")
    rho = paper.rho if rho is None else np.asarray(rho, dtype=float)
    flat3 = np.column_stack([paper.flat_positions, np.zeros(paper.V)])
    G: list[np.ndarray | None] = [None] * paper.K
    if paper.K == 0:
        return np.zeros((0, 4, 4))
    G[0] = np.eye(4)
    queue = [0]
    while queue:
        k = queue.pop(0)
        for a, b in paper.panels[k].half_edges():
            c = paper.crease_by_edge[frozenset((a, b))]
            if not c.inner:
                continue
            left, right = c.adjacent_panels
            other = right if k == left else left
            if G[other] is not None:
                continue
            q0 = flat3[c.direction_from]
            d = flat3[c.direction_to] - q0
            angle = rho[paper.column_of[c.id]]
            # left panel is rotated by +rho relative to the right one
            H = _rot_about_line(q0, d, angle if other == left else -angle)
            G[other] = G[k] @ H
            queue.append(other)
    if any(g is None for g in G):
        raise ModelError("panel complex is not connected")
    return np.array(G)


def configuration_deviation(paper: CreasedPaper) -> float:
    """Largest distance between the folded development and the stored geometry.

    The folded development is aligned to the stored positions by the best
    proper rigid motion before measuring.
    """
    G = fold_development(paper)
    flat3 = np.column_stack([paper.flat_positions, np.zeros(paper.V)])
    pred, target = [], []
    for k, p in enumerate(paper.panels):
        for v in p.vertex_cycle:
            pred.append(G[k][:3, :3] @ flat3[v] + G[k][:3, 3])
            target.append(paper.positions[v])
    pred, target = np.array(pred), np.array(target)
    cp, ct = pred.mean(axis=0), target.mean(axis=0)
    if len(pred) >= 2 and np.linalg.norm(pred - cp) > 0:
        rot, _ = Rotation.align_vectors(target - ct, pred - cp)
        aligned = rot.apply(pred - cp) + ct
    else:
        aligned = pred - cp + ct
    return float(np.linalg.norm(aligned - target, axis=1).max())


def _check_flat_orientation(paper: CreasedPaper) -> None:
    flat3 = np.column_stack([paper.flat_positions, np.zeros(paper.V)])
    for p in paper.panels:
        if newell_normal(flat3[list(p.vertex_cycle)])[2] <= 0:
            raise ModelError(f"panel {p.id} is clockwise in the flat development")


# ---------------------------------------------------------------------------
# single units


def _vertex_fan(paper: CreasedPaper, v: int) -> list[tuple[int, int]]:
    """Crossings ``(crease id, panel entered)`` walking counter-clockwise round v."""
    half = paper.half_edge_panel
    start = next(k for k, p in enumerate(paper.panels) if v in p.vertex_cycle)
    out = []
    k = start
    while True:
        u = paper.panels[k].prev(v)
        c = paper.crease_by_edge[frozenset((v, u))]
        q = half[(v, u)]
        out.append((c.id, q))
        k = q
        if k == start:
            break
        if len(out) > len(paper.creases):
            raise ModelError(f"could not walk around vertex {v}")
    return out


def _hole_walk(paper: CreasedPaper, cycle: tuple[int, ...], h: int) -> list[tuple[int, int, int]]:
    """Crossings ``(crease id, panel entered, hole vertex)`` counter-clockwise round a hole.

    ``cycle`` lists the hole vertices in the order the panels traverse them,
    which is clockwise round the hole, so the walk goes backwards through it.
    """
    half = paper.half_edge_panel
    hole_set = set(cycle)
    n = len(cycle)
    out = []
    for step in range(n):
        i = (-step) % n
        o = cycle[i]
        nxt = cycle[(i + 1) % n]
        k = half[(o, nxt)]
        for _ in range(len(paper.creases) + 1):
            u = paper.panels[k].prev(o)
            c = paper.crease_by_edge[frozenset((o, u))]
            if not c.inner:
                break
            if u in hole_set:
                raise ModelError(
                    f"crease {c.id} joins two vertices of hole {h}; such creases are not supported"
                )
            k = half[(o, u)]
            out.append((c.id, k, o))
        else:  # pragma: no cover - guarded by topology checks
            raise ModelError(f"could not walk around hole {h}")
    return out


def _concurrency_point(origins: np.ndarray, dirs: np.ndarray, tau: float):
    """Least-squares common point of the lines ``origins + t dirs`` or None."""
    if len(dirs) < 2:
        return None
    A = np.zeros((3, 3))
    rhs = np.zeros(3)
    for o, d in zip(origins, dirs):
        P = np.eye(3) - np.outer(d, d)
        A += P
        rhs += P @ o
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= 1e-9 * sv[0]:
        return None
    c = np.linalg.solve(A, rhs)
    dist = [np.linalg.norm((np.eye(3) - np.outer(d, d)) @ (c - o)) for o, d in zip(origins, dirs)]
    return c if max(dist) <= tau else None


def _make_unit(paper, kind, centre, crossings, origin_vertices, centre_point, from_hole=False,
               origins=None):
    crease_ids = [c for c, _ in crossings]
    # start at the lowest crease id, keep the cyclic order
    s = int(np.argmin(crease_ids))
    crossings = crossings[s:] + crossings[:s]
    origin_vertices = list(origin_vertices[s:]) + list(origin_vertices[:s])
    if origins is not None:
        origins = np.vstack([origins[s:], origins[:s]])
    crease_ids = tuple(c for c, _ in crossings)
    if len(set(crease_ids)) != len(crease_ids):
        raise ModelError(f"{kind} {centre}: a crease is met twice around the unit")
    dirs, signs = [], []
    for cid, o in zip(crease_ids, origin_vertices):
        c = paper.crease_by_id[cid]
        vec = paper.crease_vector(cid)
        if np.linalg.norm(vec) <= paper.tau_geom:
            raise ModelError(f"crease {cid} is degenerate (zero length)")
        sign = 1 if c.direction_from == o else -1
        signs.append(sign)
        dirs.append(sign * vec / np.linalg.norm(vec))
    if origins is None:
        origins = paper.positions[list(origin_vertices)]
    return SingleUnit(
        kind=kind,
        centre=centre,
        crease_ids=crease_ids,
        signs=tuple(signs),
        directions=_readonly(dirs),
        origins=_readonly(origins),
        panels=tuple(q for _, q in crossings),
        origin_vertices=tuple(origin_vertices),
        centre_point=_readonly(centre_point),
        from_hole=from_hole,
    )


def _extract_units(paper: CreasedPaper, reclassify: bool = True) -> tuple[SingleUnit, ...]:
    units = []
    for v in paper.inner_vertex_ids:
        cr = _vertex_fan(paper, v)
        units.append(_make_unit(paper, "vertex", v, cr, [v] * len(cr), paper.positions[v]))
    for h, cycle in enumerate(paper.hole_boundaries):
        walk = _hole_walk(paper, cycle, h)
        cr = [(c, k) for c, k, _ in walk]
        ov = [o for _, _, o in walk]
        unit = _make_unit(paper, "hole", h, cr, ov, paper.positions[list(cycle)].mean(axis=0))
        if reclassify:
            c = _concurrency_point(unit.origins, unit.directions, paper.tau_geom)
            if c is not None:
                unit = _make_unit(paper, "vertex", h, cr, ov, c, from_hole=True,
                                  origins=np.tile(c, (len(cr), 1)))
        units.append(unit)
    return tuple(units)


def extract_single_units(paper: CreasedPaper, reclassify_concurrent: bool = True) -> tuple[SingleUnit, ...]:
    """One unit per inner vertex (id order) followed by one per hole.

    Holes whose creases meet in a common point become vertex units centred
    there (three constraint rows instead of six).
    """
    if reclassify_concurrent:
        return paper.units
    return _extract_units(paper, reclassify=False)


# ---------------------------------------------------------------------------
# incidence


def _build_incidence(paper: CreasedPaper) -> IncidenceMatrix:
    D = np.zeros((paper.V, paper.J), dtype=int)
    for j, cid in enumerate(paper.inner_crease_ids):
        c = paper.crease_by_id[cid]
        D[c.direction_from, j] = 1
        D[c.direction_to, j] = -1
    L_v = D[list(paper.inner_vertex_ids)] if paper.I else np.zeros((0, paper.J), dtype=int)
    L_h = np.array([D[list(cyc)].sum(axis=0) for cyc in paper.hole_boundaries], dtype=int)
    L_h = L_h.reshape(paper.H, paper.J)
    for a in (D, L_v, L_h):
        a.setflags(write=False)
    return IncidenceMatrix(D, L_v, L_h, paper.inner_vertex_ids, paper.inner_crease_ids)


def build_incidence(paper: CreasedPaper) -> IncidenceMatrix:
    """Vertex/crease incidence ``D`` and its inner-vertex and hole reductions."""
    return paper.incidence


# ---------------------------------------------------------------------------
# (de)serialisation


def creased_paper_from_dict(doc: Mapping[str, Any], tol: Tolerances = DEFAULT,
                            check_configuration: bool = True) -> CreasedPaper:
    """Build a creased paper from the parsed JSON document."""
    try:
        vdocs = sorted(doc["vertices"], key=lambda d: int(d["id"]))
        vertices = tuple(Vertex(int(d["id"]), d["xyz"]) for d in vdocs)
        panels = tuple(Panel(k, tuple(p)) for k, p in enumerate(doc["panels"]))
        creases = tuple(
            Crease(int(c["id"]), tuple(c["ends"]), int(c.get("from", c["ends"][0])),
                   float(c.get("rho", 0.0)))
            for c in doc.get("creases", [])
        )
        flat = None
        if doc.get("flat_vertices") is not None:
            fd = {int(d["id"]): d["xyz2"] for d in doc["flat_vertices"]}
            if sorted(fd) != list(range(len(vertices))):
                raise ModelError("flat_vertices must list every vertex id exactly once")
            flat = np.array([fd[i] for i in range(len(vertices))], dtype=float)
    except ModelError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelError(f"malformed creased-paper document: {exc!r}") from exc

    paper = CreasedPaper(vertices, panels, creases, flat, tol)
    if check_configuration:
        if flat is None:
            warnings.warn("no flat development given; configuration check skipped",
                          GeometryWarning, stacklevel=2)
        else:
            _check_flat_orientation(paper)
            dev = configuration_deviation(paper)
            if dev > paper.tau_geom:
                raise ModelError(
                    f"configuration inconsistency: folding the development by the stored "
                    f"angles misses the 3-D geometry by {dev:.3g} (tolerance {paper.tau_geom:.3g})"
                )
    return paper


def load_creased_paper(source: str | Path | Mapping[str, Any], tol: Tolerances = DEFAULT,
                       check_configuration: bool = True) -> CreasedPaper:
    """Load from a path, a JSON string, or an already parsed mapping."""
    if isinstance(source, Mapping):
        doc = source
    else:
        text = None
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            try:
                text = Path(source).read_text()
            except OSError as exc:
                raise ModelError(f"cannot read {source}: {exc}") from exc
        else:
            text = source
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed JSON: {exc}") from exc
        if not isinstance(doc, Mapping):
            raise ModelError("top-level JSON value must be an object")
    return creased_paper_from_dict(doc, tol, check_configuration)


def creased_paper_to_dict(paper: CreasedPaper, include_outer: bool = False) -> dict:
    doc: dict[str, Any] = {
        "vertices": [{"id": v.id, "xyz": v.position.tolist()} for v in paper.vertices],
        "panels": [list(p.vertex_cycle) for p in paper.panels],
        "creases": [
            {"id": c.id, "ends": list(c.ends), "from": c.direction_from, "rho": c.rho}
            for c in paper.creases
            if include_outer or c.inner
        ],
    }
    if paper.flat_positions is not None:
        doc["flat_vertices"] = [
            {"id": i, "xyz2": p.tolist()} for i, p in enumerate(paper.flat_positions)
        ]
    return doc


def iter_inner_creases(paper: CreasedPaper) -> Iterable[Crease]:
    return (paper.crease_by_id[c] for c in paper.inner_crease_ids)
