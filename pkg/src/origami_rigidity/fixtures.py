"""Built-in example structures.

Each builder returns the JSON document (a plain dict) so it can be written
to disk by the command line tool or loaded with
:func:`~origami_rigidity.model.load_creased_paper`.  Folding angles are
measured from the 3-D geometry, so every fixture is a valid rigidly folded
state by construction.
"""
from __future__ import annotations

import math
import warnings

import numpy as np

from ._errors import GeometryWarning
from .model import CreasedPaper, creased_paper_from_dict, geometric_folding_angles

__all__ = ["BUILTIN", "EXTRA", "fixture_document", "load_fixture", "fixture_names"]

R2 = math.sqrt(2.0) / 2.0
R3 = math.sqrt(3.0) / 2.0


def _doc(xyz, panels, creases, flat=None):
    """Assemble a document and fill in geometric folding angles."""
    doc = {
        "vertices": [{"id": i, "xyz": [float(c) for c in p]} for i, p in enumerate(xyz)],
        "panels": [list(p) for p in panels],
        "creases": [{"id": k, "ends": [a, b], "from": a, "rho": 0.0} for k, (a, b) in enumerate(creases)],
    }
    if flat is not None:
        doc["flat_vertices"] = [{"id": i, "xyz2": [float(c) for c in p]} for i, p in enumerate(flat)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryWarning)
        paper = creased_paper_from_dict(doc, check_configuration=False)
        rho = geometric_folding_angles(paper)
    for c in doc["creases"]:
        c["rho"] = float(rho[paper.column_of[c["id"]]]) if c["id"] in paper.column_of else 0.0
    return doc


def degree3_vertex():
    """Planar degree-3 vertex with a triangular boundary."""
    xyz = [(0, 0, 0), (1, 0, 0), (-0.5, R3, 0), (-0.5, -R3, 0)]
    panels = [(0, 1, 2), (0, 2, 3), (0, 3, 1)]
    creases = [(0, 1), (0, 2), (0, 3)]
    return _doc(xyz, panels, creases, flat=[p[:2] for p in xyz])


def degree5_hole():
    """Single square hole surrounded by five panels.

    Vertex ids: O1..O4 are 0..3 (the hole), A..E are 4..8.  E sits off the
    base plane, so the two panels meeting at crease O4-E are not flat.
    """
    xyz = [
        (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
        (-R2, -R2, 0), (1, -R2, 0), (1 + R2, 0, 0), (1 + R2, 1 + R2, 0), (0, 1, 1),
    ]
    panels = [(4, 5, 1, 0), (5, 6, 1), (6, 7, 2, 1), (7, 8, 3, 2), (8, 4, 0, 3)]
    creases = [(0, 4), (1, 5), (1, 6), (2, 7), (3, 8)]
    return _doc(xyz, panels, creases)


FIG3_FLAT = [
    (0, 0), (1, 1.5), (2, 0), (0.6, -1), (-1.5, -0.6), (-1.2, 1.2), (3.4, 0.4),
    (1.6, -1), (1.6, -2), (2.4, -2.8), (0.6, -2), (0.2, -3.2), (-0.6, -2.6),
]


def fig3_composite():
    """Two inner vertices and one quadrilateral hole, flat state.

    Vertex and crease ids are the figure labels minus one.
    """
    xyz = [(x, y, 0.0) for x, y in FIG3_FLAT]
    creases = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (1, 2), (2, 6), (2, 7), (8, 9), (10, 11), (3, 12)]
    panels = [
        (0, 2, 1), (0, 1, 5), (0, 5, 4), (0, 4, 12, 3), (0, 3, 7, 2),
        (2, 6, 1), (2, 7, 8, 9, 6), (9, 8, 10, 11), (10, 3, 12, 11),
    ]
    return _doc(xyz, panels, creases, flat=FIG3_FLAT)


_TET = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


def tetrahedron():
    """Closed tetrahedral surface: every edge is an inner crease."""
    panels = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 3)]
    creases = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    return _doc(_TET, panels, creases)


def triangulated_tetrahedron():
    """Tetrahedron with one face split into three by a centre vertex."""
    c = np.mean(_TET[1:], axis=0)
    xyz = _TET + [tuple(c)]
    panels = [(0, 2, 1), (0, 1, 3), (0, 3, 2), (1, 2, 4), (2, 3, 4), (3, 1, 4)]
    creases = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (4, 1), (4, 2), (4, 3)]
    return _doc(xyz, panels, creases)


def degree4_cone():
    """Non-developable degree-4 vertex (sector angles sum below 2*pi)."""
    theta = np.radians([70.0, 75.0, 65.0, 80.0])
    phi = np.radians([0.0, 80.0, 190.0, 270.0])
    d = np.column_stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    xyz = [(0.0, 0.0, 0.0)] + [tuple(v) for v in d]
    panels = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1)]
    creases = [(0, 1), (0, 2), (0, 3), (0, 4)]
    return _doc(xyz, panels, creases)


def concurrent_hole():
    """Square hole whose four creases run along the diagonals (concurrent)."""
    xyz = [(-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0), (-2, -2, 0), (2, -2, 0), (2, 2, 0), (-2, 2, 0)]
    panels = [(4, 5, 1, 0), (5, 6, 2, 1), (6, 7, 3, 2), (7, 4, 0, 3)]
    creases = [(0, 4), (1, 5), (2, 6), (3, 7)]
    return _doc(xyz, panels, creases, flat=[p[:2] for p in xyz])


def lone_panel():
    """A single square panel: nothing to fold."""
    xyz = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]
    return _doc(xyz, [(0, 1, 2, 3)], [], flat=[p[:2] for p in xyz])


BUILTIN = {
    "degree3": degree3_vertex,
    "degree5-hole": degree5_hole,
    "fig3": fig3_composite,
    "tetrahedron": tetrahedron,
    "triangulated-tetrahedron": triangulated_tetrahedron,
    "degree4-cone": degree4_cone,
}

EXTRA = {
    "concurrent-hole": concurrent_hole,
    "lone-panel": lone_panel,
}


def fixture_names(include_extra: bool = False) -> list[str]:
    return list(BUILTIN) + (list(EXTRA) if include_extra else [])


def fixture_document(name: str) -> dict:
    try:
        return {**BUILTIN, **EXTRA}[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {fixture_names(True)}") from None


def load_fixture(name: str) -> CreasedPaper:
    """Load a built-in fixture, silencing the expected geometry warnings."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GeometryWarning)
        return creased_paper_from_dict(fixture_document(name))
