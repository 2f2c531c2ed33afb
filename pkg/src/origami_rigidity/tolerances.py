"""Numerical tolerances used throughout the analysis.

All values are plain floats so they can be overridden per call.  The
geometric tolerance is relative to the bounding-box diagonal of the
structure, everything else is absolute (angles and orthonormal bases are
O(1) quantities).
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    geom_rel: float = 1e-8
    num: float = 1e-10
    res: float = 1e-9
    rank: float = 1e-10
    pd: float = 1e-9

    def with_overrides(self, **kw) -> "Tolerances":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


DEFAULT = Tolerances()
