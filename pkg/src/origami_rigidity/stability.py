"""Pre-stress stability and second-order rigidity.

A self-stress ``omega`` stabilises the structure when the geometric
stiffness ``G(omega) = omega . HA`` is positive definite on the flex
space; then ``JA^T B JA + t G(omega)`` is positive definite for small
enough ``t > 0``.  A flex ``rho'`` extends to second order exactly when
``rho'^T G(omega_i) rho' = 0`` for every self-stress basis vector, so the
restricted quadratic forms ``Q_i = F^T G(omega_i) F`` drive both searches.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm as _normal, qmc

from ._errors import AnalysisError
from .derivatives import ConstraintSystem, Hessian, constraint_system
from .kernels import refine_zero_set
from .model import CreasedPaper
from .statics import FlexBasis, svd_split

__all__ = [
    "StiffnessModel",
    "NotASelfStressError",
    "NotAFlexError",
    "PrestressVerdict",
    "ExtensionResult",
    "SecondOrderResult",
    "EnergyReport",
    "identity_stiffness",
    "geometric_stiffness",
    "restricted_quadratic_form",
    "restricted_forms",
    "is_prestress_stable",
    "find_stabilizing_stress",
    "extend_to_second_order",
    "second_order_classify",
    "energy_report",
]


class NotASelfStressError(AnalysisError):
    pass


class NotAFlexError(AnalysisError):
    pass


def _system(obj) -> ConstraintSystem:
    if isinstance(obj, ConstraintSystem):
        return obj
    if isinstance(obj, CreasedPaper):
        return constraint_system(obj)
    raise TypeError("expected a CreasedPaper or ConstraintSystem")


# ---------------------------------------------------------------------------
# stiffness


@dataclass(frozen=True, eq=False)
class StiffnessModel:
    """Block-diagonal SPD constraint stiffness ``B`` (3x3 / 6x6 per unit)."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        for k, b in enumerate(self.blocks):
            b = np.asarray(b, dtype=float)
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise ValueError(f"stiffness block {k} must be square")
            if not np.allclose(b, b.T, atol=1e-12 * max(1.0, np.abs(b).max())):
                raise ValueError(f"stiffness block {k} is not symmetric")
            if b.size and np.linalg.eigvalsh(b).min() <= 0:
                raise ValueError(f"stiffness block {k} is not positive definite")

    @property
    def matrix(self) -> np.ndarray:
        n = sum(b.shape[0] for b in self.blocks)
        B = np.zeros((n, n))
        i = 0
        for b in self.blocks:
            r = b.shape[0]
            B[i:i + r, i:i + r] = b
            i += r
        return B

    def scaled(self, c: float) -> "StiffnessModel":
        return StiffnessModel(tuple(c * np.asarray(b) for b in self.blocks))


def identity_stiffness(paper: CreasedPaper) -> StiffnessModel:
    return StiffnessModel(tuple(np.eye(u.rows) for u in paper.units))


def _B_matrix(sysm: ConstraintSystem, B) -> np.ndarray:
    if B is None:
        return np.eye(sysm.shape[0])
    if isinstance(B, StiffnessModel):
        M = B.matrix
    else:
        M = np.asarray(B, dtype=float)
    if M.shape != (sysm.shape[0],) * 2:
        raise ValueError(f"stiffness must be {sysm.shape[0]}x{sysm.shape[0]}")
    return M


# ---------------------------------------------------------------------------
# quadratic forms


def geometric_stiffness(omega: Sequence[float], HA: Hessian) -> np.ndarray:
    """Symmetrised contraction ``(G + G^T)/2`` with ``G = sum_i omega_i HA[i]``."""
    G = HA.contract(omega)
    return 0.5 * (G + G.T)


def restricted_quadratic_form(M: np.ndarray, flexes: FlexBasis | np.ndarray) -> np.ndarray:
    """``F^T M F`` for the orthonormal flex basis F (0x0 when rigid)."""
    F = flexes.vectors if isinstance(flexes, FlexBasis) else np.asarray(flexes, dtype=float)
    Q = F.T @ M @ F
    return 0.5 * (Q + Q.T)


def restricted_forms(sysm: ConstraintSystem) -> np.ndarray:
    """Stack ``Q_i = F^T G(omega_i) F`` over the self-stress basis, shape (s, m, m)."""
    W = sysm.stresses.vectors
    F = sysm.flexes.vectors
    return np.array([restricted_quadratic_form(geometric_stiffness(W[:, i], sysm.hessian), F)
                     for i in range(W.shape[1])]).reshape(W.shape[1], F.shape[1], F.shape[1])


def _check_self_stress(sysm: ConstraintSystem, omega: np.ndarray) -> float:
    if omega.shape != (sysm.shape[0],):
        raise ValueError(f"stress must have length {sysm.shape[0]}, got {omega.shape}")
    JA = sysm.jacobian
    res = float(np.linalg.norm(JA.T @ omega))
    scale = max(1.0, float(np.linalg.norm(omega))) * max(1.0, float(np.linalg.norm(JA, 2)) if JA.size else 1.0)
    if res > 1e-8 * scale:
        raise NotASelfStressError(f"stress is not a self-stress: |JA^T w| = {res:.3g}")
    return res


# ---------------------------------------------------------------------------
# pre-stress stability


@dataclass(frozen=True, eq=False)
class PrestressVerdict:
    stable: bool
    min_eigenvalue: float
    restricted_eigenvalues: np.ndarray
    certified_t: float | None = None
    tangent_min_eigenvalue: float | None = None
    omega: np.ndarray | None = None


def _certified_t(M1: np.ndarray, G: np.ndarray, m: int, mu: float) -> tuple[float, float]:
    """Scale t with ``M1 + t G`` positive definite, and the resulting min eigenvalue.

    For unit x = u + v (u in the flex space, v orthogonal), with ``delta``
    the smallest nonzero eigenvalue of M1, ``mu`` the smallest restricted
    eigenvalue of G and ``g = |G|_2``:
    ``x^T (M1 + tG) x >= delta|v|^2 + t(mu|u|^2 - 2g|u||v| - g|v|^2)``,
    positive definite in (|u|, |v|) as soon as ``t < mu delta / (g (mu + g))``.
    Half of that bound is used.
    """
    J = M1.shape[0]
    if J == 0:
        return 1.0, float("inf")
    ev = np.linalg.eigvalsh(M1)
    delta = float(ev[m]) if m < J else float("inf")
    g = float(np.linalg.norm(G, 2))
    if g == 0.0:
        t = 1.0
    elif m == 0:
        t = 0.5 * delta / g
    else:
        t = 0.5 * mu * delta / (g * (mu + g)) if np.isfinite(delta) else 1.0
    lam = float(np.linalg.eigvalsh(M1 + t * G).min())
    return t, lam


def is_prestress_stable(paper_or_system, omega: Sequence[float], B=None,
                        tol_pd: float | None = None) -> PrestressVerdict:
    """Does ``omega`` stabilise the structure?

    Stable when the restricted form of ``G(omega)`` has smallest eigenvalue
    above ``tol_pd`` (vacuous without flexes).  A stable verdict carries a
    certified ``t`` making ``JA^T B JA + t G(omega)`` positive definite.
    """
    sysm = _system(paper_or_system)
    tol_pd = sysm.paper.tol.pd if tol_pd is None else tol_pd
    omega = np.asarray(omega, dtype=float)
    _check_self_stress(sysm, omega)
    Bm = _B_matrix(sysm, B)
    G = geometric_stiffness(omega, sysm.hessian)
    Q = restricted_quadratic_form(G, sysm.flexes)
    ev = np.linalg.eigvalsh(Q) if Q.size else np.zeros(0)
    mu = float(ev.min()) if ev.size else float("inf")
    stable = sysm.m == 0 or mu > tol_pd
    t = lam = None
    if stable:
        M1 = sysm.jacobian.T @ Bm @ sysm.jacobian
        t, lam = _certified_t(M1, G, sysm.m, mu)
        if sysm.shape[1] and lam <= 0:  # pragma: no cover - guarded by the bound
            raise AnalysisError("certified scale failed to give a positive definite stiffness")
    return PrestressVerdict(bool(stable), mu, ev, t, lam, omega)


def _maximize_min_eig(forms: np.ndarray, rng: np.random.Generator, restarts: int = 50,
                      temperatures=(1e-1, 1e-2, 1e-3, 1e-4, 1e-6)) -> tuple[np.ndarray, float]:
    """Maximise ``lambda_min(sum_i x_i Q_i)`` over the unit ball.

    The objective is concave but not smooth.  It is replaced by the
    log-sum-exp soft minimum of the eigenvalues, maximised with SLSQP under
    ``|x| <= 1`` while the temperature is lowered; several starts are used.
    """
    s = forms.shape[0]
    scale = max(float(np.abs(forms).max()), 1e-300)
    Qn = forms / scale

    def soft(x, temp):
        lam, V = np.linalg.eigh(np.tensordot(x, Qn, axes=1))
        w = np.exp(-(lam - lam[0]) / temp)
        val = lam[0] - temp * np.log(w.sum())
        w /= w.sum()
        grad = np.einsum("k,ik,sij,jk->s", w, V, Qn, V)
        return -val, -grad

    ball = {"type": "ineq", "fun": lambda x: 1.0 - x @ x, "jac": lambda x: -2.0 * x}
    starts = [np.eye(s)[i] * sgn for i in range(s) for sgn in (1.0, -1.0)]
    while len(starts) < restarts:
        starts.append(rng.standard_normal(s))
    best_x, best = None, -np.inf
    for x in starts[:max(restarts, 2 * s)]:
        x = x / np.linalg.norm(x)
        for temp in temperatures:
            r = minimize(soft, x, args=(temp,), jac=True, method="SLSQP", constraints=[ball],
                         options={"maxiter": 200, "ftol": 1e-14})
            x = r.x
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        x = x / nx
        val = float(np.linalg.eigvalsh(np.tensordot(x, Qn, axes=1)).min())
        if val > best:
            best, best_x = val, x
    return best_x, best * scale


def find_stabilizing_stress(paper_or_system, B=None, tol_pd: float | None = None, seed: int = 0,
                            restarts: int = 50) -> np.ndarray | None:
    """A self-stress whose restricted geometric stiffness is positive definite, or None.

    Exact when there are no flexes (``omega = 0``), one flex, or one
    self-stress; otherwise smallest-eigenvalue ascent over the stress basis.
    """
    sysm = _system(paper_or_system)
    tol_pd = sysm.paper.tol.pd if tol_pd is None else tol_pd
    _B_matrix(sysm, B)
    m, s = sysm.m, sysm.s
    W = sysm.stresses.vectors
    if m == 0:
        return np.zeros(sysm.shape[0])
    if s == 0:
        return None
    Q = restricted_forms(sysm)
    if m == 1:
        g = Q[:, 0, 0]
        ng = float(np.linalg.norm(g))
        return W @ (g / ng) if ng > tol_pd else None
    if s == 1:
        ev = np.linalg.eigvalsh(Q[0])
        if ev.min() > tol_pd:
            return W[:, 0].copy()
        if -ev.max() > tol_pd:
            return -W[:, 0]
        return None
    x, val = _maximize_min_eig(Q, np.random.default_rng(seed), restarts)
    return W @ x if val > tol_pd else None


# ---------------------------------------------------------------------------
# second order


@dataclass(frozen=True, eq=False)
class ExtensionResult:
    """Outcome of extending a first-order flex to second order.

    ``extendable`` follows the rank test on ``[JA | b]`` with
    ``b = -rho'^T HA rho'``; ``forms_test`` is the stress-basis test
    ``rho'^T G(omega_i) rho' = 0``.  When blocked, ``omega`` is a self-stress
    with ``rho'^T G(omega) rho' > 0``.
    """

    extendable: bool
    rho1: np.ndarray
    rho2: np.ndarray | None
    omega: np.ndarray | None
    form_values: np.ndarray
    forms_test: bool
    residual: float | None = None

    @property
    def paths_agree(self) -> bool:
        return self.extendable == self.forms_test


def _check_flex(sysm: ConstraintSystem, v: np.ndarray):
    if v.shape != (sysm.shape[1],):
        raise ValueError(f"flex must have length {sysm.shape[1]}")
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        raise NotAFlexError("flex must be nonzero")
    JA = sysm.jacobian
    scale = max(1.0, float(np.linalg.norm(JA, 2)) if JA.size else 1.0)
    if JA.size and np.linalg.norm(JA @ v) > 1e-8 * scale * nv:
        raise NotAFlexError(f"vector is not a first-order flex: |JA v| = {np.linalg.norm(JA @ v):.3g}")


def extend_to_second_order(paper_or_system, rho1: Sequence[float], tol_pd: float | None = None) -> ExtensionResult:
    sysm = _system(paper_or_system)
    tol_pd = sysm.paper.tol.pd if tol_pd is None else tol_pd
    v = np.asarray(rho1, dtype=float)
    _check_flex(sysm, v)
    JA = sysm.jacobian
    b = -sysm.hessian.quadratic(v)
    # path (a): is b in the column space of JA?
    if JA.size:
        r_aug = svd_split(np.column_stack([JA, b]), sysm.tol_rank).rank
        r0 = sysm.rank
        extendable = r_aug == r0
        if r0 == 0 and np.linalg.norm(b) == 0.0:
            extendable = True
    else:
        extendable = True
    # path (b): quadratic forms over the stress basis
    W = sysm.stresses.vectors
    q = W.T @ (-b)
    forms_ok = bool(np.max(np.abs(q), initial=0.0) <= tol_pd * float(v @ v))
    if extendable:
        rho2, *_ = np.linalg.lstsq(JA, b, rcond=sysm.tol_rank) if JA.size else (np.zeros(sysm.shape[1]),)
        res = float(np.max(np.abs(JA @ rho2 - b), initial=0.0)) if JA.size else 0.0
        return ExtensionResult(True, v, rho2, None, q, forms_ok, res)
    omega = W @ q
    omega = omega / np.linalg.norm(omega)
    return ExtensionResult(False, v, None, omega, q, forms_ok)


@dataclass(frozen=True, eq=False)
class SecondOrderResult:
    classification: str           # "SecondOrderRigid" or "SecondOrderFoldable"
    exact: bool
    sampled: bool
    reason: str
    rho1: np.ndarray | None = None
    rho2: np.ndarray | None = None
    omega: np.ndarray | None = None
    samples_tried: int = 0
    details: dict = field(default_factory=dict)

    @property
    def rigid(self) -> bool:
        return self.classification == "SecondOrderRigid"


def _sphere_samples(m: int, n: int, seed: int) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit sphere in R^m."""
    u = qmc.Halton(d=m, scramble=True, seed=seed).random(n)
    z = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    nz = np.linalg.norm(z, axis=1, keepdims=True)
    nz[nz == 0] = 1.0
    return z / nz


def _foldable(sysm, c, reason, exact, tol_pd, **kw):
    rho1 = sysm.flexes.vectors @ c
    ext = extend_to_second_order(sysm, rho1, tol_pd)
    if not ext.extendable:
        return None
    return SecondOrderResult("SecondOrderFoldable", exact, not exact, reason, rho1, ext.rho2, **kw)


def second_order_classify(paper_or_system, samples: int = 10_000, seed: int = 0,
                          tol_pd: float | None = None, refine_iters: int = 30) -> SecondOrderResult:
    """Is every nonzero first-order flex blocked by some self-stress?

    Exact with no flexes, no self-stresses, one flex, one self-stress, or
    when a stabilising self-stress exists (it blocks every flex at once).
    Otherwise common zeros of the restricted forms are searched from
    ``samples`` low-discrepancy points on the sphere, each refined by
    Gauss-Newton; failing to find one reports rigid with ``sampled=True``.
    """
    sysm = _system(paper_or_system)
    tol_pd = sysm.paper.tol.pd if tol_pd is None else tol_pd
    m, s = sysm.m, sysm.s
    if m == 0:
        return SecondOrderResult("SecondOrderRigid", True, False, "first-order rigid: no nonzero flex")
    if s == 0:
        res = _foldable(sysm, np.eye(m)[0], "no self-stress can block a flex", True, tol_pd)
        assert res is not None
        return res
    Q = restricted_forms(sysm)
    W = sysm.stresses.vectors
    if m == 1:
        q = Q[:, 0, 0]
        if np.max(np.abs(q)) > tol_pd:
            omega = W @ q
            return SecondOrderResult("SecondOrderRigid", True, False, "single flex blocked by a self-stress",
                                     omega=omega / np.linalg.norm(omega))
        res = _foldable(sysm, np.ones(1), "single flex annihilated by every self-stress", True, tol_pd)
        if res is not None:
            return res
    if s == 1:
        ev, V = np.linalg.eigh(Q[0])
        if ev.min() > tol_pd or -ev.max() > tol_pd:
            sign = 1.0 if ev.min() > tol_pd else -1.0
            return SecondOrderResult("SecondOrderRigid", True, False, "single self-stress is definite on the flexes",
                                     omega=sign * W[:, 0])
        small = np.nonzero(np.abs(ev) <= tol_pd)[0]
        if small.size:
            c = V[:, small[0]]
        else:
            # indefinite: balance a positive and a negative direction
            c = np.sqrt(-ev[0]) * V[:, -1] + np.sqrt(ev[-1]) * V[:, 0]
            c /= np.linalg.norm(c)
        res = _foldable(sysm, c, "zero of the single restricted form", True, tol_pd)
        if res is not None:
            return res
    omega = find_stabilizing_stress(sysm, tol_pd=tol_pd, seed=seed)
    if omega is not None:
        return SecondOrderResult("SecondOrderRigid", True, False, "certified by a stabilising self-stress",
                                 omega=omega)
    starts = _sphere_samples(m, samples, seed)
    C, obj = refine_zero_set(np.ascontiguousarray(Q), starts, refine_iters)
    for idx in np.nonzero(obj <= tol_pd)[0]:
        res = _foldable(sysm, C[idx], "common zero of the restricted forms", False, tol_pd,
                        samples_tried=int(idx) + 1)
        if res is not None:
            return SecondOrderResult(res.classification, False, False, res.reason, res.rho1, res.rho2,
                                     samples_tried=int(idx) + 1,
                                     details={"witness_index": int(idx)})
    return SecondOrderResult("SecondOrderRigid", False, True, "no common zero found by sphere sampling",
                             samples_tried=samples, details={"best_objective": float(obj.min()) if obj.size else None})


# ---------------------------------------------------------------------------
# energy


@dataclass(frozen=True, eq=False)
class EnergyReport:
    gradient: np.ndarray
    hessian: np.ndarray
    is_self_stress: bool
    min_eigenvalue: float


def energy_report(paper_or_system, B=None, omega: Sequence[float] | None = None) -> EnergyReport:
    """Gradient ``omega^T JA`` and Hessian ``JA^T B JA + G(omega)`` of the energy.

    A gradient that does not vanish means ``omega`` is not a self-stress;
    this is reported rather than raised.
    """
    sysm = _system(paper_or_system)
    rows, J = sysm.shape
    omega = np.zeros(rows) if omega is None else np.asarray(omega, dtype=float)
    if omega.shape != (rows,):
        raise ValueError(f"stress must have length {rows}")
    Bm = _B_matrix(sysm, B)
    JA = sysm.jacobian
    grad = JA.T @ omega
    K = JA.T @ Bm @ JA + geometric_stiffness(omega, sysm.hessian)
    try:
        _check_self_stress(sysm, omega)
        ok = True
    except NotASelfStressError:
        ok = False
    lam = float(np.linalg.eigvalsh(K).min()) if J else float("inf")
    return EnergyReport(grad, K, ok, lam)
