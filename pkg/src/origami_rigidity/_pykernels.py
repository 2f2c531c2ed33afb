"""Pure numpy implementations of the loop-bound kernels.

These are the reference versions; ``_ckernels`` mirrors them in Cython and
is checked against them in the test-suite.
"""
from __future__ import annotations

import numpy as np

# generator of a rotation about the local x axis
_EX = np.zeros((4, 4))
_EX[1, 2] = -1.0
_EX[2, 1] = 1.0


def _xrot(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    X = np.eye(4)
    X[1, 1] = c
    X[1, 2] = -s
    X[2, 1] = s
    X[2, 2] = c
    return X


def chain_products(steps: np.ndarray, angles: np.ndarray):
    """Product ``prod_j steps[j] @ Rx(angles[j])`` and its partial derivatives.

    Returns ``(T, dT)`` with ``dT[j] = dT/d angles[j]``.
    """
    steps = np.asarray(steps, dtype=float)
    angles = np.asarray(angles, dtype=float)
    n = len(angles)
    factors = [steps[j] @ _xrot(angles[j]) for j in range(n)]
    prefix = [np.eye(4)]
    for F in factors:
        prefix.append(prefix[-1] @ F)
    suffix = [np.eye(4)]
    for F in reversed(factors):
        suffix.append(F @ suffix[-1])
    suffix = suffix[::-1]  # suffix[j] = factors[j] @ ... @ factors[n-1]
    dT = np.empty((n, 4, 4))
    for j in range(n):
        dT[j] = prefix[j + 1] @ _EX @ suffix[j + 1]
    return prefix[-1], dT


_ROT_SEL = ((2, 1), (0, 2), (1, 0))


def hessian_blocks(x: np.ndarray, origins: np.ndarray, hole: bool) -> np.ndarray:
    """Closed-form second derivatives of one unit's selected residual rows.

    ``x`` are the outward crease directions in unit order, ``origins`` the
    frame origins.  For ``a <= b`` the mixed derivative of the loop product
    is ``xi_a @ xi_b`` with ``xi`` the twist of crease a; the block is
    filled symmetrically.
    """
    x = np.asarray(x, dtype=float)
    origins = np.asarray(origins, dtype=float)
    n = len(x)
    rows = 6 if hole else 3
    out = np.zeros((rows, n, n))
    for a in range(n):
        for b in range(a, n):
            xa, xb = x[a], x[b]
            vals = [xb[2] * xa[1], xb[0] * xa[2], xb[1] * xa[0]]
            if hole:
                vals.extend(np.cross(xa, np.cross(origins[b], xb)))
            out[:, a, b] = vals
            out[:, b, a] = vals
    return out


def refine_zero_set(forms: np.ndarray, starts: np.ndarray, iters: int = 30, damping: float = 1e-3):
    """Drive points on the unit sphere towards common zeros of quadratic forms.

    Minimises ``sum_i (c^T Q_i c)^2`` on ``|c| = 1`` with damped
    Gauss-Newton steps in the tangent space, one start at a time.  Returns
    the refined points and the largest ``|c^T Q_i c|`` at each.
    """
    Q = np.asarray(forms, dtype=float)
    C = np.array(starts, dtype=float, copy=True)
    s, m = Q.shape[0], C.shape[1]
    obj = np.zeros(len(C))
    for k in range(len(C)):
        c = C[k] / np.linalg.norm(C[k])
        for _ in range(iters):
            Qc = Q @ c                      # (s, m)
            r = Qc @ c                      # (s,)
            if np.max(np.abs(r), initial=0.0) < 1e-15:
                break
            Jm = 2.0 * Qc
            Jm = Jm - np.outer(Jm @ c, c)   # tangent projection
            A = Jm.T @ Jm + damping * np.eye(m)
            g = Jm.T @ r
            step = -np.linalg.solve(A, g)
            c = c + step
            c /= np.linalg.norm(c)
        C[k] = c
        obj[k] = np.max(np.abs(np.einsum("i,sij,j->s", c, Q, c)), initial=0.0) if s else 0.0
    return C, obj
