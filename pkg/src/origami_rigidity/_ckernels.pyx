# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loop-bound kernels (see ``_pykernels``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs

cnp.import_array()


cdef inline void _mm4(double[:, ::1] A, double[:, ::1] B, double[:, ::1] out) noexcept nogil:
    cdef int i, j, k
    cdef double acc
    for i in range(4):
        for j in range(4):
            acc = 0.0
            for k in range(4):
                acc = acc + A[i, k] * B[k, j]
            out[i, j] = acc


cdef inline void _times_xrot(const double[:, ::1] S, double a, double[:, ::1] out) noexcept nogil:
    # out = S @ Rx(a): only columns 1 and 2 change
    cdef double c = cos(a), s = sin(a)
    cdef int i
    for i in range(4):
        out[i, 0] = S[i, 0]
        out[i, 1] = c * S[i, 1] + s * S[i, 2]
        out[i, 2] = -s * S[i, 1] + c * S[i, 2]
        out[i, 3] = S[i, 3]


def chain_products(steps, angles):
    cdef const double[:, :, ::1] st = np.ascontiguousarray(steps, dtype=np.float64)
    cdef const double[::1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef Py_ssize_t n = ang.shape[0]
    fac_a = np.empty((n, 4, 4))
    pre_a = np.empty((n + 1, 4, 4))
    suf_a = np.empty((n + 1, 4, 4))
    dT_a = np.empty((n, 4, 4))
    tmp_a = np.empty((4, 4))
    cdef double[:, :, ::1] fac = fac_a
    cdef double[:, :, ::1] pre = pre_a
    cdef double[:, :, ::1] suf = suf_a
    cdef double[:, :, ::1] dT = dT_a
    cdef double[:, ::1] tmp = tmp_a
    cdef Py_ssize_t j
    cdef int r
    pre[0, :, :] = 0.0
    suf[n, :, :] = 0.0
    for r in range(4):
        pre[0, r, r] = 1.0
        suf[n, r, r] = 1.0
    for j in range(n):
        _times_xrot(st[j], ang[j], fac[j])
        _mm4(pre[j], fac[j], pre[j + 1])
    for j in range(n - 1, -1, -1):
        _mm4(fac[j], suf[j + 1], suf[j])
    for j in range(n):
        # tmp = prefix @ E_x, E_x = e2 e1^T - e1 e2^T
        for r in range(4):
            tmp[r, 0] = 0.0
            tmp[r, 1] = pre[j + 1, r, 2]
            tmp[r, 2] = -pre[j + 1, r, 1]
            tmp[r, 3] = 0.0
        _mm4(tmp, suf[j + 1], dT[j])
    return pre_a[n].copy(), dT_a


def hessian_blocks(x, origins, bint hole):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, ::1] O = np.ascontiguousarray(origins, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = X.shape[0]
    cdef int rows = 6 if hole else 3
    out_a = np.zeros((rows, n, n))
    cdef double[:, :, ::1] out = out_a
    cdef Py_ssize_t a, b
    cdef double w0, w1, w2, v0, v1, v2, t0, t1, t2
    for a in range(n):
        for b in range(a, n):
            v0 = X[b, 2] * X[a, 1]
            v1 = X[b, 0] * X[a, 2]
            v2 = X[b, 1] * X[a, 0]
            out[0, a, b] = v0
            out[1, a, b] = v1
            out[2, a, b] = v2
            out[0, b, a] = v0
            out[1, b, a] = v1
            out[2, b, a] = v2
            if hole:
                # w = O_b x x_b, t = x_a x w
                w0 = O[b, 1] * X[b, 2] - O[b, 2] * X[b, 1]
                w1 = O[b, 2] * X[b, 0] - O[b, 0] * X[b, 2]
                w2 = O[b, 0] * X[b, 1] - O[b, 1] * X[b, 0]
                t0 = X[a, 1] * w2 - X[a, 2] * w1
                t1 = X[a, 2] * w0 - X[a, 0] * w2
                t2 = X[a, 0] * w1 - X[a, 1] * w0
                out[3, a, b] = t0
                out[4, a, b] = t1
                out[5, a, b] = t2
                out[3, b, a] = t0
                out[4, b, a] = t1
                out[5, b, a] = t2
    return out_a


cdef void _cholesky_solve(double[:, ::1] A, double[::1] b, double[::1] x, int m) noexcept nogil:
    # in-place Cholesky of the SPD matrix A (lower triangle), then solve A x = b
    cdef int i, j, k
    cdef double s
    for j in range(m):
        s = A[j, j]
        for k in range(j):
            s = s - A[j, k] * A[j, k]
        A[j, j] = sqrt(s)
        for i in range(j + 1, m):
            s = A[i, j]
            for k in range(j):
                s = s - A[i, k] * A[j, k]
            A[i, j] = s / A[j, j]
    for i in range(m):
        s = b[i]
        for k in range(i):
            s = s - A[i, k] * x[k]
        x[i] = s / A[i, i]
    for i in range(m - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, m):
            s = s - A[k, i] * x[k]
        x[i] = s / A[i, i]


def refine_zero_set(forms, starts, int iters=30, double damping=1e-3):
    cdef const double[:, :, ::1] Q = np.ascontiguousarray(forms, dtype=np.float64)
    C_a = np.array(starts, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] C = C_a
    cdef int s = Q.shape[0], m = C.shape[1]
    cdef Py_ssize_t N = C.shape[0]
    obj_a = np.zeros(N)
    cdef double[::1] obj = obj_a
    Qc_a = np.zeros((max(s, 1), m))
    cdef double[:, ::1] Qc = Qc_a
    cdef double[::1] r = np.zeros(max(s, 1))
    cdef double[::1] c = np.zeros(m)
    cdef double[::1] g = np.zeros(m)
    cdef double[::1] step = np.zeros(m)
    cdef double[:, ::1] A = np.zeros((m, m))
    cdef Py_ssize_t k
    cdef int it, i, p, q
    cdef double nrm, acc, rmax, proj
    for k in range(N):
        nrm = 0.0
        for p in range(m):
            nrm += C[k, p] * C[k, p]
        nrm = sqrt(nrm)
        for p in range(m):
            c[p] = C[k, p] / nrm
        for it in range(iters):
            rmax = 0.0
            for i in range(s):
                for p in range(m):
                    acc = 0.0
                    for q in range(m):
                        acc += Q[i, p, q] * c[q]
                    Qc[i, p] = acc
                acc = 0.0
                for p in range(m):
                    acc += Qc[i, p] * c[p]
                r[i] = acc
                if fabs(acc) > rmax:
                    rmax = fabs(acc)
            if rmax < 1e-15:
                break
            # Jacobian rows 2 Qc_i projected to the tangent space (stored in Qc)
            for i in range(s):
                proj = 2.0 * r[i]
                for p in range(m):
                    Qc[i, p] = 2.0 * Qc[i, p] - proj * c[p]
            for p in range(m):
                acc = 0.0
                for i in range(s):
                    acc += Qc[i, p] * r[i]
                g[p] = -acc
                for q in range(m):
                    acc = 0.0
                    for i in range(s):
                        acc += Qc[i, p] * Qc[i, q]
                    A[p, q] = acc
                A[p, p] += damping
            _cholesky_solve(A, g, step, m)
            nrm = 0.0
            for p in range(m):
                c[p] += step[p]
                nrm += c[p] * c[p]
            nrm = sqrt(nrm)
            for p in range(m):
                c[p] /= nrm
        rmax = 0.0
        for i in range(s):
            acc = 0.0
            for p in range(m):
                for q in range(m):
                    acc += c[p] * Q[i, p, q] * c[q]
            if fabs(acc) > rmax:
                rmax = fabs(acc)
        obj[k] = rmax
        for p in range(m):
            C[k, p] = c[p]
    return C_a, obj_a
