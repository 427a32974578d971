# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tail scan: per-point LAPACK eigensolves with early exit.

Contract identical to ``_fallback.tail_scan``; see that module's docstring.
The buffer handed to LAPACK is C-ordered, so zheevd diagonalizes the
conjugate matrix; by Hermiticity the spectrum is unchanged and the returned
vectors are conjugated, which the quadratic form accounts for by evaluating
against conj(rho_v).
"""
import numpy as np

cimport numpy as cnp
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()


def tail_scan(rhos, rho_avg, probs, cs, double eps, bint want_curve):
    # plain copies: inputs may be read-only validated arrays
    rhos = np.array(rhos, dtype=np.complex128, order="C")
    avg = np.array(rho_avg, dtype=np.complex128, order="C")
    cdef double[::1] p = np.array(probs, dtype=np.float64, order="C")
    cdef double[::1] c_arr = np.array(cs, dtype=np.float64, order="C")
    cdef cnp.complex128_t[:, :, ::1] r = rhos
    cdef cnp.complex128_t[:, :, ::1] rc = np.ascontiguousarray(np.conj(rhos))
    cdef cnp.complex128_t[:, ::1] av = avg

    cdef Py_ssize_t nv = r.shape[0]
    cdef int d = <int> r.shape[1]
    cdef Py_ssize_t nc = c_arr.shape[0]

    # per-label scan cutoffs: contribution is exactly 0 once c >= cut[v]
    wv = np.linalg.eigvalsh(rhos)
    wa = np.linalg.eigvalsh(avg)
    lmin = float(wa[0])
    if lmin <= 1e-10 * (1.0 + float(np.max(np.abs(wa)))):
        cuts_np = np.full(nv, np.inf)
    else:
        cuts_np = np.ascontiguousarray(wv[:, -1] / lmin)
    cdef double[::1] cut = cuts_np

    tails_np = np.full(nc, np.nan)
    cdef double[::1] tails = tails_np

    # LAPACK workspace query
    cdef cnp.complex128_t[::1] a = np.empty(d * d, dtype=np.complex128)
    cdef double[::1] w = np.empty(d, dtype=np.float64)
    cdef int lwork = -1, lrwork = -1, liwork = -1, info = 0
    cdef double complex wkopt
    cdef double rwkopt
    cdef int iwkopt
    zheevd("V", "L", &d, &a[0], &d, &w[0], &wkopt, &lwork, &rwkopt, &lrwork,
           &iwkopt, &liwork, &info)
    if info != 0:
        raise RuntimeError(f"zheevd workspace query failed (info={info})")
    lwork = <int> wkopt.real
    lrwork = <int> rwkopt
    liwork = iwkopt
    cdef cnp.complex128_t[::1] work = np.empty(lwork, dtype=np.complex128)
    cdef double[::1] rwork = np.empty(lrwork, dtype=np.float64)
    cdef int[::1] iwork = np.empty(liwork, dtype=np.intc)

    cdef Py_ssize_t i, v, j, row, col
    cdef double c, acc, tau, wabs, quad
    cdef double complex s
    cdef Py_ssize_t first = -1
    cdef int fail = 0

    with nogil:
        for i in range(nc):
            c = c_arr[i]
            acc = 0.0
            for v in range(nv):
                if p[v] <= 0.0 or c >= cut[v]:
                    continue
                for row in range(d):
                    for col in range(d):
                        a[row * d + col] = r[v, row, col] - c * av[row, col]
                zheevd("V", "L", &d, &a[0], &d, &w[0], &work[0], &lwork,
                       &rwork[0], &lrwork, &iwork[0], &liwork, &info)
                if info != 0:
                    fail = 1
                    break
                wabs = -w[0] if -w[0] > w[d - 1] else w[d - 1]
                if wabs < 0.0:
                    wabs = -wabs
                tau = 1e-10 * (1.0 + wabs)
                for j in range(d - 1, -1, -1):
                    if w[j] <= tau:
                        break
                    # eigenvector j of the conjugated matrix sits in C row j
                    quad = 0.0
                    for row in range(d):
                        s = 0
                        for col in range(d):
                            s = s + rc[v, row, col] * a[j * d + col]
                        quad = quad + (a[j * d + row].conjugate() * s).real
                    acc = acc + p[v] * quad
                if not want_curve and acc > eps:
                    break
            if fail:
                break
            tails[i] = acc
            if acc <= eps and first < 0:
                first = i
                if not want_curve:
                    break

    if fail:
        raise RuntimeError("zheevd failed to converge inside the scan")
    return int(first), tails_np
