# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled collapsed Gibbs kernel; mirrors ``gibbs_py`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, log1p
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double LOG2PI = log(2.0 * 3.141592653589793)


cdef inline double cluster_log_marginal(long n, double sx, double sy, double sq,
                                        double m0x, double m0y, double p00, double p01,
                                        double p11, double log_wt, double log_wc_dens) nogil:
    cdef double zbx = sx / n
    cdef double zby = sy / n
    cdef double ss = sq - n * (zbx * zbx + zby * zby)
    if ss < 0.0:
        ss = 0.0
    cdef double log_c = -(n - 1) * LOG2PI - log(<double>n) - 0.5 * ss
    cdef double a = p00 + 1.0 / n
    cdef double c = p11 + 1.0 / n
    cdef double det = a * c - p01 * p01
    cdef double dx = zbx - m0x
    cdef double dy = zby - m0y
    cdef double maha = (c * dx * dx - 2.0 * p01 * dx * dy + a * dy * dy) / det
    cdef double lt = log_wt - LOG2PI - 0.5 * log(det) - 0.5 * maha
    cdef double mix
    if lt > log_wc_dens:
        mix = lt + log1p(exp(log_wc_dens - lt))
    else:
        mix = log_wc_dens + log1p(exp(lt - log_wc_dens))
    return log_c + mix


def gibbs_sweeps(z, m0, p, double log_wt, double log_wc_dens, double alpha, init, uniforms):
    cdef double[:, ::1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[:, ::1] uu = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef long[::1] init_v = np.ascontiguousarray(init, dtype=np.int64)
    cdef Py_ssize_t n_items = zz.shape[0]
    cdef Py_ssize_t n_sweeps = uu.shape[0]
    trace_arr = np.empty((n_sweeps, n_items), dtype=np.int64)
    logp_arr = np.empty(n_sweeps, dtype=np.float64)
    cdef long[:, ::1] trace = trace_arr
    cdef double[::1] logp = logp_arr
    cdef double m0x = float(m0[0]), m0y = float(m0[1])
    cdef double p00 = float(p[0, 0]), p01 = float(p[0, 1]), p11 = float(p[1, 1])
    cdef double log_alpha = log(alpha)

    cdef double* buf = <double*> malloc(8 * (n_items + 1) * sizeof(double))
    cdef long* ibuf = <long*> malloc(2 * (n_items + 1) * sizeof(long))
    if buf == NULL or ibuf == NULL:
        free(buf)
        free(ibuf)
        raise MemoryError()
    cdef double* zx = buf
    cdef double* zy = buf + (n_items + 1)
    cdef double* sx = buf + 2 * (n_items + 1)
    cdef double* sy = buf + 3 * (n_items + 1)
    cdef double* sq = buf + 4 * (n_items + 1)
    cdef double* lm = buf + 5 * (n_items + 1)
    cdef double* single = buf + 6 * (n_items + 1)
    cdef double* score = buf + 7 * (n_items + 1)
    cdef long* label = ibuf
    cdef long* count = ibuf + (n_items + 1)

    cdef Py_ssize_t i, j, s, m
    cdef long k, chosen
    cdef double xi, yi, qi, best, total, threshold, acc, total_lp
    cdef double log_norm = 0.0
    cdef double* log_fact = <double*> malloc((n_items + 1) * sizeof(double))
    if log_fact == NULL:
        free(buf)
        free(ibuf)
        raise MemoryError()

    try:
        with nogil:
            for m in range(n_items + 1):
                log_fact[m] = 0.0
            for m in range(2, n_items + 1):
                log_fact[m] = log_fact[m - 1] + log(<double>(m - 1))
            for i in range(n_items):
                log_norm += log(alpha + i)

            for i in range(n_items):
                zx[i] = zz[i, 0]
                zy[i] = zz[i, 1]
                count[i] = 0
                sx[i] = 0.0
                sy[i] = 0.0
                sq[i] = 0.0
                lm[i] = 0.0
            for i in range(n_items):
                k = init_v[i]
                label[i] = k
                count[k] += 1
                sx[k] += zx[i]
                sy[k] += zy[i]
                sq[k] += zx[i] * zx[i] + zy[i] * zy[i]
            for k in range(n_items):
                if count[k] > 0:
                    lm[k] = cluster_log_marginal(count[k], sx[k], sy[k], sq[k], m0x, m0y,
                                                 p00, p01, p11, log_wt, log_wc_dens)
            for i in range(n_items):
                single[i] = log_alpha + cluster_log_marginal(
                    1, zx[i], zy[i], zx[i] * zx[i] + zy[i] * zy[i], m0x, m0y,
                    p00, p01, p11, log_wt, log_wc_dens)

            for s in range(n_sweeps):
                for i in range(n_items):
                    xi = zx[i]
                    yi = zy[i]
                    qi = xi * xi + yi * yi
                    k = label[i]
                    count[k] -= 1
                    sx[k] -= xi
                    sy[k] -= yi
                    sq[k] -= qi
                    if count[k] > 0:
                        lm[k] = cluster_log_marginal(count[k], sx[k], sy[k], sq[k], m0x, m0y,
                                                     p00, p01, p11, log_wt, log_wc_dens)
                    else:
                        sx[k] = 0.0
                        sy[k] = 0.0
                        sq[k] = 0.0

                    best = single[i]
                    for j in range(n_items):
                        if count[j] > 0:
                            score[j] = (log(<double>count[j])
                                        + cluster_log_marginal(count[j] + 1, sx[j] + xi, sy[j] + yi,
                                                               sq[j] + qi, m0x, m0y, p00, p01, p11,
                                                               log_wt, log_wc_dens)
                                        - lm[j])
                            if score[j] > best:
                                best = score[j]
                    total = exp(single[i] - best)
                    for j in range(n_items):
                        if count[j] > 0:
                            total += exp(score[j] - best)

                    threshold = uu[s, i] * total
                    chosen = -1
                    acc = 0.0
                    for j in range(n_items):
                        if count[j] > 0:
                            acc += exp(score[j] - best)
                            if threshold < acc:
                                chosen = j
                                break
                    if chosen < 0:
                        for j in range(n_items):
                            if count[j] == 0:
                                chosen = j
                                break

                    label[i] = chosen
                    count[chosen] += 1
                    sx[chosen] += xi
                    sy[chosen] += yi
                    sq[chosen] += qi
                    lm[chosen] = cluster_log_marginal(count[chosen], sx[chosen], sy[chosen],
                                                      sq[chosen], m0x, m0y, p00, p01, p11,
                                                      log_wt, log_wc_dens)

                total_lp = -log_norm
                for j in range(n_items):
                    if count[j] > 0:
                        total_lp += lm[j] + log_fact[count[j]] + log_alpha
                for i in range(n_items):
                    trace[s, i] = label[i]
                logp[s] = total_lp
    finally:
        free(buf)
        free(ibuf)
        free(log_fact)
    return trace_arr, logp_arr
