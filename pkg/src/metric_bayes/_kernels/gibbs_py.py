"""Pure-Python collapsed Gibbs kernel.

Reference implementation of :func:`gibbs_sweeps`; the compiled version in
``_gibbs.pyx`` performs the same floating-point operations in the same
order, so both backends produce identical chains from identical uniforms.

Coordinates are whitened so the measurement covariance is the identity.
A cluster of ``n`` points with sum ``s`` and sum of squared norms ``q`` has
log marginal likelihood

    log C(n, SS) + log(w_t N(zbar; m0, P + I/n) + w_c * clutter_density)

where ``C`` integrates the shared location out against Lebesgue measure.
"""
import math

import numpy as np

LOG2PI = math.log(2.0 * math.pi)


def cluster_log_marginal(n, sx, sy, sq, m0x, m0y, p00, p01, p11, log_wt, log_wc_dens):
    zbx = sx / n
    zby = sy / n
    ss = sq - n * (zbx * zbx + zby * zby)
    if ss < 0.0:
        ss = 0.0
    log_c = -(n - 1) * LOG2PI - math.log(n) - 0.5 * ss
    a = p00 + 1.0 / n
    c = p11 + 1.0 / n
    det = a * c - p01 * p01
    dx = zbx - m0x
    dy = zby - m0y
    maha = (c * dx * dx - 2.0 * p01 * dx * dy + a * dy * dy) / det
    lt = log_wt - LOG2PI - 0.5 * math.log(det) - 0.5 * maha
    if lt > log_wc_dens:
        mix = lt + math.log1p(math.exp(log_wc_dens - lt))
    else:
        mix = log_wc_dens + math.log1p(math.exp(lt - log_wc_dens))
    return log_c + mix


def gibbs_sweeps(z, m0, p, log_wt, log_wc_dens, alpha, init, uniforms):
    """Run ``len(uniforms)`` systematic-scan Gibbs sweeps.

    Returns ``(trace, logp)``: slot labels after each sweep and the log joint
    (CRP prior times marginal likelihood) of each visited partition.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    n_items = z.shape[0]
    n_sweeps = uniforms.shape[0]
    trace = np.empty((n_sweeps, n_items), dtype=np.int64)
    logp = np.empty(n_sweeps, dtype=np.float64)
    zx = [float(v) for v in z[:, 0]]
    zy = [float(v) for v in z[:, 1]]
    m0x, m0y = float(m0[0]), float(m0[1])
    p00, p01, p11 = float(p[0, 0]), float(p[0, 1]), float(p[1, 1])
    log_wt = float(log_wt)
    log_wc_dens = float(log_wc_dens)
    log_alpha = math.log(alpha)

    log_fact = [0.0] * (n_items + 1)
    for m in range(2, n_items + 1):
        log_fact[m] = log_fact[m - 1] + math.log(m - 1)
    log_norm = 0.0
    for i in range(n_items):
        log_norm += math.log(alpha + i)

    label = [int(v) for v in init]
    count = [0] * n_items
    sx = [0.0] * n_items
    sy = [0.0] * n_items
    sq = [0.0] * n_items
    for i in range(n_items):
        k = label[i]
        count[k] += 1
        sx[k] += zx[i]
        sy[k] += zy[i]
        sq[k] += zx[i] * zx[i] + zy[i] * zy[i]
    lm = [0.0] * n_items
    for k in range(n_items):
        if count[k] > 0:
            lm[k] = cluster_log_marginal(count[k], sx[k], sy[k], sq[k], m0x, m0y,
                                         p00, p01, p11, log_wt, log_wc_dens)
    single = [0.0] * n_items
    for i in range(n_items):
        single[i] = log_alpha + cluster_log_marginal(
            1, zx[i], zy[i], zx[i] * zx[i] + zy[i] * zy[i], m0x, m0y,
            p00, p01, p11, log_wt, log_wc_dens)

    score = [0.0] * (n_items + 1)
    for s in range(n_sweeps):
        for i in range(n_items):
            xi, yi = zx[i], zy[i]
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
                    score[j] = (math.log(count[j])
                                + cluster_log_marginal(count[j] + 1, sx[j] + xi, sy[j] + yi,
                                                       sq[j] + qi, m0x, m0y, p00, p01, p11,
                                                       log_wt, log_wc_dens)
                                - lm[j])
                    if score[j] > best:
                        best = score[j]
            total = math.exp(single[i] - best)
            for j in range(n_items):
                if count[j] > 0:
                    total += math.exp(score[j] - best)

            threshold = uniforms[s, i] * total
            chosen = -1
            acc = 0.0
            for j in range(n_items):
                if count[j] > 0:
                    acc += math.exp(score[j] - best)
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
            lm[chosen] = cluster_log_marginal(count[chosen], sx[chosen], sy[chosen], sq[chosen],
                                              m0x, m0y, p00, p01, p11, log_wt, log_wc_dens)

        total_lp = -log_norm
        for j in range(n_items):
            if count[j] > 0:
                total_lp += lm[j] + log_fact[count[j]] + log_alpha
        for i in range(n_items):
            trace[s, i] = label[i]
        logp[s] = total_lp
    return trace, logp
