"""Compiled coordinate-descent sweep loops.

Three linear-model engines share one update rule and differ only in how the
partial inner product is obtained:

  gram   - Gram matrix G = X'X/n cached, state u = G @ beta (fast for p
           up to a few thousand; the whole path reuses one G)
  naive  - residual r = y - X @ beta cached, columns dotted on demand
  lazy   - like naive, but similarity rows are recomputed from X whenever a
           coefficient moves, so no p x p matrix is ever stored

All engines maintain q = R @ |beta| so the pairwise penalty contributes O(p)
per changed coordinate.  The weighted engine runs the inner loop of the
logistic quadratic approximation.  Kernels mutate their state arrays in place
and record the objective after every sweep.
"""

import numpy as np
from numba import njit

SQUARED, ABSOLUTE, RATIO = 0, 1, 2


@njit(cache=True)
def soft_threshold_scalar(z, gamma):
    a = abs(z) - gamma
    if a <= 0.0:
        return 0.0
    return a if z > 0.0 else -a


@njit(cache=True)
def _gram_objective(yty_n, c, beta, u, q, lam, alpha):
    p = beta.shape[0]
    quad = 0.0
    lin = 0.0
    l1 = 0.0
    cross = 0.0
    for i in range(p):
        quad += beta[i] * u[i]
        lin += c[i] * beta[i]
        ab = abs(beta[i])
        l1 += ab
        cross += ab * q[i]
    return 0.5 * yty_n - lin + 0.5 * quad + lam * (l1 + 0.5 * alpha * cross)


@njit(cache=True)
def _residual_objective(r, n, beta, q, lam, alpha):
    rss = 0.0
    for i in range(r.shape[0]):
        rss += r[i] * r[i]
    l1 = 0.0
    cross = 0.0
    for i in range(beta.shape[0]):
        ab = abs(beta[i])
        l1 += ab
        cross += ab * q[i]
    return 0.5 * rss / n + lam * (l1 + 0.5 * alpha * cross)


@njit(cache=True)
def _gram_sweep(G, c, R, Rd, lam, la, beta, u, q, active_only):
    p = beta.shape[0]
    delta = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        z = c[j] - u[j] + bj
        gamma = lam + la * (q[j] - Rd[j] * abs(bj))
        nb = soft_threshold_scalar(z, gamma) / (1.0 + la * Rd[j])
        d = nb - bj
        if d != 0.0:
            Gj = G[j]
            for i in range(p):
                u[i] += Gj[i] * d
            if la != 0.0:
                da = abs(nb) - abs(bj)
                Rj = R[j]
                for i in range(p):
                    q[i] += Rj[i] * da
            beta[j] = nb
            ad = abs(d)
            if ad > delta:
                delta = ad
    return delta


@njit(cache=True)
def gram_fit(G, c, yty_n, R, Rd, lam, alpha, beta, u, q, tol, max_sweeps,
             use_active, obj_out):
    la = lam * alpha
    sweeps = 0
    last = np.inf
    hit = False
    while sweeps < max_sweeps:
        delta = _gram_sweep(G, c, R, Rd, lam, la, beta, u, q, False)
        obj_out[sweeps] = _gram_objective(yty_n, c, beta, u, q, lam, alpha)
        sweeps += 1
        last = delta
        if delta < tol:
            hit = True
            break
        if use_active:
            while sweeps < max_sweeps:
                d_a = _gram_sweep(G, c, R, Rd, lam, la, beta, u, q, True)
                obj_out[sweeps] = _gram_objective(yty_n, c, beta, u, q, lam, alpha)
                sweeps += 1
                last = d_a
                if d_a < tol:
                    break
    return sweeps, last, hit


@njit(cache=True)
def _naive_sweep(XT, n, R, Rd, lam, la, beta, r, q, active_only):
    p = beta.shape[0]
    delta = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        Xj = XT[j]
        z = 0.0
        for i in range(n):
            z += Xj[i] * r[i]
        z = z / n + bj
        gamma = lam + la * (q[j] - Rd[j] * abs(bj))
        nb = soft_threshold_scalar(z, gamma) / (1.0 + la * Rd[j])
        d = nb - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= Xj[i] * d
            if la != 0.0:
                da = abs(nb) - abs(bj)
                Rj = R[j]
                for i in range(p):
                    q[i] += Rj[i] * da
            beta[j] = nb
            ad = abs(d)
            if ad > delta:
                delta = ad
    return delta


@njit(cache=True)
def naive_fit(XT, R, Rd, lam, alpha, beta, r, q, tol, max_sweeps,
              use_active, obj_out):
    n = r.shape[0]
    la = lam * alpha
    sweeps = 0
    last = np.inf
    hit = False
    while sweeps < max_sweeps:
        delta = _naive_sweep(XT, n, R, Rd, lam, la, beta, r, q, False)
        obj_out[sweeps] = _residual_objective(r, n, beta, q, lam, alpha)
        sweeps += 1
        last = delta
        if delta < tol:
            hit = True
            break
        if use_active:
            while sweeps < max_sweeps:
                d_a = _naive_sweep(XT, n, R, Rd, lam, la, beta, r, q, True)
                obj_out[sweeps] = _residual_objective(r, n, beta, q, lam, alpha)
                sweeps += 1
                last = d_a
                if d_a < tol:
                    break
    return sweeps, last, hit


@njit(cache=True)
def similarity_row(XT, j, variant, clamp, diag_j, out):
    """Recompute row j of R from the standardized design (lazy mode)."""
    p, n = XT.shape
    Xj = XT[j]
    for k in range(p):
        dot = 0.0
        Xk = XT[k]
        for i in range(n):
            dot += Xk[i] * Xj[i]
        a = abs(dot) / n
        if variant == SQUARED:
            out[k] = a * a
        elif variant == ABSOLUTE:
            out[k] = a
        else:
            if a > 1.0 - clamp:
                a = 1.0 - clamp
            out[k] = a / (1.0 - a)
    out[j] = diag_j


@njit(cache=True)
def _lazy_sweep(XT, n, variant, clamp, Rd, lam, la, beta, r, q, row_buf,
                active_only):
    p = beta.shape[0]
    delta = 0.0
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        Xj = XT[j]
        z = 0.0
        for i in range(n):
            z += Xj[i] * r[i]
        z = z / n + bj
        gamma = lam + la * (q[j] - Rd[j] * abs(bj))
        nb = soft_threshold_scalar(z, gamma) / (1.0 + la * Rd[j])
        d = nb - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= Xj[i] * d
            if la != 0.0:
                similarity_row(XT, j, variant, clamp, Rd[j], row_buf)
                da = abs(nb) - abs(bj)
                for i in range(p):
                    q[i] += row_buf[i] * da
            beta[j] = nb
            ad = abs(d)
            if ad > delta:
                delta = ad
    return delta


@njit(cache=True)
def lazy_fit(XT, variant, clamp, Rd, lam, alpha, beta, r, q, tol, max_sweeps,
             use_active, obj_out):
    n = r.shape[0]
    la = lam * alpha
    row_buf = np.empty(beta.shape[0])
    sweeps = 0
    last = np.inf
    hit = False
    while sweeps < max_sweeps:
        delta = _lazy_sweep(XT, n, variant, clamp, Rd, lam, la, beta, r, q,
                            row_buf, False)
        obj_out[sweeps] = _residual_objective(r, n, beta, q, lam, alpha)
        sweeps += 1
        last = delta
        if delta < tol:
            hit = True
            break
        if use_active:
            while sweeps < max_sweeps:
                d_a = _lazy_sweep(XT, n, variant, clamp, Rd, lam, la, beta, r,
                                  q, row_buf, True)
                obj_out[sweeps] = _residual_objective(r, n, beta, q, lam, alpha)
                sweeps += 1
                last = d_a
                if d_a < tol:
                    break
    return sweeps, last, hit


@njit(cache=True)
def _weighted_sweep(XT, w, wxx, sum_w, R, Rd, lam, la, beta, b0, r, q,
                    update_intercept, active_only):
    p = beta.shape[0]
    n = r.shape[0]
    delta = 0.0
    if update_intercept:
        s = 0.0
        for i in range(n):
            s += w[i] * r[i]
        d0 = s / sum_w
        if d0 != 0.0:
            b0 += d0
            for i in range(n):
                r[i] -= d0
            ad = abs(d0)
            if ad > delta:
                delta = ad
    for j in range(p):
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        Xj = XT[j]
        z = 0.0
        for i in range(n):
            z += w[i] * r[i] * Xj[i]
        z = z / n + bj * wxx[j]
        gamma = lam + la * (q[j] - Rd[j] * abs(bj))
        nb = soft_threshold_scalar(z, gamma) / (wxx[j] + la * Rd[j])
        d = nb - bj
        if d != 0.0:
            for i in range(n):
                r[i] -= Xj[i] * d
            if la != 0.0:
                da = abs(nb) - abs(bj)
                Rj = R[j]
                for i in range(p):
                    q[i] += Rj[i] * da
            beta[j] = nb
            ad = abs(d)
            if ad > delta:
                delta = ad
    return b0, delta


@njit(cache=True)
def weighted_fit(XT, w, wxx, sum_w, R, Rd, lam, alpha, beta, b0, r, q, tol,
                 max_sweeps, use_active, update_intercept):
    la = lam * alpha
    sweeps = 0
    last = np.inf
    hit = False
    while sweeps < max_sweeps:
        b0, delta = _weighted_sweep(XT, w, wxx, sum_w, R, Rd, lam, la, beta,
                                    b0, r, q, update_intercept, False)
        sweeps += 1
        last = delta
        if delta < tol:
            hit = True
            break
        if use_active:
            while sweeps < max_sweeps:
                b0, d_a = _weighted_sweep(XT, w, wxx, sum_w, R, Rd, lam, la,
                                          beta, b0, r, q, update_intercept,
                                          True)
                sweeps += 1
                last = d_a
                if d_a < tol:
                    break
    return b0, sweeps, last, hit
