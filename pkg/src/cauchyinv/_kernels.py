"""Compiled inner loops shared by the prior and the single-site sampler."""

import math

import numpy as np
from numba import njit

CAUCHY = 0
GAUSSIAN = 1
TV = 2
NONE = 3


@njit(cache=True)
def edge_term(family, d, scale, reg):
    # unnormalized log-density of one increment
    if family == CAUCHY:
        return math.log(scale) - math.log(scale * scale + d * d)
    if family == GAUSSIAN:
        return -d * d / (4.0 * scale * scale)
    if family == TV:
        return -reg * abs(d)
    return 0.0


@njit(cache=True)
def site_delta_prior(x, k, delta, family, reg, edge_a, edge_b, edge_scale, site_ptr, site_edges):
    out = 0.0
    if family == NONE:
        return out
    for q in range(site_ptr[k], site_ptr[k + 1]):
        e = site_edges[q]
        a = edge_a[e]
        b = edge_b[e]
        xb = 0.0 if b < 0 else x[b]
        d_old = x[a] - xb
        d_new = d_old + delta if a == k else d_old - delta
        s = edge_scale[e]
        out += edge_term(family, d_new, s, reg) - edge_term(family, d_old, s, reg)
    return out


@njit(cache=True)
def site_delta_loglik(residual, k, delta, col_ptr, row_idx, vals, inv_var):
    acc = 0.0
    for p in range(col_ptr[k], col_ptr[k + 1]):
        v = vals[p] * delta
        acc += v * (v - 2.0 * residual[row_idx[p]])
    return -0.5 * inv_var * acc


@njit(cache=True)
def scmh_sweeps(
    x, residual, has_lik, col_ptr, row_idx, vals, inv_var,
    family, reg, edge_a, edge_b, edge_scale, site_ptr, site_edges,
    sigmas, orders, steps, log_u, acc, prop, sweep0, thin, out,
):
    """Run ``steps.shape[0]`` full sweeps in place.

    Returns ``(n_stored, logpost_change)``; thinned states go to ``out``.
    """
    n_sweeps, n = steps.shape
    n_stored = 0
    change = 0.0
    for t in range(n_sweeps):
        order = orders[t % orders.shape[0]]
        for i in range(n):
            k = order[i]
            delta = sigmas[k] * steps[t, i]
            dl = 0.0
            if has_lik:
                dl = site_delta_loglik(residual, k, delta, col_ptr, row_idx, vals, inv_var)
            dp = site_delta_prior(x, k, delta, family, reg, edge_a, edge_b, edge_scale, site_ptr, site_edges)
            prop[k] += 1
            if log_u[t, i] < dl + dp:
                x[k] += delta
                if has_lik:
                    for p in range(col_ptr[k], col_ptr[k + 1]):
                        residual[row_idx[p]] -= vals[p] * delta
                acc[k] += 1
                change += dl + dp
        if (sweep0 + t + 1) % thin == 0:
            out[n_stored, :] = x
            n_stored += 1
    return n_stored, change


def as_index(a):
    return np.ascontiguousarray(a, dtype=np.int64)
