"""Pure numpy implementations of the inner-loop kernels.

Same signatures as the compiled ``_ckernels`` module; used when the extension
is not built or when ``RESPOISSON_PURE_PYTHON=1``.
"""

import numpy as np


def _power_table(pts, maxdeg):
    # table[d, k, i] = pts[i, d] ** k
    p, n = pts.shape
    table = np.empty((n, maxdeg + 1, p))
    table[:, 0, :] = 1.0
    for k in range(1, maxdeg + 1):
        table[:, k, :] = table[:, k - 1, :] * pts.T
    return table


def poly_eval(pts, exps, coeffs):
    """Evaluate sum_t coeffs[t] * prod_d pts[:, d] ** exps[t, d]."""
    pts = np.ascontiguousarray(pts, dtype=float)
    exps = np.asarray(exps, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=float)
    p, n = pts.shape
    out = np.zeros(p)
    if len(coeffs) == 0 or p == 0:
        return out
    table = _power_table(pts, int(exps.max()))
    for e, c in zip(exps, coeffs):
        term = np.full(p, c)
        for d in range(n):
            if e[d]:
                term *= table[d, e[d]]
        out += term
    return out


def radial_poly_eval(pts, exps, coeffs, rpow):
    """Evaluate sum_t coeffs[t] * pts^exps[t] * |pts|^(-rpow[t])."""
    pts = np.ascontiguousarray(pts, dtype=float)
    exps = np.asarray(exps, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=float)
    rpow = np.asarray(rpow, dtype=float)
    p, n = pts.shape
    out = np.zeros(p)
    if len(coeffs) == 0 or p == 0:
        return out
    table = _power_table(pts, int(exps.max()))
    r2 = np.einsum("ij,ij->i", pts, pts)
    cache = {}
    for e, c, s in zip(exps, coeffs, rpow):
        if s not in cache:
            cache[s] = r2 ** (-0.5 * s)
        term = c * cache[s]
        for d in range(n):
            if e[d]:
                term = term * table[d, e[d]]
        out += term
    return out


def gegenbauer_table(L, rho, t):
    """Rows C_0..C_L of the Gegenbauer polynomials with parameter rho at points t."""
    t = np.asarray(t, dtype=float)
    out = np.empty((L + 1,) + t.shape)
    out[0] = 1.0
    if L >= 1:
        out[1] = 2.0 * rho * t
    for l in range(2, L + 1):
        out[l] = (2.0 * t * (l + rho - 1.0) * out[l - 1] - (l + 2.0 * rho - 2.0) * out[l - 2]) / l
    return out


def gegenbauer_series(L, rho, t, a):
    """sum_{l <= L} C_l^(rho)(t) a^l, elementwise over broadcast t, a."""
    t, a = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(a, dtype=float))
    c_prev = np.ones_like(t)
    total = c_prev.copy()
    if L == 0:
        return total
    c = 2.0 * rho * t
    apow = a.copy()
    total = total + c * apow
    for l in range(2, L + 1):
        c_prev, c = c, (2.0 * t * (l + rho - 1.0) * c - (l + 2.0 * rho - 2.0) * c_prev) / l
        apow = apow * a
        total = total + c * apow
    return total
