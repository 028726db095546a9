"""Boundary moments of kernel derivatives over spheres and the residue-type identities.

The boundary moment is

    I(beta, mu, j)(x) = int_{|y|=R} D^beta_x Gamma(x - y) (y - x)^mu nu_j(y) dsigma_y.

It scales like R^{1 + |mu| - |beta|}, so it is a constant when |beta| = |mu| + 1
and vanishes identically once |beta| >= |mu| + 2.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .multiindex import MultiIndex, as_multiindex, multi_indices, multi_indices_upto
from .polys import Polynomial, harmonic_expansion
from .quadrature import (QuadratureConvergenceError, annulus_rule, sphere_monomial_moment,
                         sphere_rule)
from .specfun import Convention, FundamentalSolution, d_gamma, gamma_derivative, sphere_area


def _fs(n: int, convention) -> FundamentalSolution:
    return FundamentalSolution(n, Convention(convention))


def _moment_rule(n, R, x, level, extra_degree):
    r = float(np.linalg.norm(x))
    axis = x if r > 0 else None
    return sphere_rule(n, R, level, axis=axis, level_rest=extra_degree // 2 + 2)


def boundary_moment(beta, mu, j: int, R: float, x, convention="DELTA", level: int = 40,
                    tol: float | None = None) -> float:
    """Quadrature of I(beta, mu, j)(x); ``j`` is 1-based.

    With ``tol`` the integral is repeated at a higher level and a
    QuadratureConvergenceError raised when the two disagree.
    """
    beta, mu = as_multiindex(beta), as_multiindex(mu)
    x = np.asarray(x, dtype=float)
    n = len(x)
    if len(beta) != n or len(mu) != n or not 1 <= j <= n:
        raise ValueError("dimension mismatch")
    if np.linalg.norm(x) >= R:
        raise ValueError("need |x| < R")
    fs = _fs(n, convention)
    mu_arr = np.array(mu)

    def run(lev):
        rule = _moment_rule(n, R, x, lev, beta.order + mu.order + 1)
        y = rule.nodes
        g = d_gamma(beta, fs, x - y) * np.prod((y - x) ** mu_arr, axis=1) * (y[:, j - 1] / R)
        return float(rule.weights @ g)

    val = run(level)
    if tol is not None:
        err = abs(run(level + level // 2) - val)
        if err > tol:
            raise QuadratureConvergenceError(
                f"boundary moment not converged (|x|/R = {np.linalg.norm(x) / R:.3f}): diff {err:.2e}")
    return val


def boundary_integral(f: Polynomial, x, R: float, beta=None, convention="DELTA",
                      level: int = 40) -> np.ndarray:
    """int_{|y|=R} D^beta Gamma(x - y) f(y) dsigma_y at each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = f.dim
    beta = (0,) * n if beta is None else tuple(beta)
    fs = _fs(n, convention)
    out = np.empty(len(x))
    for i, xi in enumerate(x):
        rule = _moment_rule(n, R, xi, level, sum(beta) + max(f.degree, 0))
        out[i] = rule.weights @ (d_gamma(beta, fs, xi - rule.nodes) * f(rule.nodes))
    return out


def closed_form_boundary_integral(f: Polynomial, R: float, convention="DELTA") -> Polynomial:
    """Exact x -> int_{|y|=R} Gamma(x - y) f(y) dsigma_y for |x| < R.

    On the sphere |y|^{2i} H_j(y) = R^{2i} H_j(y), and the Funk-Hecke formula
    gives int |x - y|^{2-n} H_j(y) dsigma = R s_n (n-2)/(2j+n-2) H_j(x).
    """
    n = f.dim
    c = _fs(n, convention).c_n
    s_n = sphere_area(n)
    out = Polynomial.zero(n)
    for i, j, H in harmonic_expansion(f):
        out = out + H * (c * R ** (2 * i + 1) * s_n * (n - 2) / (2 * j + n - 2))
    return out


@dataclass(frozen=True)
class ResidueFit:
    poly: Polynomial
    residual: float  # max |fit - data| / max |data|
    samples: int
    condition: float


def _monomial_matrix(pts: np.ndarray, basis) -> np.ndarray:
    return np.stack([np.prod(pts ** np.array(b), axis=1) for b in basis], axis=1)


def residue_projection(f: Polynomial, R: float = 1.0, sample_count: int | None = None,
                       level: int = 40, convention="DELTA", seed: int = 0) -> ResidueFit:
    """Least-squares degree-k polynomial fit of x -> int Gamma(x - y) f(y) dsigma_y.

    Raises
    ------
    ValueError
        If the fit is too ill-conditioned for the number of samples.
    """
    n, k = f.dim, max(f.degree, 0)
    if k > 6:
        raise ValueError("residue_projection supports degree <= 6")
    basis = multi_indices_upto(n, k)
    m = sample_count or 2 * len(basis) + 4
    if m < 2 * len(basis):
        raise ValueError(f"need >= {2 * len(basis)} samples for degree {k}")
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((m, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    pts = d * (0.6 * R * rng.uniform(0, 1, m) ** (1.0 / n))[:, None]
    vals = boundary_integral(f, pts, R, convention=convention, level=level)
    A = _monomial_matrix(pts / R, basis)
    cond = float(np.linalg.cond(A))
    if cond > 1e10:
        raise ValueError(f"ill-conditioned fit (cond {cond:.1e}); increase sample_count")
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    poly = Polynomial(n, {tuple(b): c / R ** sum(b) for b, c in zip(basis, coef)})
    resid = float(np.max(np.abs(A @ coef - vals)) / max(np.max(np.abs(vals)), 1e-300))
    return ResidueFit(poly, resid, m, cond)


def annulus_vanishing(beta, f: Polynomial, z, eps: float, R: float, x, level: int = 24,
                      convention="DELTA") -> float:
    """Quadrature of int_{B_R minus B_eps(z)} D^beta_x Gamma(x - y) f(y) dy."""
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    if eps <= 0 or np.linalg.norm(z) + eps >= R:
        raise ValueError("B_eps(z) must lie inside B_R")
    if np.linalg.norm(x - z) >= eps:
        raise ValueError("x must lie in B_eps(z)")
    fs = _fs(len(x), convention)
    rule = annulus_rule(len(x), eps, R, z, level)
    return float(rule.weights @ (d_gamma(tuple(beta), fs, x - rule.nodes) * f(rule.nodes)))


def closed_form_moment(n: int, R: float = 1.0) -> float:
    """Coefficient of x_1 in I(0, 0, 1)(x) under the RAW kernel.

    Equals 4 pi^{n/2} / (n Gamma((n-2)/2)).  ``R`` is accepted for symmetry
    with the quadrature routines; the coefficient does not depend on it since
    nu_1 = y_1 / R.
    """
    if n < 3:
        raise ValueError("n >= 3")
    return 4 * math.pi ** (n / 2) / (n * math.gamma((n - 2) / 2))


# -- constant table ---------------------------------------------------------

def exact_moment_at_origin(beta, mu, j: int, n: int, R: float = 1.0, convention="DELTA") -> float:
    """I(beta, mu, j)(0) from exact sphere monomial moments."""
    beta, mu = as_multiindex(beta), as_multiindex(mu)
    c = _fs(n, convention).c_n
    sign = -1.0 if beta.order % 2 else 1.0  # D^beta Gamma(-y) = (-1)^{|beta|} D^beta Gamma(y)
    total = 0.0
    for q, p in gamma_derivative(beta).terms.items():
        s = n - 2 + 2 * q
        for e, coef in p.terms.items():
            g = [a + b for a, b in zip(e, mu)]
            g[j - 1] += 1
            if any(v % 2 for v in g):
                continue
            deg = sum(g)
            total += float(coef) * sphere_monomial_moment(g) * R ** (deg + n - 1 - s) / R
    return sign * c * total


@dataclass(frozen=True)
class ResidueConstant:
    n: int
    beta: MultiIndex
    mu: MultiIndex
    j: int
    convention: str
    value: float

    def to_json(self) -> dict:
        return {"beta": list(self.beta), "mu": list(self.mu), "j": self.j, "n": self.n,
                "convention": self.convention, "value": self.value}


_const_cache: dict[tuple, float] = {}
_const_lock = threading.Lock()


def residue_constant(beta, mu, j: int, n: int | None = None, convention="DELTA") -> float:
    """Cached constant C(beta, mu, j) for |beta| >= |mu| + 1.

    Computed exactly at x = 0; the moment does not depend on x or R in this
    regime (zero once |beta| >= |mu| + 2).
    """
    beta, mu = as_multiindex(beta), as_multiindex(mu)
    n = n or len(beta)
    conv = Convention(convention).value
    if beta.order < mu.order + 1:
        raise ValueError("constant regime needs |beta| >= |mu| + 1 (lower orders give polynomials in x)")
    key = (n, tuple(beta), tuple(mu), j, conv)
    hit = _const_cache.get(key)
    if hit is not None:
        return hit
    val = exact_moment_at_origin(beta, mu, j, n, 1.0, conv)
    if abs(val) < 1e-15:
        val = 0.0
    with _const_lock:
        _const_cache.setdefault(key, val)
    return _const_cache[key]


def constants_table(n: int, max_order: int, convention="DELTA") -> list[ResidueConstant]:
    """All C(beta, mu, j) with 1 <= |beta| <= max_order and |mu| <= |beta| - 1."""
    if max_order > 6:
        raise ValueError("max_order <= 6")
    rows = []
    for b_ord in range(1, max_order + 1):
        for beta in multi_indices(n, b_ord):
            for mu in multi_indices_upto(n, b_ord - 1):
                for j in range(1, n + 1):
                    v = residue_constant(beta, mu, j, n, convention)
                    rows.append(ResidueConstant(n, beta, mu, j, Convention(convention).value, v))
    return rows
