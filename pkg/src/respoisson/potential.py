"""Newtonian potential on a ball and the operators assembling its higher derivatives.

For |beta| = k + 2 and f with order-k jets,

    N_beta(f)(x) = int_{B_R} D^beta Gamma(x - y) (f(y) - T^x_k f(y)) dy,
    S_beta(f)(x) = int_{|y|=R} D^{beta - e_j} Gamma(x - y) (f(y) - T^x_k f(y)) nu_j dsigma,
    T_beta(f)(x) = sum_j sum_{|mu| = j-2} C(beta^(j-1), mu, i_j) / mu! D^{mu + beta^(j)'} f(x),

and D^beta N(f) = N_beta(f) - T_beta(f).  Walking a nesting down one
integration by parts at a time gives the equivalent form

    D^beta N(f) = N_{beta^(2)}(D^{beta^(2)'} f) - sum_{j>=3} S_{beta^(j)}(D^{beta^(j)'} f) - T_beta(f).
"""

from __future__ import annotations

import itertools
import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri

from .multiindex import (Jet, MultiIndex, as_multiindex, enumerate_nestings,
                         multi_indices, multi_indices_upto)
from .polys import Polynomial, harmonic_expansion, sum_polys
from .quadrature import singular_ball_integrate, sphere_rule, star_rule
from .residue import residue_constant
from .specfun import Convention, FundamentalSolution, d_gamma

Evaluator = Callable[[np.ndarray], np.ndarray]


# -- fields -----------------------------------------------------------------

def _fd_stencil(mu: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Offsets (in units of h) and weights of the central difference for D^mu."""
    per_axis = []
    for p in mu:
        offs = [(p / 2.0 - l) for l in range(p + 1)]
        wts = [(-1) ** l * math.comb(p, l) for l in range(p + 1)]
        per_axis.append(list(zip(offs, wts)))
    offsets, weights = [], []
    for combo in itertools.product(*per_axis):
        offsets.append([o for o, _ in combo])
        weights.append(math.prod(w for _, w in combo))
    return np.array(offsets, dtype=float), np.array(weights, dtype=float)


def fd_step(order: int, R: float) -> float:
    # Richardson leaves an O(h^4) truncation error; balance it against rounding
    return R * max(1e-4, 1e-16 ** (1.0 / (order + 4)))


def fd_derivative(evaluator: Evaluator, mu: Sequence[int], pts: np.ndarray, h: float) -> np.ndarray:
    """Richardson-extrapolated central difference D^mu f at each row of pts."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    order = sum(mu)
    if order == 0:
        return np.asarray(evaluator(pts), dtype=float)
    offs, wts = _fd_stencil(mu)

    def d(step):
        shifted = pts[:, None, :] + step * offs[None, :, :]
        vals = np.asarray(evaluator(shifted.reshape(-1, pts.shape[1])), dtype=float)
        return vals.reshape(len(pts), len(wts)) @ wts / step ** order

    return (4.0 * d(0.5 * h) - d(h)) / 3.0


class ScalarField:
    """A real function on B_R with jets.

    Parameters
    ----------
    dim, R : int, float
        Ambient dimension and ball radius.
    evaluator : callable
        Maps an (m, n) array of points to m values.
    support : tuple, optional
        ``(center, radius)`` of a ball outside which the field vanishes.
    """

    def __init__(self, dim: int, R: float, evaluator: Evaluator, support=None, name: str = "",
                 _mu: tuple[int, ...] | None = None):
        self.dim = dim
        self.R = float(R)
        self._eval = evaluator
        self.support = None if support is None else (np.asarray(support[0], dtype=float),
                                                     float(support[1]))
        self.name = name
        self._mu = _mu or (0,) * dim

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        flat = pts.reshape(-1, self.dim)
        if any(self._mu):
            vals = fd_derivative(self._eval, self._mu, flat, fd_step(sum(self._mu), self.R))
        else:
            vals = np.asarray(self._eval(flat), dtype=float)
        return float(vals[0]) if pts.ndim == 1 else vals.reshape(pts.shape[:-1])

    def derivative_field(self, mu: Sequence[int]) -> "ScalarField":
        tot = tuple(a + b for a, b in zip(self._mu, mu))
        return ScalarField(self.dim, self.R, self._eval, self.support, self.name, _mu=tot)

    def derivative(self, mu: Sequence[int], x) -> float:
        return float(self.derivative_field(mu)(np.asarray(x, dtype=float)))

    def jet(self, x, k: int) -> Jet:
        """Order-k Taylor jet at x (finite differences unless overridden)."""
        x = np.asarray(x, dtype=float)
        derivs = {mu: self.derivative(mu, x) for mu in multi_indices_upto(self.dim, k)}
        return Jet.from_derivatives(tuple(x), k, derivs)

    def with_radius(self, R: float) -> "ScalarField":
        g = ScalarField(self.dim, R, self._eval, self.support, self.name, _mu=self._mu)
        return g

    def scaled(self, c: float) -> "ScalarField":
        base = self._eval
        return ScalarField(self.dim, self.R, lambda p: c * base(p), self.support, self.name,
                           _mu=self._mu)


class PolynomialField(ScalarField):
    """Polynomial-backed field with exact jets and a closed-form potential."""

    def __init__(self, poly: Polynomial, R: float = 1.0, name: str = ""):
        self.poly = poly
        super().__init__(poly.dim, R, poly, name=name or repr(poly))

    def __call__(self, pts):
        return self.poly(pts)

    def derivative_field(self, mu):
        return PolynomialField(self.poly.derivative(mu), self.R)

    def derivative(self, mu, x) -> float:
        return float(self.poly.derivative(mu)(np.asarray(x, dtype=float)))

    def jet(self, x, k: int) -> Jet:
        x = np.asarray(x, dtype=float)
        shifted = self.poly.shift(x)
        coeffs = {as_multiindex(e): float(c) for e, c in shifted.terms.items() if sum(e) <= k}
        return Jet(tuple(x), k, coeffs)

    def with_radius(self, R: float):
        return PolynomialField(self.poly, R)

    def scaled(self, c: float):
        return PolynomialField(self.poly * c, self.R)


def bump_polynomial(center, radius: float, power: int = 4) -> Polynomial:
    center = np.asarray(center, dtype=float)
    n = len(center)
    q = Polynomial.constant(n, 1.0)
    for i in range(n):
        xi = Polynomial.variable(n, i) - float(center[i])
        q = q - xi * xi * (1.0 / radius ** 2)
    return q ** power


class BumpField(ScalarField):
    """(1 - |y - c|^2 / rho^2)^p inside B_rho(c), zero outside; C^{p-1}."""

    def __init__(self, center, radius: float, R: float = 1.0, power: int = 4,
                 poly: Polynomial | None = None):
        center = np.asarray(center, dtype=float)
        if np.linalg.norm(center) + radius > R:
            raise ValueError("bump support must lie in the closed ball")
        self.center, self.radius, self.power = center, float(radius), power
        self.poly = bump_polynomial(center, radius, power) if poly is None else poly
        super().__init__(len(center), R, self._masked, support=(center, radius),
                         name=f"bump(c={center.tolist()}, r={radius})")

    def _masked(self, pts):
        pts = np.asarray(pts, dtype=float)
        inside = np.linalg.norm(pts - self.center, axis=-1) < self.radius
        return np.where(inside, self.poly(pts), 0.0)

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        v = self._masked(pts.reshape(-1, self.dim))
        return float(v[0]) if pts.ndim == 1 else v.reshape(pts.shape[:-1])

    def derivative_field(self, mu):
        if sum(mu) >= self.power:
            raise ValueError(f"bump of power {self.power} has only {self.power - 1} continuous derivatives")
        return BumpField(self.center, self.radius, self.R, self.power, self.poly.derivative(mu))

    def derivative(self, mu, x) -> float:
        return float(self.derivative_field(mu)(np.asarray(x, dtype=float)))

    def jet(self, x, k: int) -> Jet:
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x - self.center) >= self.radius:
            return Jet(tuple(x), k, {})
        shifted = self.poly.shift(x)
        return Jet(tuple(x), k, {as_multiindex(e): float(c) for e, c in shifted.terms.items()
                                 if sum(e) <= k})

    def with_radius(self, R: float):
        return BumpField(self.center, self.radius, R, self.power, self.poly)

    def scaled(self, c: float):
        return BumpField(self.center, self.radius, self.R, self.power, self.poly * c)


def as_field(f, R: float = 1.0, dim: int | None = None) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, Polynomial):
        return PolynomialField(f, R)
    if isinstance(f, (int, float)):
        if dim is None:
            raise ValueError("dim needed for a constant field")
        return PolynomialField(Polynomial.constant(dim, float(f)), R)
    raise TypeError(f"cannot make a field from {type(f).__name__}")


# -- closed-form potentials of polynomials ----------------------------------

def newtonian_polynomial(p: Polynomial, R: float, convention="DELTA") -> Polynomial:
    """Exact N(p) on B_R for a polynomial p (DELTA convention gives Delta N(p) = p).

    For p = |x|^{2i} H_j with H_j harmonic of degree j,
    N(p) = [|x|^{2i+2} - R^{2i+2} (2i+2j+n)/(2j+n-2)] H_j / ((2i+2)(2i+2j+n)),
    the interior solution matching a decaying exterior harmonic in C^1.
    """
    n = p.dim
    scale = 1.0
    if Convention(convention) is Convention.RAW:
        scale = 1.0 / FundamentalSolution(n).c_n
    out = []
    for i, j, H in harmonic_expansion(p):
        d = (2 * i + 2) * (2 * i + 2 * j + n)
        radial = (Polynomial.radial(n, i + 1)
                  - R ** (2 * i + 2) * (2 * i + 2 * j + n) / (2 * j + n - 2))
        out.append(radial * H * (scale / d))
    return sum_polys(out, n)


# -- quadrature-based operators ---------------------------------------------

def _fs(n, convention) -> FundamentalSolution:
    return FundamentalSolution(n, Convention(convention))


def _support_inside(f: ScalarField, R: float) -> bool:
    return f.support is not None and np.linalg.norm(f.support[0]) + f.support[1] <= R + 1e-14


def _volume(g: Evaluator, x: np.ndarray, R: float, level: int, ball_center=None) -> float:
    """int over B_R(ball_center) of g, graded toward x when x is inside."""
    n = len(x)
    b = np.zeros(n) if ball_center is None else np.asarray(ball_center, dtype=float)
    if np.linalg.norm(x - b) < R * (1 - 1e-12):
        rule = star_rule(n, R, x, level, graded=True, ball_center=b)
    else:
        rule = star_rule(n, R, b, level, graded=False, ball_center=b)
    return float(rule.weights @ g(rule.nodes))


def newtonian(f, x, level: int = 12, R: float | None = None, convention="DELTA",
              method: str = "auto", tol: float | None = None) -> float:
    """N(f)(x) = int_{B_R} Gamma(x - y) f(y) dy.

    ``method`` is "closed_form" (polynomial fields only), "quadrature", or
    "auto" (closed form when available).
    """
    f = as_field(f, R or 1.0, len(np.atleast_1d(x)))
    R = f.R if R is None else R
    x = np.asarray(x, dtype=float)
    n = len(x)
    if np.linalg.norm(x) > R:
        raise ValueError("need |x| <= R")
    if method not in ("auto", "closed_form", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed_form" or (method == "auto" and isinstance(f, PolynomialField)):
        if not isinstance(f, PolynomialField):
            raise ValueError("closed form needs a polynomial field")
        return float(newtonian_polynomial(f.poly, R, convention)(x))
    fs = _fs(n, convention)
    if _support_inside(f, R):
        c, rho = f.support
        return _volume(lambda y: fs.c_n * f(y) * np.linalg.norm(x - y, axis=1) ** (2.0 - n),
                       x, rho, level, c)
    return singular_ball_integrate(lambda y: fs.c_n * f(y), n - 2, x, R, level, tol=tol)


def _taylor_subtracted(beta: MultiIndex, f: ScalarField, x: np.ndarray, R: float, level: int,
                       fs: FundamentalSolution, k: int) -> float:
    jet = f.jet(x, k)

    def g_full(y):
        return d_gamma(beta, fs, x - y) * (f(y) - jet(y))

    if not _support_inside(f, R):
        return _volume(g_full, x, R, level)
    # split at the support ball: outside it only the Taylor polynomial survives
    c, rho = f.support
    inner = _volume(g_full, x, rho, level, c)
    if not jet.coeffs:
        return inner
    rule = star_rule(len(x), R, c, level, r_min=rho)
    outer = -float(rule.weights @ (d_gamma(beta, fs, x - rule.nodes) * jet(rule.nodes)))
    return inner + outer


def n_beta(beta, f, x, level: int = 12, R: float | None = None, convention="DELTA") -> float:
    """N_beta(f)(x) with k = |beta| - 2."""
    beta = as_multiindex(beta)
    x = np.asarray(x, dtype=float)
    f = as_field(f, R or 1.0, len(x))
    R = f.R if R is None else R
    if beta.order < 2:
        raise ValueError("N_beta needs |beta| >= 2")
    if np.linalg.norm(x) >= R:
        raise ValueError("need |x| < R")
    return _taylor_subtracted(beta, f, x, R, level, _fs(len(x), convention), beta.order - 2)


def s_beta(beta, f, x, level: int = 30, axis: int | None = None, R: float | None = None,
           convention="DELTA") -> float:
    """S_beta(f)(x) with D^beta = d_axis D^{beta'}; ``axis`` is 1-based."""
    beta = as_multiindex(beta)
    x = np.asarray(x, dtype=float)
    n = len(x)
    f = as_field(f, R or 1.0, n)
    R = f.R if R is None else R
    if beta.order < 2:
        raise ValueError("S_beta needs |beta| >= 2")
    if axis is None:
        axis = max(i for i in range(n) if beta[i] > 0) + 1
    if beta[axis - 1] == 0:
        raise ValueError(f"beta has no derivative along axis {axis}")
    r = float(np.linalg.norm(x))
    if r >= R:
        raise ValueError("need |x| < R")
    if r > 0.9 * R:
        warnings.warn(f"S_beta at |x|/R = {r / R:.3f}: boundary quadrature loses accuracy",
                      RuntimeWarning, stacklevel=2)
    bp = beta - MultiIndex.unit(n, axis - 1)
    jet = f.jet(x, beta.order - 2)
    rule = sphere_rule(n, R, level, axis=x if r > 0 else None)
    y = rule.nodes
    g = d_gamma(bp, _fs(n, convention), x - y) * (f(y) - jet(y)) * (y[:, axis - 1] / R)
    return float(rule.weights @ g)


# sign of the assembled correction, fixed once against Delta N(f) = f
_sign_lock = threading.Lock()
_calibrated: dict[tuple[int, str], dict] = {}


def _nesting_for(beta: MultiIndex, nesting):
    if nesting is None:
        nests = enumerate_nestings(beta)
        return nests[0]
    return nesting


def t_beta(beta, f, x, nesting=None, convention="DELTA", R: float | None = None) -> float:
    """T_beta(f)(x) for the given (default: first lexicographic) nesting."""
    beta = as_multiindex(beta)
    x = np.asarray(x, dtype=float)
    n = len(x)
    f = as_field(f, R or 1.0, n)
    if beta.order < 2:
        raise ValueError("T_beta needs |beta| >= 2")
    nest = _nesting_for(beta, nesting)
    k = beta.order - 2
    jet = f.jet(x, k)
    sign = correction_sign(n, convention)
    total = 0.0
    for j in range(2, k + 3):
        prev = nest.step(j - 1)
        inc = nest.increment(j) + 1  # 1-based axis with step(j) = prev + e_inc
        cdual = nest.dual(j)
        for mu in multi_indices(n, j - 2):
            c = residue_constant(prev, mu, inc, n, convention)
            if c == 0.0:
                continue
            total += c / mu.factorial * jet.derivative(mu + cdual)
    return sign * total


def d_beta_newtonian(beta, f, x, level: int = 12, nesting=None, method: str = "dnf",
                     R: float | None = None, convention="DELTA", s_level: int = 30) -> float:
    """D^beta N(f)(x).

    |beta| <= 1 differentiates under the integral; otherwise ``method`` picks
    the nested assembly ("dnf") or the single Taylor-subtracted volume
    integral ("dn").
    """
    beta = as_multiindex(beta)
    x = np.asarray(x, dtype=float)
    n = len(x)
    f = as_field(f, R or 1.0, n)
    R = f.R if R is None else R
    fs = _fs(n, convention)
    if beta.order == 0:
        return newtonian(f, x, level, R, convention, method="quadrature")
    if beta.order == 1:
        return _volume(lambda y: d_gamma(beta, fs, x - y) * f(y), x, R, level)
    if method == "dn" or beta.order == 2:
        return n_beta(beta, f, x, level, R, convention) - t_beta(beta, f, x, nesting, convention)
    if method != "dnf":
        raise ValueError(f"unknown method {method!r}")
    nest = _nesting_for(beta, nesting)
    k = beta.order - 2
    b2 = nest.step(2)
    val = n_beta(b2, f.derivative_field(nest.dual(2)), x, level, R, convention)
    for j in range(3, k + 3):
        g = f.derivative_field(nest.dual(j))
        val -= s_beta(nest.step(j), g, x, s_level, axis=nest.increment(j) + 1, R=R,
                      convention=convention)
    return val - t_beta(beta, f, x, nest, convention)


def pv_derivative(beta, f: ScalarField, x, level: int = 12, R: float | None = None,
                  convention="DELTA") -> float:
    """Principal-value integral int_{B_R} D^beta Gamma(x - y)(f(y) - T^x_{|beta|-2} f(y)) dy.

    Raises
    ------
    ValueError
        If f has no declared compact support inside B_R.
    """
    beta = as_multiindex(beta)
    if beta.order < 2:
        raise ValueError("pv_derivative needs |beta| >= 2")
    R = f.R if R is None else R
    if not _support_inside(f, R):
        raise ValueError("pv_derivative needs a field with compact support inside B_R")
    x = np.asarray(x, dtype=float)
    return _taylor_subtracted(beta, f, x, R, level, _fs(len(x), convention), beta.order - 2)


# -- sign calibration --------------------------------------------------------

def correction_sign(n: int, convention="DELTA") -> float:
    return calibration_report(n, convention)["sign"]


def calibration_report(n: int = 3, convention="DELTA") -> dict:
    """Fix the sign multiplying the residue-constant correction.

    Computes trace_i [N_{2e_i}(f) - s T^0_{2e_i}(f)] for f = 1 + y_1^2 at an
    interior point for s = +1 and s = -1 and keeps the one reproducing f
    (Delta N(f) = f under DELTA; c_n^{-1} f under RAW).  Also records what the
    diagonal correction term would be with the printed -delta_ij/n.
    """
    conv = Convention(convention).value
    key = (n, conv)
    hit = _calibrated.get(key)
    if hit is not None:
        return hit
    fs = _fs(n, conv)
    x = np.zeros(n)
    x[0], x[1] = 0.3, -0.2
    f = PolynomialField(Polynomial.constant(n, 1.0) + Polynomial.variable(n, 0) ** 2, 1.0)
    target = float(f(x)) * (1.0 if conv == "DELTA" else 1.0 / fs.c_n)
    trace_n = 0.0
    trace_c = 0.0
    for i in range(n):
        b = as_multiindex(tuple(2 if d == i else 0 for d in range(n)))
        trace_n += _taylor_subtracted(b, f, x, 1.0, 10, fs, 0)
        trace_c += residue_constant(MultiIndex.unit(n, i), MultiIndex.zero(n), i + 1, n, conv) * float(f(x))
    res = {s: abs(trace_n - s * trace_c - target) / abs(target) for s in (1.0, -1.0)}
    sign = min(res, key=res.get)
    diag = residue_constant(MultiIndex.unit(n, 0), MultiIndex.zero(n), 1, n, conv)
    assembled = -sign * diag  # D_ii N(f) = N_ii(f) + assembled * f
    printed = -1.0 / n if conv == "DELTA" else None
    report = {
        "n": n,
        "convention": conv,
        "sign": sign,
        "C(e_i,0,i)": diag,
        "assembled_diagonal_correction": assembled,
        "printed_diagonal_correction": printed,
        "matches_printed": None if printed is None else bool(abs(assembled - printed) < 1e-12),
        "poisson_residual": res[sign],
        "poisson_residual_other_sign": res[-sign],
    }
    with _sign_lock:
        _calibrated.setdefault(key, report)
    return _calibrated[key]


# -- empirical Holder norms --------------------------------------------------

@dataclass(frozen=True)
class NormEstimate:
    sup: float
    holder: float
    composite: float
    alpha: float
    R: float
    samples: int
    seminorms: dict = field(default_factory=dict)  # l -> ||f||_alpha^{(l)}
    holder_history: tuple = ()


def _ball_samples(U, n, R, frac=1.0):
    """Map rows of uniforms (n + 1 columns) to points of B_{frac R}."""
    d = ndtri(np.clip(U[:, :n], 1e-15, 1 - 1e-15))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (frac * R * U[:, n] ** (1.0 / n))[:, None]


def _sup_holder(vals_p, vals_q, p, q, alpha):
    dist = np.linalg.norm(p - q, axis=1)
    ok = dist > 1e-12
    ratios = np.zeros(len(p))
    ratios[ok] = np.abs(vals_p[ok] - vals_q[ok]) / dist[ok] ** alpha
    return np.maximum.accumulate(ratios)


def holder_norms(f, alpha: float, k: int = 0, sample_count: int = 2000, seed: int = 0,
                 R: float | None = None, radius_fraction: float = 1.0) -> NormEstimate:
    """Monte-Carlo sup norm, Holder seminorm and ||f||_alpha^{(l)} for l <= k.

    The Holder estimate is a running max over a fixed pair stream, so it is
    nondecreasing in ``sample_count``.
    """
    if not 0 < alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    f = as_field(f, R or 1.0)
    R = f.R if R is None else R
    # one row per pair, so a larger count extends the same stream
    U = np.random.default_rng(seed).random((sample_count, 2 * (f.dim + 1)))
    p = _ball_samples(U[:, :f.dim + 1], f.dim, R, radius_fraction)
    q = _ball_samples(U[:, f.dim + 1:], f.dim, R, radius_fraction)
    fp, fq = f(p), f(q)
    sup = float(max(np.max(np.abs(fp)), np.max(np.abs(fq))))
    hist = _sup_holder(fp, fq, p, q, alpha)
    hol = float(hist[-1])
    semis = {}
    for l in range(k + 1):
        best = 0.0
        for mu in multi_indices(f.dim, l):
            g = f.derivative_field(mu)
            gp, gq = g(p), g(q)
            s = max(np.max(np.abs(gp)), np.max(np.abs(gq)))
            h = _sup_holder(gp, gq, p, q, alpha)[-1]
            best = max(best, float(s + R ** alpha * h))
        semis[l] = best
    return NormEstimate(sup, hol, sup + R ** alpha * hol, alpha, R, sample_count, semis,
                        tuple(hist[np.unique(np.geomspace(1, sample_count, 12).astype(int)) - 1]))
