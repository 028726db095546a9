"""Gegenbauer polynomials, the Laplace fundamental solution and its closed-form
derivatives, and the Gegenbauer expansion of the kernel on spheres.
"""

from __future__ import annotations

import enum
import math
import threading
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._backend import kernels
from .multiindex import as_multiindex
from .polys import Polynomial


class Convention(str, enum.Enum):
    """DELTA: Delta N(f) = f, so Gamma = -1/(4 pi |x|) for n = 3.  RAW: |x|^{2-n}."""

    DELTA = "DELTA"
    RAW = "RAW"


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class FundamentalSolution:
    dim: int
    convention: Convention = Convention.DELTA

    def __post_init__(self):
        if self.dim < 3:
            raise ValueError("fundamental solution implemented for n >= 3")
        object.__setattr__(self, "convention", Convention(self.convention))

    @property
    def c_n(self) -> float:
        if self.convention is Convention.RAW:
            return 1.0
        n = self.dim
        return 1.0 / (n * (2 - n) * unit_ball_volume(n))

    def __call__(self, x) -> np.ndarray | float:
        return d_gamma((0,) * self.dim, self, x)


def gegenbauer(l: int, rho: float, t) -> np.ndarray | float:
    """C_l^(rho)(t) from the three-term recurrence."""
    if l < 0:
        raise ValueError("degree must be >= 0")
    t_arr = np.asarray(t, dtype=float)
    val = kernels.gegenbauer_table(int(l), float(rho), t_arr)[l]
    return float(val) if t_arr.ndim == 0 else val


def gegenbauer_norm(l: int, rho: float) -> float:
    """Weighted L2 norm int_{-1}^1 C_l^2 (1 - t^2)^{rho - 1/2} dt (closed form)."""
    if l < 0 or rho <= 0:
        raise ValueError("need l >= 0 and rho > 0")
    return (math.pi * 2 ** (1 - 2 * rho) * math.gamma(l + 2 * rho)
            / (math.factorial(l) * (l + rho) * math.gamma(rho) ** 2))


# closed-form derivatives of |x|^{2-n}

class GammaDerivative:
    """D^beta |x|^{2-n} as sum_q p_q(x) / |x|^{n-2+2q} (unscaled by c_n)."""

    def __init__(self, beta: Sequence[int], terms: dict[int, Polynomial]):
        self.beta = as_multiindex(beta)
        self.terms = {q: p for q, p in terms.items() if not p.is_zero()}
        n = len(self.beta)
        exps, coeffs, rpow = [], [], []
        for q, p in sorted(self.terms.items()):
            e, c = p.arrays()
            exps.append(e)
            coeffs.append(c)
            rpow.append(np.full(len(c), n - 2 + 2 * q, dtype=float))
        if exps:
            self._exps = np.concatenate(exps)
            self._coeffs = np.concatenate(coeffs)
            self._rpow = np.concatenate(rpow)
        else:
            self._exps = np.zeros((0, n), dtype=np.int64)
            self._coeffs = np.zeros(0)
            self._rpow = np.zeros(0)

    @property
    def homogeneity(self) -> int:
        return 2 - len(self.beta) - self.beta.order

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(pts, dtype=float).reshape(-1, len(self.beta))
        return kernels.radial_poly_eval(pts, self._exps, self._coeffs, self._rpow)


_gd_cache: dict[tuple[int, ...], GammaDerivative] = {}
_gd_lock = threading.Lock()


def gamma_derivative(beta: Sequence[int]) -> GammaDerivative:
    """Memoised symbolic D^beta of |x|^{2-n}.

    d/dx_i [p / |x|^s] = (d_i p) / |x|^s - s x_i p / |x|^{s+2}.
    """
    beta = tuple(beta)
    hit = _gd_cache.get(beta)
    if hit is not None:
        return hit
    n = len(beta)
    if sum(beta) == 0:
        gd = GammaDerivative(beta, {0: Polynomial.constant(n, 1.0)})
    else:
        i = next(d for d in range(n) if beta[d] > 0)
        prev = list(beta)
        prev[i] -= 1
        base = gamma_derivative(tuple(prev))
        xi = Polynomial.variable(n, i)
        terms: dict[int, Polynomial] = {}
        for q, p in base.terms.items():
            s = n - 2 + 2 * q
            terms[q] = terms.get(q, Polynomial.zero(n)) + p.partial(i)
            terms[q + 1] = terms.get(q + 1, Polynomial.zero(n)) + xi * p * (-s)
        gd = GammaDerivative(beta, terms)
    with _gd_lock:
        _gd_cache.setdefault(beta, gd)
    return _gd_cache[beta]


def d_gamma(beta: Sequence[int], fs: FundamentalSolution, x) -> np.ndarray | float:
    """Closed-form D^beta Gamma(x) for x != 0; vectorised over leading axes."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fs.dim or len(beta) != fs.dim:
        raise ValueError("dimension mismatch")
    pts = x.reshape(-1, fs.dim)
    if np.any(np.einsum("ij,ij->i", pts, pts) == 0.0):
        raise ValueError("D^beta Gamma is singular at x = 0")
    vals = fs.c_n * gamma_derivative(beta).evaluate(pts)
    if x.ndim == 1:
        return float(vals[0])
    return vals.reshape(x.shape[:-1])


def kernel_gegenbauer_expansion(fs: FundamentalSolution, x, yhat, L: int, R: float = 1.0,
                                tol: float | None = None) -> float:
    """Partial sum c R^{2-n} sum_{l <= L} (|x|/R)^l C_l^{(n-2)/2}(xhat . yhat) of Gamma(x - R yhat)."""
    x = np.asarray(x, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    n = fs.dim
    r = float(np.linalg.norm(x))
    if r >= R:
        raise ValueError("expansion needs |x| < R")
    a = r / R
    t = float(x @ yhat) / (r * np.linalg.norm(yhat)) if r > 0 else 0.0
    if tol is not None and a > 0:
        tail = a ** (L + 1) / (1 - a)
        if tail > tol:
            warnings.warn(f"Gegenbauer tail bound {tail:.2e} exceeds tol {tol:.1e}; "
                          f"|x|/R = {a:.3f} converges slowly", RuntimeWarning, stacklevel=2)
    lam = (n - 2) / 2
    s = float(kernels.gegenbauer_series(int(L), lam, np.array([t]), np.array([a]))[0])
    return fs.c_n * R ** (2 - n) * s
