"""Sparse multivariate polynomials, the Laplacian, and the harmonic decomposition
f = sum_i |x|^{2i} P_{k-2i} of a homogeneous polynomial.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._backend import kernels
from .multiindex import MIN_DIM, multi_indices

DROP_TOL = 1e-14


class Polynomial:
    """Sparse polynomial in ``dim`` variables: exponent tuple -> coefficient.

    Coefficients with magnitude below ``DROP_TOL`` are not stored.  Exact
    ``Fraction``/``int`` coefficients are kept as-is (no tolerance), which is
    what the rational Laplacian backend relies on.
    """

    __slots__ = ("dim", "terms", "_arrays")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], float] | None = None):
        if dim < MIN_DIM:
            raise ValueError(f"polynomials need dim >= {MIN_DIM}")
        self.dim = int(dim)
        clean = {}
        for k, c in (terms or {}).items():
            key = tuple(int(e) for e in k)
            if len(key) != dim or any(e < 0 for e in key):
                raise ValueError(f"bad exponent {key} for dim {dim}")
            clean[key] = clean.get(key, 0) + c
        self.terms = {k: c for k, c in clean.items() if not _negligible(c)}
        self._arrays = None

    # construction helpers
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, c: float) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def monomial(cls, beta: Sequence[int], c: float = 1.0) -> "Polynomial":
        return cls(len(beta), {tuple(beta): c})

    @classmethod
    def variable(cls, dim: int, i: int) -> "Polynomial":
        e = [0] * dim
        e[i] = 1
        return cls(dim, {tuple(e): 1.0})

    @classmethod
    def radial(cls, dim: int, i: int) -> "Polynomial":
        """|x|^{2i}."""
        r2 = cls(dim, {tuple(2 if d == j else 0 for d in range(dim)): 1 for j in range(dim)})
        return r2 ** i

    # structure
    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self) -> bool:
        degs = {sum(k) for k in self.terms}
        return len(degs) <= 1

    def homogeneous_part(self, k: int) -> "Polynomial":
        return Polynomial(self.dim, {e: c for e, c in self.terms.items() if sum(e) == k})

    def truncate(self, max_degree: int) -> "Polynomial":
        return Polynomial(self.dim, {e: c for e, c in self.terms.items() if sum(e) <= max_degree})

    def coeff(self, beta: Sequence[int]) -> float:
        return self.terms.get(tuple(beta), 0.0)

    def coeff_norm(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        return Polynomial.constant(self.dim, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Polynomial(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.dim, {k: c * other for k, c in self.terms.items()})
        other = self._coerce(other)
        out: dict = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + c1 * c2
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __pow__(self, p: int):
        if not isinstance(p, int) or p < 0:
            raise ValueError("only non-negative integer powers")
        out = Polynomial.constant(self.dim, 1)
        base = self
        while p:
            if p & 1:
                out = out * base
            base = base * base
            p >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def allclose(self, other: "Polynomial", tol: float = 1e-10) -> bool:
        return (self - other).coeff_norm() <= tol

    # calculus
    def derivative(self, beta: Sequence[int]) -> "Polynomial":
        """D^beta applied termwise."""
        out = {}
        for e, c in self.terms.items():
            if any(b > a for a, b in zip(e, beta)):
                continue
            f = 1
            for a, b in zip(e, beta):
                f *= math.perm(a, b)
            out[tuple(a - b for a, b in zip(e, beta))] = c * f
        return Polynomial(self.dim, out)

    def partial(self, i: int) -> "Polynomial":
        return self.derivative(tuple(1 if d == i else 0 for d in range(self.dim)))

    def shift(self, x0: Sequence[float]) -> "Polynomial":
        """q(y) = p(y + x0), expanded as a polynomial in y."""
        out = Polynomial.constant(self.dim, 0.0)
        lin = [Polynomial.variable(self.dim, i) + float(x0[i]) for i in range(self.dim)]
        cache = {}
        for e, c in self.terms.items():
            term = Polynomial.constant(self.dim, c)
            for i, a in enumerate(e):
                if a:
                    if (i, a) not in cache:
                        cache[(i, a)] = lin[i] ** a
                    term = term * cache[(i, a)]
            out = out + term
        return out

    # evaluation
    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self._arrays is None:
            if self.terms:
                exps = np.array(list(self.terms), dtype=np.int64)
                vals = np.array([float(c) for c in self.terms.values()])
            else:
                exps = np.zeros((0, self.dim), dtype=np.int64)
                vals = np.zeros(0)
            self._arrays = (exps, vals)
        return self._arrays

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"expected points of dimension {self.dim}")
        exps, vals = self.arrays()
        out = kernels.poly_eval(x.reshape(-1, self.dim), exps, vals)
        if x.ndim == 1:
            return float(out[0])
        return out.reshape(x.shape[:-1])

    # serialization
    def to_json(self) -> dict:
        items = sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))
        return {"dim": self.dim, "terms": [{"idx": list(k), "c": float(c)} for k, c in items]}

    @classmethod
    def from_json(cls, data: dict | str) -> "Polynomial":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["dim"]), {tuple(t["idx"]): float(t["c"]) for t in data["terms"]})

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), kv[0])):
            mono = "*".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(e) if a)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def _negligible(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return abs(c) < DROP_TOL


def laplacian(p: Polynomial) -> Polynomial:
    """Exact coefficient-level sum of pure second derivatives."""
    out: dict = {}
    for e, c in p.terms.items():
        for i, a in enumerate(e):
            if a >= 2:
                k = list(e)
                k[i] -= 2
                k = tuple(k)
                out[k] = out.get(k, 0) + c * a * (a - 1)
    return Polynomial(p.dim, out)


def laplacian_power(p: Polynomial, m: int) -> Polynomial:
    for _ in range(m):
        p = laplacian(p)
    return p


def to_rational(p: Polynomial) -> Polynomial:
    """Copy with Fraction coefficients (exact for float inputs too)."""
    return Polynomial(p.dim, {k: Fraction(c) for k, c in p.terms.items()})


def is_m_harmonic(p: Polynomial, m: int, exact: bool | None = None) -> bool:
    """True iff Delta^m p vanishes (all coefficients below 1e-12).

    Integer/Fraction-coefficient inputs use exact rational arithmetic by default.
    """
    if m < 1:
        raise ValueError("m >= 1 required")
    if exact is None:
        exact = all(isinstance(c, (int, Fraction)) or float(c).is_integer() for c in p.terms.values())
    q = to_rational(p) if exact else p
    r = laplacian_power(q, m)
    if exact:
        return all(c == 0 for c in r.terms.values())
    return r.coeff_norm() < 1e-12


@dataclass(frozen=True)
class HarmonicDecomposition:
    """f = sum_i |x|^{2i} P_{k-2i} with each P_j harmonic, homogeneous of degree j."""

    dim: int
    degree: int
    components: tuple[tuple[int, Polynomial], ...]

    def recombine(self) -> Polynomial:
        out = Polynomial.zero(self.dim)
        for i, P in self.components:
            out = out + Polynomial.radial(self.dim, i) * P
        return out

    def component(self, i: int) -> Polynomial:
        for j, P in self.components:
            if j == i:
                return P
        return Polynomial.zero(self.dim)


@lru_cache(maxsize=None)
def _decomposition_operator(n: int, k: int):
    """Pseudo-inverse mapping degree-k coefficients to the stacked P_{k-2i} coefficients.

    Unknowns: every coefficient of every P_{k-2i}.  Equations: coefficient
    matching of sum |x|^{2i} P_{k-2i} against f, plus Delta P_{k-2i} = 0.
    """
    target = multi_indices(n, k)
    tindex = {b: r for r, b in enumerate(target)}
    blocks = []  # (i, basis list)
    for i in range(k // 2 + 1):
        blocks.append((i, multi_indices(n, k - 2 * i)))
    ncols = sum(len(b) for _, b in blocks)
    harm_rows = sum(len(multi_indices(n, k - 2 * i - 2)) for i, _ in blocks if k - 2 * i >= 2)
    A = np.zeros((len(target) + harm_rows, ncols))
    col = 0
    row0 = len(target)
    for i, basis in blocks:
        r2i = Polynomial.radial(n, i)
        lap_rows = {b: r for r, b in enumerate(multi_indices(n, k - 2 * i - 2))} if k - 2 * i >= 2 else {}
        for b in basis:
            mono = Polynomial.monomial(b)
            for e, c in (r2i * mono).terms.items():
                A[tindex[e], col] += c
            for e, c in laplacian(mono).terms.items():
                A[row0 + lap_rows[e], col] += c
            col += 1
        row0 += len(lap_rows)
    pinv = np.linalg.pinv(A)
    return target, blocks, pinv


def harmonic_decompose(p: Polynomial) -> HarmonicDecomposition:
    """Split a homogeneous polynomial into |x|^{2i} times harmonic pieces.

    Raises
    ------
    ValueError
        If ``p`` is not homogeneous.
    """
    if not p.is_homogeneous():
        raise ValueError("harmonic_decompose needs a homogeneous polynomial")
    n = p.dim
    k = max(p.degree, 0)
    target, blocks, pinv = _decomposition_operator(n, k)
    rhs = np.zeros(pinv.shape[1])
    for r, b in enumerate(target):
        rhs[r] = float(p.coeff(b))
    sol = pinv @ rhs
    comps = []
    col = 0
    for i, basis in blocks:
        terms = {tuple(b): sol[col + c] for c, b in enumerate(basis)}
        col += len(basis)
        comps.append((i, Polynomial(n, terms)))
    return HarmonicDecomposition(n, k, tuple(comps))


def harmonic_expansion(p: Polynomial) -> list[tuple[int, int, Polynomial]]:
    """Decompose an arbitrary polynomial as a sum of |x|^{2i} H_j terms.

    Returns ``(i, j, H_j)`` triples, one per non-zero harmonic piece of every
    homogeneous part.
    """
    out = []
    for k in range(p.degree + 1):
        part = p.homogeneous_part(k)
        if part.is_zero():
            continue
        for i, P in harmonic_decompose(part).components:
            if not P.is_zero():
                out.append((i, k - 2 * i, P))
    return out


def m_harmonic_projection(p: Polynomial, m: int) -> Polynomial:
    """Drop the |x|^{2i} P pieces with i >= m, which are the only non-m-harmonic ones."""
    out = Polynomial.zero(p.dim)
    for i, j, P in harmonic_expansion(p):
        if i < m:
            out = out + Polynomial.radial(p.dim, i) * P
    return out


def sum_polys(polys: Iterable[Polynomial], dim: int) -> Polynomial:
    out: dict = {}
    for q in polys:
        for k, c in q.terms.items():
            out[k] = out.get(k, 0) + c
    return Polynomial(dim, out)
