"""Multi-index calculus: orders, factorials, nestings, duals, the Lambda set, jets.

A multi-index is stored as a tuple of non-negative ints whose length is the
ambient dimension ``n >= 3``.  Mixed-dimension arithmetic is rejected early.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._backend import kernels

MIN_DIM = 3
# enumeration and factorial helpers refuse orders above this; |beta|!/beta!
# nestings grow like 12!/1 ~ 4.8e8 which is already past practical use.
MAX_ORDER = 12


class MultiIndex(tuple):
    """Immutable n-tuple of non-negative integers."""

    __slots__ = ()

    def __new__(cls, entries: Iterable[int]):
        vals = tuple(int(e) for e in entries)
        if len(vals) < MIN_DIM:
            raise ValueError(f"multi-index needs dimension >= {MIN_DIM}, got {len(vals)}")
        if any(v < 0 for v in vals):
            raise ValueError(f"negative entry in multi-index {vals}")
        return super().__new__(cls, vals)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int) -> "MultiIndex":
        """Unit multi-index e_i, with ``i`` zero-based."""
        e = [0] * n
        e[i] = 1
        return cls(e)

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def order(self) -> int:
        return sum(self)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(b) for b in self)

    def _check(self, other: Sequence[int]) -> None:
        if len(other) != len(self):
            raise ValueError(f"dimension mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other):  # type: ignore[override]
        self._check(other)
        return MultiIndex(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        self._check(other)
        if any(b > a for a, b in zip(self, other)):
            raise ValueError(f"{tuple(other)} is not componentwise <= {tuple(self)}")
        return MultiIndex(a - b for a, b in zip(self, other))

    def le(self, other: Sequence[int]) -> bool:
        """Componentwise ``self <= other``."""
        self._check(other)
        return all(a <= b for a, b in zip(self, other))

    def lt(self, other: Sequence[int]) -> bool:
        """The strict order used for nestings: componentwise <= and smaller order."""
        return self.le(other) and self.order < sum(other)

    def is_all_even(self) -> bool:
        return all(b % 2 == 0 for b in self)

    def to_json(self) -> list[int]:
        return list(self)

    def __repr__(self) -> str:
        return f"MultiIndex({list(self)})"


def as_multiindex(beta: Sequence[int] | MultiIndex) -> MultiIndex:
    return beta if isinstance(beta, MultiIndex) else MultiIndex(beta)


def multi_indices(n: int, order: int) -> list[MultiIndex]:
    """All multi-indices of exact ``order`` in dimension ``n``, lexicographically descending."""
    out = []
    for combo in itertools.combinations_with_replacement(range(n), order):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(MultiIndex(e))
    out.sort(reverse=True)
    return out


def multi_indices_upto(n: int, order: int) -> list[MultiIndex]:
    return [b for k in range(order + 1) for b in multi_indices(n, k)]


@dataclass(frozen=True)
class Nesting:
    """Continuously increasing nesting beta^(1) < ... < beta^(k) = target."""

    steps: tuple[MultiIndex, ...]
    target: MultiIndex

    def __post_init__(self):
        for j, s in enumerate(self.steps, start=1):
            if s.order != j:
                raise ValueError(f"step {j} has order {s.order}")
            if not s.le(self.target):
                raise ValueError(f"step {tuple(s)} exceeds target {tuple(self.target)}")
        for a, b in zip(self.steps, self.steps[1:]):
            if not a.lt(b):
                raise ValueError(f"steps {tuple(a)} -> {tuple(b)} not increasing")

    def __len__(self) -> int:
        return len(self.steps)

    def step(self, j: int) -> MultiIndex:
        """beta^(j), one-based as in the formulas."""
        return self.steps[j - 1]

    def increment(self, j: int) -> int:
        """Zero-based axis i with beta^(j) - beta^(j-1) = e_i (j >= 2)."""
        d = self.steps[j - 1] - self.steps[j - 2]
        return d.index(1)

    def dual(self, j: int) -> MultiIndex:
        return dual(self.steps[j - 1], self.target)


def enumerate_nestings(beta: Sequence[int]) -> list[Nesting]:
    """Every nesting of length |beta| for beta, lexicographic on step coordinates.

    The count is the multinomial |beta|!/beta!.  A zero multi-index has none.
    """
    beta = as_multiindex(beta)
    k = beta.order
    if k == 0:
        return []
    if k > MAX_ORDER:
        raise ValueError(f"|beta| = {k} exceeds the supported cap {MAX_ORDER}")
    n = beta.dim
    out: list[Nesting] = []

    def walk(current: list[int], steps: list[MultiIndex]) -> None:
        if len(steps) == k:
            out.append(Nesting(tuple(steps), beta))
            return
        # larger axes first gives lexicographically smaller first steps last;
        # iterate axes in order so step tuples come out lexicographically descending
        for i in range(n):
            if current[i] < beta[i]:
                current[i] += 1
                walk(current, steps + [MultiIndex(current)])
                current[i] -= 1

    walk([0] * n, [])
    out.sort(key=lambda nest: [tuple(-c for c in s) for s in nest.steps])
    return out


def dual(gamma: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    """The multi-index gamma' with D^beta = D^gamma D^gamma', i.e. beta - gamma."""
    beta = as_multiindex(beta)
    gamma = as_multiindex(gamma)
    return beta - gamma


def lambda_set(n: int, m: int) -> list[MultiIndex]:
    """Order-2m multi-indices with at least one odd entry."""
    if n < MIN_DIM or m < 1:
        raise ValueError("need n >= 3 and m >= 1")
    if 2 * m > MAX_ORDER:
        raise ValueError(f"2m = {2 * m} exceeds the supported cap {MAX_ORDER}")
    return [b for b in multi_indices(n, 2 * m) if not b.is_all_even()]


@dataclass(frozen=True)
class Jet:
    """Order-k Taylor jet at ``base``; coeffs store D^mu f(base) / mu!."""

    base: tuple[float, ...]
    order: int
    coeffs: Mapping[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        for mu in self.coeffs:
            if len(mu) != len(self.base):
                raise ValueError("jet coefficient dimension does not match base point")
            if sum(mu) > self.order:
                raise ValueError(f"coefficient {tuple(mu)} above jet order {self.order}")

    @property
    def dim(self) -> int:
        return len(self.base)

    @classmethod
    def from_derivatives(cls, base, order: int, derivs: Mapping[Sequence[int], float]) -> "Jet":
        """Build from raw derivatives D^mu f(base) (dividing by mu! here)."""
        coeffs = {}
        for mu, v in derivs.items():
            mu = as_multiindex(mu)
            if mu.order <= order:
                coeffs[mu] = float(v) / mu.factorial
        return cls(tuple(float(b) for b in base), order, coeffs)

    def derivative(self, mu: Sequence[int]) -> float:
        """D^mu f(base) recovered from the stored coefficient."""
        mu = as_multiindex(mu)
        return self.coeffs.get(mu, 0.0) * mu.factorial

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        items = [(tuple(k), v) for k, v in self.coeffs.items() if v != 0.0]
        if not items:
            return np.zeros((0, self.dim), dtype=np.int64), np.zeros(0)
        exps = np.array([k for k, _ in items], dtype=np.int64)
        vals = np.array([v for _, v in items], dtype=float)
        return exps, vals

    def __call__(self, y) -> np.ndarray | float:
        return taylor_evaluate(self, y)


def taylor_evaluate(jet: Jet, y) -> np.ndarray | float:
    """Sum over |mu| <= k of coeffs[mu] * (y - base)^mu; vectorised over leading axes of y."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 1
    pts = np.atleast_2d(y).reshape(-1, jet.dim) - np.asarray(jet.base)
    exps, vals = jet.arrays()
    out = kernels.poly_eval(pts, exps, vals)
    if scalar:
        return float(out[0])
    return out.reshape(y.shape[:-1])


def nesting_count(beta: Sequence[int]) -> int:
    beta = as_multiindex(beta)
    return math.factorial(beta.order) // beta.factorial


def iter_le(beta: Sequence[int]) -> Iterator[MultiIndex]:
    """All gamma <= beta componentwise."""
    for g in itertools.product(*(range(b + 1) for b in beta)):
        yield MultiIndex(g)
