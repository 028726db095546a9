"""Picard iteration for Delta^m u = a(x, u, grad u, ..., grad^{2m} u) on a ball.

Iterates are carried as polynomials of bounded degree.  One step samples
a(x, f, ...) at ball quadrature nodes, projects the samples in L^2(B_R) onto
polynomials of degree <= degree - 2m, applies the Newtonian potential m times in
closed form and removes the jet terms that the map theta truncates.  Since the
removed monomials are m-harmonic, Delta^m theta(f) equals the projected right
hand side exactly.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtri, roots_jacobi

from .multiindex import as_multiindex, lambda_set, multi_indices_upto
from .polys import Polynomial, is_m_harmonic
from .potential import PolynomialField, fd_derivative, fd_step, holder_norms, newtonian_polynomial
from .quadrature import unit_sphere_points
from .rhs_dsl import (BinOp, Const, DSLDomainError, Expr, Pow, SymbolTable, Var, dependence_order,
                      evaluate, parse, parse_variable, partial, substitute,
                      to_string, variables)


class HypothesisError(ValueError):
    """A hypothesis of the existence theorem fails numerically at the origin."""

    def __init__(self, condition: str, value: float):
        super().__init__(f"hypothesis violated: {condition} (value {value:.3e})")
        self.condition = condition
        self.value = value


class ParameterSearchError(RuntimeError):
    def __init__(self, msg: str, history: list):
        super().__init__(msg)
        self.history = history


class SolverDivergenceError(RuntimeError):
    def __init__(self, msg: str, report: "SolutionReport"):
        super().__init__(msg)
        self.report = report


# -- system description -------------------------------------------------------

@dataclass
class SystemSpec:
    """Delta^m u = a(x, u, ..., grad^{2m} u) with ``rhs`` given as DSL strings."""

    n: int
    m: int
    N: int
    alpha: float
    rhs: list
    order: int | None = None
    autonomous: bool | None = None

    def __post_init__(self):
        if self.n < 3 or self.m < 1 or self.N < 1:
            raise ValueError("need n >= 3, m >= 1, N >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if len(self.rhs) != self.N:
            raise ValueError(f"expected {self.N} right-hand sides, got {len(self.rhs)}")
        table = SymbolTable(self.n, self.N, 2 * self.m)
        self.exprs: list[Expr] = [e if not isinstance(e, str) else parse(e, table)
                                  for e in self.rhs]
        self.rhs = [r if isinstance(r, str) else to_string(r) for r in self.rhs]
        d = max(dependence_order(e) for e in self.exprs)
        if self.order is not None and self.order != d:
            raise ValueError(f"declared dependence order {self.order} but rhs uses {d}")
        self.order = d
        auto = not any(v.startswith("x") for e in self.exprs for v in variables(e))
        if self.autonomous and not auto:
            raise ValueError("system declared autonomous but rhs references x")
        self.autonomous = auto

    @property
    def variables(self) -> list[str]:
        return sorted(set().union(*(variables(e) for e in self.exprs)))

    def group(self, name: str) -> int:
        """Index j of the slot p_j holding ``name`` (-1 for x)."""
        kind, _, beta = parse_variable(name)
        return -1 if kind == "x" else (0 if kind == "u" else sum(beta))

    def depends_on_top_order(self) -> bool:
        return self.order == 2 * self.m

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "N": self.N, "alpha": self.alpha, "rhs": list(self.rhs),
                "autonomous": self.autonomous}

    @classmethod
    def from_json(cls, data: dict | str) -> "SystemSpec":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n"]), int(data["m"]), int(data.get("N", 1)),
                   float(data.get("alpha", 0.5)), list(data["rhs"]),
                   data.get("order"), data.get("autonomous"))


def _parse_beta(key) -> tuple[int, ...]:
    if isinstance(key, str):
        return tuple(int(c) for c in key.replace(" ", "").split(","))
    return tuple(int(c) for c in key)


def _parse_jets(jets, N: int) -> list[dict]:
    """Normalize jets into one {beta: value} dict per component."""
    if jets is None:
        return [dict() for _ in range(N)]
    if isinstance(jets, Mapping):
        jets = [jets]
    if len(jets) != N:
        raise ValueError(f"jets must be given for all {N} components")
    return [{_parse_beta(k): float(v) for k, v in comp.items()} for comp in jets]


@dataclass
class SolveConfig:
    """Solver parameters.

    ``h`` holds one entry per component: a dict {"b", "beta"} for b x^beta, or
    a Polynomial.  ``degree`` bounds the polynomial carrier and ``grid`` is
    (radial node count, sphere level) of the sampling rule.
    """

    R: float
    gamma: float
    h: list
    jets: list | None = None
    max_iters: int = 40
    tol: float = 1e-10
    degree: int = 12
    grid: tuple = (24, 16)
    seed: int = 0

    def __post_init__(self):
        if self.R <= 0 or self.gamma <= 0:
            raise ValueError("R and gamma must be positive")
        self.grid = tuple(int(g) for g in self.grid)

    def h_polys(self, n: int) -> list[Polynomial]:
        out = []
        for comp in self.h:
            if isinstance(comp, Polynomial):
                out.append(comp)
            elif comp is None or comp == 0:
                out.append(Polynomial.zero(n))
            else:
                out.append(Polynomial.monomial(tuple(comp["beta"]), float(comp["b"])))
        return out

    def to_json(self) -> dict:
        h = [c.to_json() if isinstance(c, Polynomial) else c for c in self.h]
        jets = None
        if self.jets is not None:
            jets = [{",".join(map(str, k)): v for k, v in comp.items()}
                    for comp in _parse_jets(self.jets, len(self.h))]
        return {"R": self.R, "gamma": self.gamma, "h": h, "jets": jets,
                "max_iters": self.max_iters, "tol": self.tol, "degree": self.degree,
                "grid": list(self.grid), "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict | str) -> "SolveConfig":
        if isinstance(data, str):
            data = json.loads(data)
        h = []
        for comp in data["h"]:
            h.append(Polynomial.from_json(comp) if isinstance(comp, dict) and "terms" in comp else comp)
        # "level" is accepted as the carrier degree for older configs
        degree = data.get("degree", data.get("level", 12))
        return cls(float(data["R"]), float(data["gamma"]), h, data.get("jets"),
                   int(data.get("max_iters", 40)), float(data.get("tol", 1e-10)), int(degree),
                   tuple(data.get("grid", (24, 16))), int(data.get("seed", 0)))


# -- carrier -------------------------------------------------------------------

@lru_cache(maxsize=16)
def _grid_rule(n: int, R: float, radial: int, sphere_level: int):
    s, sw = roots_jacobi(radial, 0.0, n - 1.0)
    r = 0.5 * R * (1.0 + s)
    dirs, dw = unit_sphere_points(n, sphere_level)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    weights = (sw[:, None] * (0.5 * R) ** n * dw[None, :]).ravel()
    return nodes, weights


@lru_cache(maxsize=16)
def _projector(n: int, R: float, radial: int, sphere_level: int, degree: int):
    """Basis and pseudo-inverse of the weighted monomial design matrix."""
    nodes, w = _grid_rule(n, R, radial, sphere_level)
    basis = multi_indices_upto(n, degree)
    V = np.stack([np.prod((nodes / R) ** np.array(b), axis=1) for b in basis], axis=1)
    sw = np.sqrt(w)
    pinv = np.linalg.pinv(V * sw[:, None], rcond=1e-13) * sw[None, :]
    return basis, pinv


def project(values: np.ndarray, n: int, R: float, degree: int, grid: Sequence[int]) -> Polynomial:
    """L^2(B_R) projection of node samples onto polynomials of degree <= ``degree``."""
    radial, level = grid
    if radial < degree + 1 or level < degree:
        raise ValueError(f"grid {tuple(grid)} too coarse for degree {degree}")
    basis, pinv = _projector(n, float(R), radial, level, degree)
    coef = pinv @ values
    return Polynomial(n, {tuple(b): c / R ** sum(b) for b, c in zip(basis, coef)})


@dataclass
class GridField:
    """N polynomial components sampled on the nodes of a ball rule."""

    n: int
    R: float
    polys: list
    grid: tuple = (24, 16)

    @property
    def nodes(self) -> np.ndarray:
        return _grid_rule(self.n, float(self.R), *self.grid)[0]

    @property
    def values(self) -> np.ndarray:
        return self(self.nodes)

    @property
    def N(self) -> int:
        return len(self.polys)

    @classmethod
    def from_samples(cls, values: np.ndarray, n: int, R: float, degree: int,
                     grid=(24, 16)) -> "GridField":
        """Fit node samples (nodes x N) by projection; reproduces polynomials of degree <= ``degree``."""
        values = np.asarray(values, dtype=float).reshape(len(values), -1)
        polys = [project(values[:, i], n, R, degree, grid) for i in range(values.shape[1])]
        return cls(n, R, polys, tuple(grid))

    @classmethod
    def zeros(cls, n: int, R: float, N: int, grid=(24, 16)) -> "GridField":
        return cls(n, R, [Polynomial.zero(n) for _ in range(N)], tuple(grid))

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([p(pts) for p in self.polys], axis=1)

    def derivative(self, comp: int, beta, pts) -> np.ndarray:
        """D^beta of component ``comp`` (1-based)."""
        return self.polys[comp - 1].derivative(beta)(np.atleast_2d(np.asarray(pts, dtype=float)))

    def __add__(self, other: "GridField") -> "GridField":
        return GridField(self.n, self.R, [a + b for a, b in zip(self.polys, other.polys)], self.grid)

    def __sub__(self, other: "GridField") -> "GridField":
        return GridField(self.n, self.R, [a - b for a, b in zip(self.polys, other.polys)], self.grid)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.polys else 0.0

    def to_csv(self, path) -> None:
        x = self.nodes
        cols = [f"x{i + 1}" for i in range(self.n)] + [f"u{i + 1}" for i in range(self.N)]
        np.savetxt(path, np.hstack([x, self.values]), delimiter=",", header=",".join(cols),
                   comments="", fmt="%.17g")


# -- the map theta ---------------------------------------------------------------

def evaluate_rhs(sys: SystemSpec, f: GridField, pts) -> np.ndarray:
    """a(x, f, grad f, ...) at each row of ``pts``; returns (points, N)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    binds = {}
    for v in sys.variables:
        kind, i, beta = parse_variable(v)
        if kind == "x":
            binds[v] = pts[:, i - 1]
        elif kind == "u":
            binds[v] = f.polys[i - 1](pts)
        else:
            binds[v] = f.derivative(i, beta, pts)
    out = np.empty((len(pts), sys.N))
    for i, e in enumerate(sys.exprs):
        out[:, i] = np.broadcast_to(np.asarray(evaluate(e, binds), dtype=float), len(pts))
    return out


def _check_grid(f: GridField, cfg: SolveConfig) -> None:
    if tuple(f.grid) != tuple(cfg.grid) or f.R != cfg.R:
        raise ValueError("field and config disagree on R or grid")


def omega(l: int, f: GridField, sys: SystemSpec, cfg: SolveConfig) -> GridField:
    """N^l applied to the projected samples of a(., f, ..., grad^{2m} f)."""
    if not 1 <= l <= sys.m:
        raise ValueError(f"need 1 <= l <= m = {sys.m}")
    _check_grid(f, cfg)
    g = evaluate_rhs(sys, f, f.nodes)
    deg = cfg.degree - 2 * sys.m
    if deg < 0:
        raise ValueError("carrier degree must be at least 2m")
    polys = []
    for i in range(sys.N):
        p = project(g[:, i], sys.n, cfg.R, deg, cfg.grid)
        for _ in range(l):
            p = newtonian_polynomial(p, cfg.R)
        polys.append(p)
    return GridField(sys.n, cfg.R, polys, cfg.grid)


def truncate_jets(p: Polynomial, m: int) -> Polynomial:
    """Drop monomials of degree < 2m and the degree-2m monomials indexed by Lambda."""
    lam = {tuple(b) for b in lambda_set(p.dim, m)}
    return Polynomial(p.dim, {e: c for e, c in p.terms.items()
                              if sum(e) > 2 * m or (sum(e) == 2 * m and e not in lam)})


def theta(f: GridField, sys: SystemSpec, cfg: SolveConfig) -> GridField:
    w = omega(sys.m, f, sys, cfg)
    return GridField(sys.n, cfg.R, [truncate_jets(p, sys.m) for p in w.polys], cfg.grid)


# -- diagnostics -------------------------------------------------------------------

def _laplacian_stencil(n: int, m: int) -> dict:
    """Offsets (integer units of h) and weights of the m-fold 2n+1 point Laplacian (h = 1)."""
    base = {(0,) * n: -2.0 * n}
    for k in range(n):
        for s in (1, -1):
            e = [0] * n
            e[k] = s
            base[tuple(e)] = 1.0
    out = {(0,) * n: 1.0}
    for _ in range(m):
        nxt: dict = {}
        for a, wa in out.items():
            for b, wb in base.items():
                key = tuple(x + y for x, y in zip(a, b))
                nxt[key] = nxt.get(key, 0.0) + wa * wb
        out = nxt
    return out


def fd_polyharmonic(fun, pts: np.ndarray, m: int, h: float) -> np.ndarray:
    """Iterated finite-difference Laplacian Delta_h^m of a vectorised function."""
    pts = np.atleast_2d(pts)
    st = _laplacian_stencil(pts.shape[1], m)
    offs = np.array(list(st.keys()), dtype=float) * h
    wts = np.array(list(st.values()))
    shifted = (pts[:, None, :] + offs[None, :, :]).reshape(-1, pts.shape[1])
    vals = np.asarray(fun(shifted)).reshape(len(pts), len(wts), -1)
    return np.einsum("pkc,k->pc", vals, wts) / h ** (2 * m)


def interior_points(n: int, R: float, count: int = 64, seed: int = 0, frac: float = 0.6):
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((count, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * (frac * R * rng.uniform(0, 1, count) ** (1.0 / n))[:, None]


def pde_residual(u: GridField, sys: SystemSpec, points: np.ndarray) -> float:
    """max |Delta_h^m u - a(., u, ...)| / max |a| with step h = R/100."""
    lhs = fd_polyharmonic(u, points, sys.m, 1e-2 * u.R)
    rhs = evaluate_rhs(sys, u, points)
    scale = float(np.max(np.abs(rhs)))
    err = float(np.max(np.abs(lhs - rhs)))
    return err / scale if scale > 0 else err


def _key(beta) -> str:
    return ",".join(str(b) for b in beta)


def jet_table(u: GridField, order: int, fd: bool = False) -> list[dict]:
    """D^beta u_i(0) for |beta| <= order; finite differences when ``fd``."""
    zero = np.zeros((1, u.n))
    out = []
    for i, p in enumerate(u.polys):
        row = {}
        for beta in multi_indices_upto(u.n, order):
            if fd:
                h = fd_step(beta.order, u.R)
                row[_key(beta)] = float(fd_derivative(p, beta, zero, h)[0])
            else:
                row[_key(beta)] = p.coeff(beta) * beta.factorial
        out.append(row)
    return out


@dataclass
class SolutionReport:
    converged: bool
    iterations: int
    differences: list
    ratios: list
    residual: float
    jets: list
    jets_fd: list
    vanishing_order: list
    sup_norm: float
    delta: float | None = None
    eta: float | None = None
    wall_time: float = 0.0
    message: str = ""
    shifted_rhs: list | None = None

    def to_json(self, include_time: bool = True) -> dict:
        d = dict(self.__dict__)
        if not include_time:
            d.pop("wall_time")
        return d


def _vanishing_order(jets: list[dict], scale: float, thresh: float = 1e-5) -> list:
    out = []
    for row in jets:
        orders = [sum(_parse_beta(k)) for k, v in row.items() if abs(v) > thresh * max(scale, 1e-300)]
        out.append(min(orders) if orders else None)
    return out


def _check_h(hp: list[Polynomial], sys: SystemSpec, cfg: SolveConfig) -> float:
    norm = 0.0
    for p in hp:
        if p.is_zero():
            continue
        if not (p.is_homogeneous() and p.degree == 2 * sys.m):
            raise ValueError("each h component must be homogeneous of degree 2m")
        if not is_m_harmonic(p, sys.m):
            raise ValueError(f"h component {p!r} is not {sys.m}-harmonic")
        est = holder_norms(PolynomialField(p, cfg.R), sys.alpha, k=2 * sys.m, sample_count=400,
                           seed=cfg.seed)
        norm = max(norm, max(est.seminorms.values()))
    if norm >= cfg.gamma / 2:
        raise ValueError(f"||h|| = {norm:.3g} must be below gamma/2 = {cfg.gamma / 2:.3g}")
    return norm


def picard_solve(sys: SystemSpec, cfg: SolveConfig, estimate: bool = False):
    """Iterate f_{k+1} = h + theta(f_k) from f_0 = 0.

    With ``cfg.jets`` the system is first shifted by the Taylor polynomial of
    the prescribed jets, solved with zero jets and shifted back.

    Returns
    -------
    (GridField, SolutionReport)

    Raises
    ------
    SolverDivergenceError
        When the successive differences grow three steps in a row.
    """
    t0 = time.perf_counter()
    if len(cfg.h) != sys.N:
        raise ValueError(f"need one h entry per component ({sys.N})")
    hp = cfg.h_polys(sys.n)
    _check_h(hp, sys, cfg)
    work = sys
    shift = None
    if cfg.jets is not None:
        work = initial_value_shift(sys, cfg.jets)
        shift = taylor_polynomials(sys.n, _parse_jets(cfg.jets, sys.N))
    h = GridField(sys.n, cfg.R, hp, cfg.grid)
    f = GridField.zeros(sys.n, cfg.R, sys.N, cfg.grid)
    diffs: list[float] = []
    growth = 0
    converged = False
    message = "max_iters reached"
    for _ in range(cfg.max_iters):
        nxt = h + theta(f, work, cfg)
        d = (nxt - f).sup()
        growth = growth + 1 if diffs and d > diffs[-1] else 0
        diffs.append(d)
        f = nxt
        if d < cfg.tol:
            converged, message = True, "converged"
            break
        if growth >= 3:
            message = "diverged: differences grew three consecutive steps"
            break
    u = f if shift is None else GridField(sys.n, cfg.R, [a + b for a, b in zip(f.polys, shift)],
                                          cfg.grid)
    pts = interior_points(sys.n, cfg.R, seed=cfg.seed)
    jets = jet_table(u, 2 * sys.m)
    jets_fd = jet_table(u, 2 * sys.m - 1, fd=True)
    sup = u.sup()
    report = SolutionReport(
        converged=converged, iterations=len(diffs), differences=diffs,
        ratios=[b / a if a > 0 else 0.0 for a, b in zip(diffs, diffs[1:])],
        residual=pde_residual(u, sys, pts), jets=jets, jets_fd=jets_fd,
        vanishing_order=_vanishing_order(jets, sup), sup_norm=sup, message=message,
        shifted_rhs=list(work.rhs) if shift is not None else None)
    if estimate:
        est = estimate_contraction(work, cfg.R, cfg.gamma, seed=cfg.seed)
        report.delta, report.eta = est.delta, est.eta
    report.wall_time = time.perf_counter() - t0
    if message.startswith("diverged"):
        raise SolverDivergenceError(message, report)
    return u, report


# -- contraction estimates -----------------------------------------------------------

@dataclass
class ContractionEstimate:
    A: dict
    Q: dict
    L: dict
    delta: float
    eta: float
    R: float
    gamma: float
    C: float = 1.0
    formula: str = "general"
    samples: int = 0

    def to_json(self) -> dict:
        return {"A": {str(k): v for k, v in self.A.items()}, "Q": {str(k): v for k, v in self.Q.items()},
                "L": {str(k): v for k, v in self.L.items()}, "delta": self.delta, "eta": self.eta,
                "R": self.R, "gamma": self.gamma, "C": self.C, "formula": self.formula,
                "samples": self.samples}


def _gradients(sys: SystemSpec):
    """Per slot j: list over components of [(var, d a_i / d var)]."""
    slots: dict[int, list] = {j: [[] for _ in range(sys.N)] for j in range(-1, 2 * sys.m + 1)}
    for i, e in enumerate(sys.exprs):
        for v in variables(e):
            slots[sys.group(v)][i].append((v, partial(e, v)))
    return slots


def _sample_E(sys: SystemSpec, R: float, gamma: float, count: int, seed: int, C: float):
    """Row-wise uniform draws mapped into E; prefixes agree across counts."""
    names = sys.variables
    groups: dict[int, list[str]] = {}
    for v in names:
        groups.setdefault(sys.group(v), []).append(v)
    width = sum(len(vs) + 1 for vs in groups.values())
    U = np.random.default_rng(seed).random((count, width))
    binds, col = {}, 0
    for j, vs in sorted(groups.items()):
        rad = R if j == -1 else C * R ** (2 * sys.m - j) * gamma
        g = ndtri(np.clip(U[:, col:col + len(vs)], 1e-15, 1 - 1e-15))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rad * U[:, col + len(vs)] ** (1.0 / len(vs))
        for k, v in enumerate(vs):
            binds[v] = g[:, k] * r
        col += len(vs) + 1
    return binds


def _eval_all(exprs, binds, count):
    try:
        return [np.broadcast_to(np.asarray(evaluate(e, binds), dtype=float), count) for e in exprs]
    except DSLDomainError as exc:
        raise DSLDomainError(f"rhs not differentiable on E: {exc}") from None


def estimate_contraction(sys: SystemSpec, R: float, gamma: float, sample_count: int = 400,
                         seed: int = 0, C: float = 1.0) -> ContractionEstimate:
    """Sampled A_j, Q_j, L_j over E and the resulting delta(R, gamma), eta(R, gamma).

    The unspecified constant C is taken as ``C`` (default 1).  Holder quotients
    are running maxima over a fixed stream of sample pairs, so they never
    decrease as ``sample_count`` grows.
    """
    if R <= 0 or gamma <= 0:
        raise ValueError("R and gamma must be positive")
    m2 = 2 * sys.m
    alpha = sys.alpha
    slots = _gradients(sys)
    names = sys.variables
    P = _sample_E(sys, R, gamma, 2 * sample_count, seed, C)
    # pairs (k, k + sample_count) interleaved so that prefixes are stable
    idx_p = np.arange(0, 2 * sample_count, 2)
    idx_q = idx_p + 1
    bp = {v: P[v][idx_p] for v in names}
    bq = {v: P[v][idx_q] for v in names}
    if names:
        dist = np.sqrt(sum((bp[v] - bq[v]) ** 2 for v in names))
    else:
        dist = np.ones(sample_count)
    top = [[(v, d) for v, d in comp] for comp in slots[m2]]
    A, Q, L = {}, {}, {}
    for j in range(-1, m2 + 1):
        a_sup = q_sup = l_sup = 0.0
        for i in range(sys.N):
            grads = slots[j][i]
            if not grads:
                continue
            gp = np.stack(_eval_all([d for _, d in grads], bp, sample_count), axis=1)
            gq = np.stack(_eval_all([d for _, d in grads], bq, sample_count), axis=1)
            norm_p = np.linalg.norm(gp, axis=1)
            a_sup = max(a_sup, float(np.max(norm_p)), float(np.max(np.linalg.norm(gq, axis=1))))
            ok = dist > 1e-14
            if np.any(ok):
                quo = np.linalg.norm(gp - gq, axis=1)[ok] / dist[ok] ** alpha
                q_sup = max(q_sup, float(np.max(quo)))
            sec = [partial(d, w) for _, d in grads for w, _ in top[i]]
            if sec:
                hv = np.stack(_eval_all(sec, bp, sample_count), axis=1)
                l_sup = max(l_sup, float(np.max(np.linalg.norm(hv, axis=1))))
        A[j], Q[j], L[j] = a_sup, q_sup, l_sup
    fac = R ** alpha * (1 + R ** alpha * gamma ** alpha + gamma)
    delta = C * sum(R ** (m2 - j) * (A[j] + fac * Q[j] + gamma * L[j]) for j in range(0, m2 + 1))
    zero = {v: 0.0 for v in names}
    a0 = max(abs(float(v[0])) for v in _eval_all(sys.exprs, zero, 1)) if sys.exprs else 0.0
    eta = a0 + C * (R * (A[-1] + fac * Q[-1] + gamma * L[-1]) + gamma * delta)
    formula = "general" if sys.depends_on_top_order() else "top-order independent"
    return ContractionEstimate(A, Q, L, float(delta), float(eta), R, gamma, C, formula, sample_count)


class Mode(str, enum.Enum):
    SMALL_BALL = "SMALL_BALL"
    AUTONOMOUS = "AUTONOMOUS"


def check_hypotheses(sys: SystemSpec, mode: Mode, tau: float = 1e-8) -> None:
    """Raise HypothesisError naming the first violated condition at the origin."""
    mode = Mode(mode)
    names = sys.variables
    zero = {v: 0.0 for v in names}
    slots = _gradients(sys)

    def val(e):
        try:
            return float(np.asarray(evaluate(e, zero)))
        except DSLDomainError:
            raise HypothesisError(f"a is not differentiable at 0 ({to_string(e)})", math.nan) from None

    a0 = max(abs(val(e)) for e in sys.exprs)
    if mode is Mode.AUTONOMOUS:
        if not sys.autonomous:
            raise HypothesisError("a depends on x (autonomous mode)", 1.0)
        if a0 > tau:
            raise HypothesisError("a(0) != 0", a0)
        g = max((abs(val(d)) for comp in slots.values() for grads in comp for _, d in grads), default=0.0)
        if g > tau:
            raise HypothesisError("grad a(0) != 0", g)
        return
    if not sys.depends_on_top_order():
        return  # top-order independent: no condition at the origin
    if a0 > tau:
        raise HypothesisError("a(0) != 0", a0)
    t1 = max((abs(val(d)) for grads in slots[2 * sys.m] for _, d in grads), default=0.0)
    t2 = max((abs(val(partial(d, w))) for grads in slots[2 * sys.m] for _, d in grads
              for w, _ in grads), default=0.0)
    if t1 + t2 > tau:
        raise HypothesisError("|grad_{p_2m} a(0)| + |grad^2_{p_2m p_2m} a(0)| exceeds the threshold",
                              t1 + t2)


def select_parameters(sys: SystemSpec, mode: Mode = Mode.SMALL_BALL, R: float = 1.0,
                      gamma: float = 1.0, sample_count: int = 400, seed: int = 0,
                      max_halvings: int = 30, return_estimate: bool = False):
    """Halve R (SMALL_BALL) or gamma (AUTONOMOUS, R fixed) until delta <= 1/2 and eta < gamma/2.

    In SMALL_BALL mode gamma is also halved when a depends on grad^{2m} u,
    since the top-order slot of E does not shrink with R.
    """
    mode = Mode(mode)
    check_hypotheses(sys, mode)
    if mode is Mode.SMALL_BALL and not sys.depends_on_top_order():
        zero = {v: 0.0 for v in sys.variables}
        a0 = max(abs(float(np.asarray(evaluate(e, zero)))) for e in sys.exprs)
        gamma = max(gamma, 5.0 * a0)  # eta >= |a(0)| forces gamma > 2|a(0)|
    history = []
    for k in range(max_halvings + 1):
        est = estimate_contraction(sys, R, gamma, sample_count, seed)
        history.append({"R": R, "gamma": gamma, "delta": est.delta, "eta": est.eta})
        if est.delta <= 0.5 and est.eta < gamma / 2:
            return (R, gamma, est) if return_estimate else (R, gamma)
        if mode is Mode.AUTONOMOUS:
            gamma /= 2
        else:
            R /= 2
            if sys.depends_on_top_order():
                gamma /= 2
    raise ParameterSearchError(f"no admissible (R, gamma) after {max_halvings} halvings", history)


# -- initial-value shift -------------------------------------------------------------

def taylor_polynomials(n: int, jets: list[dict]) -> list[Polynomial]:
    """T_i = sum_beta c_beta / beta! x^beta for each component."""
    out = []
    for comp in jets:
        terms = {}
        for beta, c in comp.items():
            b = as_multiindex(beta)
            if len(b) != n:
                raise ValueError(f"jet index {beta} has the wrong dimension")
            terms[tuple(b)] = c / b.factorial
        out.append(Polynomial(n, terms))
    return out


def _monomial_expr(e: tuple, c: float) -> Expr:
    factors: list[Expr] = []
    for k, p in enumerate(e):
        if p == 1:
            factors.append(Var(f"x{k + 1}"))
        elif p > 1:
            factors.append(Pow(Var(f"x{k + 1}"), p))
    if not factors:
        return Const(c)
    out = factors[0]
    for fct in factors[1:]:
        out = BinOp("*", out, fct)
    return out if c == 1 else BinOp("*", Const(c), out)


def polynomial_expr(base: Expr, p: Polynomial) -> Expr:
    """base + p as a left-associated sum, lowest degree first."""
    out = base
    for e in sorted(p.terms, key=lambda t: (sum(t), tuple(-x for x in t))):
        c = float(p.terms[e])
        if c < 0:
            out = BinOp("-", out, _monomial_expr(e, -c))
        else:
            out = BinOp("+", out, _monomial_expr(e, c))
    return out


def initial_value_shift(sys: SystemSpec, jets) -> SystemSpec:
    """System for u~ = u - T_{2m-1}, where T carries the prescribed jets.

    The shifted system keeps the names u_i and d{i}_beta for the new unknown.
    """
    if sys.depends_on_top_order():
        raise ValueError("initial-value mode needs a independent of grad^{2m} u")
    comps = _parse_jets(jets, sys.N)
    for comp in comps:
        for beta in comp:
            if sum(beta) > 2 * sys.m - 1:
                raise ValueError(f"jet {beta} exceeds order 2m-1")
    T = taylor_polynomials(sys.n, comps)
    mapping = {}
    for v in sys.variables:
        kind, i, beta = parse_variable(v)
        if kind == "x":
            continue
        dT = T[i - 1] if beta is None else T[i - 1].derivative(beta)
        if not dT.is_zero():
            mapping[v] = polynomial_expr(Var(v), dT)
    rhs = [to_string(substitute(e, mapping)) for e in sys.exprs]
    return SystemSpec(sys.n, sys.m, sys.N, sys.alpha, rhs)


__all__ = ["SystemSpec", "SolveConfig", "GridField", "SolutionReport", "ContractionEstimate",
           "Mode", "HypothesisError", "ParameterSearchError", "SolverDivergenceError", "project",
           "evaluate_rhs", "omega", "theta", "truncate_jets", "picard_solve", "estimate_contraction",
           "check_hypotheses", "select_parameters", "initial_value_shift", "taylor_polynomials",
           "polynomial_expr", "fd_polyharmonic", "pde_residual", "jet_table", "interior_points"]
