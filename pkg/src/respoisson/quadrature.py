"""Quadrature on spheres, balls, annuli and star-shaped regions around a point.

Sphere rules are tensor products over the hyperspherical angles.  Each polar
angle gets Gauss-Jacobi nodes in t = cos(theta) (the weight (1 - t^2)^{(k-1)/2}
absorbs the sin^k Jacobian), the azimuth gets the trapezoid rule.  A level-L
rule integrates spherical polynomials of degree <= 2L + 1 exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi, roots_legendre

SUPPORTED_DIMS = (3, 4, 5)


class QuadratureConvergenceError(RuntimeError):
    """Two successive refinement levels disagree by more than the tolerance."""


@dataclass(frozen=True)
class QuadratureRule:
    domain: str
    params: dict
    nodes: np.ndarray
    weights: np.ndarray
    level: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(self.weights @ np.asarray(f(self.nodes), dtype=float))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{i + 1}" for i in range(self.dim)] + ["weight"])
            for y, wt in zip(self.nodes, self.weights):
                w.writerow([repr(float(v)) for v in y] + [repr(float(wt))])


def _check_dim(n: int) -> None:
    if n not in SUPPORTED_DIMS:
        raise ValueError(f"quadrature supports n in {SUPPORTED_DIMS}, got {n}")


@lru_cache(maxsize=None)
def _polar_gauss(m: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """m-point rule for int_0^pi g(cos th) sin^k th dth, nodes returned as t = cos th."""
    a = (k - 1) / 2.0
    t, w = roots_jacobi(m, a, a)
    return t, w


@lru_cache(maxsize=None)
def _polar_graded(m: int, k: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    # geometric panels in theta toward the pole theta = 0
    edges = [0.0] + [math.pi * 0.5 ** j for j in range(depth, 0, -1)] + [math.pi]
    g, gw = roots_legendre(m)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        th = 0.5 * (b - a) * g + 0.5 * (b + a)
        ts.append(np.cos(th))
        ws.append(0.5 * (b - a) * gw * np.sin(th) ** k)
    return np.concatenate(ts), np.concatenate(ws)


def _householder(axis: np.ndarray) -> np.ndarray:
    n = len(axis)
    a = axis / np.linalg.norm(axis)
    v = np.eye(n)[0] - a
    nv = v @ v
    if nv < 1e-28:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / nv


def unit_sphere_points(n: int, level: int, axis=None, level_rest: int | None = None,
                       grade_depth: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on S^{n-1}; first polar angle measured from ``axis``."""
    _check_dim(n)
    if level < 0:
        raise ValueError("level must be >= 0")
    lr = level if level_rest is None else level_rest
    # 1-D rules for the polar angles: sin exponents n-2, n-3, ..., 1
    polar = []
    for i in range(n - 2):
        k = n - 2 - i
        lev = level if i == 0 else lr
        if i == 0 and grade_depth > 0:
            polar.append(_polar_graded(lev + 1, k, grade_depth))
        else:
            polar.append(_polar_gauss(lev + 1, k))
    n_az = 2 * lr + 2
    phi = 2 * math.pi * np.arange(n_az) / n_az
    az_w = np.full(n_az, 2 * math.pi / n_az)

    grids = [p[0] for p in polar] + [phi]
    wgrids = [p[1] for p in polar] + [az_w]
    mesh = np.meshgrid(*grids, indexing="ij")
    wmesh = np.meshgrid(*wgrids, indexing="ij")
    ts = [m.ravel() for m in mesh[:-1]]
    ph = mesh[-1].ravel()
    w = np.prod([m.ravel() for m in wmesh], axis=0)

    pts = np.empty((len(w), n))
    s = np.ones(len(w))
    for i, t in enumerate(ts):
        pts[:, i] = s * t
        s = s * np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    pts[:, n - 2] = s * np.cos(ph)
    pts[:, n - 1] = s * np.sin(ph)
    if axis is not None:
        pts = pts @ _householder(np.asarray(axis, dtype=float)).T
    return pts, w


def sphere_rule(n: int, R: float, level: int, axis=None, level_rest: int | None = None,
                grade_depth: int = 0) -> QuadratureRule:
    """Rule for surface integrals over the sphere of radius R centred at 0."""
    if R <= 0:
        raise ValueError("R must be positive")
    pts, w = unit_sphere_points(n, level, axis, level_rest, grade_depth)
    return QuadratureRule("SPHERE", {"R": R}, R * pts, w * R ** (n - 1), level)


def ball_rule(n: int, R: float, level: int) -> QuadratureRule:
    """Radial Gauss-Jacobi (weight r^{n-1}) times the sphere rule."""
    _check_dim(n)
    if R <= 0:
        raise ValueError("R must be positive")
    s, sw = roots_jacobi(level + 1, 0.0, n - 1.0)
    r = 0.5 * R * (1.0 + s)
    rw = sw * (0.5 * R) ** n
    dirs, dw = unit_sphere_points(n, level)
    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, n)
    weights = (rw[:, None] * dw[None, :]).ravel()
    return QuadratureRule("BALL", {"R": R}, nodes, weights, level)


def _ray_exit(center: np.ndarray, dirs: np.ndarray, R: float) -> np.ndarray:
    # distance from center along each unit dir to the sphere |y| = R
    b = dirs @ center
    return -b + np.sqrt(b * b + R * R - center @ center)


def star_rule(n: int, R: float, center, level: int, r_min: float = 0.0,
              graded: bool = False, panel_points: int | None = None,
              ball_center=None) -> QuadratureRule:
    """Rule for the ball B_R(ball_center) (minus B_{r_min}(center)) in polar
    coordinates about ``center``.

    With ``graded`` the radial direction uses geometric panels (ratio 1/2,
    ``level`` of them) toward the centre, for integrands singular there.
    """
    _check_dim(n)
    c = np.asarray(center, dtype=float)
    b = np.zeros(n) if ball_center is None else np.asarray(ball_center, dtype=float)
    if np.linalg.norm(c - b) + r_min >= R:
        raise ValueError("B_{r_min}(center) must lie inside the ball")
    dirs, dw = unit_sphere_points(n, level)
    rho = _ray_exit(c - b, dirs, R)
    q = panel_points or max(6, level // 2 + 3)
    g, gw = roots_legendre(q)
    if graded:
        if r_min > 0:
            raise ValueError("graded rule integrates from the centre")
        fr = [0.0] + [0.5 ** j for j in range(level, 0, -1)] + [1.0]
    else:
        fr = [0.0, 1.0]
        g, gw = roots_legendre(level + 2)
    # radial fractions u in [0,1]: r = r_min + u (rho - r_min)
    us, uw = [], []
    for lo, hi in zip(fr[:-1], fr[1:]):
        us.append(0.5 * (hi - lo) * g + 0.5 * (hi + lo))
        uw.append(0.5 * (hi - lo) * gw)
    u = np.concatenate(us)
    w_u = np.concatenate(uw)
    span = rho - r_min
    r = r_min + u[None, :] * span[:, None]
    wts = dw[:, None] * w_u[None, :] * span[:, None] * r ** (n - 1)
    nodes = c[None, None, :] + r[:, :, None] * dirs[:, None, :]
    return QuadratureRule("STAR" if r_min == 0 else "ANNULUS",
                          {"R": R, "center": c.tolist(), "r_min": r_min, "ball_center": b.tolist()},
                          nodes.reshape(-1, n), wts.ravel(), level)


def annulus_rule(n: int, eps: float, R: float, z, level: int) -> QuadratureRule:
    """Rule for B_R minus the closed ball B_eps(z)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return star_rule(n, R, z, level, r_min=eps)


def singular_ball_integrate(f_reg: Callable[[np.ndarray], np.ndarray], s: float, x, R: float,
                            level: int, tol: float | None = None, return_error: bool = False):
    """int_{B_R} f_reg(y) |x - y|^{-s} dy with a rule graded toward x.

    If ``tol`` is given the level-1 result is also computed and a
    ``QuadratureConvergenceError`` raised when the two differ by more than tol.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if np.linalg.norm(x) >= R:
        raise ValueError("singular point must be inside the ball")

    def run(lev):
        rule = star_rule(n, R, x, lev, graded=True)
        d = np.linalg.norm(rule.nodes - x, axis=1)
        vals = np.asarray(f_reg(rule.nodes), dtype=float)
        if s:
            vals = vals * d ** (-float(s))
        return float(rule.weights @ vals)

    val = run(level)
    if tol is None and not return_error:
        return val
    err = abs(val - run(max(level - 1, 1)))
    if tol is not None and err > tol:
        raise QuadratureConvergenceError(
            f"singular integral not converged at level {level}: successive diff {err:.3e} > {tol:.1e}")
    return (val, err) if return_error else val


def sphere_monomial_moment(gamma) -> float:
    """Exact int_{S^{n-1}} y^gamma dsigma (zero unless every exponent is even)."""
    if any(g % 2 for g in gamma):
        return 0.0
    n = len(gamma)
    num = 2.0 * math.prod(math.gamma((g + 1) / 2) for g in gamma)
    return num / math.gamma((sum(gamma) + n) / 2)


# -- the two scalar inequality checks ---------------------------------------

def sphere_distance_integral(alpha: float, r: float, level: int = 24, depth: int | None = None) -> float:
    """int over the unit sphere in R^3 of |x - y|^{alpha - 3}, |x| = r, by graded quadrature."""
    if not 0 < r < 1:
        raise ValueError("need 0 < r < 1")
    if depth is None:
        depth = max(4, int(math.ceil(-math.log2(1 - r))) + 4)
    x = np.array([r, 0.0, 0.0])
    rule = sphere_rule(3, 1.0, level, axis=x, level_rest=2, grade_depth=depth)
    d = np.linalg.norm(rule.nodes - x, axis=1)
    return float(rule.weights @ d ** (alpha - 3.0))


def sphere_distance_closed_form(alpha: float, r: float) -> float:
    return 2 * math.pi * ((1 - r) ** (alpha - 1) - (1 + r) ** (alpha - 1)) / (r * (1 - alpha))


def geodesic_arc(z: complex, z2: complex):
    """Hyperbolic geodesic in the unit disk from z to z2 as (w(t), |w'(t)|) on t in [0, 1].

    The geodesic lies on the circle through z, z2 orthogonal to the unit
    circle; collinear-with-origin pairs use the straight segment.
    """
    z, z2 = complex(z), complex(z2)
    cross = z.real * z2.imag - z.imag * z2.real
    if abs(cross) < 1e-12 * max(abs(z), abs(z2), 1e-300) ** 2 or abs(z) < 1e-14 or abs(z2) < 1e-14:
        d = z2 - z
        return (lambda t: z + t * d), (lambda t: abs(d) + 0 * t)
    zi = 1.0 / z.conjugate()
    c = _circumcenter(z, z2, zi)
    rad = abs(z - c)
    a1 = np.angle(z - c)
    da = np.angle((z2 - c) / (z - c))  # shorter arc, in (-pi, pi]
    return (lambda t: c + rad * np.exp(1j * (a1 + t * da))), (lambda t: rad * abs(da) + 0 * t)


def _circumcenter(a: complex, b: complex, c: complex) -> complex:
    ax, ay, bx, by, cx, cy = a.real, a.imag, b.real, b.imag, c.real, c.imag
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay)
          + (cx * cx + cy * cy) * (ay - by)) / d
    uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx)
          + (cx * cx + cy * cy) * (bx - ax)) / d
    return complex(ux, uy)


def geodesic_arc_integral(z: complex, z2: complex, alpha: float) -> float:
    """int along the geodesic arc of (1 - |w|^2)^{alpha - 1} |dw|."""
    w, speed = geodesic_arc(z, z2)

    def g(t):
        return (1.0 - abs(w(t)) ** 2) ** (alpha - 1.0) * speed(t)

    val, _ = integrate.quad(g, 0.0, 1.0, limit=200, epsabs=0.0, epsrel=1e-10)
    return float(val)

