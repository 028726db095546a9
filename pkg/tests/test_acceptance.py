"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary.  Run ``python tests/test_acceptance.py`` to get
the lines without pytest.
"""

import time
from functools import lru_cache

import pytest

from respoisson.cli import load_preset
from respoisson.solver import SolveConfig, SystemSpec, picard_solve
from respoisson.verify import run_suite


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def _worst(checks, prefix):
    sel = [c for c in checks if c["name"].startswith(prefix)]
    assert sel, prefix
    return max(c["value"] for c in sel), all(c["pass"] for c in sel), len(sel)


@lru_cache(maxsize=None)
def _potential():
    return _timed(run_suite, "potential")


def _preset(name, **cfg_over):
    data = load_preset(name)
    sys = SystemSpec.from_json(data["system"])
    cfg = SolveConfig.from_json(dict(data["config"], **cfg_over))
    return sys, cfg


def test_criterion_01_moment_closed_form(record):
    rep, dt = _timed(run_suite, "appendixB")
    worst, ok, k = _worst(rep["checks"], "appendixB")
    ok = ok and k == 15 and dt < 30
    assert record(1, ok, f"RAW moment vs closed form, n=3,4,5 x 5 points: worst rel {worst:.1e} "
                         f"(< 1e-7), {dt:.1f}s")


def test_criterion_02_gegenbauer_norm(record):
    rep, dt = _timed(run_suite, "gegenbauer")
    worst, ok, k = _worst(rep["checks"], "gegenbauer norm")
    ok = ok and k == 21 and worst < 1e-9 and dt < 5
    assert record(2, ok, f"norm formula vs quadrature, l<=6, 3 rho values: worst rel {worst:.1e}, "
                         f"{dt:.1f}s")


def test_criterion_03_residue_fit(record):
    rep, dt = _timed(run_suite, "residue", n=3, deg=4)
    worst, ok, k = _worst(rep["checks"], "residue fit")
    ok = ok and k == 35 and worst < 1e-6 and dt < 120
    assert record(3, ok, f"degree-k fit of boundary integrals, {k} monomials: worst residual "
                         f"{worst:.1e}, {dt:.1f}s")


def test_criterion_04_vanishing_and_controls(record):
    (cor, dt1) = _timed(run_suite, "corollary")
    (ann, dt2) = _timed(run_suite, "annulus")
    checks = cor["checks"] + ann["checks"]
    vanish = [c for c in checks if "control" not in c["name"]]
    controls = [c for c in checks if "control" in c["name"]]
    v = max(c["value"] for c in vanish)
    cmin = min(c["value"] for c in controls)
    ok = v < 1e-6 and cmin > 1e-3 and all(c["pass"] for c in checks) and dt1 + dt2 < 120
    assert record(4, ok, f"vanishing worst {v:.1e} (< 1e-6); {len(controls)} controls, "
                         f"smallest {cmin:.1e} (> 1e-3), {dt1 + dt2:.1f}s")


def test_criterion_05_poisson_oracle(record):
    rep, dt = _potential()
    worst, ok, k = _worst(rep["checks"], "Poisson oracle")
    sign = next(c for c in rep["checks"] if c["name"] == "sign calibration Poisson residual")
    printed = next(c for c in rep["checks"] if c["name"].startswith("sign -delta_ij"))
    ok = ok and k == 4 and sign["pass"]
    assert record(5, ok, f"Delta N(f) = f, 4 fields x 10 points: worst rel {worst:.1e}; "
                         f"calibrated correction sign residual {sign['value']:.0e}, "
                         f"opposite sign {printed['value']:.2f}; suite {dt:.1f}s")


def test_criterion_06_dn_dnf(record):
    rep, dt = _potential()
    dnf, ok1, _ = _worst(rep["checks"], "DNF")
    dn, ok2, _ = _worst(rep["checks"], "DN ")
    nest, ok3, _ = _worst(rep["checks"], "nesting independence")
    ok = ok1 and ok2 and ok3 and dt < 180
    assert record(6, ok, f"|beta|=3,4 vs Richardson FD: DNF {dnf:.1e}, DN {dn:.1e} (< 1e-3); "
                         f"nesting spread {nest:.1e} (< 1e-5)")


def test_criterion_07_pv_radius_independence(record):
    rep, _ = _potential()
    worst, ok, k = _worst(rep["checks"], "pv R-independence")
    assert record(7, ok and k == 4, f"compact bump, R vs 1.5R, |beta|=2,3: worst diff {worst:.1e} "
                                    f"(< 1e-6)")


def test_criterion_08_sphere_and_arc_inequalities(record):
    rep, dt = _timed(run_suite, "lemmas")
    checks = {c["name"]: c for c in rep["checks"]}
    held = checks["sphere bound: constant fitted on r <= 0.99 bounds all r up to 1 - 1e-6"]
    rand = checks["arc bound: (2/(1-alpha)) |z-z'|^(1-alpha), random pairs"]
    near = checks["arc bound: exponent 1-alpha, pairs near the circle"]
    # one constant for the geodesic-arc bound, fitted on random pairs,
    # then applied to pairs approaching the unit circle
    C41 = max(rand["value"], 1.0)
    over = max(near["ratios"]) / C41
    ok9 = bool(held["pass"])
    ok41 = over <= 1.0
    ok = bool(ok9 and ok41 and dt < 60)
    assert record(8, ok, f"sphere bound held-out/fitted {held['value']:.3f}; geodesic bound with "
                         f"fitted C={C41:.2f} exceeded by {over:.0f}x near the circle "
                         f"(ratios {', '.join(f'{r:.3g}' for r in near['ratios'])})")


def test_criterion_09_laplace_usq(record):
    t0 = time.perf_counter()
    sys, cfg = _preset("laplace_usq")
    u, rep = picard_solve(sys, cfg)
    _, cfg2 = _preset("laplace_usq", h=[{"b": 0.1, "beta": [1, 0, 1]}])
    u2, rep2 = picard_solve(sys, cfg2)
    dt = time.perf_counter() - t0
    low = max(abs(v) for k, v in rep.jets_fd[0].items() if sum(map(int, k.split(","))) <= 1)
    d110 = rep.jets[0]["1,1,0"]
    sep = (u - u2).sup()
    ok = (rep.converged and rep.iterations <= 40 and rep.residual < 1e-2
          and low < 1e-5 * rep.sup_norm and abs(d110 - 0.1) < 1e-4 and rep2.converged
          and sep > 10 * cfg.tol and dt < 300)
    assert record(9, ok, f"Delta u = u^2: {rep.iterations} iterations, residual {rep.residual:.1e}, "
                         f"order<=1 jets {low:.1e}, D^(1,1,0)u(0) = {d110:.6f}, "
                         f"beta_h separation {sep:.1e}, {dt:.1f}s")


def test_criterion_10_biharmonic(record):
    t0 = time.perf_counter()
    sys, cfg = _preset("biharmonic_abs")
    u, rep = picard_solve(sys, cfg)
    dt = time.perf_counter() - t0
    low = max(abs(v) for k, v in rep.jets_fd[0].items() if sum(map(int, k.split(","))) <= 3)
    ok = rep.converged and rep.residual < 5e-2 and low < 1e-5 * rep.sup_norm and dt < 600
    assert record(10, ok, f"Delta^2 u = |u|^2.5: {rep.iterations} iterations, residual "
                          f"{rep.residual:.1e}, order<=3 jets {low:.1e}, {dt:.1f}s")


def test_criterion_11_initial_value_round_trip(record):
    t0 = time.perf_counter()
    jets = {"0,0,0": 0.3, "1,0,0": 0.2, "0,0,1": -0.1}
    sys, cfg = _preset("laplace_usq", jets=jets)
    u, rep = picard_solve(sys, cfg)
    dt = time.perf_counter() - t0
    err = 0.0
    for key, val in rep.jets_fd[0].items():
        err = max(err, abs(val - jets.get(key, 0.0)))
    ok = rep.converged and err < 1e-5 and dt < 300
    assert record(11, ok, f"prescribed order<=1 jets recovered by FD after the shift: max error "
                          f"{err:.1e}, {rep.iterations} iterations, {dt:.1f}s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
