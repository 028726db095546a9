import numpy as np
import pytest

from respoisson.polys import Polynomial
from respoisson.solver import (GridField, HypothesisError, Mode, SolveConfig, SystemSpec,
                               check_hypotheses, estimate_contraction, initial_value_shift,
                               omega, picard_solve, select_parameters, theta, truncate_jets)

CFG = dict(R=0.5, gamma=0.5, h=[{"b": 0.1, "beta": [1, 1, 0]}], degree=8, grid=[12, 8], tol=1e-12)


def _sys(rhs, m=1, N=1):
    return SystemSpec(3, m, N, 0.5, rhs)


def test_theta_of_constant_rhs():
    sys, cfg = _sys(["1"]), SolveConfig.from_json(CFG)
    out = theta(GridField.zeros(3, cfg.R, 1, cfg.grid), sys, cfg)
    assert out.polys[0].allclose(Polynomial.radial(3, 1) / 6, 1e-10)


def test_omega_twice_matches_radial():
    sys, cfg = _sys(["1"], m=2), SolveConfig.from_json(dict(CFG, h=[{"b": 0.0, "beta": [2, 2, 0]}]))
    w = omega(2, GridField.zeros(3, cfg.R, 1, cfg.grid), sys, cfg).polys[0]
    r, R = 0.3, cfg.R
    from scipy.integrate import quad
    g = lambda s: s * s / 6 - R * R / 2  # noqa: E731
    ref = -quad(lambda s: g(s) * s * s, 0, r)[0] / r - quad(lambda s: g(s) * s, r, R)[0]
    assert abs(float(w(np.array([r, 0, 0]))) - ref) < 1e-10


def test_truncate_jets_drops_low_and_lambda():
    p = Polynomial(3, {(0, 0, 0): 1, (1, 0, 0): 1, (1, 1, 0): 1, (2, 0, 0): 1, (3, 0, 0): 1})
    assert truncate_jets(p, 1) == Polynomial(3, {(2, 0, 0): 1, (3, 0, 0): 1})


def test_linear_map_contracts():
    sys, cfg = _sys(["u1"]), SolveConfig.from_json(CFG)
    _, rep = picard_solve(sys, cfg, estimate=True)
    assert rep.converged
    assert max(rep.ratios) <= rep.delta


def test_h_validation():
    sys = _sys(["u1^2"])
    with pytest.raises(ValueError):
        picard_solve(sys, SolveConfig.from_json(dict(CFG, h=[{"b": 0.1, "beta": [2, 0, 0]}])))
    with pytest.raises(ValueError):
        picard_solve(sys, SolveConfig.from_json(dict(CFG, h=[{"b": 10.0, "beta": [1, 1, 0]}])))


def test_hypotheses():
    with pytest.raises(HypothesisError):
        check_hypotheses(_sys(["1 + u1"]), Mode.AUTONOMOUS)
    check_hypotheses(_sys(["u1^2"]), Mode.AUTONOMOUS)
    check_hypotheses(_sys(["1 + u1"]), Mode.SMALL_BALL)


def test_contraction_estimate_shrinks_with_gamma():
    sys = _sys(["u1^2"])
    d = [estimate_contraction(sys, 1.0, g, sample_count=200).delta for g in (0.2, 0.1, 0.05)]
    assert d[0] > d[1] > d[2]


def test_select_parameters_meets_targets():
    sys = _sys(["u1^2"])
    R, g = select_parameters(sys, Mode.SMALL_BALL, sample_count=200)
    est = estimate_contraction(sys, R, g, sample_count=200)
    assert est.delta <= 0.5 and est.eta < g / 2


def test_initial_value_shift_text():
    sh = initial_value_shift(_sys(["u1^2"]), {"0,0,0": 1.0, "1,0,0": 2.0})
    assert sh.rhs[0].replace(" ", "") == "(u1+1+2*x1)^2"
    with pytest.raises(ValueError):
        initial_value_shift(_sys(["u1^2"]), {"2,0,0": 1.0})


def test_json_round_trip():
    sys = _sys(["u1^2 + x1"])
    assert SystemSpec.from_json(sys.to_json()).rhs == sys.rhs
    cfg = SolveConfig.from_json(CFG)
    assert SolveConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()
