import numpy as np
import pytest

from respoisson import _kernels_py
from respoisson.specfun import gamma_derivative

ck = pytest.importorskip("respoisson._ckernels")


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def test_poly_eval_parity(rng):
    pts = rng.uniform(-1, 1, (700, 3))
    exps = rng.integers(0, 4, (30, 3))
    c = rng.standard_normal(30)
    assert np.allclose(ck.poly_eval(pts, exps, c), _kernels_py.poly_eval(pts, exps, c), rtol=1e-13)


def test_radial_parity(rng):
    pts = rng.uniform(-1, 1, (700, 3))
    g = gamma_derivative((2, 1, 0))
    a = ck.radial_poly_eval(pts, g._exps, g._coeffs, g._rpow)
    b = _kernels_py.radial_poly_eval(pts, g._exps, g._coeffs, g._rpow)
    assert np.allclose(a, b, rtol=1e-12)


def test_gegenbauer_parity(rng):
    t = rng.uniform(-1, 1, 200)
    a = rng.uniform(0, 0.9, 200)
    assert np.allclose(ck.gegenbauer_table(8, 1.5, t), _kernels_py.gegenbauer_table(8, 1.5, t))
    assert np.allclose(ck.gegenbauer_series(15, 0.5, t, a), _kernels_py.gegenbauer_series(15, 0.5, t, a))


def test_empty_inputs():
    z = np.zeros((0, 3))
    assert ck.poly_eval(z, np.zeros((1, 3), int), np.ones(1)).shape == (0,)


def test_pure_python_switch():
    import subprocess
    import sys
    code = "from respoisson import BACKEND; print(BACKEND)"
    env = {"RESPOISSON_PURE_PYTHON": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
