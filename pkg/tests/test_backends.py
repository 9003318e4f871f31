import importlib
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bnpricing import _pykernels, kernels
from bnpricing.mmm import MmmParams
from bnpricing.simulate import run_euler, uniform_grid

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(),
                                    reason="compiled extension not built")


def test_backend_selection():
    assert kernels.get_backend("python") is _pykernels
    assert kernels.get_backend(None) is kernels.active
    assert kernels.BACKEND == kernels.active.NAME
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_fallback():
    env = dict(os.environ, BNPRICING_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bnpricing import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@pytest.mark.skipif(os.environ.get("BNPRICING_PURE_PYTHON") == "1",
                    reason="fallback forced by environment")
def test_compiled_is_default():
    assert kernels.BACKEND == "cython"


@needs_compiled
@given(st.floats(0.0, 300.0), st.sampled_from([0.0, 0.5, 2.0, 4.0, 11.0]), st.floats(0.0, 400.0))
def test_psi_parity(x, delta, lam):
    c = kernels.get_backend("cython")
    args = (np.array([x]), np.array([delta]), np.array([lam]))
    assert c.ncx2_cdf(*args)[0] == pytest.approx(_pykernels.ncx2_cdf(*args)[0], abs=1e-14)


@needs_compiled
@given(st.floats(1e-3, 500.0), st.floats(0.0, 600.0))
def test_incomplete_gamma_parity(a, u):
    c = kernels.get_backend("cython")
    assert c.reg_gamma_p(a, u) == pytest.approx(_pykernels.reg_gamma_p(a, u), abs=1e-14)
    assert c.reg_gamma_q(a, u) == pytest.approx(_pykernels.reg_gamma_q(a, u), abs=1e-14)


@pytest.mark.parametrize("backend", ["python"] + (["cython"] if kernels.compiled_available() else []))
def test_subnormal_and_extreme_inputs(backend):
    kern = kernels.get_backend(backend)
    tiny = 5e-324
    cases = [(tiny, 9.0, 173.7), (1.0, 4.0, tiny), (tiny, 0.0, 2.0), (1.0, 0.0, tiny),
             (4.3e9, 4.0, 2.6e9), (1e-300, 4.0, 1e-300)]
    x, d, lam = (np.array(v) for v in zip(*cases))
    out = kern.ncx2_cdf(x, d, lam)
    assert np.all(np.isfinite(out)) and np.all((out >= 0) & (out <= 1))
    assert out[2] == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert out[3] == 1.0


@given(st.floats(0.0, 1e9), st.floats(1e-3, 1e9))
def test_log_poisson_pmf_against_lgamma(k, m):
    k = float(np.floor(k))
    ref = k * math.log(m) - m - math.lgamma(k + 1.0)
    scale = abs(k * math.log(m)) + m + abs(math.lgamma(k + 1.0))
    assert _pykernels.log_poisson_pmf(k, m) == pytest.approx(ref, abs=4e-16 * scale + 1e-12)


@needs_compiled
def test_euler_bit_identical_across_backends():
    params = MmmParams(lambda_bar=1.0)
    grid = uniform_grid(0.0, 2.0, 1 / 2520)
    idx = np.arange(0, grid.size, 252)
    a = run_euler(params, grid, 100.0, 37, 5, record_idx=idx, backend="cython")
    b = run_euler(params, grid, 100.0, 37, 5, record_idx=idx, backend="python")
    assert np.array_equal(a.levels, b.levels)
    assert np.array_equal(a.density.log_lambda, b.density.log_lambda)
    assert a.floor_hits == b.floor_hits


def test_python_chunking_does_not_change_paths():
    params = MmmParams(lambda_bar=1.0)
    grid = uniform_grid(0.0, 1.0, 1 / 252)
    from bnpricing.simulate import _euler_coefficients, substream
    c = _euler_coefficients(params, grid)
    idx = np.array([0, 100, 252], dtype=np.int64)

    def go(chunk, block):
        bgs = [substream(3, 1, p) for p in range(9)]
        return _pykernels.euler_sqrt_paths(10.0, c["dt"], c["sqdt"], c["vol"], c["c3"],
                                           c["sig_coef"], c["half_drift"], bgs, idx, 1e-8,
                                           path_chunk=chunk, time_block=block)

    ref = go(1024, 2048)
    for chunk, block in ((1, 7), (4, 100), (9, 1)):
        got = go(chunk, block)
        assert all(np.array_equal(u, v) for u, v in zip(ref, got))


def test_reload_is_idempotent():
    mod = importlib.reload(kernels)
    assert mod.active.NAME in ("cython", "python")
