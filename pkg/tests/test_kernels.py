import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbath import kernels

pytestmark = pytest.mark.skipif(kernels.numba_impl is None, reason="numba not importable")

NP, NB = kernels.numpy_impl, kernels.numba_impl


def test_backend_is_recorded():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.active.name == kernels.BACKEND


def test_haar_energies_agree():
    gen = np.random.default_rng(0)
    normals = gen.standard_normal((1000, 4, 2))
    e = np.array([0.0, 1.0, 1.0, 3.0])
    assert np.allclose(NP.haar_energies(normals, e), NB.haar_energies(normals, e), rtol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=1, max_size=4, unique=True), st.integers(1, 40),
       st.integers(0, 120))
def test_lattice_pmf_agree(steps, n, cap):
    steps = np.array(sorted(steps), dtype=np.int64)
    w = np.arange(1.0, steps.size + 1)
    log_w = np.log(w / w.sum())
    a = NP.lattice_log_pmf(steps, log_w, n, cap)
    b = NB.lattice_log_pmf(steps, log_w, n, cap)
    assert np.array_equal(np.isfinite(a), np.isfinite(b))
    fin = np.isfinite(a)
    assert np.allclose(a[fin], b[fin], rtol=0, atol=1e-11)


def test_lattice_pmf_normalised_when_uncapped():
    steps = np.array([0, 2, 3], dtype=np.int64)
    log_w = np.log([0.2, 0.5, 0.3])
    for impl in (NP, NB):
        logp = impl.lattice_log_pmf(steps, log_w, 25, 75)
        assert math.fsum(np.exp(logp)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=7))
def test_bspline_agree(knots):
    t = np.sort(np.array(knots))
    gaps = np.diff(t)
    if t[-1] - t[0] < 1e-3 or np.any((gaps > 0) & (gaps < 1e-9)):
        return
    x = np.linspace(t[0] - 0.1, t[-1] + 0.1, 57)
    assert np.allclose(NP.bspline_basis(x, t), NB.bspline_basis(x, t), rtol=1e-12, atol=1e-14)


def test_weighted_band_stats_agree():
    gen = np.random.default_rng(1)
    sums = gen.normal(30, 4, 50_000)
    a = NP.weighted_band_stats(sums, 20.0, 30.0, 0.7, 30.0)
    b = NB.weighted_band_stats(sums, 20.0, 30.0, 0.7, 30.0)
    assert a[0] == b[0]
    assert a[1] == pytest.approx(b[1], rel=1e-12) and a[2] == pytest.approx(b[2], rel=1e-12)


def _backend_in_subprocess(value):
    import os
    import subprocess
    import sys
    env = dict(os.environ, QBATH_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "from qbath import kernels; print(kernels.BACKEND)"],
                          env=env, capture_output=True, text=True)


@pytest.mark.parametrize("value", ["numba", "numpy"])
def test_backend_env_flag(value):
    res = _backend_in_subprocess(value)
    assert res.returncode == 0 and res.stdout.strip() == value


def test_backend_env_flag_rejects_unknown():
    res = _backend_in_subprocess("cuda")
    assert res.returncode != 0 and "QBATH_BACKEND" in res.stderr
