import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synclab import kernels
from synclab.kernels import backends

BACKENDS = backends()
needs_both = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled backend not built")


def test_compiled_backend_is_default_when_built():
    if "cython" in BACKENDS and not os.environ.get("SYNCLAB_PURE"):
        assert kernels.BACKEND == "cython"
    else:
        assert kernels.BACKEND == "python"


def test_env_var_forces_python_backend():
    env = dict(os.environ, SYNCLAB_PURE="1")
    code = "import synclab; print(synclab.BACKEND)"
    res = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert res.returncode == 0 and res.stdout.strip() == "python"


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_alpha_inverse_roundtrip(name):
    k = BACKENDS[name]
    for r in np.linspace(0.0, 5.9, 60):
        assert abs(k.alpha_inverse(1e-7, k.alpha(1e-7, r)) - r) < 1e-12


@needs_both
@settings(max_examples=80, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.0, 1e-6))
def test_scalar_kernels_agree(r, mu):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    assert cy.alpha(mu, r) == pytest.approx(py.alpha(mu, r), rel=1e-15, abs=1e-15)
    rho = py.alpha(mu, r)
    assert cy.alpha_inverse(mu, rho) == pytest.approx(py.alpha_inverse(mu, rho), abs=1e-12)


@needs_both
def test_orbit_kernels_agree():
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    assert np.array_equal(py.radial_orbit(1e-7, 1.5, 5000), cy.radial_orbit(1e-7, 1.5, 5000))
    a = py.lorenz_rk4(10.0, 28.0, 8.0 / 3.0, 1.0, 1.0, 1.0, 1e-3, 2000)
    b = cy.lorenz_rk4(10.0, 28.0, 8.0 / 3.0, 1.0, 1.0, 1.0, 1e-3, 2000)
    assert np.max(np.abs(a - b)) < 1e-9
    drive = 10.0 * np.sin(np.arange(2001) * 1e-3)
    a = py.lorenz_response_rk4(28.0, 8.0 / 3.0, drive, 1.0, 2.0, 1e-3)
    b = cy.lorenz_response_rk4(28.0, 8.0 / 3.0, drive, 1.0, 2.0, 1e-3)
    assert np.max(np.abs(a - b)) < 1e-12


@needs_both
def test_polar_iterate_agrees():
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    res = {}
    for name, k in BACKENDS.items():
        xs, ys = 1.5 * np.cos(ang), 1.5 * np.sin(ang)
        out = k.polar_iterate(1e-7, 2 * np.pi, xs, ys, 200, False, 2.0, 0.0, 1_000_000)
        res[name] = (xs, ys, out)
    assert np.max(np.abs(res["python"][0] - res["cython"][0])) < 1e-9
    assert np.max(np.abs(res["python"][1] - res["cython"][1])) < 1e-9
