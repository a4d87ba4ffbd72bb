import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synclab.linear import (
    closed_form_spectral_radius,
    decide,
    decide_flow,
    decide_map,
    density_experiment,
    expm_taylor,
    power_spectral_radius,
    response_block,
    search_structure,
    wilson_interval,
)
from synclab.structure import ProductStructure
from synclab.systems import DomainError

import oracles


def rot(phi):
    return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])


def test_response_block_examples():
    A = np.arange(9.0).reshape(3, 3) + np.eye(3)
    assert np.array_equal(response_block(A, ProductStructure.identity(3)), A[1:, 1:])
    assert np.array_equal(response_block(A, ProductStructure.identity(3, drive=[1])), A[np.ix_([0, 2], [0, 2])])
    s = ProductStructure(rot(0.3), [5.0, -1.0])
    B = np.diag([2.0, 0.5])
    assert response_block(B, s)[0, 0] == pytest.approx((rot(0.3) @ B @ rot(-0.3))[1, 1])


def test_decide_map_examples():
    rep = decide_map(np.diag([2.0, 0.5]), ProductStructure.identity(2))
    assert rep.synchronizable and rep.criterion_value == pytest.approx(0.5)
    rep = decide_map(np.diag([0.5, 2.0]), ProductStructure.identity(2))
    assert not rep.synchronizable and rep.criterion_value == pytest.approx(2.0)
    A = np.eye(3)
    A[1:, 1:] = 1.1 * rot(math.pi / 6)
    rep = decide_map(A, ProductStructure.identity(3))
    assert rep.criterion_value == pytest.approx(1.1, abs=1e-12) and not rep.synchronizable
    rep = decide_map(np.diag([3.0, 1.0]), ProductStructure.identity(2))
    assert rep.borderline and not rep.synchronizable
    with pytest.raises(DomainError):
        decide_map(np.zeros((2, 2)), ProductStructure.identity(2))


def test_decide_map_matches_qr_oracle_on_random_4x4():
    for i in range(50):
        A = np.random.default_rng([11, i]).standard_normal((4, 4))
        rep = decide_map(A, ProductStructure.identity(4))
        assert abs(rep.criterion_value - oracles.spectral_radius(A[1:, 1:])) < 1e-6


def test_decide_flow_examples():
    for b in (0.5, 1.0, 3.0):
        rep = decide_flow(np.diag([-1.0, -b]), ProductStructure.identity(2))
        assert rep.synchronizable and rep.criterion_value == pytest.approx(-b, abs=1e-9)
    A = np.zeros((3, 3))
    A[1:, 1:] = [[0.0, -1.0], [1.0, 0.0]]
    rep = decide_flow(A, ProductStructure.identity(3))
    assert rep.borderline and not rep.synchronizable
    for i in range(30):
        A = np.random.default_rng([12, i]).standard_normal((3, 3))
        rep = decide_flow(A, ProductStructure.identity(3))
        assert abs(rep.criterion_value - oracles.spectral_abscissa(A[1:, 1:])) < 1e-4
    assert decide(np.diag([-1.0, -2.0]), ProductStructure.identity(2), kind="flow").kind == "flow"


def test_similarity_invariance():
    rng = np.random.default_rng(5)
    for _ in range(100):
        A = rng.standard_normal((3, 3))
        s = ProductStructure(rng.standard_normal((3, 3)) + 3 * np.eye(3), rng.standard_normal(3))
        direct = decide_map(A, s).criterion_value
        conj = decide_map(s.transform @ A @ np.linalg.inv(s.transform), ProductStructure.identity(3))
        assert abs(direct - conj.criterion_value) < 1e-8 * max(1.0, direct)


def test_search_structure_examples():
    s = search_structure(np.diag([0.5, 1 / 3]))
    assert s is not None and np.array_equal(s.transform, np.eye(2))
    assert search_structure(2.0 * np.eye(2), budget=200) is None
    s = search_structure(np.diag([2.0, 0.5, 0.3]), budget=10_000)
    assert s is not None and decide_map(np.diag([2.0, 0.5, 0.3]), s).synchronizable


def test_two_dimensional_search_finds_iff_not_scalar():
    for i in range(200):
        A = np.random.default_rng([9, i]).standard_normal((2, 2))
        s = search_structure(A, budget=1000, seed=i)
        assert s is not None
        assert decide_map(A, s).synchronizable
    for lam in (0.5, -0.9, 1.5, 3.0):
        found = search_structure(lam * np.eye(2), budget=200)
        assert (found is not None) == (abs(lam) < 1)


def test_density_experiment():
    res = density_experiment(2, 50, family="diagonal_one_inside")
    assert res.fraction == 1.0 and res.found == 50
    res = density_experiment(3, 200, budget=10_000, seed=0)
    assert 0.0 <= res.wilson_low <= res.fraction <= res.wilson_high <= 1.0 + 1e-12
    assert res.to_json()["n_samples"] == 200
    with pytest.raises(DomainError):
        density_experiment(2, 0)
    with pytest.raises(DomainError):
        density_experiment(5, 10)


def test_wilson_interval_values():
    assert wilson_interval(0, 10) == pytest.approx((0.0, 0.27753), abs=1e-5)
    assert wilson_interval(5, 10) == pytest.approx((0.23659, 0.76341), abs=1e-5)
    assert wilson_interval(10, 10) == pytest.approx((0.72247, 1.0), abs=1e-5)


def test_power_iteration_matches_oracle_with_gap():
    checked = 0
    for i in range(200):
        B = np.random.default_rng([13, i]).standard_normal((4, 4))
        mods = sorted({round(abs(v), 12) for v in oracles.qr_eigenvalues(B)}, reverse=True)
        if len(mods) > 1 and mods[0] - mods[1] <= 1e-3:
            continue
        rho, _ = power_spectral_radius(B, presquare=6)
        assert abs(rho - mods[0]) < 1e-6
        checked += 1
    assert checked > 150


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000), st.sampled_from([2, 3]))
def test_closed_form_matches_oracle(seed, n):
    B = np.random.default_rng(seed).standard_normal((n, n))
    assert abs(closed_form_spectral_radius(B) - oracles.spectral_radius(B)) < 1e-8


def test_expm_taylor():
    assert np.allclose(expm_taylor(np.diag([1.0, -2.0])), np.diag([math.e, math.exp(-2.0)]), rtol=1e-13)
    assert np.allclose(expm_taylor(np.array([[0.0, -1.0], [1.0, 0.0]]) * 2.0), rot(2.0), atol=1e-13)
