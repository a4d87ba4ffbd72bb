import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synclab.structure import (
    DriveSequence,
    ProductStructure,
    drive_from_config,
    drive_values,
    slave_step,
    structure_from_config,
)
from synclab.systems import DomainError, HenonMap, LinearSystem, LorenzSystem, PlanarPolarMap

from oracles import psi_direct


def test_identity_coordinates():
    s = ProductStructure.identity(2)
    x, y = s.to_coords([3.0, 4.0])
    assert x.tolist() == [3.0] and y.tolist() == [4.0]
    assert s.from_coords(x, y).tolist() == [3.0, 4.0]


def test_drive_index_selects_coordinates():
    s = ProductStructure.identity(3, drive=[1])
    x, y = s.to_coords([1.0, 2.0, 3.0])
    assert x.tolist() == [2.0] and y.tolist() == [1.0, 3.0]
    assert s.from_coords(x, y).tolist() == [1.0, 2.0, 3.0]


def test_rotation_roundtrip():
    s = ProductStructure.rotation(math.pi / 3)
    p = np.array([0.7, -1.1])
    x, y = s.to_coords(p)
    assert np.allclose(s.from_coords(x, y), p, atol=1e-15)
    assert abs(x[0] - (0.5 * 0.7 + math.sqrt(3) / 2 * 1.1)) < 1e-15


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_random_affine_roundtrip(seed):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((3, 3))
    if np.linalg.cond(T) > 1e6:
        return
    s = ProductStructure(T, rng.standard_normal(3), drive=[int(rng.integers(3))])
    P = rng.uniform(-5, 5, (20, 3))
    X, Y = s.to_coords(P)
    assert np.max(np.abs(s.from_coords(X, Y) - P)) < 1e-12 * max(1.0, np.linalg.cond(T))


@pytest.mark.parametrize("bad", [
    dict(transform=[[1, 2], [2, 4]]),
    dict(transform=np.eye(2), drive=[2]),
    dict(transform=np.eye(2), drive=[0, 1]),
    dict(transform=np.eye(2), drive=[0, 0]),
    dict(transform=[[1, 0, 0], [0, 1, 0]]),
])
def test_invalid_structures(bad):
    with pytest.raises(DomainError):
        ProductStructure(**bad)


def test_henon_slave_ignores_its_own_state():
    m = HenonMap()
    s = ProductStructure.identity(2, drive=[1])
    Y = np.linspace(-3, 3, 7)[:, None]
    out = slave_step(m, s, 0.4, Y)
    # response u' = v does not depend on u
    assert np.all(out == 0.4)


def test_linear_slave_step_is_affine_in_block():
    A = np.array([[2.0, 1.0, 0.0], [0.5, 0.3, 0.2], [-0.1, 0.4, 0.6]])
    s = ProductStructure.identity(3)
    y = np.array([0.3, -0.7])
    got = slave_step(LinearSystem(A), s, 1.5, y)
    assert np.allclose(got, A[1:, 1:] @ y + A[1:, 0] * 1.5, atol=1e-13)


def test_polar_slave_on_identity_leaf():
    m = PlanarPolarMap()
    s = ProductStructure.identity(2)
    t = np.linspace(0.1, 4.9, 50)
    got = slave_step(m, s, 0.0, t[:, None])[:, 0]
    # the leaf x=0 is the y axis, so y' = alpha(t) sin(pi/2 + 2 pi t^2)
    assert np.max(np.abs(got - psi_direct(t))) < 1e-12


def test_conjugation_matches_structure_coordinates():
    m = HenonMap()
    s = ProductStructure([[1.0, 0.5], [-0.3, 2.0]], [0.2, -1.0])
    P = np.random.default_rng(1).uniform(-1, 1, (30, 2))
    W = P @ s.transform.T + s.offset
    lhs = s.conjugate(m).apply_batch(W)
    rhs = m.apply_batch(P) @ s.transform.T + s.offset
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_flow_slave_step_frozen_drive():
    s = LorenzSystem()
    st_ = ProductStructure.identity(3)
    y = slave_step(s, st_, 0.0, np.array([1.0, 1.0]), dt=0.01)
    # with x = 0 the response is linear: y' = -y, z' = -b z
    assert y == pytest.approx([math.exp(-0.01), math.exp(-0.01 * 8.0 / 3.0)], abs=1e-12)


def test_drive_sequences_are_deterministic():
    assert np.all(drive_values(DriveSequence.constant(2.5), 4) == 2.5)
    a = drive_values(DriveSequence.iid_uniform(7), 100)
    b = drive_values(DriveSequence.iid_uniform(7), 100)
    assert np.array_equal(a, b) and a.min() >= -1 and a.max() <= 1
    sin = drive_values(DriveSequence.sinusoid(2.0, 3.0), 5, dt=0.1)
    assert np.allclose(sin[:, 0], 2.0 * np.sin(3.0 * 0.1 * np.arange(5)))
    with pytest.raises(DomainError):
        drive_values(DriveSequence.from_samples([1.0, 2.0]), 3)


def test_henon_orbit_projection_gives_v_coordinates():
    m = HenonMap()
    s = ProductStructure.identity(2, drive=[1])
    vals = drive_values(DriveSequence.orbit_projection(m, s, (0.1, 0.2)), 4)[:, 0]
    p = np.array([0.1, 0.2])
    for v in vals:
        assert v == p[1]
        p = m.apply_batch(p[None, :])[0]


def test_configs_roundtrip():
    s = ProductStructure([[1.0, 2.0], [0.0, 1.0]], [0.5, 0.0], drive=[1])
    s2 = structure_from_config(s.to_config())
    assert np.array_equal(s2.transform, s.transform) and s2.drive == (1,)
    assert structure_from_config(None).drive == (0,)
    rot = structure_from_config({"rotation": math.pi / 2})
    assert np.allclose(rot.transform, [[0, -1], [1, 0]])
    for seq in (DriveSequence.iid_uniform(3, -2, 2), DriveSequence.sinusoid(1, 2, 0.5),
                DriveSequence.constant(1.0)):
        again = drive_from_config(seq.to_config())
        assert np.array_equal(drive_values(again, 10, 0.1), drive_values(seq, 10, 0.1))
