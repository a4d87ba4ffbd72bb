"""Affine product structures and the nonautonomous slave map they induce."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .systems import (
    DomainError,
    IntegratorConfig,
    Trajectory,
    apply_batch,
    integrate,
    n_steps_for,
    orbit,
)


class ProductStructure:
    """Coordinates ``w = T p + c`` split into drive and response components.

    ``drive`` lists the coordinate indices imposed from outside (the x part);
    the remaining indices, in increasing order, are the response (y part).
    """

    def __init__(self, transform, offset=None, drive: Sequence[int] = (0,)):
        t = np.array(transform, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DomainError("transform must be a square matrix")
        d = t.shape[0]
        c = np.zeros(d) if offset is None else np.array(offset, dtype=float).reshape(d)
        drive = tuple(int(i) for i in drive)
        if len(set(drive)) != len(drive) or not drive or any(i < 0 or i >= d for i in drive):
            raise DomainError(f"invalid drive index set {drive} for dimension {d}")
        if len(drive) >= d:
            raise DomainError("response part must be nonempty")
        if abs(np.linalg.det(t)) <= 1e-12:
            raise DomainError("structure transform is singular")
        self.transform = t
        self.offset = c
        self.drive = drive
        self.response = tuple(i for i in range(d) if i not in drive)
        self.dim = d
        self._identity = bool(np.array_equal(t, np.eye(d)) and not np.any(c))
        self._inv = np.eye(d) if self._identity else np.linalg.inv(t)
        for a in (self.transform, self.offset, self._inv):
            a.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.drive)

    @classmethod
    def identity(cls, d: int = 2, drive: Sequence[int] = (0,)):
        return cls(np.eye(d), None, drive)

    @classmethod
    def rotation(cls, phi: float, drive: Sequence[int] = (0,)):
        c, s = math.cos(phi), math.sin(phi)
        return cls([[c, -s], [s, c]], None, drive)

    @classmethod
    def shear(cls, k: float, drive: Sequence[int] = (0,)):
        return cls([[1.0, k], [0.0, 1.0]], None, drive)

    def __repr__(self):
        return (f"ProductStructure(transform={self.transform.tolist()}, "
                f"offset={self.offset.tolist()}, drive={list(self.drive)})")

    def to_config(self) -> dict:
        return {"transform": self.transform.tolist(), "offset": self.offset.tolist(),
                "drive": list(self.drive)}

    # coordinates -------------------------------------------------------

    def to_coords(self, p):
        """Return ``(x, y)`` for one point, or ``(X, Y)`` for rows of points."""
        p = np.asarray(p, dtype=float)
        w = p if self._identity else p @ self.transform.T + self.offset
        return w[..., list(self.drive)], w[..., list(self.response)]

    def from_coords(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1]) + (self.dim,)
        w = np.empty(shape)
        w[..., list(self.drive)] = x
        w[..., list(self.response)] = y
        if self._identity:
            return w
        return (w - self.offset) @ self._inv.T

    def conjugate(self, system):
        """The system expressed in this structure's coordinates, ``s F s^-1``."""
        return ConjugatedSystem(system, self)


class ConjugatedSystem:
    def __init__(self, base, structure: ProductStructure):
        self.base = base
        self.structure = structure
        self.kind = base.kind
        self.dim = base.dim

    def _to_ambient(self, w):
        s = self.structure
        return (np.asarray(w, dtype=float) - s.offset) @ s._inv.T

    def __call__(self, w):
        return self.apply_batch(np.asarray(w, dtype=float)[None, :])[0]

    def apply_batch(self, w):
        s = self.structure
        return apply_batch(self.base, self._to_ambient(w)) @ s.transform.T + s.offset

    def field(self, w):
        return self.field_batch(np.asarray(w, dtype=float)[None, :])[0]

    def field_batch(self, w):
        s = self.structure
        return self.base.field_batch(self._to_ambient(w)) @ s.transform.T


def to_coords(s: ProductStructure, p):
    return s.to_coords(p)


def from_coords(s: ProductStructure, x, y):
    return s.from_coords(x, y)


def structure_from_config(cfg: Optional[dict], d: int = 2) -> ProductStructure:
    """Build from ``{"transform": [[...]], "offset": [...], "drive": [i]}``; missing keys default to identity."""
    if cfg is None:
        return ProductStructure.identity(d)
    t = cfg.get("transform")
    if t is None:
        t = np.eye(d)
    if "rotation" in cfg:
        return ProductStructure.rotation(float(cfg["rotation"]), cfg.get("drive", [0]))
    return ProductStructure(t, cfg.get("offset"), cfg.get("drive", [0]))


# --------------------------------------------------------------------------
# slave maps


def _batch_2d(a):
    a = np.asarray(a, dtype=float)
    return a.reshape(1, -1) if a.ndim <= 1 else a


def slave_map_batch(system, s: ProductStructure, x, Y):
    """Response coordinates of ``F(x, y)`` for each row ``y`` of ``Y`` (maps only)."""
    Y = _batch_2d(Y)
    x = np.broadcast_to(np.asarray(x, dtype=float).reshape(-1, s.m), (Y.shape[0], s.m))
    P = s.from_coords(x, Y)
    Q = apply_batch(system, P)
    return s.to_coords(Q)[1]


def slave_flow_batch(system, s: ProductStructure, x0, x1, Y, dt: float,
                     cfg: IntegratorConfig = IntegratorConfig()):
    """Integrate the response subsystem over one sample interval ``dt``.

    The drive moves linearly from ``x0`` to ``x1`` across the interval.
    """
    Y = _batch_2d(Y).copy()
    n = n_steps_for(dt, cfg.h) if dt >= cfg.h else 1
    h = dt / n
    x0 = np.asarray(x0, dtype=float).reshape(s.m)
    x1 = np.asarray(x1, dtype=float).reshape(s.m)
    T = s.transform
    resp = list(s.response)

    def g(tau, Yc):
        xt = x0 + (x1 - x0) * (tau / dt)
        P = s.from_coords(np.broadcast_to(xt, (Yc.shape[0], s.m)), Yc)
        return (system.field_batch(P) @ T.T)[:, resp]

    tau = 0.0
    for _ in range(n):
        k1 = g(tau, Y)
        k2 = g(tau + 0.5 * h, Y + 0.5 * h * k1)
        k3 = g(tau + 0.5 * h, Y + 0.5 * h * k2)
        k4 = g(tau + h, Y + h * k3)
        Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        tau += h
    return Y


def slave_step(system, s: ProductStructure, x, y, x_next=None, dt: float = 1.0,
               cfg: IntegratorConfig = IntegratorConfig()):
    """One step of the slave system for the drive value ``x`` and response ``y``.

    For flows, ``x_next`` is the drive at the end of the sample interval
    ``dt`` (defaults to ``x``, i.e. a frozen drive).
    """
    if system.dim != s.dim:
        raise DomainError("system and structure dimensions differ")
    y = np.asarray(y, dtype=float)
    single = y.ndim <= 1
    if system.kind == "map":
        out = slave_map_batch(system, s, x, y)
    else:
        out = slave_flow_batch(system, s, x, x if x_next is None else x_next, y, dt, cfg)
    return out[0] if single else out


# --------------------------------------------------------------------------
# drive sequences


@dataclass(frozen=True)
class DriveSequence:
    """A source of drive values.

    kinds: ``orbit`` (projection of an orbit of ``system`` from ``start``),
    ``constant`` (``value``), ``samples`` (explicit list), ``iid_uniform``
    (``low``/``high`` box, ``seed``), ``sinusoid`` (``amp``, ``freq``,
    ``phase``; evaluated at times ``i * dt``).
    """

    kind: str
    system: object = None
    structure: Optional[ProductStructure] = None
    start: Optional[tuple] = None
    value: object = 0.0
    samples: Optional[tuple] = None
    low: object = -1.0
    high: object = 1.0
    amp: float = 1.0
    freq: float = 1.0
    phase: float = 0.0
    seed: int = 0
    m: int = 1
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    @classmethod
    def orbit_projection(cls, system, structure, start):
        return cls("orbit", system=system, structure=structure,
                   start=tuple(float(v) for v in start), m=structure.m)

    @classmethod
    def constant(cls, value, m: int = 1):
        return cls("constant", value=value, m=m)

    @classmethod
    def from_samples(cls, samples):
        arr = _batch_2d(np.asarray(samples, dtype=float).reshape(len(samples), -1))
        return cls("samples", samples=tuple(map(tuple, arr.tolist())), m=arr.shape[1])

    @classmethod
    def iid_uniform(cls, seed: int, low=-1.0, high=1.0, m: int = 1):
        return cls("iid_uniform", seed=seed, low=low, high=high, m=m)

    @classmethod
    def sinusoid(cls, amp: float = 1.0, freq: float = 1.0, phase: float = 0.0, m: int = 1):
        return cls("sinusoid", amp=amp, freq=freq, phase=phase, m=m)

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "value": np.asarray(self.value, dtype=float).tolist()}
        if self.kind == "iid_uniform":
            return {"kind": "iid_uniform", "seed": self.seed, "low": self.low, "high": self.high}
        if self.kind == "sinusoid":
            return {"kind": "sinusoid", "amp": self.amp, "freq": self.freq, "phase": self.phase}
        if self.kind == "samples":
            return {"kind": "samples", "samples": [list(s) for s in self.samples]}
        return {"kind": "orbit", "start": list(self.start)}


def drive_values(seq: DriveSequence, n: int, dt: float = 1.0) -> np.ndarray:
    """First ``n`` drive values as an ``(n, m)`` array; deterministic for a given seed."""
    if n < 1:
        raise DomainError("n must be >= 1")
    m = seq.m
    if seq.kind == "constant":
        v = np.asarray(seq.value, dtype=float).reshape(-1)
        return np.tile(np.broadcast_to(v, (m,)), (n, 1))
    if seq.kind == "samples":
        arr = np.asarray(seq.samples, dtype=float)
        if arr.shape[0] < n:
            raise DomainError(f"drive samples exhausted: need {n}, have {arr.shape[0]}")
        return arr[:n].reshape(n, -1)
    if seq.kind == "iid_uniform":
        rng = np.random.default_rng(seq.seed)
        return rng.uniform(seq.low, seq.high, size=(n, m))
    if seq.kind == "sinusoid":
        t = np.arange(n) * dt
        return np.repeat((seq.amp * np.sin(seq.freq * t + seq.phase))[:, None], m, axis=1)
    if seq.kind == "orbit":
        traj = orbit_states(seq.system, seq.start, n, dt, seq.integrator)
        return seq.structure.to_coords(traj.states)[0]
    raise DomainError(f"unknown drive kind {seq.kind!r}")


def orbit_states(system, start, n: int, dt: float = 1.0,
                 cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """``n`` successive states of a map orbit, or of a flow sampled every ``dt``."""
    if system.kind == "map":
        return orbit(system, start, n - 1)
    if n == 1:
        return Trajectory(np.asarray(start, dtype=float)[None, :], dt)
    stride = n_steps_for(dt, cfg.h)
    traj = integrate(system, start, (n - 1) * stride * cfg.h, cfg)
    return Trajectory(traj.states[::stride], dt)


def drive_from_config(cfg: dict, system=None, structure=None) -> DriveSequence:
    kind = cfg.get("kind")
    m = structure.m if structure is not None else int(cfg.get("m", 1))
    if kind == "constant":
        return DriveSequence.constant(cfg.get("value", 0.0), m=m)
    if kind == "iid_uniform":
        return DriveSequence.iid_uniform(int(cfg.get("seed", 0)), cfg.get("low", -1.0), cfg.get("high", 1.0), m=m)
    if kind == "sinusoid":
        return DriveSequence.sinusoid(float(cfg.get("amp", 1.0)), float(cfg.get("freq", 1.0)),
                                      float(cfg.get("phase", 0.0)), m=m)
    if kind == "samples":
        return DriveSequence.from_samples(cfg["samples"])
    if kind == "orbit":
        return DriveSequence.orbit_projection(system, structure, cfg["start"])
    raise DomainError(f"unknown drive kind {kind!r}")
