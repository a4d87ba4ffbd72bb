"""Synchronization trials, verdicts and conditional Lyapunov exponents."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .structure import (
    DriveSequence,
    ProductStructure,
    drive_values,
    orbit_states,
    slave_flow_batch,
    slave_map_batch,
)
from .systems import DivergedError, DomainError, IntegratorConfig, LinearSystem, LorenzSystem, n_steps_for

SYNCHRONIZING = "synchronizing"
NON_SYNCHRONIZING = "non_synchronizing"
INCONCLUSIVE = "inconclusive"

# relative size of round-off in a difference of two states of magnitude |Y|
_NOISE = 1e-13
LYAPUNOV_FLOOR = -50.0


@dataclass(frozen=True)
class TrialConfig:
    n_steps: int = 1000
    n_pairs: int = 10
    init_box: tuple = (-1.0, 1.0)
    delta_sync: float = 1e-8
    delta_fail: float = 1e-2
    seed: int = 0
    sample_dt: float = 1.0
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    record_every: int = 1

    def __post_init__(self):
        if not self.delta_sync < self.delta_fail:
            raise DomainError("delta_sync must be below delta_fail")
        if self.n_steps < 1 or self.n_pairs < 1:
            raise DomainError("n_steps and n_pairs must be >= 1")


@dataclass
class SyncVerdict:
    verdict: str
    worst_final_distance: float
    evidence: dict
    series: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "worst_final_distance": self.worst_final_distance,
                "evidence": self.evidence}


def _as_drive_array(drive, n_values: int, dt: float) -> np.ndarray:
    if isinstance(drive, DriveSequence):
        return drive_values(drive, n_values, dt)
    arr = np.asarray(drive, dtype=float)
    arr = arr.reshape(arr.shape[0], -1)
    if arr.shape[0] < n_values:
        raise DomainError(f"drive has {arr.shape[0]} values, need {n_values}")
    return arr[:n_values]


def _is_lorenz_x_drive(system, s: ProductStructure) -> bool:
    return isinstance(system, LorenzSystem) and s._identity and s.drive == (0,)


def _lorenz_fast_response(system, xs, Y, dt, cfg):
    """Kernel path for the x-driven Lorenz response; returns (n+1, k, 2)."""
    stride = n_steps_for(dt, cfg.h)
    x = xs[:, 0]
    if stride > 1:
        t_nodes = np.arange(x.size) * stride
        x = np.interp(np.arange(t_nodes[-1] + 1), t_nodes, x)
    out = np.full((xs.shape[0], Y.shape[0], 2), np.nan)
    for j in range(Y.shape[0]):
        resp = kernels.lorenz_response_rk4(system.r, system.b, np.ascontiguousarray(x),
                                           float(Y[j, 0]), float(Y[j, 1]), cfg.h)
        sampled = resp[::stride]
        out[: sampled.shape[0], j] = sampled
    return out


def _flow_step(system, s: ProductStructure, x0, x1, Y, dt, cfg):
    if _is_lorenz_x_drive(system, s):
        stride = n_steps_for(dt, cfg.h)
        nodes = np.linspace(float(x0[0]), float(x1[0]), stride + 1)
        out = np.empty_like(Y)
        for j in range(Y.shape[0]):
            resp = kernels.lorenz_response_rk4(system.r, system.b, nodes, float(Y[j, 0]), float(Y[j, 1]), cfg.h)
            out[j] = resp[-1] if resp.shape[0] == stride + 1 else np.nan
        return out
    return slave_flow_batch(system, s, x0, x1, Y, dt, cfg)


def _linear_evolve(system: LinearSystem, s: ProductStructure, xs: np.ndarray, Y0: np.ndarray) -> np.ndarray:
    """Affine slave recursion of a linear map in structure coordinates.

    Blow-ups are marked afterwards: once a row is non-finite it stays NaN.
    """
    M = s.transform @ system.matrix @ s._inv
    c = s.offset - M @ s.offset
    drv, resp = list(s.drive), list(s.response)
    B = M[np.ix_(resp, resp)].T
    forcing = xs.reshape(xs.shape[0], -1) @ M[np.ix_(resp, drv)].T + c[resp]
    n = xs.shape[0]
    out = np.empty((n + 1,) + Y0.shape)
    out[0] = Y = Y0
    with np.errstate(all="ignore"):
        for i in range(n):
            Y = Y @ B + forcing[i]
            out[i + 1] = Y
    bad = ~np.all(np.isfinite(out), axis=2)
    dead = np.logical_or.accumulate(bad, axis=0)
    out[dead] = np.nan
    return out


def _evolve(system, s: ProductStructure, xs: np.ndarray, Y0: np.ndarray, dt: float,
            cfg: IntegratorConfig) -> np.ndarray:
    """Slave states for every drive value; rows turn NaN after a blow-up."""
    n = xs.shape[0] - 1 if system.kind == "flow" else xs.shape[0]
    if system.kind == "flow" and _is_lorenz_x_drive(system, s):
        return _lorenz_fast_response(system, xs, Y0, dt, cfg)
    if isinstance(system, LinearSystem) and system.kind == "map":
        return _linear_evolve(system, s, xs, Y0)
    k = Y0.shape[0]
    out = np.full((n + 1, k, Y0.shape[1]), np.nan)
    out[0] = Y0
    Y = Y0.copy()
    alive = np.ones(k, dtype=bool)
    for i in range(n):
        with np.errstate(all="ignore"):
            if system.kind == "map":
                Yn = slave_map_batch(system, s, xs[i], Y[alive])
            else:
                Yn = slave_flow_batch(system, s, xs[i], xs[i + 1], Y[alive], dt, cfg)
        ok = np.all(np.isfinite(Yn), axis=1)
        idx = np.flatnonzero(alive)
        Y[idx] = Yn
        alive[idx[~ok]] = False
        out[i + 1, alive] = Y[alive]
        if not alive.any():
            break
    return out


def run_pair(system, structure: ProductStructure, drive, y1_0, y2_0, n: int,
             dt: float = 1.0, cfg: IntegratorConfig = IntegratorConfig()) -> np.ndarray:
    """Distances ``d_N(Y1(i), Y2(i))`` for ``i = 0..n`` under a shared drive.

    ``drive`` is a DriveSequence or an array of drive values (``n`` values for
    maps, ``n + 1`` nodes for flows).
    """
    n_values = n + 1 if system.kind == "flow" else n
    xs = _as_drive_array(drive, n_values, dt)
    Y0 = np.vstack([np.asarray(y1_0, dtype=float).reshape(-1), np.asarray(y2_0, dtype=float).reshape(-1)])
    states = _evolve(system, structure, xs, Y0, dt, cfg)
    dist = np.linalg.norm(states[:, 0] - states[:, 1], axis=1)
    bad = ~np.isfinite(dist)
    if bad.any():
        last = int(np.argmax(bad)) - 1
        raise DivergedError("slave state became non-finite", last, dist[: last + 1])
    return dist


# --------------------------------------------------------------------------
# trials


def _classify_pair(dist: np.ndarray, scale: np.ndarray, cfg: TrialConfig) -> str:
    finite = np.isfinite(dist)
    if not finite.all():
        last = int(np.argmax(~finite)) - 1
        if last >= 0 and dist[last] > cfg.delta_fail and dist[last] > 100.0 * _NOISE * scale[last]:
            return "fail"
        return "unresolved"
    tail = dist[len(dist) - max(1, len(dist) // 10):]
    tail_scale = scale[len(scale) - len(tail):]
    final, noise = dist[-1], _NOISE * scale[-1]
    if final < cfg.delta_sync and noise < 0.1 * cfg.delta_sync:
        return "sync"
    if np.all(tail > cfg.delta_fail) and np.all(tail > 100.0 * _NOISE * tail_scale):
        return "fail"
    return "unresolved"


def _trial(system, structure: ProductStructure, cfg: TrialConfig, drives: Sequence[Callable], labels) -> SyncVerdict:
    r = len(structure.response)
    n = cfg.n_steps
    n_values = n + 1 if system.kind == "flow" else n
    low, high = cfg.init_box
    pairs_info, series, excluded = [], {}, []
    finals = []
    for di, drive in enumerate(drives):
        try:
            xs = drive(n_values)
        except DivergedError as exc:
            excluded.append({"drive": labels[di], "reason": "drive orbit diverged",
                             "last_index": exc.last_index})
            continue
        if not np.all(np.isfinite(xs)):
            excluded.append({"drive": labels[di], "reason": "non-finite drive"})
            continue
        rng = np.random.default_rng([cfg.seed, di])
        inits = rng.uniform(low, high, size=(cfg.n_pairs, 2, r))
        Y0 = inits.reshape(2 * cfg.n_pairs, r)
        states = _evolve(system, structure, xs, Y0, cfg.sample_dt, cfg.integrator)
        S1, S2 = states[:, 0::2], states[:, 1::2]
        with np.errstate(invalid="ignore", over="ignore"):
            dist = np.linalg.norm(S1 - S2, axis=2)
            scale = np.maximum(np.linalg.norm(S1, axis=2), np.linalg.norm(S2, axis=2))
        for j in range(cfg.n_pairs):
            status = _classify_pair(dist[:, j], scale[:, j], cfg)
            d = dist[:, j]
            tail = d[len(d) - max(1, len(d) // 10):]
            final = float(d[-1])
            finals.append(final)
            pairs_info.append({"drive": labels[di], "pair": j, "status": status,
                               "initial": float(d[0]), "final": final,
                               "min_tail": float(np.min(tail)), "max_tail": float(np.max(tail))})
            series[(di, j)] = d[:: cfg.record_every]
    statuses = [p["status"] for p in pairs_info]
    if not statuses:
        verdict = INCONCLUSIVE
    elif "fail" in statuses:
        verdict = NON_SYNCHRONIZING
    elif all(st == "sync" for st in statuses):
        verdict = SYNCHRONIZING
    else:
        verdict = INCONCLUSIVE
    worst = float(np.nanmax(np.where(np.isfinite(finals), finals, np.inf))) if finals else math.inf
    evidence = {
        "n_pairs": len(pairs_info),
        "counts": {k: statuses.count(k) for k in ("sync", "fail", "unresolved")},
        "excluded": excluded,
        "pairs": pairs_info,
    }
    return SyncVerdict(verdict, worst, evidence, series)


def sync_test(system, structure: ProductStructure, cfg: TrialConfig, orbit_starts) -> SyncVerdict:
    """m-synchronization trial: drives are projections of orbits of the system itself."""
    if len(orbit_starts) == 0:
        raise DomainError("need at least one orbit start")

    def provider(start):
        def values(n_values):
            traj = orbit_states(system, start, n_values, cfg.sample_dt, cfg.integrator)
            return structure.to_coords(traj.states)[0]
        return values

    drives = [provider(np.asarray(s, dtype=float)) for s in orbit_starts]
    labels = [f"orbit{i}" for i in range(len(drives))]
    return _trial(system, structure, cfg, drives, labels)


def absolute_sync_test(system, structure: ProductStructure, cfg: TrialConfig,
                       drive_generators: Sequence[DriveSequence]) -> SyncVerdict:
    """Absolute trial: drives come from arbitrary generators, not from orbits."""
    if len(drive_generators) == 0:
        raise DomainError("need at least one drive generator")
    labels = [f"{g.kind}{i}" for i, g in enumerate(drive_generators)]
    drives = [lambda n_values, g=g: drive_values(g, n_values, cfg.sample_dt) for g in drive_generators]
    return _trial(system, structure, cfg, drives, labels)


# --------------------------------------------------------------------------
# conditional Lyapunov exponents


def conditional_lyapunov(system, structure: ProductStructure, orbit_start, n: int,
                         fd_step: float = 1e-6, dt: float = 1e-2,
                         cfg: IntegratorConfig = IntegratorConfig()) -> float:
    """Largest conditional Lyapunov exponent of the response along a driven orbit.

    Maps return the exponent per iterate, flows per unit time (samples every
    ``dt``). Tangents come from central differences with a step relative to
    the state size; zero growth is floored at ``LYAPUNOV_FLOOR`` per step.
    """
    if n < 1000:
        raise DomainError("n must be at least 1000")
    n_values = n + 1
    traj = orbit_states(system, orbit_start, n_values, dt if system.kind == "flow" else 1.0, cfg)
    xs, ys = structure.to_coords(traj.states)
    r = ys.shape[1]
    y = ys[0].copy()
    v = np.ones(r) / math.sqrt(r)
    total = 0.0
    for i in range(n):
        eps = fd_step * max(1.0, float(np.linalg.norm(y)))
        Ys = np.vstack([y, y + eps * v, y - eps * v])
        if system.kind == "map":
            out = slave_map_batch(system, structure, xs[i], Ys)
        else:
            out = _flow_step(system, structure, xs[i], xs[i + 1], Ys, dt, cfg)
        if not np.all(np.isfinite(out)):
            raise DivergedError("non-finite state in tangent propagation", i)
        w = (out[1] - out[2]) / (2.0 * eps)
        g = float(np.linalg.norm(w))
        if g < 1e-300:
            total += LYAPUNOV_FLOOR
        else:
            total += max(math.log(g), LYAPUNOV_FLOOR)
            v = w / g
        y = out[0]
    per_step = total / n
    return per_step / dt if system.kind == "flow" else per_step


# --------------------------------------------------------------------------
# Lorenz drive-response


@dataclass
class LorenzTrial:
    t: np.ndarray
    error: np.ndarray
    lyapunov_V: np.ndarray
    response1: np.ndarray
    response2: np.ndarray


def lorenz_drive_nodes(drive_signal, T: float, h: float) -> np.ndarray:
    """Drive values at the integrator nodes ``i * h``, ``i = 0..T/h``."""
    n = n_steps_for(T, h)
    if callable(drive_signal) and not isinstance(drive_signal, DriveSequence):
        t = np.arange(n + 1) * h
        return np.asarray(drive_signal(t), dtype=float).reshape(n + 1)
    if isinstance(drive_signal, DriveSequence):
        return drive_values(drive_signal, n + 1, h)[:, 0]
    arr = np.asarray(drive_signal, dtype=float).reshape(-1)
    if arr.size < n + 1:
        raise DomainError(f"drive signal has {arr.size} nodes, need {n + 1}")
    return arr[: n + 1]


def lorenz_response_trial(sys: LorenzSystem, drive_signal, p1, p2, T: float,
                          cfg: IntegratorConfig = IntegratorConfig()) -> LorenzTrial:
    """Integrate the x-driven (Y, Z) response for two initial pairs.

    ``V(t) = (Y1 - Y2)^2 + (Z1 - Z2)^2``; ``error`` is ``sqrt(V)``.
    """
    if not T > 0.0:
        raise DomainError("T must be positive")
    x = np.ascontiguousarray(lorenz_drive_nodes(drive_signal, T, cfg.h))
    a = kernels.lorenz_response_rk4(sys.r, sys.b, x, float(p1[0]), float(p1[1]), cfg.h)
    b = kernels.lorenz_response_rk4(sys.r, sys.b, x, float(p2[0]), float(p2[1]), cfg.h)
    if a.shape[0] != x.size or b.shape[0] != x.size:
        raise DivergedError("response diverged", min(a.shape[0], b.shape[0]) - 1)
    V = np.sum((a - b) ** 2, axis=1)
    return LorenzTrial(np.arange(x.size) * cfg.h, np.sqrt(V), V, a, b)
