"""Fixed-point certificates of non-synchronization and perturbation sweeps.

For a planar map ``F`` and a one-dimensional drive structure, take a fixed
point ``z0`` and hold the drive at its coordinate ``x0``. The slave section
``psi(t)`` is the response coordinate of ``F`` applied to the point with
coordinates ``(x0, t)``. Two slave states sitting at distinct fixed points of
``psi`` never approach each other under the constant drive, so a second
(transversal) fixed point certifies that the structure does not synchronize.
Transversal crossings survive small perturbations, which is what the sweep
measures.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .structure import ProductStructure
from .systems import DomainError, apply_batch

NON_SYNC_FOR_STRUCTURE = "non_synchronizing_for_structure"
INCONCLUSIVE = "inconclusive"
TRANSVERSAL = "transversal"
TANGENTIAL = "tangential"

ANCHOR_TOL = 1e-9
DEFAULT_STRUCTURES_NOTE = "for sampled structures"


class FixedPointNotFound(RuntimeError):
    pass


# --------------------------------------------------------------------------
# fixed points of the map


def _fd_jacobian(fn, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    step = h * max(1.0, float(np.max(np.abs(z))))
    P = np.vstack([z + step * e for e in np.eye(z.size)] + [z - step * e for e in np.eye(z.size)])
    V = fn(P)
    n = z.size
    return ((V[:n] - V[n:]) / (2.0 * step)).T


def find_fixed_point(system, center=(0.0, 0.0), radius: float = 0.9, tol: float = 1e-12,
                     grid: int = 64, max_newton: int = 60) -> np.ndarray:
    """Grid minimizer of ``|F(p) - p|`` in a disk, refined by damped Newton."""
    if radius <= 0.0:
        raise DomainError("disk radius must be positive")
    center = np.asarray(center, dtype=float)
    u = np.linspace(-radius, radius, grid)
    X, Y = np.meshgrid(u, u)
    inside = X * X + Y * Y <= radius * radius
    P = np.column_stack((X[inside], Y[inside])) + center
    P = np.vstack((center, P))
    res = np.linalg.norm(apply_batch(system, P) - P, axis=1)
    z = P[int(np.argmin(res))].copy()

    def disp(Q):
        return apply_batch(system, Q) - Q

    r = float(np.linalg.norm(disp(z[None, :])[0]))
    for _ in range(max_newton):
        if r < tol:
            return z
        J = _fd_jacobian(disp, z)
        try:
            step = np.linalg.solve(J, -disp(z[None, :])[0])
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-6:
            cand = z + lam * step
            rc = float(np.linalg.norm(disp(cand[None, :])[0]))
            if rc < r:
                z, r = cand, rc
                break
            lam *= 0.5
        else:
            break
    if r < tol:
        return z
    raise FixedPointNotFound(f"no fixed point below {tol:g} in the disk (best residual {r:.3g})")


# --------------------------------------------------------------------------
# slave sections and their fixed points


@dataclass
class SlaveSection:
    system: object
    structure: ProductStructure
    leaf_constant: float
    anchor: float

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = self.structure
        P = s.from_coords(np.full((t.size, 1), self.leaf_constant), t[:, None])
        _, Y = s.to_coords(apply_batch(self.system, P))
        return Y[:, 0]


def slave_section(system, structure: ProductStructure, z0) -> SlaveSection:
    if structure.dim != 2 or structure.m != 1:
        raise DomainError("slave sections need a two-dimensional structure with one drive coordinate")
    x0, y0 = structure.to_coords(np.asarray(z0, dtype=float))
    return SlaveSection(system, structure, float(x0[0]), float(y0[0]))


@dataclass(frozen=True)
class FixedPoint:
    t: float
    kind: str

    def to_json(self) -> dict:
        return {"t": self.t, "kind": self.kind}


def _refine_all(g, a: np.ndarray, b: np.ndarray, ga: np.ndarray, tol: float) -> np.ndarray:
    """Bisect every bracket ``[a_i, b_i]`` at once until it is below ``tol``
    and the residual is below 1e-12, or the bracket cannot shrink."""
    a, b, ga = a.copy(), b.copy(), ga.copy()
    done = np.zeros(a.size, dtype=bool)
    root = 0.5 * (a + b)
    for _ in range(200):
        live = ~done
        if not live.any():
            break
        m = 0.5 * (a[live] + b[live])
        stuck = (m <= a[live]) | (m >= b[live])
        gm = g(m)
        same = (gm > 0.0) == (ga[live] > 0.0)
        al, bl, gal = a[live], b[live], ga[live]
        al = np.where(same, m, al)
        gal = np.where(same, gm, gal)
        bl = np.where(same, bl, m)
        a[live], b[live], ga[live] = al, bl, gal
        fin = stuck | (gm == 0.0) | ((bl - al <= tol) & (np.abs(gm) < 1e-12))
        r = np.where(gm == 0.0, m, 0.5 * (al + bl))
        idx = np.flatnonzero(live)
        root[idx] = r
        done[idx[fin]] = True
    return root


def _scan(psi: Callable, interval, grid_step: float, tol: float):
    if grid_step > 1e-4:
        raise DomainError("grid_step must be at most 1e-4 to resolve the narrow crossings")
    lo, hi = map(float, interval)
    if not hi > lo:
        raise DomainError("empty interval")
    n = int(math.ceil((hi - lo) / grid_step)) + 1
    t = np.linspace(lo, hi, n)

    def g(v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return psi(v) - v

    gv = g(t)
    sg = np.sign(gv)
    out = []
    # runs of exact grid zeros
    z = np.concatenate(([0], (sg == 0.0).astype(np.int8), [0]))
    edges = np.flatnonzero(np.diff(z))
    starts, stops = edges[::2], edges[1::2] - 1
    longest = int(np.max(stops - starts + 1)) if starts.size else 0
    for i, j in zip(starts, stops):
        left = sg[i - 1] if i > 0 else np.sign(g(t[0] - grid_step)[0])
        right = sg[j + 1] if j + 1 < n else np.sign(g(t[-1] + grid_step)[0])
        kind = TRANSVERSAL if (i == j and left * right < 0.0) else TANGENTIAL
        out.append(FixedPoint(float(t[i]), kind))
    k = np.flatnonzero(sg[:-1] * sg[1:] < 0.0)
    if k.size:
        roots = _refine_all(g, t[k], t[k + 1], gv[k], tol)
        out += [FixedPoint(float(r), TRANSVERSAL) for r in roots]
    out.sort(key=lambda p: p.t)
    return out, longest


def count_fixed_points(psi: Callable, interval, grid_step: float = 1e-4,
                       tol: float = 1e-12) -> list:
    """Fixed points of ``psi`` on an interval, labelled transversal or tangential.

    Sign changes of ``psi(t) - t`` between grid nodes are bisected to ``tol``
    and are transversal. A grid zero is transversal when its neighbours have
    opposite signs and tangential otherwise; a run of consecutive grid zeros
    is reported once, as tangential, at its first node.
    """
    return _scan(psi, interval, grid_step, tol)[0]


# --------------------------------------------------------------------------
# certificates


@dataclass
class FixedPointCertificate:
    structure: ProductStructure
    fixed_point: Optional[np.ndarray]
    leaf_constant: Optional[float]
    fixed_points: list
    verdict: str
    anchor: Optional[float] = None
    reason: str = ""

    @property
    def transversal(self) -> list:
        return [p.t for p in self.fixed_points if p.kind == TRANSVERSAL]

    def to_json(self) -> dict:
        return {
            "structure": self.structure.to_config(),
            "fixed_point": None if self.fixed_point is None else self.fixed_point.tolist(),
            "leaf_constant": self.leaf_constant,
            "anchor": self.anchor,
            "fixed_points": [p.to_json() for p in self.fixed_points],
            "n_transversal": len(self.transversal),
            "verdict": self.verdict,
            "scope": DEFAULT_STRUCTURES_NOTE,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CertifyConfig:
    window: tuple = (0.0, 5.0)
    grid_step: float = 1e-4
    tol: float = 1e-12
    disk_center: tuple = (0.0, 0.0)
    disk_radius: float = 0.9
    fixed_point_tol: float = 1e-12
    degenerate_fraction: float = 0.01


def _anchor_kind(psi, t0: float, h: float = 1e-6) -> str:
    g = psi(np.array([t0 - h, t0 + h])) - np.array([t0 - h, t0 + h])
    return TRANSVERSAL if g[0] * g[1] < 0.0 else TANGENTIAL


def certify_structure(system, structure: ProductStructure,
                      cfg: CertifyConfig = CertifyConfig()) -> FixedPointCertificate:
    try:
        z0 = find_fixed_point(system, cfg.disk_center, cfg.disk_radius, cfg.fixed_point_tol)
    except FixedPointNotFound as exc:
        return FixedPointCertificate(structure, None, None, [], INCONCLUSIVE, reason=str(exc))
    psi = slave_section(system, structure, z0)
    pts, zero_run = _scan(psi, cfg.window, cfg.grid_step, cfg.tol)
    t0 = psi.anchor
    if not any(abs(p.t - t0) <= ANCHOR_TOL for p in pts):
        pts.append(FixedPoint(t0, _anchor_kind(psi, t0)))
        pts.sort(key=lambda p: p.t)
    cert = FixedPointCertificate(structure, z0, psi.leaf_constant, pts, INCONCLUSIVE, t0)
    grid_pts = (cfg.window[1] - cfg.window[0]) / cfg.grid_step
    if zero_run > cfg.degenerate_fraction * grid_pts:
        cert.reason = "degenerate: the section is the identity on a whole interval"
        return cert
    others = [t for t in cert.transversal if abs(t - t0) > ANCHOR_TOL]
    if others:
        cert.verdict = NON_SYNC_FOR_STRUCTURE
    else:
        cert.reason = "no transversal fixed point apart from the anchor"
    return cert


def certify(system, structures: Sequence[ProductStructure],
            cfg: CertifyConfig = CertifyConfig()) -> list:
    return [certify_structure(system, s, cfg) for s in structures]


def rotated_structures(n: int = 12) -> list:
    """Identity plus rotations by ``k pi / n`` for ``k = 1..n``."""
    return [ProductStructure.identity()] + [ProductStructure.rotation(k * math.pi / n) for k in range(1, n + 1)]


def sampled_structures(n_rotations: int = 12, n_shears: int = 0, seed: int = 0) -> list:
    out = rotated_structures(n_rotations)
    rng = np.random.default_rng(seed)
    out += [ProductStructure.shear(float(k)) for k in rng.uniform(-1.0, 1.0, n_shears)]
    return out


# --------------------------------------------------------------------------
# perturbations


DIRECTIONS = ("random", "radial_out", "radial_in", "tangential")


@dataclass(frozen=True)
class PerturbationSpec:
    """Analytic perturbation ``eta = bump(r) * sum_j (r/6)^j (a_j cos j th + b_j sin j th)``.

    Each component has its own coefficients. ``bump(r) = (1 - r^2/36)^3`` for
    ``r < 6`` and 0 beyond; inside the disk every term is a polynomial in
    ``(x, y)``. Coefficients are scaled so that ``sum_j ||M_j||_2 = epsilon``
    with ``M_j = [[a_j^x, b_j^x], [a_j^y, b_j^y]]``, which bounds ``|eta|``.
    """

    epsilon: float
    n_modes: int = 3
    seed: int = 0
    direction: str = "random"
    radius: float = 6.0

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise DomainError("epsilon must be >= 0")
        if self.n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        if self.direction not in DIRECTIONS:
            raise DomainError(f"unknown direction {self.direction!r}; expected one of {DIRECTIONS}")
        if not self.radius > 0.0:
            raise DomainError("radius must be positive")


def _unit_coefficients(spec: PerturbationSpec) -> np.ndarray:
    """Coefficient array of shape (n_modes + 1, 2, 2) with unit analytic bound."""
    if spec.direction not in DIRECTIONS:
        raise DomainError(f"unknown perturbation direction {spec.direction!r}")
    if spec.n_modes < 0:
        raise DomainError("n_modes must be >= 0")
    C = np.zeros((max(spec.n_modes, 1) + 1, 2, 2))
    if spec.direction == "random":
        rng = np.random.default_rng([spec.seed, spec.n_modes])
        C[: spec.n_modes + 1] = rng.standard_normal((spec.n_modes + 1, 2, 2))
        C[0, :, 1] = 0.0
        C = C[: spec.n_modes + 1]
    elif spec.direction in ("radial_out", "radial_in"):
        sign = 1.0 if spec.direction == "radial_out" else -1.0
        C[1] = sign * np.eye(2)
    else:
        C[1] = [[0.0, -1.0], [1.0, 0.0]]
    bound = sum(np.linalg.norm(M, 2) for M in C)
    return C / bound


@dataclass
class Perturbation:
    spec: PerturbationSpec
    coefficients: np.ndarray

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros_like(pts)
        if self.spec.epsilon == 0.0:
            return out
        R = self.spec.radius
        x, y = pts[:, 0], pts[:, 1]
        r2 = x * x + y * y
        bump = np.clip(1.0 - r2 / (R * R), 0.0, None) ** 3
        # (z / R)^j carries (r/R)^j (cos j th, sin j th)
        zr = (x + 1j * y) / R
        zj = np.ones_like(zr)
        for j in range(self.coefficients.shape[0]):
            M = self.coefficients[j]
            out += np.column_stack((zj.real, zj.imag)) @ M.T
            zj = zj * zr
        return out * bump[:, None]

    def sup_bound(self) -> float:
        return float(sum(np.linalg.norm(M, 2) for M in self.coefficients))


def make_perturbation(spec: PerturbationSpec) -> Perturbation:
    if spec.epsilon < 0.0:
        raise DomainError("epsilon must be >= 0")
    return Perturbation(spec, spec.epsilon * _unit_coefficients(spec))


class PerturbedMap:
    """``G = F + eta``; keeps a lift hook and an inverse by fixed-point iteration."""

    kind = "map"
    dim = 2

    def __init__(self, base, eta: Perturbation):
        self.base = base
        self.eta = eta

    def __call__(self, p):
        return self.apply_batch(np.asarray(p, dtype=float)[None, :])[0]

    def apply_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        return apply_batch(self.base, pts) + self.eta(pts)

    def inverse_batch(self, pts, tol: float = 1e-14, max_iter: int = 100):
        pts = np.asarray(pts, dtype=float)
        q = self.base.inverse_batch(pts)
        for _ in range(max_iter):
            nxt = self.base.inverse_batch(pts - self.eta(q))
            if np.max(np.abs(nxt - q)) <= tol * max(1.0, float(np.max(np.abs(q)))):
                return nxt
            q = nxt
        return q

    def lift_turns(self, pts):
        hook = getattr(self.base, "lift_turns", None)
        if hook is None:
            raise AttributeError("base map has no lift")
        pts = np.asarray(pts, dtype=float)
        F = apply_batch(self.base, pts)
        G = F + self.eta(pts)
        extra = np.arctan2(G[:, 1], G[:, 0]) - np.arctan2(F[:, 1], F[:, 0])
        return hook(pts) + ((extra / (2.0 * math.pi) + 0.5) % 1.0 - 0.5)

    def to_config(self) -> dict:
        cfg = dict(self.base.to_config())
        cfg["perturbation"] = {"epsilon": self.eta.spec.epsilon, "n_modes": self.eta.spec.n_modes,
                               "seed": self.eta.spec.seed, "direction": self.eta.spec.direction}
        return cfg


def injectivity_check(system, radius: float = 5.5, n: int = 200, min_sep: float = 1e-9) -> bool:
    """Grid test: False when two grid points land closer than ``min_sep``."""
    u = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(u, u)
    mask = X * X + Y * Y <= radius * radius
    img = apply_batch(system, np.column_stack((X[mask], Y[mask])))
    order = np.lexsort((img[:, 1], img[:, 0]))
    srt = img[order]
    gaps = np.linalg.norm(np.diff(srt, axis=0), axis=1)
    return bool(np.all(gaps > min_sep))


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    rows: list
    fractions: dict

    def to_json(self) -> dict:
        return {"fractions": {repr(k): v for k, v in self.fractions.items()}, "rows": self.rows}


def perturbation_sweep(system, eps_list: Sequence[float], n_samples: int,
                       structures: Sequence[ProductStructure], seed: int = 0,
                       cfg: CertifyConfig = CertifyConfig(), n_modes: int = 3,
                       direction: str = "random", workers: int = 1) -> SweepResult:
    """Certify ``F + eta`` for every (epsilon, sample) cell.

    Sample ``i`` uses perturbation seed ``seed + i`` and the same direction at
    every epsilon. A cell succeeds when every structure is certified.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be sorted ascending")
    if n_samples < 1:
        raise DomainError("n_samples must be >= 1")
    cells = [(ei, eps, i) for ei, eps in enumerate(eps_list) for i in range(n_samples)]

    def run(cell):
        _, eps, i = cell
        spec = PerturbationSpec(eps, n_modes, seed + i, direction)
        return certify(PerturbedMap(system, make_perturbation(spec)), structures, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    rows = []
    ok = {eps: 0 for eps in eps_list}
    for (ei, eps, i), certs in zip(cells, results):
        for sid, c in enumerate(certs):
            rows.append({"epsilon": eps, "sample": i, "structure_id": sid,
                         "n_fixed_points": len(c.fixed_points), "verdict": c.verdict})
        if all(c.verdict == NON_SYNC_FOR_STRUCTURE for c in certs):
            ok[eps] += 1
    return SweepResult(rows, {eps: ok[eps] / n_samples for eps in eps_list})


@dataclass
class CriticalEpsilon:
    low: float
    high: float
    direction: str
    seed: int

    @property
    def estimate(self) -> float:
        return 0.5 * (self.low + self.high)

    def to_json(self) -> dict:
        return {"low": self.low, "high": self.high, "estimate": self.estimate,
                "direction": self.direction, "seed": self.seed}


def estimate_critical_epsilon(system, structures, seed: int = 0, eps_lo: float = 1e-5,
                              eps_hi: float = 1e-1, iters: int = 12, direction: str = "radial_in",
                              n_modes: int = 3, cfg: CertifyConfig = CertifyConfig()) -> CriticalEpsilon:
    """Bisect on epsilon along one perturbation direction.

    The certificate must hold at ``eps_lo`` and fail at ``eps_hi``; the
    returned bracket has width ``(eps_hi - eps_lo) / 2**iters``.
    """
    if isinstance(structures, ProductStructure):
        structures = [structures]

    def holds(eps):
        spec = PerturbationSpec(eps, n_modes, seed, direction)
        certs = certify(PerturbedMap(system, make_perturbation(spec)), structures, cfg)
        return all(c.verdict == NON_SYNC_FOR_STRUCTURE for c in certs)

    if not 0.0 <= eps_lo < eps_hi:
        raise DomainError("need 0 <= eps_lo < eps_hi")
    if not holds(eps_lo):
        raise DomainError(f"certificate already fails at eps_lo={eps_lo:g}")
    if holds(eps_hi):
        raise DomainError(f"certificate still holds at eps_hi={eps_hi:g}")
    lo, hi = eps_lo, eps_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return CriticalEpsilon(lo, hi, direction, seed)
