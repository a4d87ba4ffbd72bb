"""Annulus maps: lifts, boundary displacements, and the (P)/(Q)/(R) checks.

A radial band ``r_in <= r <= r_out`` of a plane map is read as a map of
``T x [0, 1]`` with ``x = theta / 2 pi`` (turns) and
``s = (r - r_in) / (r_out - r_in)``. Lifts live on the cover ``R x [0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .systems import DomainError, PlanarPolarMap, apply_batch

TWO_PI = 2.0 * math.pi
STRICT_MARGIN = 1e-9


class ResolutionError(ValueError):
    """Sampling too coarse to unwrap angles unambiguously; refine the grid."""


def wrap_half(v):
    """Wrap turn values into [-1/2, 1/2)."""
    return (np.asarray(v) + 0.5) % 1.0 - 0.5


@dataclass(frozen=True)
class AnnulusAdapter:
    base: object
    r_in: float
    r_out: float

    def __post_init__(self):
        if not 0.0 < self.r_in < self.r_out:
            raise DomainError("need 0 < r_in < r_out")

    @property
    def width(self) -> float:
        return self.r_out - self.r_in

    def to_plane(self, X, S) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        r = self.r_in + np.asarray(S, dtype=float) * self.width
        return np.stack((r * np.cos(TWO_PI * X), r * np.sin(TWO_PI * X)), axis=-1)

    def from_plane(self, P):
        P = np.asarray(P, dtype=float)
        x = np.arctan2(P[..., 1], P[..., 0]) / TWO_PI % 1.0
        s = (np.hypot(P[..., 0], P[..., 1]) - self.r_in) / self.width
        return x, s

    def image_plane(self, X, S) -> np.ndarray:
        P = self.to_plane(X, S)
        flat = P.reshape(-1, 2)
        return apply_batch(self.base, flat).reshape(P.shape)

    def boundary_error(self, n: int = 256) -> float:
        """Largest radial drift of either boundary circle under one step."""
        xs = np.arange(n) / n
        worst = 0.0
        for s, r in ((0.0, self.r_in), (1.0, self.r_out)):
            Q = self.image_plane(xs, np.full(n, s))
            worst = max(worst, float(np.max(np.abs(np.hypot(Q[:, 0], Q[:, 1]) - r))))
        return worst

    def preserves_boundaries(self, tol: float = 1e-10) -> bool:
        return self.boundary_error() < tol


# --------------------------------------------------------------------------
# lifts


class Lift:
    """Lift ``f(x, s) = (x + D(x, s) + k, s')`` of the adapted map.

    ``D`` is the continuous angular displacement in turns. Maps that know
    their natural lift provide it through ``lift_turns``; for other maps
    ``D`` is built by nearest-integer continuation on a grid anchored at
    ``(0, 0)`` with principal value in [-1/2, 1/2).
    """

    def __init__(self, adapter: AnnulusAdapter, k: int = 0, grid=(129, 512)):
        self.adapter = adapter
        self.k = int(k)
        self.grid = grid
        self._hook = getattr(adapter.base, "lift_turns", None)
        self._table = None

    def with_sheet(self, k: int) -> "Lift":
        out = Lift(self.adapter, k, self.grid)
        out._table = self._table
        return out

    def _principal(self, X, S):
        P = self.adapter.to_plane(X, S)
        Q = apply_batch(self.adapter.base, P.reshape(-1, 2)).reshape(P.shape)
        src = np.arctan2(P[..., 1], P[..., 0])
        img = np.arctan2(Q[..., 1], Q[..., 0])
        return wrap_half((img - src) / TWO_PI), Q

    def _build_table(self):
        ns, nx = self.grid
        sg = np.linspace(0.0, 1.0, ns)
        xg = np.arange(nx + 1) / nx
        X, S = np.meshgrid(xg, sg)
        prin, _ = self._principal(X, S)
        # continuation up the x = 0 column, then along each row
        col = prin[:, 0].copy()
        for i in range(1, ns):
            inc = wrap_half(prin[i, 0] - col[i - 1])
            col[i] = col[i - 1] + inc
        table = np.empty_like(prin)
        table[:, 0] = col
        steps = wrap_half(np.diff(prin, axis=1))
        if np.any(np.abs(steps) > 0.45) or np.any(np.abs(wrap_half(np.diff(prin[:, 0]))) > 0.45):
            raise ResolutionError("displacement grid too coarse for unambiguous continuation")
        table[:, 1:] = col[:, None] + np.cumsum(steps, axis=1)
        self._table = (sg, xg, table)

    def displacement(self, X, S) -> np.ndarray:
        """Continuous displacement ``D`` (without the sheet offset)."""
        X = np.asarray(X, dtype=float)
        S = np.asarray(S, dtype=float)
        if self._hook is not None:
            P = self.adapter.to_plane(X, S)
            return np.asarray(self._hook(P.reshape(-1, 2)), dtype=float).reshape(np.broadcast(X, S).shape)
        if self._table is None:
            self._build_table()
        sg, xg, table = self._table
        prin, _ = self._principal(X, S)
        xf = X % 1.0
        i = np.clip(np.rint(S * (len(sg) - 1)).astype(int), 0, len(sg) - 1)
        j = np.clip(np.rint(xf * (len(xg) - 1)).astype(int), 0, len(xg) - 1)
        ref = table[i, j]
        return ref + wrap_half(prin - ref)

    def __call__(self, X, S):
        X = np.asarray(X, dtype=float)
        S = np.asarray(S, dtype=float)
        D = self.displacement(X, S)
        Q = self.adapter.image_plane(X, S)
        s_img = (np.hypot(Q[..., 0], Q[..., 1]) - self.adapter.r_in) / self.adapter.width
        return X + D + self.k, s_img


# --------------------------------------------------------------------------
# displacements and conditions (ii), (iii)


@dataclass
class ConditionResult:
    passed: bool
    witness: Optional[int]
    window: tuple
    witnesses: list = field(default_factory=list)
    borderline: bool = False

    def to_json(self) -> dict:
        return {"passed": self.passed, "witness": self.witness, "window": list(self.window),
                "witnesses": self.witnesses, "borderline": self.borderline}


@dataclass
class DisplacementReport:
    bottom: tuple
    top: tuple
    sheet: int = 0

    @property
    def integer_window_ii(self) -> tuple:
        return (-self.top[0], -self.bottom[1])

    @property
    def integer_window_iii(self) -> tuple:
        return (1.0 - self.top[0], -1.0 - self.bottom[1])

    def to_json(self) -> dict:
        return {"bottom": list(self.bottom), "top": list(self.top), "sheet": self.sheet,
                "integer_window_ii": list(self.integer_window_ii),
                "integer_window_iii": list(self.integer_window_iii)}


def boundary_displacement(lift: Lift, boundary: str, grid_n: int = 1024) -> tuple:
    """``(min, max)`` of ``pi_1 f(x, s) - x`` along one boundary circle, in turns.

    Image angles are unwrapped by nearest-integer continuation from ``x = 0``,
    where the lift fixes the branch.
    """
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    s = {"bottom": 0.0, "top": 1.0}.get(boundary)
    if s is None:
        raise DomainError("boundary must be 'bottom' or 'top'")
    xs = np.arange(grid_n + 1) / grid_n
    S = np.full_like(xs, s)
    Q = lift.adapter.image_plane(xs, S)
    raw = np.arctan2(Q[:, 1], Q[:, 0]) / TWO_PI
    lifted = lift.displacement(xs, S) + xs + lift.k
    if np.any(np.abs(np.diff(lifted)) >= 0.5):
        raise ResolutionError(f"angular increments reach 1/2 turn at grid_n={grid_n}; refine")
    unwrapped = np.empty_like(raw)
    unwrapped[0] = lifted[0]
    inc = wrap_half(np.diff(raw))
    unwrapped[1:] = lifted[0] + np.cumsum(inc)
    if np.max(np.abs(unwrapped - lifted)) > 1e-6:
        raise ResolutionError("boundary unwrapping disagrees with the lift; refine")
    disp = unwrapped[:-1] - xs[:-1]
    return float(np.min(disp)), float(np.max(disp))


def displacement_report(lift: Lift, grid_n: int = 1024) -> DisplacementReport:
    return DisplacementReport(boundary_displacement(lift, "bottom", grid_n),
                              boundary_displacement(lift, "top", grid_n), lift.k)


def _integer_window(lo: float, hi: float, margin: float = STRICT_MARGIN, cap: int = 10_000):
    first = math.floor(lo + margin) + 1
    last = math.ceil(hi - margin) - 1
    ks = list(range(first, min(last, first + cap - 1) + 1)) if last >= first else []
    near = [k for k in (round(lo), round(hi)) if abs(k - lo) <= margin or abs(k - hi) <= margin]
    return ks, (not ks and bool(near))


def _pick(ks):
    return min(ks, key=lambda k: (abs(k), k)) if ks else None


def condition_ii_check(report: DisplacementReport) -> ConditionResult:
    """Sheets ``k`` with ``max_bottom + k < 0 < min_top + k``."""
    lo, hi = report.integer_window_ii
    ks, borderline = _integer_window(lo, hi)
    ks = [k + report.sheet for k in ks]
    return ConditionResult(bool(ks), _pick(ks), (lo, hi), ks, borderline)


def condition_iii_check(report: DisplacementReport) -> ConditionResult:
    """Sheets ``k`` with ``max_bottom + k < -1`` and ``min_top + k > 1``."""
    lo, hi = report.integer_window_iii
    ks, borderline = _integer_window(lo, hi)
    ks = [k + report.sheet for k in ks]
    return ConditionResult(bool(ks), _pick(ks), (lo, hi), ks, borderline)


# --------------------------------------------------------------------------
# condition (i)


def _segment_point_distance(points, A, B):
    """Distance from each point to the closest of the segments ``A[j] -> B[j]``."""
    out = np.empty(points.shape[0])
    AB = B - A
    L2 = np.maximum(np.sum(AB * AB, axis=1), 1e-300)
    for start in range(0, points.shape[0], 512):
        P = points[start:start + 512, None, :]
        t = np.clip(np.sum((P - A) * AB, axis=2) / L2, 0.0, 1.0)
        D = P - (A + t[..., None] * AB)
        out[start:start + 512] = np.sqrt(np.min(np.sum(D * D, axis=2), axis=1))
    return out


def hausdorff_to_circle(curve: np.ndarray, radius: float, n_circle: int = 4096) -> float:
    """Hausdorff distance between a closed polyline and the circle of the given radius."""
    A = curve
    B = np.roll(curve, -1, axis=0)
    u = np.linspace(0.0, 1.0, 9)[:, None, None]
    on_curve = (A + u * (B - A)).reshape(-1, 2)
    d1 = float(np.max(np.abs(np.hypot(on_curve[:, 0], on_curve[:, 1]) - radius)))
    ang = np.arange(n_circle) / n_circle * TWO_PI
    circle = radius * np.column_stack((np.cos(ang), np.sin(ang)))
    d2 = float(np.max(_segment_point_distance(circle, A, B)))
    return max(d1, d2)


def _iterate_curve(base, pts: np.ndarray, n_iter: int, inverse: bool, target: float,
                   tol: float, check_every: int = 16):
    if isinstance(base, PlanarPolarMap):
        xs = np.ascontiguousarray(pts[:, 0])
        ys = np.ascontiguousarray(pts[:, 1])
        done = kernels.polar_iterate(base.mu, base.beta_coeff, xs, ys, n_iter, inverse,
                                     target, tol, check_every)
        return np.column_stack((xs, ys)), int(done)
    fn = getattr(base, "inverse_batch", None) if inverse else (lambda P: apply_batch(base, P))
    if fn is None:
        raise DomainError("backward iterates need a map with inverse_batch")
    P = pts.copy()
    done = 0
    for it in range(1, n_iter + 1):
        P = fn(P)
        done = it
        if it % check_every == 0 and np.max(np.abs(np.hypot(P[:, 0], P[:, 1]) - target)) < tol:
            break
    return P, done


@dataclass
class ConditionIResult:
    passed: bool
    evidence: dict

    def to_json(self) -> dict:
        return {"passed": self.passed, "evidence": self.evidence}


def condition_i_check(adapter: AnnulusAdapter, c: float, n_iter: int = 1_000_000,
                      tol: float = 1e-3, n_curve: int = 256,
                      sep_margin: float = STRICT_MARGIN) -> ConditionIResult:
    """Circle ``C`` of radius ``c``: ``F(C)`` strictly outside ``C``, forward
    iterates accumulating on the outer boundary and backward iterates on the
    inner one (Hausdorff distance below ``tol``)."""
    if not adapter.r_in < c < adapter.r_out:
        raise DomainError("curve radius must lie strictly inside the annulus")
    drift = adapter.boundary_error()
    if drift >= 1e-10:
        raise DomainError(f"annulus is not invariant (boundary drift {drift:.3g})")
    ang = np.arange(n_curve) / n_curve * TWO_PI
    C = c * np.column_stack((np.cos(ang), np.sin(ang)))
    FC = apply_batch(adapter.base, C)
    sep = float(np.min(np.hypot(FC[:, 0], FC[:, 1])) - c)
    evidence = {"curve_radius": c, "separation": sep}
    if not sep > sep_margin:
        evidence["reason"] = "F(C) not strictly above C"
        return ConditionIResult(False, evidence)
    fwd, n_fwd = _iterate_curve(adapter.base, C, n_iter, False, adapter.r_out, 0.5 * tol)
    bwd, n_bwd = _iterate_curve(adapter.base, C, n_iter, True, adapter.r_in, 0.5 * tol)
    h_fwd = hausdorff_to_circle(fwd, adapter.r_out)
    h_bwd = hausdorff_to_circle(bwd, adapter.r_in)
    evidence.update({"forward_iterations": n_fwd, "forward_hausdorff": h_fwd,
                     "backward_iterations": n_bwd, "backward_hausdorff": h_bwd})
    return ConditionIResult(bool(h_fwd < tol and h_bwd < tol), evidence)


# --------------------------------------------------------------------------
# types (P), (Q) and condition (R)


@dataclass(frozen=True)
class AnnulusConfig:
    n_iter: int = 1_000_000
    tol: float = 1e-3
    grid_n: int = 1024
    n_curve: int = 256


@dataclass
class TypeReport:
    annulus: tuple
    condition_i: ConditionIResult
    condition_ii: ConditionResult
    condition_iii: ConditionResult
    displacements: DisplacementReport

    @property
    def type_P(self) -> bool:
        return self.condition_i.passed and self.condition_ii.passed

    @property
    def type_Q(self) -> bool:
        return self.type_P and self.condition_iii.passed

    def to_json(self) -> dict:
        return {"annulus": list(self.annulus), "condition_i": self.condition_i.to_json(),
                "condition_ii": self.condition_ii.to_json(),
                "condition_iii": self.condition_iii.to_json(),
                "displacements": self.displacements.to_json(),
                "type_P": self.type_P, "type_Q": self.type_Q}


def type_report(adapter: AnnulusAdapter, c: Optional[float] = None,
                cfg: AnnulusConfig = AnnulusConfig()) -> TypeReport:
    if c is None:
        c = 0.5 * (adapter.r_in + adapter.r_out)
    ci = condition_i_check(adapter, c, cfg.n_iter, cfg.tol, cfg.n_curve)
    rep = displacement_report(Lift(adapter), cfg.grid_n)
    return TypeReport((adapter.r_in, adapter.r_out), ci, condition_ii_check(rep),
                      condition_iii_check(rep), rep)


@dataclass
class ConditionRReport:
    reports: list
    overall: bool
    orientation: str = "inner boundary -> T x {0}"

    def to_json(self) -> dict:
        return {"overall": self.overall, "orientation": self.orientation,
                "annuli": [r.to_json() for r in self.reports]}


def condition_R_report(plane_map, annuli=((1.0, 2.0), (3.0, 4.0)),
                       cfg: AnnulusConfig = AnnulusConfig()) -> ConditionRReport:
    """Both nested annuli must be of type (Q) with the inner boundary at s = 0."""
    if len(annuli) != 2:
        raise DomainError("condition (R) takes exactly two annuli")
    (a0, a1), (b0, b1) = sorted((tuple(map(float, a)) for a in annuli))
    if a1 > b0:
        raise DomainError("annuli overlap")
    reports = [type_report(AnnulusAdapter(plane_map, lo, hi), None, cfg)
               for lo, hi in ((a0, a1), (b0, b1))]
    return ConditionRReport(reports, all(r.type_Q for r in reports))


# --------------------------------------------------------------------------
# arcs


def radial_arc(x_turns: float = 0.0, n: int = 2001) -> np.ndarray:
    """Straight crossing arc at a fixed angle, as ``(x, s)`` samples."""
    s = np.linspace(0.0, 1.0, n)
    return np.column_stack((np.full(n, float(x_turns)), s))


def random_crossing_arc(rng, n_knots: int = 8, drift: float = 0.5, n: int = 2001) -> np.ndarray:
    """Piecewise-linear crossing arc, strictly increasing in ``s``."""
    s_knots = np.concatenate(([0.0], np.sort(rng.uniform(0.0, 1.0, n_knots - 2)), [1.0]))
    x_knots = rng.uniform(0.0, 1.0) + np.concatenate(([0.0], np.cumsum(rng.uniform(-drift, drift, n_knots - 1))))
    t_knots = np.linspace(0.0, 1.0, n_knots)
    t = np.linspace(0.0, 1.0, n)
    return np.column_stack((np.interp(t, t_knots, x_knots), np.interp(t, t_knots, s_knots)))


def _check_arc(arc: np.ndarray):
    arc = np.asarray(arc, dtype=float)
    if arc.ndim != 2 or arc.shape[1] != 2 or arc.shape[0] < 3:
        raise DomainError("arc must be an (n, 2) array of (x, s) samples, n >= 3")
    if abs(arc[0, 1]) > 1e-12 or abs(arc[-1, 1] - 1.0) > 1e-12:
        raise DomainError("arc must start at s = 0 and end at s = 1")
    if np.any(arc[1:-1, 1] <= 0.0) or np.any(arc[1:-1, 1] >= 1.0):
        raise DomainError("arc interior must lie strictly inside the annulus")
    monotone = bool(np.all(np.diff(arc[:, 1]) > 0.0))
    if not monotone and _self_intersects(arc):
        raise DomainError("arc is not simple")
    return arc, monotone


def _seg_intersections(P: np.ndarray, Q: np.ndarray, skip_adjacent: bool = False):
    """Index pairs ``(i, j)`` where segment ``P[i]P[i+1]`` crosses ``Q[j]Q[j+1]``."""
    a0, a1 = P[:-1], P[1:]
    b0, b1 = Q[:-1], Q[1:]
    hits = []
    blo_x, bhi_x = np.minimum(b0[:, 0], b1[:, 0]), np.maximum(b0[:, 0], b1[:, 0])
    blo_y, bhi_y = np.minimum(b0[:, 1], b1[:, 1]), np.maximum(b0[:, 1], b1[:, 1])
    for start in range(0, a0.shape[0], 256):
        A0, A1 = a0[start:start + 256, None, :], a1[start:start + 256, None, :]
        box = ((np.minimum(A0[..., 0], A1[..., 0]) <= bhi_x) & (np.maximum(A0[..., 0], A1[..., 0]) >= blo_x)
               & (np.minimum(A0[..., 1], A1[..., 1]) <= bhi_y) & (np.maximum(A0[..., 1], A1[..., 1]) >= blo_y))
        ii, jj = np.nonzero(box)
        if ii.size == 0:
            continue
        p, r = A0[ii, 0], (A1 - A0)[ii, 0]
        q, sv = b0[jj], (b1 - b0)[jj]
        rxs = r[:, 0] * sv[:, 1] - r[:, 1] * sv[:, 0]
        qp = q - p
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qp[:, 0] * sv[:, 1] - qp[:, 1] * sv[:, 0]) / rxs
            u = (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0]) / rxs
        ok = (rxs != 0.0) & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
        # collinear segments meet when their projections on r overlap
        col = (rxs == 0.0) & (qp[:, 0] * r[:, 1] - qp[:, 1] * r[:, 0] == 0.0)
        if np.any(col):
            rr = np.einsum("ij,ij->i", r, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                c0 = np.einsum("ij,ij->i", qp, r) / rr
                c1 = c0 + np.einsum("ij,ij->i", sv, r) / rr
            lo, hi = np.maximum(np.minimum(c0, c1), 0.0), np.minimum(np.maximum(c0, c1), 1.0)
            col &= (rr > 0.0) & (lo <= hi)
            t = np.where(col, lo, t)
            u = np.where(col, 0.0, u)
            ok |= col
        for i, j, tt, uu in zip(ii[ok] + start, jj[ok], t[ok], u[ok]):
            if skip_adjacent and abs(int(i) - int(j)) <= 1:
                continue
            hits.append((int(i), int(j), float(tt), float(uu)))
    return hits


def _self_intersects(arc: np.ndarray) -> bool:
    return bool(_seg_intersections(arc, arc, skip_adjacent=True))


class _PLArc:
    """Piecewise-linear arc with parameter ``t`` uniform over the samples."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        self.t = np.linspace(0.0, 1.0, pts.shape[0])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack((np.interp(t, self.t, self.pts[:, 0]), np.interp(t, self.t, self.pts[:, 1])), axis=-1)

    def t_of_s(self, s):
        return np.interp(s, self.pts[:, 1], self.t)

    def densified(self, factor: int) -> "_PLArc":
        t = np.linspace(0.0, 1.0, (self.pts.shape[0] - 1) * factor + 1)
        return _PLArc(self(t))


def _densify_for_image(arc: _PLArc, lift: Lift, max_step: float = 0.02, max_points: int = 1 << 18):
    while True:
        xi, si = lift(arc.pts[:, 0], arc.pts[:, 1])
        step = np.max(np.hypot(np.diff(xi), np.diff(si)))
        if step <= max_step or arc.pts.shape[0] * 4 > max_points:
            return arc, xi, si
        arc = arc.densified(4)


def _bisect(fn, a: float, b: float, fa: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = fn(m)
        if fm == 0.0:
            return m
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
        if b - a <= tol:
            break
    return 0.5 * (a + b)


@dataclass
class ArcWitness:
    t: float
    t_prime: float
    residual: float
    image: tuple
    sheet: int

    def to_json(self) -> dict:
        return {"t": self.t, "t_prime": self.t_prime, "residual": self.residual,
                "image": list(self.image), "sheet": self.sheet}


def _default_sheet(adapter: AnnulusAdapter, grid_n: int = 1024) -> int:
    res = condition_ii_check(displacement_report(Lift(adapter), grid_n))
    if res.witness is None:
        raise DomainError("no lift satisfies condition (ii); pass an explicit sheet k")
    return res.witness


def lemma1_arc_verifier(adapter: AnnulusAdapter, arc, k: Optional[int] = None,
                        min_gap: float = STRICT_MARGIN) -> Optional[ArcWitness]:
    """Find ``t < t'`` with ``f(gamma(t)) = gamma(t')`` for the lift ``f`` of sheet ``k``.

    ``arc`` holds ``(x, s)`` samples on the cover joining ``s = 0`` to
    ``s = 1``. ``k`` defaults to the smallest condition-(ii) sheet. Returns
    None when no crossing with ``t' > t + min_gap`` is found at the sampling
    resolution.
    """
    pts, monotone = _check_arc(arc)
    if k is None:
        k = _default_sheet(adapter)
    lift = Lift(adapter, k)
    g_arc, xi, si = _densify_for_image(_PLArc(pts), lift)
    if monotone:
        return _lemma1_monotone(g_arc, lift, xi, si, min_gap)
    return _lemma1_general(g_arc, lift, xi, si, min_gap)


def _witness(arc: _PLArc, lift: Lift, t: float, tp: float) -> ArcWitness:
    p = arc(t)
    fx, fs = lift(p[0], p[1])
    q = arc(tp)
    res = float(math.hypot(float(fx) - q[0], float(fs) - q[1]))
    return ArcWitness(float(t), float(tp), res, (float(fx), float(fs)), lift.k)


def _lemma1_monotone(arc: _PLArc, lift: Lift, xi, si, min_gap):
    def gap(t):
        p = arc(t)
        fx, fs = lift(p[0], p[1])
        return float(fx) - float(arc(arc.t_of_s(float(fs)))[0])

    g = xi - np.interp(arc.t_of_s(si), arc.t, arc.pts[:, 0])
    t = arc.t
    for i in range(len(t) - 1):
        if g[i] == 0.0:
            root = t[i]
        elif g[i] * g[i + 1] < 0.0:
            root = _bisect(gap, t[i], t[i + 1], g[i])
        else:
            continue
        p = arc(root)
        tp = float(arc.t_of_s(float(lift(p[0], p[1])[1])))
        if tp - root > min_gap:
            return _witness(arc, lift, root, tp)
    return None


def _lemma1_general(arc: _PLArc, lift: Lift, xi, si, min_gap):
    image = np.column_stack((xi, si))
    t = arc.t
    for i, j, a, b in sorted(_seg_intersections(image, arc.pts)):
        ts, tp = t[i] + a * (t[i + 1] - t[i]), t[j] + b * (t[j + 1] - t[j])
        for _ in range(50):
            p = arc(ts)
            F = np.array(lift(p[0], p[1]), dtype=float) - arc(tp)
            if np.hypot(*F) < 1e-14:
                break
            h = 1e-8
            pp = arc(ts + h)
            dF_dt = (np.array(lift(pp[0], pp[1]), dtype=float) - np.array(lift(p[0], p[1]), dtype=float)) / h
            dG_dtp = -(arc(tp + h) - arc(tp)) / h
            J = np.column_stack((dF_dt, dG_dtp))
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            ts, tp = ts + step[0], tp + step[1]
        if 0.0 < ts < 1.0 and 0.0 < tp < 1.0 and tp - ts > min_gap:
            w = _witness(arc, lift, ts, tp)
            if w.residual < 1e-10:
                return w
    return None


def lemma2_verifier(adapter: AnnulusAdapter, arc1, arc2) -> bool:
    """Whether the image of ``arc1`` meets ``arc2`` in the annulus."""
    p1, _ = _check_arc(arc1)
    p2, mono2 = _check_arc(arc2)
    if _arcs_meet(p1, p2):
        raise DomainError("arcs must be disjoint")
    lift = Lift(adapter, 0)
    g1, xi, si = _densify_for_image(_PLArc(p1), lift)
    if mono2:
        a2 = _PLArc(p2)
        h = xi - np.interp(a2.t_of_s(si), a2.t, p2[:, 0])
        fl = np.floor(h)
        return bool(np.any(h == fl) or np.any(np.diff(fl) != 0.0))
    image = np.column_stack((xi, si))
    lo = math.floor(np.min(xi) - np.max(p2[:, 0])) - 1
    hi = math.ceil(np.max(xi) - np.min(p2[:, 0])) + 1
    for j in range(lo, hi + 1):
        if _seg_intersections(image, p2 + np.array([j, 0.0])):
            return True
    return False


def _arcs_meet(p1: np.ndarray, p2: np.ndarray) -> bool:
    lo = math.floor(np.min(p1[:, 0]) - np.max(p2[:, 0])) - 1
    hi = math.ceil(np.max(p1[:, 0]) - np.min(p2[:, 0])) + 1
    return any(_seg_intersections(p1, p2 + np.array([j, 0.0])) for j in range(lo, hi + 1))
