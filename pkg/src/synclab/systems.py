"""Built-in dynamical systems, the fixed-step integrator and orbit generation.

Maps expose ``__call__`` (one point) and ``apply_batch`` (rows of points);
flows expose ``field`` and ``field_batch``. Every system carries ``kind``
(``"map"`` or ``"flow"``) and ``dim``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class DivergedError(RuntimeError):
    """A non-finite state appeared during iteration or integration.

    ``last_index`` is the index of the last finite state and ``partial`` holds
    whatever was computed up to it.
    """

    def __init__(self, message, last_index, partial=None):
        super().__init__(message)
        self.last_index = last_index
        self.partial = partial


# --------------------------------------------------------------------------
# the polar map


@dataclass(frozen=True)
class PlanarPolarMap:
    """Plane map ``(theta, r) -> (theta + beta(r), alpha(r))`` in polar form.

    ``alpha(r) = r + mu * r * prod_k (r^2 - k)`` over the squared radii
    ``alpha_roots`` and ``beta(r) = beta_coeff * r^2`` radians.
    """

    mu: float = 1e-7
    beta_coeff: float = TWO_PI
    alpha_roots: tuple = field(default=(1.0, 4.0, 9.0, 16.0, 25.0), init=False)

    kind = "map"
    dim = 2

    def alpha(self, r):
        return alpha_eval(self, r)

    def beta(self, r):
        r = np.asarray(r, dtype=float)
        return self.beta_coeff * r * r

    def __call__(self, p):
        return polar_apply(self, p)

    def apply_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        rho = np.hypot(x, y)
        th = np.arctan2(y, x) + self.beta_coeff * rho * rho
        r = _alpha_array(self.mu, rho)
        out = np.column_stack((r * np.cos(th), r * np.sin(th)))
        out[rho == 0.0] = 0.0
        return out

    def inverse_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[:, 0], pts[:, 1]
        rho = np.hypot(x, y)
        r = np.array([kernels.alpha_inverse(self.mu, float(v)) for v in rho])
        th = np.arctan2(y, x) - self.beta_coeff * r * r
        out = np.column_stack((r * np.cos(th), r * np.sin(th)))
        out[rho == 0.0] = 0.0
        return out

    def lift_turns(self, pts):
        """Continuous angular displacement of the natural lift, in turns."""
        pts = np.asarray(pts, dtype=float)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        return self.beta_coeff * rho * rho / TWO_PI

    def to_config(self):
        return {"system": "polar", "mu": self.mu, "beta_coeff": self.beta_coeff}


def _alpha_array(mu, r):
    r2 = r * r
    poly = (r2 - 1.0) * (r2 - 4.0) * (r2 - 9.0) * (r2 - 16.0) * (r2 - 25.0)
    return r + mu * r * poly


def alpha_eval(m: PlanarPolarMap, r):
    """Radial part of the polar map; accepts scalars or arrays."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0):
        raise DomainError("alpha is defined for r >= 0")
    if arr.ndim == 0:
        return kernels.alpha(m.mu, float(arr))
    return _alpha_array(m.mu, arr)


def polar_apply(m: PlanarPolarMap, p) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    rho = math.hypot(x, y)
    if rho == 0.0:
        return np.zeros(2)
    th = math.atan2(y, x) + m.beta_coeff * rho * rho
    r = kernels.alpha(m.mu, rho)
    return np.array([r * math.cos(th), r * math.sin(th)])


def classify_radial_fixed_points(m: PlanarPolarMap, delta: float = 1e-3, floor: float = 1e-15):
    """Label each radial fixed point 0..5 as ``sink``, ``source`` or ``inconclusive``.

    The origin is judged from the right side only (alpha is odd in r).
    """
    out = []
    for r in (0.0, 1.0, 2.0, 3.0, 4.0, 5.0):
        right = kernels.alpha(m.mu, r + delta) - (r + delta)
        if r == 0.0:
            left = -right
        else:
            left = kernels.alpha(m.mu, r - delta) - (r - delta)
        if abs(left) < floor or abs(right) < floor:
            label = "inconclusive"
        elif left > 0.0 and right < 0.0:
            label = "sink"
        elif left < 0.0 and right > 0.0:
            label = "source"
        else:
            label = "inconclusive"
        out.append((r, label))
    return out


@dataclass(frozen=True)
class HomeomorphismReport:
    min_alpha_slope: float
    argmin_radius: float
    ok: bool


def validate_homeomorphism(m: PlanarPolarMap, r_max: float = 6.0, grid_n: int = 100_000):
    """Check that alpha is strictly increasing on [0, r_max] by finite differences."""
    if grid_n < 1000:
        raise DomainError("grid_n must be at least 1000")
    r = np.linspace(0.0, r_max, grid_n + 1)
    slope = np.diff(_alpha_array(m.mu, r)) / np.diff(r)
    i = int(np.argmin(slope))
    return HomeomorphismReport(float(slope[i]), float(r[i]), bool(slope[i] > 0.0))


# --------------------------------------------------------------------------
# Henon, Lorenz, linear


@dataclass(frozen=True)
class HenonMap:
    a: float = 1.4
    b: float = 0.3

    kind = "map"
    dim = 2

    def __post_init__(self):
        if self.b == 0.0:
            raise DomainError("Henon map needs b != 0 to be invertible")

    def __call__(self, p):
        return henon_apply(self, p)

    def apply_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        u, v = pts[:, 0], pts[:, 1]
        return np.column_stack((v, 1.0 - self.a * v * v + self.b * u))

    def inverse_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        up, vp = pts[:, 0], pts[:, 1]
        return np.column_stack(((vp - 1.0 + self.a * up * up) / self.b, up))

    def to_config(self):
        return {"system": "henon", "a": self.a, "b": self.b}


def henon_apply(m: HenonMap, p) -> np.ndarray:
    u, v = float(p[0]), float(p[1])
    return np.array([v, 1.0 - m.a * v * v + m.b * u])


@dataclass(frozen=True)
class LorenzSystem:
    sigma: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0

    kind = "flow"
    dim = 3

    def __post_init__(self):
        if not (self.sigma > 0.0 and self.b > 0.0):
            raise DomainError("Lorenz parameters need sigma > 0 and b > 0")

    def field(self, p):
        return lorenz_field(self, p)

    def field_batch(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
        return np.column_stack(
            (self.sigma * (y - x), self.r * x - y - x * z, x * y - self.b * z)
        )

    def to_config(self):
        return {"system": "lorenz", "sigma": self.sigma, "r": self.r, "b": self.b}


def lorenz_field(s: LorenzSystem, p) -> np.ndarray:
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    return np.array([s.sigma * (y - x), s.r * x - y - x * z, x * y - s.b * z])


class LinearSystem:
    """``p -> A p`` (kind ``"map"``) or ``dp/dt = A p`` (kind ``"flow"``)."""

    def __init__(self, matrix, kind: str = "map", det_tol: float = 1e-12):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("matrix must be square")
        if kind not in ("map", "flow"):
            raise DomainError(f"unknown kind {kind!r}")
        if kind == "map" and abs(np.linalg.det(a)) <= det_tol:
            raise DomainError("linear map must be invertible")
        a.setflags(write=False)
        self.matrix = a
        self.kind = kind
        self.dim = a.shape[0]

    def __repr__(self):
        return f"LinearSystem({self.matrix.tolist()!r}, kind={self.kind!r})"

    def __call__(self, p):
        return self.matrix @ np.asarray(p, dtype=float)

    def apply_batch(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def inverse_batch(self, pts):
        return np.linalg.solve(self.matrix, np.asarray(pts, dtype=float).T).T

    def field(self, p):
        return self.matrix @ np.asarray(p, dtype=float)

    def field_batch(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def to_config(self):
        return {"system": "linear", "matrix": self.matrix.tolist(), "kind": self.kind}


def apply_batch(system, pts):
    """Apply a map to rows of points, falling back to a Python loop."""
    fn = getattr(system, "apply_batch", None)
    if fn is not None:
        return fn(pts)
    pts = np.asarray(pts, dtype=float)
    return np.array([np.asarray(system(p), dtype=float) for p in pts]).reshape(pts.shape[0], -1)


# --------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray
    time_step: float = 1.0

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] == 0:
            raise ValueError("trajectory needs a nonempty (n, d) state array")

    def __len__(self):
        return self.states.shape[0]

    @property
    def times(self):
        return np.arange(len(self)) * self.time_step


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    method: str = "rk4"

    def __post_init__(self):
        if not self.h > 0.0:
            raise DomainError("step h must be positive")
        if self.method != "rk4":
            raise DomainError("only fixed-step rk4 is supported")


def n_steps_for(T: float, h: float) -> int:
    n = int(round(T / h))
    if n < 1 or abs(n * h - T) > 1e-9 * max(1.0, abs(T)):
        raise DomainError(f"step {h} does not divide horizon {T}")
    return n


def rk4_step(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field_or_system, x0, T: float, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Fixed-step RK4 trajectory sampled at every step.

    Lorenz systems go through the compiled kernel; anything else is
    integrated in Python. Raises DivergedError on a non-finite state.
    """
    if not T > 0.0:
        raise DomainError("T must be positive")
    n = n_steps_for(T, cfg.h)
    x0 = np.asarray(x0, dtype=float)
    if isinstance(field_or_system, LorenzSystem):
        s = field_or_system
        out = kernels.lorenz_rk4(s.sigma, s.r, s.b, float(x0[0]), float(x0[1]), float(x0[2]), cfg.h, n)
        if out.shape[0] != n + 1:
            raise DivergedError("non-finite state in Lorenz integration", out.shape[0] - 1,
                                Trajectory(out, cfg.h))
        return Trajectory(out, cfg.h)
    f = getattr(field_or_system, "field", field_or_system)
    states = np.empty((n + 1, x0.size))
    states[0] = x0
    x = x0
    for i in range(1, n + 1):
        x = rk4_step(f, x, cfg.h)
        if not np.all(np.isfinite(x)):
            raise DivergedError("non-finite state in integration", i - 1, Trajectory(states[:i], cfg.h))
        states[i] = x
    return Trajectory(states, cfg.h)


def orbit(m, x0, n: int) -> Trajectory:
    """``n + 1`` states of the forward orbit of ``x0`` under the map ``m``."""
    if n < 0:
        raise DomainError("n must be >= 0")
    x = np.asarray(x0, dtype=float)
    states = np.empty((n + 1, x.size))
    states[0] = x
    for i in range(1, n + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = np.asarray(m(x), dtype=float)
        if not np.all(np.isfinite(x)):
            raise DivergedError("non-finite state in orbit", i - 1, Trajectory(states[:i]))
        states[i] = x
    return Trajectory(states, 1.0)


def radial_orbit(m: PlanarPolarMap, r0: float, n: int) -> np.ndarray:
    """Radii of an orbit of the polar map (the radial dynamics decouple)."""
    if r0 < 0.0:
        raise DomainError("radius must be >= 0")
    return kernels.radial_orbit(m.mu, float(r0), int(n))


# --------------------------------------------------------------------------
# configuration


def system_from_config(cfg: dict):
    """Build a system from ``{"system": "polar" | "henon" | "lorenz" | "linear", ...}``."""
    kind = cfg.get("system")
    if kind == "polar":
        return PlanarPolarMap(mu=float(cfg.get("mu", 1e-7)), beta_coeff=float(cfg.get("beta_coeff", TWO_PI)))
    if kind == "henon":
        return HenonMap(a=float(cfg.get("a", 1.4)), b=float(cfg.get("b", 0.3)))
    if kind == "lorenz":
        return LorenzSystem(
            sigma=float(cfg.get("sigma", 10.0)), r=float(cfg.get("r", 28.0)), b=float(cfg.get("b", 8.0 / 3.0))
        )
    if kind == "linear":
        if "matrix" not in cfg:
            raise DomainError("linear system config needs 'matrix'")
        return LinearSystem(cfg["matrix"], kind=cfg.get("kind", "map"))
    raise DomainError(f"unknown system {kind!r}")


def as_points(pts: Sequence) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    return arr.reshape(1, -1) if arr.ndim == 1 else arr
