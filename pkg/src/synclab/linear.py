"""Per-structure synchronizability decisions for linear maps and flows.

Imposing the drive coordinates of a linear system leaves the response error
evolving under the response block ``B`` of ``T A T^-1``. A map synchronizes
iff the spectral radius of ``B`` is below 1, a flow iff its spectral
abscissa is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .structure import ProductStructure
from .systems import DomainError

BORDERLINE_MARGIN = 1e-9


@dataclass
class LinearSyncReport:
    structure: ProductStructure
    response_block: np.ndarray
    criterion_value: float
    synchronizable: bool
    kind: str = "map"
    borderline: bool = False
    method: str = "power"
    notes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "structure": self.structure.to_config(),
            "response_block": self.response_block.tolist(),
            "criterion": "spectral_radius" if self.kind == "map" else "spectral_abscissa",
            "criterion_value": self.criterion_value,
            "synchronizable": self.synchronizable,
            "borderline": self.borderline,
            "method": self.method,
            "notes": self.notes,
        }


def response_block(A, s: ProductStructure) -> np.ndarray:
    """Response rows and columns of ``T A T^-1`` (the offset plays no role)."""
    A = np.asarray(A, dtype=float)
    if A.shape != (s.dim, s.dim):
        raise DomainError("matrix and structure dimensions differ")
    C = s.transform @ A @ s._inv
    r = list(s.response)
    return C[np.ix_(r, r)]


# --------------------------------------------------------------------------
# spectral radius


def _ritz_radius(M, Q):
    """Largest Ritz modulus for each orthonormal block in the stack ``Q``."""
    H = np.swapaxes(Q, -1, -2) @ M @ Q
    if H.shape[-1] == 1:
        return np.abs(H[:, 0, 0])
    tr = H[:, 0, 0] + H[:, 1, 1]
    det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
    disc = tr * tr - 4.0 * det
    sq = np.sqrt(np.abs(disc))
    real = np.maximum(np.abs(0.5 * (tr + sq)), np.abs(0.5 * (tr - sq)))
    return np.where(disc >= 0.0, real, np.sqrt(np.abs(det)))


def power_spectral_radius(B, iters: int = 100, restarts: int = 5, seed: int = 0,
                          presquare: int = 0, rtol: float = 1e-10):
    """Spectral radius by block power iteration.

    Uses a two-vector orthogonal iteration so a dominant complex pair
    converges too; the estimate is the largest Ritz modulus over the
    restarts (run together as one stack). With ``presquare = s`` the
    iteration runs on ``B^(2^s)`` (normalized while squaring) and the
    ``2^s``-th root is taken, which widens small spectral gaps.
    Returns ``(rho, converged)``.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if n == 1:
        return abs(B[0, 0]), True
    log_scale = 0.0
    M = B.copy()
    for _ in range(presquare):
        nrm = np.linalg.norm(M, 1)
        if nrm == 0.0:
            return 0.0, True
        M = M / nrm
        log_scale = 2.0 * (log_scale + math.log(nrm))
        M = M @ M
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((restarts, n, min(2, n))))
    est = prev = np.zeros(restarts)
    for _ in range(iters):
        Z = M @ Q
        if not np.any(Z):
            return 0.0, True
        Q, _ = np.linalg.qr(Z)
        prev, est = est, _ritz_radius(M, Q)
    i = int(np.argmax(est))
    best = float(est[i])
    if best == 0.0:
        return 0.0, True
    converged = bool(abs(best - prev[i]) <= rtol * best)
    return math.exp((math.log(best) + log_scale) / 2 ** presquare), converged


def closed_form_spectral_radius(B) -> float:
    """Exact radius for blocks of size <= 3 from the characteristic polynomial."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if n == 1:
        return abs(B[0, 0])
    if n == 2:
        tr = B[0, 0] + B[1, 1]
        det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
        disc = tr * tr - 4.0 * det
        if disc >= 0.0:
            sq = math.sqrt(disc)
            # avoid cancellation in the smaller root
            big = 0.5 * (tr + math.copysign(sq, tr))
            small = det / big if big != 0.0 else 0.0
            return max(abs(big), abs(small))
        return math.sqrt(det)
    if n == 3:
        c2 = -np.trace(B)
        c1 = (B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0] + B[0, 0] * B[2, 2] - B[0, 2] * B[2, 0]
              + B[1, 1] * B[2, 2] - B[1, 2] * B[2, 1])
        c0 = -np.linalg.det(B)
        return float(np.max(np.abs(np.roots([1.0, c2, c1, c0]))))
    raise DomainError("closed form only for blocks of size <= 3")


def spectral_radius(B, iters: int = 100, restarts: int = 5, seed: int = 0, presquare: int = 0):
    """Spectral radius with a cross-check; returns ``(rho, method, notes)``.

    Power iteration is always run. For blocks up to 3x3 the characteristic
    polynomial value is exact and wins any disagreement; for larger blocks a
    stalled iteration falls back to the 2-norm upper bound.
    """
    B = np.asarray(B, dtype=float)
    rho, converged = power_spectral_radius(B, iters, restarts, seed, presquare)
    notes = {"power_estimate": rho, "power_converged": converged}
    if B.shape[0] <= 3:
        exact = closed_form_spectral_radius(B)
        notes["closed_form"] = exact
        notes["cross_check_delta"] = abs(exact - rho)
        return exact, "closed_form", notes
    if not converged:
        return float(np.linalg.norm(B, 2)), "norm_bound", notes
    return rho, "power", notes


def decide_map(A, s: ProductStructure, seed: int = 0) -> LinearSyncReport:
    A = np.asarray(A, dtype=float)
    if abs(np.linalg.det(A)) <= 1e-12:
        raise DomainError("linear map must be invertible")
    B = response_block(A, s)
    rho, method, notes = spectral_radius(B, seed=seed, presquare=0 if B.shape[0] <= 3 else 6)
    rho = float(rho)
    notes = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in notes.items()}
    borderline = abs(rho - 1.0) < BORDERLINE_MARGIN or method == "norm_bound"
    return LinearSyncReport(s, B, rho, bool(rho < 1.0 - BORDERLINE_MARGIN), "map", bool(borderline), method, notes)


def expm_taylor(M, order: int = 12) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series."""
    M = np.asarray(M, dtype=float)
    nrm = np.linalg.norm(M, 1)
    k = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    X = M / (2.0 ** k)
    term = np.eye(M.shape[0])
    out = term.copy()
    for j in range(1, order + 1):
        term = term @ X / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def decide_flow(A, s: ProductStructure, h: float = 1e-2, seed: int = 0) -> LinearSyncReport:
    """Spectral abscissa of the response block, ``log rho(exp(B h)) / h``."""
    B = response_block(A, s)
    for _ in range(60):
        E = expm_taylor(B * h)
        if np.all(np.isfinite(E)):
            break
        h *= 0.5
    else:
        raise DomainError("matrix exponential overflows at every step size")
    presquare = 0 if B.shape[0] <= 3 else 10
    rho, method, notes = spectral_radius(E, seed=seed, presquare=presquare)
    notes = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in notes.items()}
    notes["h"] = h
    abscissa = math.log(rho) / h if rho > 0.0 else -math.inf
    borderline = abs(abscissa) < BORDERLINE_MARGIN or method == "norm_bound"
    return LinearSyncReport(s, B, float(abscissa), bool(abscissa < -BORDERLINE_MARGIN), "flow", bool(borderline), method, notes)


def decide(A, s: ProductStructure, kind: str = "map", seed: int = 0) -> LinearSyncReport:
    if kind == "map":
        return decide_map(A, s, seed)
    if kind == "flow":
        return decide_flow(A, s, seed=seed)
    raise DomainError(f"unknown kind {kind!r}")


# --------------------------------------------------------------------------
# structure search


def _screen(A, s: ProductStructure, kind: str) -> bool:
    """Cheap exact pre-check for small response blocks; True means run the full decision."""
    B = response_block(A, s)
    if B.shape[0] > 3:
        return True
    if kind == "map":
        return closed_form_spectral_radius(B) < 1.0 - BORDERLINE_MARGIN
    return float(np.max(np.linalg.eigvals(B).real)) < 0.0


def search_structure(A, kind: str = "map", budget: int = 1000, seed: int = 0,
                     max_cond: float = 1e4) -> Optional[ProductStructure]:
    """First sampled single-drive structure whose report is synchronizable.

    Sample 0 is the identity transform; later samples have iid entries in
    [-1, 1], rejected above condition number ``max_cond``. Every drive
    index is tried per sample, lowest first. Returns None if the budget runs
    out, which does not mean no structure exists.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if budget < 1:
        raise DomainError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    for sample in range(budget):
        if sample == 0:
            T = np.eye(d)
        else:
            for _ in range(1000):
                T = rng.uniform(-1.0, 1.0, size=(d, d))
                if np.linalg.cond(T) <= max_cond:
                    break
            else:
                continue
        for i in range(d):
            s = ProductStructure(T, None, (i,))
            if not _screen(A, s, kind):
                continue
            rep = decide(A, s, kind, seed=sample)
            if rep.synchronizable and not rep.borderline:
                return s
    return None


@dataclass
class DensityResult:
    fraction: float
    found: int
    n_samples: int
    wilson_low: float
    wilson_high: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def random_matrix(rng, d: int, family: str = "gaussian") -> np.ndarray:
    if family == "gaussian":
        return rng.standard_normal((d, d))
    if family == "diagonal_one_inside":
        mods = np.sort(rng.uniform(0.1, 3.0, size=d))
        mods[0] = rng.uniform(0.05, 0.95)
        signs = rng.choice([-1.0, 1.0], size=d)
        return np.diag(mods * signs)
    raise DomainError(f"unknown matrix family {family!r}")


def density_experiment(d: int, n_samples: int, budget: int = 1000, seed: int = 0,
                       kind: str = "map", family: str = "gaussian") -> DensityResult:
    """Fraction of seeded random matrices for which the search finds a structure."""
    if d not in (2, 3, 4):
        raise DomainError("d must be 2, 3 or 4")
    if n_samples < 1:
        raise DomainError("fraction undefined for zero samples")
    rng = np.random.default_rng(seed)
    found = 0
    for i in range(n_samples):
        A = random_matrix(rng, d, family)
        if kind == "map" and abs(np.linalg.det(A)) <= 1e-12:
            continue
        if search_structure(A, kind, budget, seed=seed + 1 + i) is not None:
            found += 1
    lo, hi = wilson_interval(found, n_samples)
    return DensityResult(found / n_samples, found, n_samples, lo, hi)
