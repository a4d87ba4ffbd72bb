"""Pure-Python reference versions of the hot loops.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
"""

import math

import numpy as np


def radial_poly(r):
    r2 = r * r
    return (r2 - 1.0) * (r2 - 4.0) * (r2 - 9.0) * (r2 - 16.0) * (r2 - 25.0)


def alpha(mu, r):
    return r + mu * r * radial_poly(r)


def alpha_inverse(mu, rho):
    """Invert the radial map by safeguarded Newton iteration.

    Assumes alpha is increasing on the bracket, which holds for the
    validated parameter range.
    """
    if rho <= 0.0:
        return 0.0
    lo, hi = 0.0, max(rho, 1.0)
    while alpha(mu, hi) < rho:
        hi *= 2.0
    r = rho
    for _ in range(100):
        f = alpha(mu, r) - rho
        if f > 0.0:
            hi = r
        else:
            lo = r
        h = 1e-7 * max(1.0, r)
        df = (alpha(mu, r + h) - alpha(mu, r - h)) / (2.0 * h)
        step = f / df if df > 0.0 else 0.0
        r_new = r - step
        if not (lo < r_new < hi) or df <= 0.0:
            r_new = 0.5 * (lo + hi)
        if abs(r_new - r) <= 1e-16 * max(1.0, r):
            return r_new
        r = r_new
    return r


def radial_orbit(mu, r0, n):
    out = np.empty(n + 1)
    r = r0
    out[0] = r
    for i in range(1, n + 1):
        r = alpha(mu, r)
        out[i] = r
    return out


def _alpha_inverse_vec(mu, rho):
    lo = np.zeros_like(rho)
    hi = np.maximum(rho, 1.0)
    bad = alpha(mu, hi) < rho
    while bad.any():
        hi[bad] *= 2.0
        bad = alpha(mu, hi) < rho
    r = rho.copy()
    for _ in range(100):
        f = alpha(mu, r) - rho
        up = f > 0.0
        hi = np.where(up, r, hi)
        lo = np.where(up, lo, r)
        h = 1e-7 * np.maximum(1.0, r)
        df = (alpha(mu, r + h) - alpha(mu, r - h)) / (2.0 * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            r_new = r - f / df
        fallback = ~((lo < r_new) & (r_new < hi)) | (df <= 0.0)
        r_new = np.where(fallback, 0.5 * (lo + hi), r_new)
        if np.all(np.abs(r_new - r) <= 1e-16 * np.maximum(1.0, r)):
            return r_new
        r = r_new
    return r


def polar_iterate(mu, beta_coeff, xs, ys, n_iter, inverse, target_r, tol, check_every):
    """Iterate the polar map (or its inverse) on a batch of points in place.

    Stops early once every point lies within ``tol`` of the circle of radius
    ``target_r`` (checked every ``check_every`` iterations; pass a negative
    ``target_r`` to disable). Returns the number of iterations done.
    """
    x = np.array(xs, dtype=float)
    y = np.array(ys, dtype=float)
    done = 0
    for it in range(1, n_iter + 1):
        rho = np.hypot(x, y)
        th = np.arctan2(y, x)
        if inverse:
            r = _alpha_inverse_vec(mu, rho)
            th = th - beta_coeff * r * r
        else:
            r = alpha(mu, rho)
            th = th + beta_coeff * rho * rho
        moving = rho != 0.0
        x = np.where(moving, r * np.cos(th), x)
        y = np.where(moving, r * np.sin(th), y)
        done = it
        if target_r >= 0.0 and it % check_every == 0:
            if np.max(np.abs(np.hypot(x, y) - target_r)) < tol:
                break
    xs[:] = x
    ys[:] = y
    return done


def lorenz_rk4(sigma, r, b, x0, y0, z0, h, n):
    out = np.empty((n + 1, 3))
    x, y, z = x0, y0, z0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    hh = 0.5 * h
    for i in range(1, n + 1):
        k1x = sigma * (y - x)
        k1y = r * x - y - x * z
        k1z = x * y - b * z
        xa, ya, za = x + hh * k1x, y + hh * k1y, z + hh * k1z
        k2x = sigma * (ya - xa)
        k2y = r * xa - ya - xa * za
        k2z = xa * ya - b * za
        xa, ya, za = x + hh * k2x, y + hh * k2y, z + hh * k2z
        k3x = sigma * (ya - xa)
        k3y = r * xa - ya - xa * za
        k3z = xa * ya - b * za
        xa, ya, za = x + h * k3x, y + h * k3y, z + h * k3z
        k4x = sigma * (ya - xa)
        k4y = r * xa - ya - xa * za
        k4z = xa * ya - b * za
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            return out[:i]
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = z
    return out


def lorenz_response_rk4(r, b, drive, y0, z0, h):
    """RK4 for the x-driven (Y, Z) subsystem.

    ``drive`` holds x at the step nodes; the midpoint value is the linear
    interpolant (average of the two nodes).
    """
    n = drive.shape[0] - 1
    out = np.empty((n + 1, 2))
    y, z = y0, z0
    out[0, 0] = y
    out[0, 1] = z
    hh = 0.5 * h
    for i in range(n):
        xa = drive[i]
        xc = drive[i + 1]
        xb = 0.5 * (xa + xc)
        k1y = r * xa - y - xa * z
        k1z = xa * y - b * z
        ya, za = y + hh * k1y, z + hh * k1z
        k2y = r * xb - ya - xb * za
        k2z = xb * ya - b * za
        ya, za = y + hh * k2y, z + hh * k2z
        k3y = r * xb - ya - xb * za
        k3z = xb * ya - b * za
        ya, za = y + h * k3y, z + h * k3z
        k4y = r * xc - ya - xc * za
        k4z = xc * ya - b * za
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        if not (math.isfinite(y) and math.isfinite(z)):
            return out[: i + 1]
        out[i + 1, 0] = y
        out[i + 1, 1] = z
    return out
