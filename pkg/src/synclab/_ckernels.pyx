# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_kernels_py`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, sin, hypot, fabs, isfinite

cnp.import_array()


cdef inline double _poly(double r) nogil:
    cdef double r2 = r * r
    return (r2 - 1.0) * (r2 - 4.0) * (r2 - 9.0) * (r2 - 16.0) * (r2 - 25.0)


cdef inline double _alpha(double mu, double r) nogil:
    return r + mu * r * _poly(r)


cdef double _alpha_inverse(double mu, double rho) nogil:
    cdef double lo = 0.0, hi, r, f, h, df, step, r_new
    cdef int k
    if rho <= 0.0:
        return 0.0
    hi = rho if rho > 1.0 else 1.0
    while _alpha(mu, hi) < rho:
        hi *= 2.0
    r = rho
    for k in range(100):
        f = _alpha(mu, r) - rho
        if f > 0.0:
            hi = r
        else:
            lo = r
        h = 1e-7 * (r if r > 1.0 else 1.0)
        df = (_alpha(mu, r + h) - _alpha(mu, r - h)) / (2.0 * h)
        step = f / df if df > 0.0 else 0.0
        r_new = r - step
        if not (lo < r_new < hi) or df <= 0.0:
            r_new = 0.5 * (lo + hi)
        if fabs(r_new - r) <= 1e-16 * (r if r > 1.0 else 1.0):
            return r_new
        r = r_new
    return r


def radial_poly(double r):
    return _poly(r)


def alpha(double mu, double r):
    return _alpha(mu, r)


def alpha_inverse(double mu, double rho):
    return _alpha_inverse(mu, rho)


def radial_orbit(double mu, double r0, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n + 1)
    cdef double r = r0
    cdef Py_ssize_t i
    out[0] = r
    for i in range(1, n + 1):
        r = _alpha(mu, r)
        out[i] = r
    return out


def polar_iterate(double mu, double beta_coeff, double[::1] xs, double[::1] ys,
                  Py_ssize_t n_iter, bint inverse, double target_r, double tol,
                  Py_ssize_t check_every):
    cdef Py_ssize_t npts = xs.shape[0]
    cdef Py_ssize_t it, i, done = 0
    cdef double x, y, rho, th, r, worst, d
    with nogil:
        for it in range(1, n_iter + 1):
            for i in range(npts):
                x = xs[i]
                y = ys[i]
                rho = hypot(x, y)
                if rho == 0.0:
                    continue
                th = atan2(y, x)
                if inverse:
                    r = _alpha_inverse(mu, rho)
                    th = th - beta_coeff * r * r
                else:
                    r = _alpha(mu, rho)
                    th = th + beta_coeff * rho * rho
                xs[i] = r * cos(th)
                ys[i] = r * sin(th)
            done = it
            if target_r >= 0.0 and it % check_every == 0:
                worst = 0.0
                for i in range(npts):
                    d = fabs(hypot(xs[i], ys[i]) - target_r)
                    if d > worst:
                        worst = d
                if worst < tol:
                    break
    return done


def lorenz_rk4(double sigma, double r, double b, double x0, double y0, double z0,
               double h, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n + 1, 3))
    cdef double[:, ::1] o = out
    cdef double x = x0, y = y0, z = z0, hh = 0.5 * h
    cdef double k1x, k1y, k1z, k2x, k2y, k2z, k3x, k3y, k3z, k4x, k4y, k4z
    cdef double xa, ya, za
    cdef Py_ssize_t i, stop = -1
    o[0, 0] = x
    o[0, 1] = y
    o[0, 2] = z
    with nogil:
        for i in range(1, n + 1):
            k1x = sigma * (y - x)
            k1y = r * x - y - x * z
            k1z = x * y - b * z
            xa = x + hh * k1x; ya = y + hh * k1y; za = z + hh * k1z
            k2x = sigma * (ya - xa)
            k2y = r * xa - ya - xa * za
            k2z = xa * ya - b * za
            xa = x + hh * k2x; ya = y + hh * k2y; za = z + hh * k2z
            k3x = sigma * (ya - xa)
            k3y = r * xa - ya - xa * za
            k3z = xa * ya - b * za
            xa = x + h * k3x; ya = y + h * k3y; za = z + h * k3z
            k4x = sigma * (ya - xa)
            k4y = r * xa - ya - xa * za
            k4z = xa * ya - b * za
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            if not (isfinite(x) and isfinite(y) and isfinite(z)):
                stop = i
                break
            o[i, 0] = x
            o[i, 1] = y
            o[i, 2] = z
    if stop >= 0:
        return out[:stop]
    return out


def lorenz_response_rk4(double r, double b, double[::1] drive, double y0, double z0,
                        double h):
    cdef Py_ssize_t n = drive.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n + 1, 2))
    cdef double[:, ::1] o = out
    cdef double y = y0, z = z0, hh = 0.5 * h
    cdef double xa, xb, xc, ya, za
    cdef double k1y, k1z, k2y, k2z, k3y, k3z, k4y, k4z
    cdef Py_ssize_t i, stop = -1
    o[0, 0] = y
    o[0, 1] = z
    with nogil:
        for i in range(n):
            xa = drive[i]
            xc = drive[i + 1]
            xb = 0.5 * (xa + xc)
            k1y = r * xa - y - xa * z
            k1z = xa * y - b * z
            ya = y + hh * k1y; za = z + hh * k1z
            k2y = r * xb - ya - xb * za
            k2z = xb * ya - b * za
            ya = y + hh * k2y; za = z + hh * k2z
            k3y = r * xb - ya - xb * za
            k3z = xb * ya - b * za
            ya = y + h * k3y; za = z + h * k3z
            k4y = r * xc - ya - xc * za
            k4z = xc * ya - b * za
            y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            if not (isfinite(y) and isfinite(z)):
                stop = i + 1
                break
            o[i + 1, 0] = y
            o[i + 1, 1] = z
    if stop >= 0:
        return out[:stop]
    return out
