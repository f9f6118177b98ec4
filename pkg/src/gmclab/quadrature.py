"""Quadrature helpers: smooth adaptive integrals and log-singular panels.

The log-singular machinery integrates f(w) * log(1/|w - z|) for an interior
singularity z.  Two routes are provided:

* ``log_panel_integral`` -- f given by linear interpolation on a fixed grid;
  each panel's (linear) x (log) product is integrated in closed form, so the
  only error is the interpolation error of f.
* ``adaptive_log_quad`` -- f given as a callable; classic singularity
  subtraction (the log moment is integrated exactly, the remainder is
  continuous and handled by scipy's adaptive quadrature).
"""

import numpy as np
from scipy.integrate import quad

from .errors import NonConvergenceError


def integrate_smooth(f, a, b, tol=1e-10, limit=200):
    """Adaptive quadrature of a smooth integrand, with an error guard."""
    val, err = quad(f, a, b, epsabs=tol, epsrel=tol, limit=limit)
    if err > 10 * tol * max(1.0, abs(val)):
        raise NonConvergenceError(
            f"quadrature error {err:.2e} above tolerance {tol:.2e} on [{a}, {b}]"
        )
    return val


def _antideriv_log0(u):
    """Antiderivative of log|u|: u log|u| - u (continuous through 0)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0.0
    out[nz] = u[nz] * np.log(np.abs(u[nz])) - u[nz]
    return out


def _antideriv_log1(u):
    """Antiderivative of u log|u|: u^2/2 log|u| - u^2/4."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0.0
    out[nz] = 0.5 * u[nz] ** 2 * np.log(np.abs(u[nz])) - 0.25 * u[nz] ** 2
    return out


def log_moment(a, b, z):
    """Exact integral of log(1/|w - z|) over [a, b]."""
    lo, hi = np.array([a - z]), np.array([b - z])
    return -float((_antideriv_log0(hi) - _antideriv_log0(lo))[0])


def log_panel_integral(w, fw, z):
    """Integral of interp(f)(w) * log(1/|w - z|) dw over the grid range.

    ``w`` is an increasing grid, ``fw`` the function values; the integrand's
    log factor is integrated exactly against the piecewise-linear
    interpolant, so interior singularities (z inside the range) cost nothing.
    """
    w = np.asarray(w, dtype=float)
    fw = np.asarray(fw, dtype=float)
    a, b = w[:-1], w[1:]
    slope = (fw[1:] - fw[:-1]) / (b - a)
    # f(w) = c0 + c1 (w - z) on each panel
    c1 = slope
    c0 = fw[:-1] + slope * (z - a)
    u0, u1 = a - z, b - z
    i0 = _antideriv_log0(u1) - _antideriv_log0(u0)
    i1 = _antideriv_log1(u1) - _antideriv_log1(u0)
    return float(-np.sum(c0 * i0 + c1 * i1))


def adaptive_log_quad(f, a, b, z, tol=1e-9):
    """Integral of f(w) log(1/|w - z|) dw with singularity subtraction at z.

    Requires f continuous; for z outside [a, b] this is plain adaptive
    quadrature.
    """
    if z <= a or z >= b:
        return integrate_smooth(lambda w: f(w) * np.log(1.0 / abs(w - z)), a, b, tol)
    fz = f(z)

    def regular(w):
        d = abs(w - z)
        if d == 0.0:
            return 0.0
        return (f(w) - fz) * np.log(1.0 / d)

    # split at the singular point so QUADPACK sees endpoint behaviour only
    val = integrate_smooth(regular, a, z, tol) + integrate_smooth(regular, z, b, tol)
    return val + fz * log_moment(a, b, z)


def gauss_legendre(f, a, b, n=64):
    """Fixed-order Gauss-Legendre rule; f must accept numpy arrays."""
    x, wts = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.sum(wts * f(mid + half * x)))
