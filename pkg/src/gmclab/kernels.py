"""Covariance kernels of the log-correlated field and their scalar functionals.

The composite kernel is K(x,y) = K0(x,y) + int_0^inf kappa(e^t |x-y|) dt with
K0 a bounded positive-definite part and kappa a compactly supported seed
("star-scale" part).  This module evaluates K and every derived object used
elsewhere: the truncated kernels K_t, the mollified kernels K_eps / K_{t,eps},
the scalar functionals ell_kappa, j_kappa, ell_theta, and the continuous
remainder V(s) = int_0^inf kappa(e^t s) dt + log s that isolates the log
singularity (V(0) = -j_kappa).

Everything here is a pure function of its inputs; tabulated forms are frozen
at construction.
"""

import json
from math import gamma as _gamma

import numpy as np
from scipy.special import betainc

from .errors import (
    DomainBoundaryError,
    InterpolationRangeError,
    NonConvergenceError,
    NotPositiveDefiniteError,
)
from .quadrature import gauss_legendre, integrate_smooth, log_panel_integral

_EIG_TOL = 1e-8  # Gram min-eig >= -_EIG_TOL * max-eig


def _as_points(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.shape[-1] != d:
        raise ValueError(f"points must have shape (n, {d})")
    return x


def gram_min_max_eig(mat):
    eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    return float(eigs[0]), float(eigs[-1])


def check_gram_psd(mat, what="kernel"):
    lo, hi = gram_min_max_eig(mat)
    if lo < -_EIG_TOL * max(hi, 1e-300):
        raise NotPositiveDefiniteError(
            f"{what} Gram matrix has min eig {lo:.3e} (max {hi:.3e})"
        )
    return lo, hi


def _sphere_area(d):
    """Surface area of the (d-1)-sphere."""
    return 2.0 * np.pi ** (d / 2.0) / _gamma(d / 2.0)


class ScaleKernel:
    """Compactly supported seed kappa of the star-scale decomposition.

    kappa(0) = 1, kappa(r) = 0 for r >= 1, kappa >= 0, Lipschitz, and
    (x, y) -> kappa(|x-y|) positive definite on R^d.
    """

    def __init__(self, form, dimension, lipschitz_bound, table=None):
        self.form = form
        self.dimension = int(dimension)
        self.lipschitz_bound = float(lipschitz_bound)
        self._table = table  # (r, value) arrays for the tabulated form
        self._k1_cache = None

    # -- constructors -------------------------------------------------

    @classmethod
    def triangle(cls):
        """(1-r)+; positive definite in d=1 by Polya's criterion."""
        return cls("triangle", 1, 1.0)

    @classmethod
    def ball_self_convolution(cls, dimension):
        """Normalized self-convolution of the radius-1/2 ball indicator.

        kappa_d(r) = I_{1-r^2}((d+1)/2, 1/2); positive definite in d by
        construction (its Fourier transform is |ball indicator hat|^2 >= 0).
        """
        r = np.linspace(0, 1, 4097)[1:-1]
        val = betainc((dimension + 1) / 2.0, 0.5, 1.0 - r**2)
        lip = float(np.max(np.abs(np.diff(val) / np.diff(r)))) * 1.05
        return cls("ball", dimension, lip)

    @classmethod
    def tabulated(cls, r, value, dimension):
        r = np.asarray(r, dtype=float)
        value = np.asarray(value, dtype=float)
        order = np.argsort(r)
        r, value = r[order], value[order]
        if r[0] > 0.0:
            raise ValueError("tabulated kappa must include r = 0")
        lip = float(np.max(np.abs(np.diff(value) / np.diff(r))))
        k = cls("tabulated", dimension, lip, table=(r, value))
        k.validate_pointwise()
        return k

    @classmethod
    def from_csv(cls, path, dimension):
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls.tabulated(data[:, 0], data[:, 1], dimension)

    # -- evaluation ----------------------------------------------------

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        if np.any(r < 0):
            raise ValueError("kappa argument must be nonnegative")
        out = np.zeros_like(r)
        inside = r < 1.0
        if self.form == "triangle":
            out[inside] = 1.0 - r[inside]
        elif self.form == "ball":
            out[inside] = betainc(
                (self.dimension + 1) / 2.0, 0.5, 1.0 - r[inside] ** 2
            )
        elif self.form == "tabulated":
            rt, vt = self._table
            if rt[-1] < 1.0 and np.any(r[inside] > rt[-1]):
                raise InterpolationRangeError(
                    f"r beyond tabulation range [0, {rt[-1]}]"
                )
            out[inside] = np.interp(r[inside], rt, vt)
        else:
            raise ValueError(f"unknown kappa form {self.form!r}")
        return float(out[0]) if scalar else out

    def scale_integral(self, rho):
        """k1(rho) = int_0^inf kappa(e^u rho) du = int_rho^1 kappa(v)/v dv.

        Zero for rho >= 1; diverges logarithmically as rho -> 0 (use V there).
        """
        rho = np.asarray(rho, dtype=float)
        scalar = rho.ndim == 0
        rho = np.atleast_1d(rho)
        if np.any(rho <= 0.0):
            raise ValueError("scale_integral needs rho > 0 (is +inf at 0)")
        out = np.log(1.0 / np.minimum(rho, 1.0)) + self.V(np.minimum(rho, 1.0))
        return float(out[0]) if scalar else out

    def V(self, s):
        """Continuous remainder V(s) = k1(s) + log s, with V(0) = -j_kappa.

        For s >= 1 the star part vanishes, so V(s) = log s.
        """
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        if self.form == "triangle":
            out = np.where(s < 1.0, s - 1.0, np.log(np.maximum(s, 1e-300)))
        else:
            out = np.empty_like(s)
            big = s >= 1.0
            out[big] = np.log(s[big])
            mid = ~big
            out[mid] = np.array([self._V_interp(v) for v in s[mid]])
        return float(out[0]) if scalar else out

    def _V_interp(self, s):
        """V on (0, 1) for non-closed-form kappa, from a cached table."""
        if self._k1_cache is None:
            grid = np.concatenate(
                [[0.0], np.exp(np.linspace(np.log(1e-9), 0.0, 2049))]
            )
            vals = np.zeros_like(grid)
            # V(1) = 0; integrate V'(v) = (1 - kappa(v))/v downward
            for i in range(len(grid) - 2, 0, -1):
                a, b = grid[i], grid[i + 1]
                vals[i] = vals[i + 1] - gauss_legendre(
                    lambda v: (1.0 - self(v)) / v, a, b, n=24
                )
            # below the grid kappa ~ 1 so V is constant to O(lip * 1e-9)
            vals[0] = vals[1]
            self._k1_cache = (grid, vals)
        grid, vals = self._k1_cache
        return float(np.interp(s, grid, vals))

    def khat_t(self, rho, t):
        """int_0^t kappa(e^u rho) du; equals t at rho = 0, bounded by t."""
        rho = np.asarray(rho, dtype=float)
        scalar = rho.ndim == 0
        rho = np.atleast_1d(rho)
        out = np.full_like(rho, float(t))
        pos = rho > 0.0
        s0 = np.minimum(rho[pos], 1.0)
        s1 = np.minimum(rho[pos] * np.exp(min(t, 700.0)), 1.0)
        # k1(s) = log(1/(s ^ 1)) + V(s ^ 1); difference stays finite at 0
        out[pos] = np.log(s1 / s0) + self.V(s0) - self.V(s1)
        out = np.maximum(out, 0.0)
        return float(out[0]) if scalar else out

    # -- validation & serialization ------------------------------------

    def validate_pointwise(self, n=1000):
        hi = 2.0
        if self.form == "tabulated" and self._table[0][-1] < 1.0:
            hi = float(self._table[0][-1])
        r = np.linspace(0, hi, n)
        v = self(r)
        if abs(self(0.0) - 1.0) > 1e-12:
            raise ValueError("kappa(0) must be 1")
        if np.any(v < -1e-15):
            raise ValueError("kappa must be nonnegative")
        if np.any(v[r >= 1.0] != 0.0):
            raise ValueError("kappa must vanish for r >= 1")
        slopes = np.abs(np.diff(v) / np.diff(r))
        if np.any(slopes > self.lipschitz_bound + 1e-9):
            raise ValueError("Lipschitz bound violated on test grid")

    def validate_gram(self, points=None, rng=None, n=512):
        if points is None:
            rng = rng or np.random.default_rng(0)
            points = rng.uniform(0, 2, size=(min(n, 512), self.dimension))
        pts = _as_points(points, self.dimension)
        dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        return check_gram_psd(self(dist), "kappa")

    def to_dict(self):
        d = {"form": self.form, "d": self.dimension,
             "parameters": {"lipschitz_bound": self.lipschitz_bound},
             "tolerance": _EIG_TOL}
        if self.form == "tabulated":
            r, v = self._table
            d["parameters"]["table"] = [list(map(float, r)), list(map(float, v))]
        return d

    @classmethod
    def from_dict(cls, d):
        if d["form"] == "triangle":
            return cls.triangle()
        if d["form"] == "ball":
            return cls.ball_self_convolution(d["d"])
        if d["form"] == "tabulated":
            r, v = d["parameters"]["table"]
            return cls.tabulated(np.array(r), np.array(v), d["d"])
        raise ValueError(f"unknown kappa form {d['form']!r}")


def default_scale_kernel(dimension):
    """Triangle in d=1, ball self-convolution in d>=2."""
    if dimension == 1:
        return ScaleKernel.triangle()
    return ScaleKernel.ball_self_convolution(dimension)


class SmoothKernel:
    """Bounded Holder-continuous positive definite part K0."""

    def __init__(self, form, holder_exponent=1.0, amplitude=0.0, width=1.0,
                 table=None, dimension=1):
        self.form = form
        self.holder_exponent = float(holder_exponent)
        self.amplitude = float(amplitude)
        self.width = float(width)
        self._table = table
        self.dimension = int(dimension)

    @classmethod
    def zero(cls, dimension=1):
        return cls("zero", dimension=dimension)

    @classmethod
    def gaussian_bump(cls, amplitude, width, dimension=1):
        """A exp(-|x-y|^2 / (2 w^2)): stationary, PD for A >= 0."""
        if amplitude < 0:
            raise ValueError("gaussian bump amplitude must be nonnegative")
        return cls("gaussian_bump", amplitude=amplitude, width=width,
                   dimension=dimension)

    @classmethod
    def tabulated2d(cls, points, values, holder_exponent=1.0):
        """Non-stationary kernel from Gram samples (nearest-sample lookup)."""
        pts = np.asarray(points, dtype=float)
        return cls("tabulated2d", holder_exponent=holder_exponent,
                   table=(pts, np.asarray(values, dtype=float)),
                   dimension=pts.shape[-1])

    @property
    def stationary(self):
        return self.form in ("zero", "gaussian_bump")

    def profile(self, rho):
        """Stationary profile K0(x,y) as a function of rho = |x-y|."""
        rho = np.asarray(rho, dtype=float)
        if self.form == "zero":
            return np.zeros_like(rho)
        if self.form == "gaussian_bump":
            return self.amplitude * np.exp(-(rho**2) / (2.0 * self.width**2))
        raise ValueError("non-stationary kernel has no radial profile")

    def __call__(self, x, y):
        x = _as_points(x, self.dimension)
        y = _as_points(y, self.dimension)
        if self.stationary:
            return self.profile(np.linalg.norm(x - y, axis=-1))
        pts, vals = self._table
        ix = np.argmin(np.linalg.norm(pts[None] - x[:, None], axis=-1), axis=1)
        iy = np.argmin(np.linalg.norm(pts[None] - y[:, None], axis=-1), axis=1)
        return vals[ix, iy]

    def validate_gram(self, points=None, rng=None, n=512):
        rng = rng or np.random.default_rng(1)
        if points is None:
            points = rng.uniform(0, 1, size=(min(n, 512), self.dimension))
        pts = _as_points(points, self.dimension)
        m = len(pts)
        g = np.asarray(
            self(np.repeat(pts, m, 0), np.tile(pts, (m, 1)))
        ).reshape(m, m)
        if not np.allclose(g, g.T, atol=1e-10):
            raise ValueError("K0 must be symmetric")
        return check_gram_psd(g, "K0")

    def to_dict(self):
        d = {"form": self.form, "d": self.dimension,
             "parameters": {"holder_exponent": self.holder_exponent},
             "tolerance": _EIG_TOL}
        if self.form == "gaussian_bump":
            d["parameters"].update(amplitude=self.amplitude, width=self.width)
        return d

    @classmethod
    def from_dict(cls, d):
        p = d.get("parameters", {})
        if d["form"] == "zero":
            return cls.zero(d["d"])
        if d["form"] == "gaussian_bump":
            return cls.gaussian_bump(p["amplitude"], p["width"], d["d"])
        raise ValueError(f"unknown K0 form {d['form']!r}")


class Mollifier:
    """Nonnegative unit-mass bump theta supported in the unit ball.

    theta_eps(x) = eps^{-d} theta(x/eps).  The self-correlation
    psi = theta * theta(-.) (supported in the ball of radius 2) is tabulated
    once and reused by every double-convolution integral.
    """

    _PSI_N = 4097

    def __init__(self, form, dimension, table=None):
        self.form = form
        self.dimension = int(dimension)
        self._table = table  # (r, value) radial samples for "tabulated"
        self.normalization_constant = self._compute_norm()
        self._psi = None          # d=1: (w grid, psi values) on [-2, 2]
        self._radial_mass = None  # d=2: (r grid, S(r) surface-mass density)
        self._check_invariants()

    @classmethod
    def standard_bump(cls, dimension=1):
        return cls("standard_bump", dimension)

    @classmethod
    def tabulated(cls, r, value, dimension=1):
        r = np.asarray(r, dtype=float)
        value = np.asarray(value, dtype=float)
        order = np.argsort(r)
        return cls("tabulated", dimension, table=(r[order], value[order]))

    def _raw_profile(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < 1.0
        if self.form == "standard_bump":
            out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
        elif self.form == "tabulated":
            rt, vt = self._table
            out[inside] = np.interp(r[inside], rt, vt, left=vt[0], right=0.0)
        else:
            raise ValueError(f"unknown mollifier form {self.form!r}")
        return out

    def _compute_norm(self):
        d = self.dimension
        if d == 1:
            return 2.0 * gauss_legendre(self._raw_profile, 0.0, 1.0, n=200)
        return gauss_legendre(
            lambda r: self._raw_profile(r) * _sphere_area(d) * r ** (d - 1),
            0.0, 1.0, n=200)

    def radial_profile(self, r):
        """Normalized theta as a function of |x| (unit scale)."""
        return self._raw_profile(r) / self.normalization_constant

    def density(self, x, eps=1.0):
        x = np.asarray(x, dtype=float)
        if self.dimension == 1:
            r = np.abs(x) / eps
        else:
            r = np.linalg.norm(np.atleast_2d(x), axis=-1) / eps
        return self.radial_profile(r) / eps**self.dimension

    def _check_invariants(self):
        r = np.linspace(0, 1.5, 1001)
        v = self.radial_profile(r)
        if np.any(v < -1e-15):
            raise ValueError("mollifier must be nonnegative")
        if np.any(v[r >= 1.0] != 0.0):
            raise ValueError("mollifier support must lie in the unit ball")
        d = self.dimension
        if d == 1:
            mass = 2.0 * gauss_legendre(self.radial_profile, 0.0, 1.0, n=200)
        else:
            mass = gauss_legendre(
                lambda r: self.radial_profile(r) * _sphere_area(d) * r ** (d - 1),
                0.0, 1.0, n=200)
        if abs(mass - 1.0) > 1e-8:
            raise ValueError(f"mollifier mass {mass} != 1 beyond tolerance")

    # -- self-correlation ----------------------------------------------

    def self_correlation(self):
        """d=1 tabulation (w, psi(w)) on [-2, 2], psi = theta * theta(-.)."""
        if self.dimension != 1:
            raise ValueError("self_correlation is the d=1 tabulation")
        if self._psi is None:
            w = np.linspace(-2.0, 2.0, self._PSI_N)
            psi = np.zeros_like(w)
            gl_x, gl_w = np.polynomial.legendre.leggauss(96)
            for i, wi in enumerate(w):
                a, b = max(-1.0, wi - 1.0), min(1.0, wi + 1.0)
                if b <= a:
                    continue
                v = 0.5 * (a + b) + 0.5 * (b - a) * gl_x
                psi[i] = 0.5 * (b - a) * np.sum(
                    gl_w * self.radial_profile(v)
                    * self.radial_profile(v - wi))
            # renormalize so the trapezoid mass of the tabulation is exactly
            # one: downstream panel integrals then preserve unit mass
            psi /= np.trapezoid(psi, w)
            self._psi = (w, psi)
        return self._psi

    def radial_mass(self):
        """d=2 tabulation (r, S(r)): S = surface-mass density of theta*theta(-.)."""
        if self.dimension != 2:
            raise ValueError("radial_mass is the d=2 tabulation")
        if self._radial_mass is None:
            r = np.linspace(0.0, 2.0, 1025)
            gl_x, gl_w = np.polynomial.legendre.leggauss(96)
            X = gl_x[:, None]
            Y = gl_x[None, :]
            W2 = gl_w[:, None] * gl_w[None, :]
            TH = self.radial_profile(np.sqrt(X**2 + Y**2))
            psi2 = np.empty_like(r)
            for i, rho in enumerate(r):
                psi2[i] = np.sum(W2 * TH
                                 * self.radial_profile(np.sqrt((X - rho) ** 2 + Y**2)))
            S = 2.0 * np.pi * r * psi2
            S /= np.trapezoid(S, r)  # exact unit mass on the tabulation
            self._radial_mass = (r, S)
        return self._radial_mass

    def moment2(self):
        """Second moment of psi (d=1): enters the ell_theta large-z law."""
        w, psi = self.self_correlation()
        return float(np.trapezoid(w**2 * psi, w))

    def sample(self, rng, n):
        """Rejection sampler from theta (for Monte Carlo oracles)."""
        d = self.dimension
        peak = float(self.radial_profile(np.array([0.0]))[0]) * 1.0001
        out = np.empty((0, d))
        while len(out) < n:
            m = int((n - len(out)) * (2.5 if d == 1 else 4.5)) + 16
            x = rng.uniform(-1, 1, size=(m, d))
            r = np.linalg.norm(x, axis=-1)
            keep = rng.uniform(0, peak, size=m) < self.radial_profile(r)
            out = np.concatenate([out, x[keep]])
        return out[:n, 0] if d == 1 else out[:n]

    def to_dict(self):
        d = {"form": self.form, "d": self.dimension,
             "parameters": {"normalization_constant": self.normalization_constant},
             "tolerance": 1e-8}
        if self.form == "tabulated":
            r, v = self._table
            d["parameters"]["table"] = [list(map(float, r)), list(map(float, v))]
        return d

    @classmethod
    def from_dict(cls, d):
        if d["form"] == "standard_bump":
            return cls.standard_bump(d["d"])
        if d["form"] == "tabulated":
            r, v = d["parameters"]["table"]
            return cls.tabulated(np.array(r), np.array(v), d["d"])
        raise ValueError(f"unknown mollifier form {d['form']!r}")


class KernelSpec:
    """Composite covariance K = K0 + star-scale part on a box domain."""

    def __init__(self, k0, kappa, dimension, domain_side=1.0):
        if kappa.dimension != dimension:
            raise ValueError("kappa dimension mismatch")
        self.k0 = k0
        self.kappa = kappa
        self.dimension = int(dimension)
        self.domain_side = float(domain_side)

    @classmethod
    def default(cls, dimension=1, domain_side=1.0, k0=None):
        return cls(k0 or SmoothKernel.zero(dimension),
                   default_scale_kernel(dimension), dimension, domain_side)

    def K_profile(self, rho):
        """K at distance rho (stationary K0 only); diverges at rho = 0."""
        rho = np.asarray(rho, dtype=float)
        s = np.minimum(np.maximum(rho, 1e-300), 1.0)
        return self.k0.profile(rho) + np.log(1.0 / s) + self.kappa.V(s)

    def L_profile(self, rho):
        """L(x,y) = K + log|x-y| at distance rho (continuous through 0)."""
        rho = np.asarray(rho, dtype=float)
        return self.k0.profile(rho) + self.kappa.V(rho)

    def L_diag(self, x=None):
        """L(x,x) = K0(x,x) - j_kappa (diagonal identity)."""
        if self.k0.stationary:
            k0_diag = float(self.k0.profile(np.array(0.0)))
        else:
            k0_diag = float(np.asarray(self.k0(x, x)).ravel()[0])
        return k0_diag - j_kappa(self.kappa)

    def to_dict(self):
        return {"k0": self.k0.to_dict(), "kappa": self.kappa.to_dict(),
                "d": self.dimension, "domain_side": self.domain_side}

    @classmethod
    def from_dict(cls, d):
        return cls(SmoothKernel.from_dict(d["k0"]),
                   ScaleKernel.from_dict(d["kappa"]), d["d"],
                   d.get("domain_side", 1.0))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ----------------------------------------------------------------------
# spec operations
# ----------------------------------------------------------------------

def eval_kappa(spec, r):
    """kappa(r); exact 0 for r >= 1."""
    return spec(r)


def ell_kappa(spec, r):
    """ell_kappa(r) = int_0^inf [kappa(e^{-t}) - kappa(e^{-t} r)] dt.

    Sign fixed so that int_0^t (1 - kappa(e^{-s} y)) ds -> ell + j_kappa and
    e^{-|gamma|^2 ell} is integrable for |gamma|^2 > d.
    """
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    if np.any(r < 0):
        raise ValueError("r must be nonnegative")
    if spec.form == "triangle":
        out = np.where(r <= 1.0, r - 1.0, np.log(np.maximum(r, 1e-300)))
    else:
        out = np.empty_like(r)
        for i, ri in enumerate(r):
            # substitute v = e^{-t}: int_0^1 [kappa(v) - kappa(v r)] / v dv
            out[i] = integrate_smooth(
                lambda v: (spec(v) - spec(min(v * ri, 1.5))) / v,
                1e-12, 1.0, tol=1e-10)
    return float(out[0]) if scalar else out


def j_kappa(spec):
    """j_kappa = int_0^inf (1 - kappa(e^{-t})) dt = int_0^1 (1-kappa(v))/v dv."""
    if spec.form == "triangle":
        return 1.0
    # divergence guard: the integrand must have decayed by t = 50
    if abs(1.0 - spec(np.exp(-50.0))) > 1e-9:
        raise NonConvergenceError("1 - kappa(e^{-t}) not converged at t = 50")
    return float(
        integrate_smooth(lambda v: (1.0 - spec(v)) / v, 1e-14, 1.0, tol=1e-11)
    )


def kernel_Q_t(spec, rho, t):
    """Q_t at distance rho: kappa(e^t rho)."""
    return spec.kappa(np.exp(t) * np.asarray(rho, dtype=float))


def kernel_K_t(spec, x, y, t):
    """K_t(x,y) = K0(x,y) + int_0^t kappa(e^u |x-y|) du."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = _as_points(x, spec.dimension)
    y = _as_points(y, spec.dimension)
    rho = np.linalg.norm(x - y, axis=-1)
    if spec.k0.stationary:
        k0 = spec.k0.profile(rho)
    else:
        k0 = np.asarray(spec.k0(x, y))
    out = k0 + spec.kappa.khat_t(rho, t)
    return float(out[0]) if out.size == 1 else out


def _mollified_star(spec, mollifier, rho, eps, t=None):
    """Double mollification of the star part at separation rho.

    d=1: int psi_eps(w) khat(|rho - w|) dw with the log part integrated
    exactly on the psi tabulation panels.  d=2: radial reduction using the
    harmonicity of the log kernel plus a smooth correction integral.
    """
    kap = spec.kappa
    if spec.dimension == 1:
        v, psi = mollifier.self_correlation()
        # substitute s = rho - eps*v: increasing nodes, density psi(v)/eps
        s = rho - eps * v[::-1]
        dens = psi[::-1] / eps
        return _star_conv_1d(kap, s, dens, t)
    if spec.dimension == 2:
        r, S = mollifier.radial_mass()     # unit-scale surface-mass density
        rg, Sg = eps * r, S / eps
        z = float(np.linalg.norm(rho)) if np.ndim(rho) else float(rho)
        if t is None:
            zr = np.maximum(rg, z)
            # log part exactly by the circle mean-value property, on |.| < 1
            log_part = float(np.trapezoid(
                Sg * np.where(zr < 1.0, np.log(1.0 / np.maximum(zr, 1e-300)), 0.0),
                rg))
            smooth = _circle_average(lambda u: kap.V(np.minimum(u, 1.0)), z, rg)
            # beyond |.| >= 1 khat_inf = 0 = log-part + V(1), consistent
            return log_part + float(np.trapezoid(Sg * smooth, rg))
        vals = _circle_average(lambda u: kap.khat_t(u, t), z, rg)
        return float(np.trapezoid(Sg * vals, rg))
    raise ValueError("mollified kernels implemented for d in {1, 2}")


def _conv_k1_exact(kap, s, dens):
    """int dens(s) k1(|s|) ds, log part exact against the linear density.

    k1(|s|) = log(1/|s|) + V(|s| ^ 1) + log(|s| v 1), zero beyond |s| >= 1.
    """
    absd = np.abs(s)
    rem = kap.V(np.minimum(absd, 1.0)) + np.log(np.maximum(absd, 1.0))
    smooth = float(np.trapezoid(dens * rem, s))
    return smooth + log_panel_integral(s, dens, 0.0)


def _star_conv_1d(kap, s, dens, t=None):
    """int dens(s) khat_t(|s|) ds via khat_t = k1(.) - k1(e^t .).

    Both pieces go through the same exact-log integrator; the second lives
    on the rescaled window |s| <= e^{-t}, refined so its own log singularity
    is resolved.
    """
    base = _conv_k1_exact(kap, s, dens)
    if t is None:
        return base
    cut = float(np.exp(-min(t, 700.0)))
    lo, hi = max(s[0], -cut), min(s[-1], cut)
    if hi <= lo:
        return base
    u = np.linspace(lo, hi, 2049)
    dens_u = np.interp(u, s, dens)
    # substitute w = e^t u: int dens(u) k1(e^t |u|) du
    sub = _conv_k1_exact(kap, np.exp(min(t, 700.0)) * u,
                         dens_u * np.exp(-min(t, 700.0)))
    return base - sub


def _circle_average(f, z, radii, n=64):
    """Mean of f(|z e1 - r e^{i phi}|) over phi, for each r in radii."""
    phi = (np.arange(n) + 0.5) * (2.0 * np.pi / n)
    cos = np.cos(phi)
    out = np.empty_like(radii)
    for i, r in enumerate(radii):
        sep = np.sqrt(np.maximum(z**2 + r**2 - 2.0 * z * r * cos, 0.0))
        out[i] = float(np.mean(f(sep)))
    return out


def _mollified_k0(spec, mollifier, rho, eps):
    k0 = spec.k0
    if k0.form == "zero":
        return 0.0
    if not k0.stationary:
        raise NotImplementedError("mollified non-stationary K0")
    if spec.dimension == 1:
        v, psi = mollifier.self_correlation()
        s = rho - eps * v[::-1]
        return float(np.trapezoid(psi[::-1] / eps * k0.profile(np.abs(s)), s))
    r, S = mollifier.radial_mass()
    rg, Sg = eps * r, S / eps
    vals = _circle_average(k0.profile, float(rho), rg)
    return float(np.trapezoid(Sg * vals, rg))


def kernel_K_eps(spec, mollifier, x, y, eps, t=None):
    """K_eps(x,y) (t=None) or K_{t,eps}(x,y): double mollifier convolution.

    Points must keep a 2*eps margin inside the spec's box domain.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = _as_points(x, spec.dimension)
    y = _as_points(y, spec.dimension)
    _check_margin(spec, x, eps)
    _check_margin(spec, y, eps)
    rho = float(np.linalg.norm((x - y)[0]))
    return _mollified_star(spec, mollifier, rho, eps, t=t) + \
        _mollified_k0(spec, mollifier, rho, eps)


def _check_margin(spec, pts, eps):
    side = spec.domain_side
    if not np.isfinite(side) or side <= 0:
        return
    if np.any(pts < 2 * eps - 1e-12) or np.any(pts > side - 2 * eps + 1e-12):
        raise DomainBoundaryError(
            f"point within 2*eps = {2*eps} of the box boundary")


def ell_theta(mollifier, z):
    """Double mollifier convolution of log(1/|.|) evaluated at z."""
    if mollifier.dimension == 1:
        w, psi = mollifier.self_correlation()
        return log_panel_integral(w, psi, float(z))
    if mollifier.dimension == 2:
        r, S = mollifier.radial_mass()
        zn = float(np.linalg.norm(z)) if np.ndim(z) else float(abs(z))
        logs = np.log(1.0 / np.maximum(np.maximum(r, zn), 1e-300))
        return float(np.trapezoid(S * logs, r))
    raise ValueError("ell_theta implemented for d in {1, 2}")


def fit_uniform_constant(samples):
    """Smallest C with |samples| <= C (the 'fitted constant' of the bounds)."""
    return float(np.max(np.abs(np.asarray(samples, dtype=float))))
