"""Phase classification and the normalization constants v, v_bar, a.

v(eps) rescales the convolution chaos, v_bar(t) the martingale chaos; both
split into a strict-phase form (|gamma|^2 > d, power of the cutoff times an
integral of exp(+-|gamma|^2 ell)) and a circle form (|gamma|^2 = d,
logarithmic).  a(s) is the bracket growth rate; its integral satisfies

    v_bar(t)^2 |gamma|^2 int_0^t a(s) ds  ->  2 e^{-|gamma|^2 j_kappa},

and the mollified analogue with v(eps)^2, both verified numerically here.
"""

from dataclasses import dataclass
from math import gamma as gamma_fn

import numpy as np

from .errors import NonConvergenceError, OutOfPhaseError
from .kernels import ell_kappa, ell_theta, j_kappa
from .quadrature import gauss_legendre

_TIE = 1e-12


@dataclass(frozen=True)
class PhaseRegion:
    name: str

    def __str__(self):
        return self.name


SUBCRITICAL = PhaseRegion("Subcritical")
PHASE_II = PhaseRegion("PhaseII")
PHASE_III = PhaseRegion("PhaseIII")
PHASE_III_CLOSURE = PhaseRegion("PhaseIIIClosure")
BOUNDARY = PhaseRegion("Boundary")
REAL_SUPERCRITICAL = PhaseRegion("RealSupercritical")
OTHER = PhaseRegion("Other")


def classify_phase(alpha, beta, d):
    """Total, deterministic phase map over (alpha, beta, d).

    PhaseIII: |alpha| < sqrt(d/2), alpha^2 + beta^2 > d (interior);
    PhaseIIIClosure: the circle arc alpha^2 + beta^2 = d, |alpha| < sqrt(d/2);
    Subcritical: alpha^2 + beta^2 < d, or the wedge sqrt(d/2) < |alpha| <
    sqrt(2d) with |alpha| + |beta| < sqrt(2d); PhaseII: |alpha| + |beta| >
    sqrt(2d), |alpha| > sqrt(d/2); RealSupercritical: beta = 0, |alpha| >=
    sqrt(2d).  Exact ties on the remaining frontiers are Boundary.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    a, b = abs(float(alpha)), abs(float(beta))
    r2 = a * a + b * b
    half = np.sqrt(d / 2.0)
    crit = np.sqrt(2.0 * d)
    if b <= _TIE and a >= crit - _TIE:
        return REAL_SUPERCRITICAL
    if a < half - _TIE:
        if r2 > d + _TIE:
            return PHASE_III
        if abs(r2 - d) <= _TIE:
            return PHASE_III_CLOSURE
        return SUBCRITICAL
    if a > half + _TIE:
        s = a + b
        if s < crit - _TIE:
            return SUBCRITICAL if a < crit - _TIE else BOUNDARY
        if s > crit + _TIE:
            return PHASE_II
        return BOUNDARY
    # |alpha| = sqrt(d/2) exactly: P_II / P_III frontier (or subcritical arc)
    if r2 < d - _TIE:
        return SUBCRITICAL
    return BOUNDARY


def in_phase_iii_closure(gamma, d):
    """Membership in P'_III = {|alpha| < sqrt(d/2), alpha^2+beta^2 >= d}."""
    region = classify_phase(np.real(complex(gamma)), np.imag(complex(gamma)), d)
    return region in (PHASE_III, PHASE_III_CLOSURE)


@dataclass
class NormConstant:
    value: float
    regime: str               # "strict" (|gamma|^2 > d) or "circle"
    integral: float           # the ell-integral (strict) or nan
    gamma_half: float         # Gamma(d/2)
    log_factor: float         # log(1/eps) or t (circle) else nan

    def __post_init__(self):
        if not (self.value > 0):
            raise NonConvergenceError("normalization constant must be > 0")

    def to_dict(self):
        return {"value": self.value, "regime": self.regime,
                "integral": self.integral, "gamma_half": self.gamma_half,
                "log_factor": self.log_factor}


def _regime(gamma_abs_sq, d):
    if gamma_abs_sq > d + _TIE:
        return "strict"
    if abs(gamma_abs_sq - d) <= _TIE:
        return "circle"
    raise OutOfPhaseError(
        f"|gamma|^2 = {gamma_abs_sq} below d = {d}: outside closure of P_III")


def ell_theta_integral(mollifier, gamma_abs_sq, r0=24.0, rel_tol=1e-7):
    """I = int_{R^d} e^{|gamma|^2 ell_theta(z)} dz with an analytic tail.

    Inside radius r0 by quadrature; outside, ell_theta(z) = log(1/|z|) +
    mu2/(2 z^2) + O(z^-4) (d=1; exactly log(1/|z|) in d=2), and the power
    tail integrates in closed form.  Requires |gamma|^2 > d.
    """
    d = mollifier.dimension
    g = float(gamma_abs_sq)
    if g <= d:
        raise OutOfPhaseError("tail integral diverges unless |gamma|^2 > d")
    if d == 1:
        core = 2.0 * _panel_quad(
            lambda z: np.exp(g * _ell_vec(mollifier, z)), 0.0, r0)
        mu2 = mollifier.moment2()
        # int_r0^inf r^-g (1 + g mu2 / (2 r^2)) dr, remainder O(r^-(g+4))
        tail = 2.0 * (r0 ** (1 - g) / (g - 1)
                      + g * mu2 / 2.0 * r0 ** (-1 - g) / (g + 1))
        err = 2.0 * r0 ** (-3 - g) / (g + 3) * (g * mu2) ** 2
        if err > rel_tol * (core + tail):
            raise NonConvergenceError("ell_theta tail not converged; raise r0")
        return core + tail
    core = _panel_quad(
        lambda r: 2 * np.pi * r * np.exp(g * _ell_vec(mollifier, r)), 0.0, max(r0, 2.5))
    tail = 2 * np.pi * max(r0, 2.5) ** (2 - g) / (g - 2)
    return core + tail


def _ell_vec(mollifier, z):
    z = np.atleast_1d(z)
    return np.array([ell_theta(mollifier, zz) for zz in z])


def _panel_quad(f, a, b, panels_per_unit=8, n=24):
    total = 0.0
    edges = np.linspace(a, b, int(np.ceil((b - a) * panels_per_unit)) + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += gauss_legendre(f, lo, hi, n=n)
    return total


def ell_kappa_integral(kappa, gamma_abs_sq, rel_tol=1e-9):
    """int_{R^d} e^{-|gamma|^2 ell_kappa(|z|)} dz (analytic power tail)."""
    d = kappa.dimension
    g = float(gamma_abs_sq)
    if g <= d:
        raise OutOfPhaseError("integral diverges unless |gamma|^2 > d")
    surf = 2.0 if d == 1 else 2.0 * np.pi ** (d / 2.0) / gamma_fn(d / 2.0)

    def integrand(r):
        r = np.atleast_1d(r)
        return np.exp(-g * ell_kappa(kappa, r)) * r ** (d - 1)

    core = surf * _panel_quad(integrand, 0.0, 1.0, panels_per_unit=32)
    # ell_kappa(r) = log r exactly for r >= 1 (kappa support in unit ball)
    tail = surf / (g - d)
    return core + tail


def v_eps(eps, mollifier, gamma, d=None):
    """Convolution normalization v(eps, theta, gamma)."""
    from .chaos import ComplexParam
    gamma = ComplexParam.of(gamma)
    d = mollifier.dimension if d is None else d
    if d != mollifier.dimension:
        raise ValueError("mollifier dimension mismatch")
    g = gamma.abs_sq
    regime = _regime(g, d)
    gh = gamma_fn(d / 2.0)
    if regime == "circle":
        if eps >= 1.0:
            raise ValueError("circle-case v(eps) needs eps < 1")
        log_factor = np.log(1.0 / eps)
        value = (np.pi ** (d / 2.0) / gh * log_factor) ** (-0.5)
        return NormConstant(value, regime, np.nan, gh, log_factor)
    integral = ell_theta_integral(mollifier, g)
    value = eps ** ((g - d) / 2.0) * (0.5 * integral) ** (-0.5)
    return NormConstant(value, regime, integral, gh, np.nan)


def v_bar(t, kappa, gamma, d=None):
    """Martingale normalization v_bar(t, kappa, gamma)."""
    from .chaos import ComplexParam
    gamma = ComplexParam.of(gamma)
    d = kappa.dimension if d is None else d
    g = gamma.abs_sq
    regime = _regime(g, d)
    gh = gamma_fn(d / 2.0)
    if regime == "circle":
        if t <= 0:
            raise ValueError("circle-case v_bar needs t > 0")
        value = (np.pi ** (d / 2.0) * t / gh) ** (-0.5)
        return NormConstant(value, regime, np.nan, gh, float(t))
    integral = ell_kappa_integral(kappa, g)
    value = np.exp((d - g) / 2.0 * t) * (0.5 * integral) ** (-0.5)
    return NormConstant(value, regime, integral, gh, np.nan)


def a_const(t, kappa, gamma, mollifier=None, eps=None, n_quad=48):
    """a(t, kappa, gamma) (or the mollified a(t, kappa, gamma, eps)).

    a(t) = int Q_t(0,z) e^{|gamma|^2 khat_t(0,z)} dz; the mollified version
    replaces Q and khat by their double convolutions with theta_eps.
    """
    from .chaos import ComplexParam
    gamma = ComplexParam.of(gamma)
    d = kappa.dimension
    g = gamma.abs_sq
    if t < 0:
        raise ValueError("t must be nonnegative")
    if mollifier is None:
        # substitute y = e^t z: a(t) = e^{-dt} S_d int_0^1 kappa(y)
        #   e^{|g|^2 khat_t(e^{-t} y)} y^{d-1} dy
        surf = 2.0 if d == 1 else 2.0 * np.pi ** (d / 2.0) / gamma_fn(d / 2.0)

        def integrand(y):
            y = np.atleast_1d(y)
            return kappa(y) * np.exp(g * kappa.khat_t(np.exp(-t) * y, t)) \
                * y ** (d - 1)

        return np.exp(-d * t) * surf * _panel_quad(
            integrand, 0.0, 1.0, panels_per_unit=16, n=n_quad)
    if d != 1:
        raise NotImplementedError("mollified a(t) implemented in d = 1")
    return _a_mollified_1d(t, kappa, g, mollifier, eps, n_quad)


def _a_mollified_1d(t, kappa, g, mollifier, eps, n_quad):
    from .kernels import KernelSpec, SmoothKernel, kernel_K_eps

    spec = KernelSpec(SmoothKernel.zero(1), kappa, 1, domain_side=np.inf)
    w, psi = mollifier.self_correlation()

    def q_eps(z):
        # double-mollified Q_t at separation z
        nodes = z - eps * w[::-1]
        dens = psi[::-1] / eps
        return float(np.trapezoid(dens * kappa(np.exp(t) * np.abs(nodes)),
                                  nodes))

    def khat_eps(z):
        return kernel_K_eps(spec, mollifier, 0.0, abs(z), eps, t=t)

    hi = np.exp(-t) + 2 * eps

    def integrand(z):
        z = np.atleast_1d(z)
        return np.array([q_eps(zz) * np.exp(g * khat_eps(zz)) for zz in z])

    return 2.0 * _panel_quad(integrand, 0.0, hi,
                             panels_per_unit=max(8, int(16 / hi)), n=16)


def bracket_integral_identity(t, kappa, gamma, n_grid=20000):
    """|gamma|^2 int_0^t a(s) ds  =  int (e^{|gamma|^2 khat_t(z)} - 1) dz.

    Evaluated through the right-hand side with a log-spaced grid resolving
    the e^{-t} boundary layer (d = kappa.dimension).
    """
    from .chaos import ComplexParam
    g = ComplexParam.of(gamma).abs_sq
    d = kappa.dimension
    surf = 2.0 if d == 1 else 2.0 * np.pi ** (d / 2.0) / gamma_fn(d / 2.0)
    # substitute z = e^{-v}: integral over v in (0, inf) cut at z <= 1
    v_hi = t + 36.0

    def integrand(v):
        v = np.atleast_1d(v)
        z = np.exp(-v)
        return (np.exp(g * kappa.khat_t(z, t)) - 1.0) * z**d

    total = _panel_quad(integrand, 0.0, v_hi, panels_per_unit=24, n=24)
    return surf * total


def xlink_limit_check(t, kappa, gamma):
    """v_bar(t)^2 |gamma|^2 int_0^t a(s) ds vs 2 e^{-|gamma|^2 j_kappa}."""
    from .chaos import ComplexParam
    gamma = ComplexParam.of(gamma)
    lhs = v_bar(t, kappa, gamma).value ** 2 * \
        bracket_integral_identity(t, kappa, gamma)
    rhs = 2.0 * np.exp(-gamma.abs_sq * j_kappa(kappa))
    return lhs, rhs


def xlinkbis_limit_check(eps, kappa, mollifier, gamma):
    """v(eps)^2 |gamma|^2 int_0^inf a(s, eps) ds vs 2 e^{-|g|^2 j_kappa}.

    Uses the identity int |g|^2 a dt = int (e^{|g|^2 khat_eps(z)} - 1) dz
    (d = 1).
    """
    from .chaos import ComplexParam
    from .kernels import KernelSpec, SmoothKernel, kernel_K_eps

    gamma = ComplexParam.of(gamma)
    g = gamma.abs_sq
    spec = KernelSpec(SmoothKernel.zero(1), kappa, 1, domain_side=np.inf)

    def khat_eps(z):
        return kernel_K_eps(spec, mollifier, 0.0, abs(z), eps)

    def integrand(v):
        v = np.atleast_1d(v)
        z = np.exp(-v)
        return np.array([(np.exp(g * khat_eps(zz)) - 1.0) * zz for zz in z])

    v_hi = np.log(1.0 / eps) + 36.0
    total = 2.0 * _panel_quad(integrand, -np.log(1.0 + 2 * eps), v_hi,
                              panels_per_unit=12, n=12)
    lhs = v_eps(eps, mollifier, gamma).value ** 2 * total
    rhs = 2.0 * np.exp(-g * j_kappa(kappa))
    return lhs, rhs
