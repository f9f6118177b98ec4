"""Chaos functionals of the synthesized fields.

Everything is a plain Riemann sum on the torus grid: the fields are rough,
so h-refinement (not quadrature order) is the convergence axis.  The complex
chaos of a field X with diagonal variance v is

    M = h^d sum_x f(x) exp(gamma X(x) - gamma^2 v / 2),

mean ∫f for every gamma (Cameron-Martin).  Bracket integrands pair sites at
the Q_s support scale; their double sums run through FFT cross-correlations,
never the full N^2 pair set.
"""

import numpy as np

from .errors import OutOfPhaseError, OverflowGuardError

_EXP_BUDGET = 700.0  # natural-log units


class ComplexParam:
    """gamma = alpha + i beta with derived squares."""

    def __init__(self, alpha, beta):
        self.alpha = float(alpha)
        self.beta = float(beta)
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("gamma components must be finite")

    @classmethod
    def of(cls, value):
        if isinstance(value, cls):
            return value
        z = complex(value)
        return cls(z.real, z.imag)

    @property
    def gamma(self):
        return complex(self.alpha, self.beta)

    @property
    def gamma_sq(self):
        return self.gamma**2

    @property
    def abs_sq(self):
        return self.alpha**2 + self.beta**2

    def __repr__(self):
        return f"ComplexParam({self.alpha}, {self.beta})"


class TestFunction:
    """Grid-sampled test function with support bookkeeping."""

    __test__ = False  # not a pytest collectable

    def __init__(self, grid, values, smoothness="smooth"):
        values = np.asarray(values, dtype=float)
        want = (grid.n,) if grid.dimension == 1 else (grid.n, grid.n)
        if values.shape != want:
            raise ValueError(f"values must have shape {want}")
        self.grid = grid
        self.values = values
        self.support = values != 0.0
        self.smoothness = smoothness

    @classmethod
    def bump(cls, grid, center=None, width=None):
        """C-infinity bump exp(-1/(1-u^2)) of radius width at center."""
        side = grid.side
        center = side / 2 if center is None else center
        width = 0.15 * side if width is None else width
        x = grid.coords()
        if grid.dimension == 1:
            u = (x - center) / width
        else:
            u = np.sqrt((x[:, None] - center) ** 2
                        + (x[None, :] - center) ** 2) / width
        vals = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        vals[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return cls(grid, vals)

    def support_margin(self):
        """Distance from the support to the box boundary (per axis min)."""
        if not self.support.any():
            return np.inf
        idx = np.nonzero(self.support)
        lo = min(i.min() for i in idx) * self.grid.h
        hi = self.grid.side - (max(i.max() for i in idx) + 1) * self.grid.h
        return min(lo, hi)

    def check_margin(self, eps):
        if self.support_margin() < 2 * eps:
            raise ValueError(
                f"test function support violates the 2*eps = {2*eps} margin")

    def integral(self):
        return float(self.values.sum()) * self.grid.h**self.grid.dimension

    def l2_sq(self):
        return float((self.values**2).sum()) * self.grid.h**self.grid.dimension


def _values_of(f):
    return f.values if isinstance(f, TestFunction) else np.asarray(f, float)


def _check_overflow(x, gamma, var_diag):
    peak = max(float(x.max()), -float(x.min())) if x.size else 0.0
    vmax = float(np.max(var_diag))
    budget = abs(gamma.alpha) * peak + 0.5 * abs(gamma.gamma_sq.real) * vmax
    if budget > _EXP_BUDGET:
        raise OverflowGuardError(
            f"exponent budget {budget:.1f} exceeds {_EXP_BUDGET} "
            f"(alpha*max|X| = {abs(gamma.alpha) * peak:.1f}, "
            f"Re(gamma^2)*K/2 = {0.5 * gamma.gamma_sq.real * vmax:.1f})")


def gmc(x, var_diag, gamma, f, h):
    """Complex chaos h^d sum_x f exp(gamma X - gamma^2 K/2) per replica.

    x: (replicas, sites...) field values at parameter t or eps;
    var_diag: scalar (stationary case) or per-site array.
    """
    gamma = ComplexParam.of(gamma)
    x = np.asarray(x, dtype=float)
    fv = _values_of(f)
    d = fv.ndim
    axes = tuple(range(-d, 0))
    _check_overflow(x, gamma, var_diag)
    if gamma.gamma == 0:
        total = fv.sum() * h**d
        return total * np.ones(x.shape[:-d]) if x.ndim > d else total
    if np.ndim(var_diag) == 0:
        norm = np.exp(-0.5 * gamma.gamma_sq * float(var_diag))
        out = (fv * np.exp(gamma.gamma * x)).sum(axis=axes) * norm
    else:
        w = fv * np.exp(-0.5 * gamma.gamma_sq * np.asarray(var_diag))
        out = (w * np.exp(gamma.gamma * x)).sum(axis=axes)
    return out * h**d


def m_omega(value, omega):
    """Real part of the rotated chaos: Re(e^{-i omega} value)."""
    return np.real(np.exp(-1j * omega) * np.asarray(value))


def intensity_functional(x, var_diag, alpha, l_diag, gamma_abs_sq, f, h,
                         dimension=1):
    """Real chaos at 2*alpha weighted by e^{|gamma|^2 L} f^2.

    l_diag is L(x,x) = K0(x,x) - j_kappa: scalar for stationary kernels.
    """
    if abs(2 * alpha) >= np.sqrt(2 * dimension):
        raise OutOfPhaseError(
            f"|2 alpha| = {abs(2*alpha)} outside the real-GMC range "
            f"(< sqrt(2d) = {np.sqrt(2*dimension):.4f})")
    fv = _values_of(f)
    weight = np.exp(gamma_abs_sq * np.asarray(l_diag)) * fv**2
    return np.real(gmc(x, var_diag, ComplexParam(2 * alpha, 0.0), weight, h))


def pair_correlations(u, d):
    """corr_a(m) = sum_x u(x) conj(u)(x+m), corr_b(m) = sum_x u(x) u(x+m).

    u: (..., sites) complex; d grid dimension; FFT cross-correlation.
    """
    ax = tuple(range(-d, 0))
    fu = np.fft.fftn(u, axes=ax)
    fubar = np.fft.fftn(np.conj(u), axes=ax)
    # IDFT(conj(DFT(a)) DFT(b))(m) = sum_x conj(a)(x) b(x+m) with a = conj(u)
    corr_a = np.fft.ifftn(np.conj(fubar) * fubar, axes=ax)
    corr_b = np.fft.ifftn(np.conj(fubar) * fu, axes=ax)
    return corr_a, corr_b


def bracket_integrands(state, gamma, f, filter_name=None, q_row=None):
    """The Ito integrands (A_s, B_s) per replica at one layer state.

    A_s = sum f(x) f(y) q(x-y) e^{gamma X(x) + conj(gamma) X(y)
          + (beta^2 - alpha^2) K_s} h^{2d}  (real up to roundoff),
    B_s = sum f(x) f(y) q(x-y) e^{gamma (X(x)+X(y)) - gamma^2 K_s} h^{2d}.

    q defaults to the layer's own realized covariance row / dt (the
    synthesized Q_s); the pair sum is restricted to the q support through
    the FFT correlation (cost independent of the support size).
    """
    ens = state.ensemble
    d = ens.grid.dimension
    gamma = ComplexParam.of(gamma)
    x = state.x() if filter_name is None else state.x_filtered(filter_name)
    v = ens.var_diag(state.index, filter_name)
    _check_overflow(x, gamma, v)
    u = _values_of(f) * np.exp(gamma.gamma * x)
    corr_a, corr_b = pair_correlations(u, d)
    if q_row is None:
        q_row = ens.layer_cov_row(state.index, filter_name) / ens.schedule.dt
    h2d = ens.grid.h ** (2 * d)
    ax = tuple(range(-d, 0))
    a = np.real((corr_a * q_row).sum(axis=ax)) \
        * np.exp((gamma.beta**2 - gamma.alpha**2) * v) * h2d
    b = (corr_b * q_row).sum(axis=ax) * np.exp(-gamma.gamma_sq * v) * h2d
    return a, b


def window_bracket_weights(ens, i_from, i_to, gamma, filter_name=None):
    """Exact-in-mean weights for the bracket accumulated over a layer window.

    Fields are read at the state BEFORE layer i_from (index i_from - 1); the
    window covers layers i_from..i_to.  Returns (wa, wb) rows such that

        IA = Re sum_m corr_a(m) wa(m)   estimates  int |gamma|^2 A_s ds,
        IB =    sum_m corr_b(m) wb(m)   estimates  int gamma^2   B_s ds,

    with conditional expectation exact for the synthesized model:
    wa = h^{2d} e^{(b^2-a^2) v} (e^{|g|^2 dK} - 1), dK the window's
    covariance-row increment, v the diagonal variance at the read state.
    """
    gamma = ComplexParam.of(gamma)
    d = ens.grid.dimension
    cov_prev = ens.cov_row(i_from - 1, filter_name)
    cov_next = ens.cov_row(i_to, filter_name)
    v_prev = ens.var_diag(i_from - 1, filter_name)
    dk = cov_next - cov_prev
    h2d = ens.grid.h ** (2 * d)
    wa = h2d * np.exp((gamma.beta**2 - gamma.alpha**2) * v_prev) * \
        np.expm1(gamma.abs_sq * dk)
    wb = h2d * np.exp(-gamma.gamma_sq * v_prev) * \
        (np.exp(gamma.gamma_sq * dk) - 1.0)
    return wa, wb


def window_bracket_terms(state, gamma, f, weights, filter_name=None):
    """Apply window weights to the pair correlations at this state."""
    ens = state.ensemble
    d = ens.grid.dimension
    gamma = ComplexParam.of(gamma)
    x = state.x() if filter_name is None else state.x_filtered(filter_name)
    v = ens.var_diag(state.index, filter_name)
    _check_overflow(x, gamma, v)
    u = _values_of(f) * np.exp(gamma.gamma * x)
    corr_a, corr_b = pair_correlations(u, d)
    wa, wb = weights
    ax = tuple(range(-d, 0))
    ia = np.real((corr_a * wa).sum(axis=ax))
    ib = (corr_b * wb).sum(axis=ax)
    return ia, ib


def martingale_value(state, gamma, f, omega, filter_name=None):
    """N_t at this layer: m_omega of the chaos of the (mollified) field."""
    ens = state.ensemble
    x = state.x() if filter_name is None else state.x_filtered(filter_name)
    v = ens.var_diag(state.index, filter_name)
    return m_omega(gmc(x, v, gamma, f, ens.grid.h), omega)


def u_spectrum(state, gamma, f, filter_name=None):
    """FFT of u = f e^{gamma X} at this state, plus the diagonal variance.

    One transform serves the whole bracket read: the DC mode is sum_x u (so
    the chaos value is h^d e^{-gamma^2 v/2} fu[..., 0, ...0]), and the pair
    correlations reduce to spectral products (see spectral_pair_sums).
    """
    ens = state.ensemble
    d = ens.grid.dimension
    gamma = ComplexParam.of(gamma)
    x = state.x() if filter_name is None else state.x_filtered(filter_name)
    v = ens.var_diag(state.index, filter_name)
    _check_overflow(x, gamma, v)
    u = _values_of(f) * np.exp(gamma.gamma * x)
    fu = np.fft.fftn(u, axes=tuple(range(-d, 0)))
    return fu, v


def reverse_modes(arr, d):
    """arr at index-reversed modes: out_k = arr_{-k mod n} per axis."""
    out = arr
    for ax in range(-d, 0):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def conj_spectrum(fu, d):
    """DFT of conj(u) from the DFT of u: conj at index-reversed modes."""
    return np.conj(reverse_modes(fu, d))


def plus_spectrum(w, d):
    """P(w)_k = sum_m w_m e^{+2 pi i k m / n} (= n_sites * ifftn(w))."""
    ax = tuple(range(-d, 0))
    n_sites = np.prod([np.shape(w)[a] for a in ax])
    return np.fft.ifftn(np.asarray(w, dtype=complex), axes=ax) * n_sites


def bracket_weight_spectra(wa, wb, d):
    """Precomputed spectra for spectral_pair_sums, flattened over sites.

    corr_a reduces to |fu_{-k}|^2, so the A weight spectrum is stored
    mode-reversed and the per-read cost is two matched dot products.
    """
    rev_pwa = reverse_modes(plus_spectrum(wa, d), d).reshape(-1)
    pwb = plus_spectrum(wb, d).reshape(-1)
    return rev_pwa, pwb


def spectral_pair_sums(fu, weight_spectra, d):
    """(sum_m corr_a(m) wa(m), sum_m corr_b(m) wb(m)) via Parseval.

    weight_spectra from bracket_weight_spectra; with G^a_k = |fu_{-k}|^2 and
    G^b_k = fu_{-k} fu_k,  sum_m IDFT(G)(m) w(m) = (1/n) sum_k G_k P(w)_k.
    """
    rev_pwa, pwb = weight_spectra
    n_sites = int(np.prod(fu.shape[-d:]))
    flat = fu.reshape(fu.shape[:-d] + (n_sites,))
    p2 = flat.real**2 + flat.imag**2
    ia = np.real(p2 @ rev_pwa) / n_sites
    revfu = reverse_modes(fu, d).reshape(flat.shape)
    ib = ((flat * revfu) @ pwb) / n_sites
    return ia, ib
