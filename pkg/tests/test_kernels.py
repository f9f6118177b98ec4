import json

import numpy as np
import pytest

from gmclab.errors import (
    DomainBoundaryError,
    InterpolationRangeError,
    NotPositiveDefiniteError,
)
from gmclab.kernels import (
    KernelSpec,
    Mollifier,
    ScaleKernel,
    SmoothKernel,
    check_gram_psd,
    ell_kappa,
    ell_theta,
    eval_kappa,
    fit_uniform_constant,
    j_kappa,
    kernel_K_eps,
    kernel_K_t,
    kernel_Q_t,
)

TRI = ScaleKernel.triangle()
BUMP = Mollifier.standard_bump(1)


# ----------------------------------------------------------------- kappa

def test_eval_kappa_trivial_values():
    assert eval_kappa(TRI, 0.0) == 1.0
    assert eval_kappa(TRI, 0.5) == 0.5
    assert eval_kappa(TRI, 2.0) == 0.0


def test_kappa_negative_argument_rejected():
    with pytest.raises(ValueError):
        eval_kappa(TRI, -0.1)


def test_tabulated_kappa_interpolation_and_range_error():
    r = np.linspace(0, 0.8, 9)
    k = ScaleKernel.tabulated(r, 1 - r, 1)
    assert k(0.4) == pytest.approx(0.6)
    with pytest.raises(InterpolationRangeError):
        k(0.9)  # inside support but beyond the table


def test_scale_kernel_pointwise_invariants():
    for spec in (TRI, ScaleKernel.ball_self_convolution(2),
                 ScaleKernel.ball_self_convolution(3)):
        spec.validate_pointwise()


def test_scale_kernel_gram_psd():
    rng = np.random.default_rng(7)
    TRI.validate_gram(rng=rng, n=256)
    ScaleKernel.ball_self_convolution(2).validate_gram(
        points=rng.uniform(0, 2, size=(256, 2)))


def test_ball_self_convolution_d2_closed_form():
    # oracle: lens-area formula for two unit-diameter disks at distance r
    k2 = ScaleKernel.ball_self_convolution(2)
    r = np.linspace(0.01, 0.99, 17)
    lens = 0.5 * np.arccos(r) - 0.5 * r * np.sqrt(1 - r**2)
    assert np.allclose(k2(r), lens / (np.pi / 4), atol=1e-12)


def test_ball_self_convolution_d1_is_triangle():
    k1 = ScaleKernel.ball_self_convolution(1)
    r = np.linspace(0, 1, 11)
    assert np.allclose(k1(r), np.maximum(1 - r, 0), atol=1e-12)


# ------------------------------------------------------------- ell_kappa

def test_ell_kappa_triangle_examples():
    assert ell_kappa(TRI, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert ell_kappa(TRI, np.e) == pytest.approx(1.0, abs=1e-12)
    assert ell_kappa(TRI, 0.5) == pytest.approx(-0.5, abs=1e-12)


def test_ell_kappa_quadrature_oracle():
    # independent oracle: trapezoid in t of kappa(e^-t) - kappa(e^-t r)
    t = np.linspace(0, 40, 400_001)
    for r in (0.3, 1.7, 4.0):
        oracle = np.trapezoid(TRI(np.exp(-t)) - TRI(np.minimum(np.exp(-t) * r, 2)), t)
        assert ell_kappa(TRI, r) == pytest.approx(oracle, abs=1e-7)


def test_ell_kappa_generic_matches_triangle():
    # tabulated triangle goes through the quadrature branch
    r = np.linspace(0, 1, 2001)
    tab = ScaleKernel.tabulated(r, 1 - r, 1)
    for x in (0.25, 1.0, 3.0):
        assert ell_kappa(tab, x) == pytest.approx(ell_kappa(TRI, x), abs=1e-6)


def test_convi_identity_adopted_sign():
    # int_0^t (1 - kappa(e^{-s} y)) ds -> ell_kappa(y) + j_kappa
    y, t = 2.5, 40.0
    s = np.linspace(0, t, 400_001)
    lhs = np.trapezoid(1 - TRI(np.minimum(np.exp(-s) * y, 2)), s)
    assert lhs == pytest.approx(ell_kappa(TRI, y) + j_kappa(TRI), abs=1e-6)


# --------------------------------------------------------------- j_kappa

def test_j_kappa_triangle_closed_form():
    assert j_kappa(TRI) == pytest.approx(1.0, abs=1e-12)


def test_j_kappa_generic_quadrature():
    r = np.linspace(0, 1, 4001)
    tab = ScaleKernel.tabulated(r, 1 - r, 1)
    assert j_kappa(tab) == pytest.approx(1.0, abs=1e-8)


def test_j_kappa_flat_near_zero_bound():
    # kappa = 1 up to rho0 then linear down: split at t = log(1/rho0)
    rho0 = 0.2
    r = np.linspace(0, 1, 4001)
    v = np.where(r < rho0, 1.0, np.maximum(1 - (r - rho0) / (1 - rho0), 0))
    v[-1] = 0.0
    k = ScaleKernel.tabulated(r, v, 1)
    # bounding oracle: integrand vanishes past the split, <= 1 before it
    assert j_kappa(k) <= -np.log(rho0) + 1e-9
    # exact oracle: trapezoid of (1 - kappa(v))/v over [rho0, 1]
    sel = r >= rho0
    oracle = np.trapezoid((1 - v[sel]) / r[sel], r[sel])
    assert j_kappa(k) == pytest.approx(oracle, abs=1e-4)


def test_L_diag_identity_k0_zero():
    spec = KernelSpec.default(1)
    assert spec.L_diag() == pytest.approx(-j_kappa(TRI), abs=1e-12)
    assert spec.L_profile(np.array(0.0)) == pytest.approx(-1.0, abs=1e-12)


# ------------------------------------------------------------- kernel_K_t

def test_kernel_K_t_diagonal_equals_t():
    spec = KernelSpec.default(1)
    for t in (0.0, 1.3, 5.0, 12.0):
        assert kernel_K_t(spec, 0.3, 0.3, t) == pytest.approx(t, abs=1e-12)


def test_kernel_K_t_vanishing_beyond_support():
    spec = KernelSpec.default(1)
    assert kernel_K_t(spec, 0.0, 1.0, 5.0) == pytest.approx(0.0, abs=1e-12)


def test_kernel_K_t_derived_quadrature_oracle():
    # rho = e^{-1}, t -> inf: oracle = 1e6-point trapezoid of (1-e^{u-1})+
    u = np.linspace(0, 1, 1_000_001)
    oracle = np.trapezoid(1 - np.exp(u - 1), u)  # support ends at u=1
    spec = KernelSpec.default(1)
    got = kernel_K_t(spec, 0.0, np.exp(-1), 40.0)
    assert got == pytest.approx(oracle, abs=1e-9)
    assert got == pytest.approx(np.exp(-1), abs=1e-9)  # closed form


def test_kernel_K_t_monotone_in_t_and_bounded_diag():
    spec = KernelSpec.default(1)
    ts = np.linspace(0, 8, 30)
    vals = [kernel_K_t(spec, 0.1, 0.13, t) for t in ts]
    assert np.all(np.diff(vals) >= -1e-12)
    diag_gap = [kernel_K_t(spec, 0.1, 0.1, t) - t for t in ts]
    assert np.max(np.abs(diag_gap)) < 1e-12


def test_kernel_K_t_ball_kernel_matches_quadrature():
    spec = KernelSpec.default(2)
    rho, t = 0.05, 4.0
    u = np.linspace(0, t, 200_001)
    oracle = np.trapezoid(spec.kappa(np.exp(u) * rho), u)
    got = kernel_K_t(spec, [0.0, 0.0], [rho, 0.0], t)
    assert got == pytest.approx(oracle, abs=1e-6)


def test_kernel_K_t_with_gaussian_k0():
    k0 = SmoothKernel.gaussian_bump(0.7, 0.2, 1)
    spec = KernelSpec(k0, TRI, 1)
    got = kernel_K_t(spec, 0.0, 0.1, 3.0)
    want = 0.7 * np.exp(-0.01 / 0.08) + TRI.khat_t(np.array(0.1), 3.0)
    assert got == pytest.approx(float(want), abs=1e-10)


# ----------------------------------------------------------- kernel_K_eps

def test_kernel_K_eps_constant_kernel():
    # convolution of a constant is the constant: K0 bump with huge width
    k0 = SmoothKernel.gaussian_bump(2.5, 1e6, 1)
    spec = KernelSpec(k0, TRI, 1, domain_side=np.inf)
    with_k0 = kernel_K_eps(spec, BUMP, 0.4, 0.6, 0.01)
    star_only = kernel_K_eps(KernelSpec.default(1, domain_side=np.inf), BUMP,
                             0.4, 0.6, 0.01)
    assert with_k0 - star_only == pytest.approx(2.5, abs=1e-9)


def test_kernel_K_eps_small_eps_limit():
    # fixed off-diagonal pair, eps = 1e-3 |x-y|: matches K within 1e-3
    spec = KernelSpec.default(1, domain_side=np.inf)
    rho = 0.2
    want = float(spec.K_profile(np.array(rho)))
    got = kernel_K_eps(spec, BUMP, 0.0, rho, 1e-3 * rho)
    assert got == pytest.approx(want, abs=1e-3)


def test_kernel_K_eps_diag_monte_carlo_oracle():
    # independent oracle: K_eps(x,x) = E[khat_inf(eps |Z1 - Z2|)], Z_i ~ theta
    spec = KernelSpec.default(1, domain_side=np.inf)
    eps = 0.25
    rng = np.random.default_rng(9)
    n = 4_000_000
    sep = eps * np.abs(BUMP.sample(rng, n) - BUMP.sample(rng, n))
    vals = np.where(sep < 1,
                    np.log(1.0 / np.maximum(sep, 1e-300)) + sep - 1.0, 0.0)
    mc, se = float(np.mean(vals)), float(np.std(vals) / np.sqrt(n))
    got = kernel_K_eps(spec, BUMP, 0.5, 0.5, eps)
    assert abs(got - mc) < 3 * se


def test_kernel_K_eps_log_bound_fitted_constant():
    # |K_eps(x,y) - log(1/(|x-y| v eps))| <= C over a 100-pair sample
    spec = KernelSpec.default(1, domain_side=np.inf)
    rng = np.random.default_rng(3)
    eps = 0.05
    diffs = []
    for _ in range(100):
        x = rng.uniform(0, 1)
        rho = rng.uniform(0, 0.5)
        k = kernel_K_eps(spec, BUMP, x, x + rho, eps)
        diffs.append(k - np.log(1.0 / max(rho, eps)))
    c = fit_uniform_constant(diffs)
    assert np.isfinite(c) and c < 3.0


def test_kernel_K_t_eps_reduces_to_K_eps_for_large_t():
    spec = KernelSpec.default(1, domain_side=np.inf)
    for rho in (0.0, 0.1):
        full = kernel_K_eps(spec, BUMP, 0.0, rho, 0.05)
        trunc = kernel_K_eps(spec, BUMP, 0.0, rho, 0.05, t=40.0)
        assert trunc == pytest.approx(full, abs=1e-6)


def test_kernel_K_eps_boundary_margin_error():
    spec = KernelSpec.default(1, domain_side=1.0)
    with pytest.raises(DomainBoundaryError):
        kernel_K_eps(spec, BUMP, 0.01, 0.2, 0.05)


# -------------------------------------------------------------- ell_theta

def test_ell_theta_symmetry():
    rng = np.random.default_rng(11)
    for z in rng.uniform(-3, 3, 20):
        assert ell_theta(BUMP, z) == pytest.approx(ell_theta(BUMP, -z), abs=1e-12)


def test_ell_theta_far_field_d2_exact():
    # log is harmonic in d=2: outside the support radius 2 the convolution
    # is exactly log(1/|z|)
    bump2 = Mollifier.standard_bump(2)
    got = ell_theta(bump2, np.array([10.0, 0.0]))
    assert got == pytest.approx(np.log(1 / 10.0), abs=1e-6)


def test_ell_theta_far_field_d1_inverse_square_law():
    # d=1: ell_theta(z) - log(1/|z|) = mu2/(2 z^2) + O(z^-4)
    mu2 = BUMP.moment2()
    for z in (8.0, 16.0):
        diff = ell_theta(BUMP, z) - np.log(1 / z)
        assert diff == pytest.approx(mu2 / (2 * z**2), rel=0.02)


def test_ell_theta_zero_dual_oracle():
    # tensor quadrature vs 1e7-sample Monte Carlo within 3 standard errors
    got = ell_theta(BUMP, 0.0)
    rng = np.random.default_rng(42)
    n = 10_000_000
    z1 = BUMP.sample(rng, n)
    z2 = BUMP.sample(rng, n)
    vals = np.log(1.0 / np.abs(z1 - z2))
    mc = float(np.mean(vals))
    se = float(np.std(vals) / np.sqrt(n))
    assert abs(got - mc) < 3 * se


# -------------------------------------------------------------- mollifier

def test_mollifier_mass_and_support():
    for d in (1, 2):
        m = Mollifier.standard_bump(d)
        assert m.radial_profile(np.array([1.0]))[0] == 0.0
        assert m.normalization_constant > 0


def test_mollifier_tabulated_roundtrip():
    r = np.linspace(0, 1, 201)
    m = Mollifier.tabulated(r, np.maximum(1 - r, 0) ** 2, 1)
    w, psi = m.self_correlation()
    assert psi[0] == 0.0 and psi[-1] == 0.0
    assert np.trapezoid(psi, w) == pytest.approx(1.0, abs=1e-5)


def test_self_correlation_unit_mass():
    w, psi = BUMP.self_correlation()
    assert np.trapezoid(psi, w) == pytest.approx(1.0, abs=1e-9)


# ------------------------------------------------- composite & invariants

def test_composite_K_within_constant_of_log():
    # |K(x,y) - log 1/|x-y|| <= C off-diagonal
    spec = KernelSpec.default(1)
    rho = np.exp(np.linspace(np.log(1e-6), np.log(0.5), 200))
    diff = spec.K_profile(rho) - np.log(1.0 / rho)
    assert fit_uniform_constant(diff) < 2.0


def test_estimao_bounds_single_constant():
    # the three bounds of the kernel estimates with one fitted constant
    spec = KernelSpec.default(1, domain_side=np.inf)
    rng = np.random.default_rng(5)
    devs = []
    for _ in range(40):
        rho = rng.uniform(0, 0.4)
        t = rng.uniform(0.5, 9.0)
        eps = rng.uniform(0.01, 0.2)
        devs.append(kernel_K_t(spec, 0.0, rho, t)
                    - np.log(1 / max(rho, np.exp(-t))))
        devs.append(kernel_K_eps(spec, BUMP, 0.0, rho, eps)
                    - np.log(1 / max(rho, eps)))
        devs.append(kernel_K_eps(spec, BUMP, 0.0, rho, eps, t=t)
                    - np.log(1 / max(rho, eps, np.exp(-t))))
    assert fit_uniform_constant(devs) < 3.0


def test_local_regularity_lemma_bound():
    # |K_t(x,y) - K_t(x,x)| <= eta(|x-y|) + C e^t |x-y| with K0 = 0
    spec = KernelSpec.default(1)
    rng = np.random.default_rng(6)
    ratios = []
    for _ in range(60):
        rho = rng.uniform(1e-5, 0.2)
        t = rng.uniform(0.0, 8.0)
        gap = abs(kernel_K_t(spec, 0.0, rho, t) - t)
        ratios.append(gap / (np.exp(t) * rho))
    assert fit_uniform_constant(ratios) < 1.5


def test_q_t_support():
    spec = KernelSpec.default(1)
    assert kernel_Q_t(spec, 0.0, 3.0) == 1.0
    assert kernel_Q_t(spec, np.exp(-3.0), 3.0) == 0.0


# ---------------------------------------------------------- serialization

def test_spec_json_roundtrip(tmp_path):
    spec = KernelSpec(SmoothKernel.gaussian_bump(0.5, 0.3, 1), TRI, 1, 2.0)
    path = tmp_path / "spec.json"
    spec.to_json(path)
    back = KernelSpec.from_json(path)
    assert back.kappa.form == "triangle"
    assert back.k0.amplitude == 0.5
    assert back.domain_side == 2.0
    assert json.loads(path.read_text())["kappa"]["form"] == "triangle"


def test_scale_kernel_csv_loader(tmp_path):
    r = np.linspace(0, 1, 101)
    path = tmp_path / "kappa.csv"
    np.savetxt(path, np.column_stack([r, np.maximum(1 - r, 0)]), delimiter=",")
    k = ScaleKernel.from_csv(path, 1)
    assert k(0.25) == pytest.approx(0.75)


def test_check_gram_psd_raises():
    with pytest.raises(NotPositiveDefiniteError):
        check_gram_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))
