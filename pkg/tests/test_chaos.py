import numpy as np
import pytest

from gmclab.chaos import (
    ComplexParam,
    TestFunction,
    bracket_integrands,
    gmc,
    intensity_functional,
    m_omega,
    pair_correlations,
    window_bracket_terms,
    window_bracket_weights,
)
from gmclab.errors import OutOfPhaseError, OverflowGuardError
from gmclab.experiments import BracketIntegrals, FinalChaos, MartingalePath
from gmclab.kernels import KernelSpec, Mollifier
from gmclab.synth import Grid, LayerSchedule, sample_layers

BUMP = Mollifier.standard_bump(1)


def make_ensemble(n=512, replicas=800, seed=5, t_max=None, side=2.5):
    spec = KernelSpec.default(1, domain_side=side)
    grid = Grid(1, n, side)
    sched = LayerSchedule.uniform(t_max or np.log(1 / grid.h))
    return sample_layers(spec, grid, sched, replicas, seed)


def test_complex_param_derived():
    g = ComplexParam(0.5, 1.3229)
    assert g.gamma == 0.5 + 1.3229j
    assert g.abs_sq == pytest.approx(0.25 + 1.3229**2)
    assert g.gamma_sq == pytest.approx((0.5 + 1.3229j) ** 2)
    with pytest.raises(ValueError):
        ComplexParam(np.inf, 0.0)


def test_test_function_bump_support():
    g = Grid(1, 512, 2.5)
    f = TestFunction.bump(g)
    assert f.support_margin() > 0.8
    f.check_margin(0.05)
    with pytest.raises(ValueError):
        f.check_margin(0.6)
    assert f.integral() > 0


def test_gmc_gamma_zero_exact():
    g = Grid(1, 256, 2.5)
    f = TestFunction.bump(g)
    x = np.random.default_rng(0).normal(size=(7, 256))
    out = gmc(x, 3.0, ComplexParam(0, 0), f, g.h)
    assert np.allclose(out, f.integral())


def test_gmc_single_site():
    # degenerate one-point support: f(x) e^{gamma c - gamma^2 v / 2} h
    g = Grid(1, 8, 2.5)
    vals = np.zeros(8)
    vals[3] = 2.0
    f = TestFunction(g, vals)
    gam = ComplexParam(0.4, 0.7)
    c, v = 1.3, 0.9
    x = np.full((1, 8), c)
    out = gmc(x, v, gam, f, g.h)
    want = 2.0 * np.exp(gam.gamma * c - gam.gamma_sq * v / 2) * g.h
    assert out[0] == pytest.approx(want)


def test_gmc_overflow_guard():
    g = Grid(1, 8, 2.5)
    f = TestFunction(g, np.ones(8))
    x = np.full((1, 8), 2000.0)
    with pytest.raises(OverflowGuardError):
        gmc(x, 1.0, ComplexParam(1.0, 0.0), f, g.h)


def test_gmc_mean_one_normalization():
    # E[M^(alpha)(f)] = int f within 3 stderr (Cameron-Martin)
    ens = make_ensemble(n=512, replicas=4000, seed=2)
    f = TestFunction.bump(ens.grid)
    x = ens.fields_at(ens.schedule.t_max, np.arange(4000))
    v = ens.var_diag(ens.schedule.n_layers - 1)
    m = gmc(x, v, ComplexParam(0.4, 0.0), f, ens.grid.h).real
    se = m.std() / np.sqrt(len(m))
    assert abs(m.mean() - f.integral()) < 3 * se


def test_gmc_second_moment_formula():
    # E|M|^2 = sum f f e^{|g|^2 K} h^2 on the discrete model
    ens = make_ensemble(n=256, replicas=6000, seed=3)
    f = TestFunction.bump(ens.grid)
    gam = ComplexParam(0.5, 1.3229)
    idx = ens.schedule.n_layers - 1
    x = ens.fields_at(ens.schedule.t_max, np.arange(6000))
    v = ens.var_diag(idx)
    m = gmc(x, v, gam, f, ens.grid.h)
    emp = np.mean(np.abs(m) ** 2)
    row = ens.cov_row(idx)
    fv = f.values
    n = ens.grid.n
    want = 0.0
    for lag in range(n):
        corr = float(fv @ np.roll(fv, -lag))
        want += corr * np.exp(gam.abs_sq * row[lag])
    want *= ens.grid.h**2
    se = np.std(np.abs(m) ** 2) / np.sqrt(6000)
    assert abs(emp - want) < 3 * se


def test_m_omega_values():
    assert m_omega(1 + 1j, 0.0) == pytest.approx(1.0)
    assert m_omega(1 + 1j, np.pi / 2) == pytest.approx(1.0)
    z = 0.3 - 1.7j
    for om in (0.0, 0.9):
        assert m_omega(z, om) ** 2 + m_omega(z, om + np.pi / 2) ** 2 == \
            pytest.approx(abs(z) ** 2)


def test_intensity_trivial_and_positive():
    g = Grid(1, 128, 2.5)
    f = TestFunction.bump(g)
    x = np.random.default_rng(1).normal(size=(5, 128))
    out = intensity_functional(x, 1.0, 0.0, -1.0, 2.0, f, g.h)
    want = float(np.sum(np.exp(2.0 * -1.0) * f.values**2)) * g.h
    assert np.allclose(out, want)
    out2 = intensity_functional(x, 1.0, 0.3, -1.0, 2.0, f, g.h)
    assert np.all(out2 >= 0)


def test_intensity_out_of_phase():
    g = Grid(1, 64, 2.5)
    f = TestFunction.bump(g)
    with pytest.raises(OutOfPhaseError):
        intensity_functional(np.zeros((1, 64)), 1.0, 0.8, -1.0, 2.0, f, g.h)


def test_pair_correlations_brute_force():
    rng = np.random.default_rng(4)
    u = rng.normal(size=12) + 1j * rng.normal(size=12)
    ca, cb = pair_correlations(u, 1)
    for m in range(12):
        want_a = np.sum(u * np.conj(np.roll(u, -m)))
        want_b = np.sum(u * np.roll(u, -m))
        assert ca[m] == pytest.approx(want_a, rel=1e-12)
        assert cb[m] == pytest.approx(want_b, rel=1e-12)


def test_bracket_integrands_real_case_degeneracy():
    # beta = 0: the A and B integrands coincide
    ens = make_ensemble(n=256, replicas=4, seed=6)
    f = TestFunction.bump(ens.grid)
    grabbed = {}

    class _Grab:
        def on_layer(self, state):
            if state.index == 10:
                grabbed["ab"] = bracket_integrands(state, ComplexParam(0.4, 0.0), f)

    ens.stream([_Grab()], upto_layer=10)
    a, b = grabbed["ab"]
    assert np.allclose(a, np.real(b), rtol=1e-10)
    assert np.allclose(np.imag(b), 0.0, atol=1e-12 * np.abs(b).max())


def test_bracket_integrand_mean_matches_discrete_formula():
    # E[A_s] = sum_m q(m) (sum_x f f_+m) e^{|g|^2 K_s(m)} h^2 on the grid
    ens = make_ensemble(n=256, replicas=6000, seed=7)
    f = TestFunction.bump(ens.grid)
    gam = ComplexParam(0.5, 1.3229)
    s_idx = ens.schedule.index_at(3.0)
    grabbed = {}

    class _Grab:
        def on_layer(self, state):
            if state.index == s_idx:
                grabbed["ab"] = bracket_integrands(state, gam, f)

    ens.stream([_Grab()], upto_layer=s_idx)
    a, _ = grabbed["ab"]
    q = ens.layer_cov_row(s_idx) / ens.schedule.dt
    row = ens.cov_row(s_idx)
    fv = f.values
    want = 0.0
    for lag in np.nonzero(np.abs(q) > 1e-14)[0]:
        corr = float(fv @ np.roll(fv, -lag))
        want += q[lag] * corr * np.exp(gam.abs_sq * row[lag])
    want *= ens.grid.h**2
    se = a.std() / np.sqrt(len(a))
    assert abs(a.mean() - want) < 3 * se


def test_martingale_path_reduces_to_real_chaos():
    # beta = 0, omega = 0: N_t = M_t^(alpha)(f) exactly
    ens = make_ensemble(n=256, replicas=3, seed=8)
    f = TestFunction.bump(ens.grid)
    mp = MartingalePath(3, ens.schedule.n_layers, ComplexParam(0.3, 0.0), f, 0.0)
    fc = FinalChaos(3, f, [("m", ComplexParam(0.3, 0.0), None)])
    ens.stream([mp, fc])
    assert np.allclose(mp.path[:, -1], fc.values["m"].real, rtol=1e-12)


def test_martingale_path_zero_function():
    ens = make_ensemble(n=256, replicas=2, seed=8)
    f = TestFunction(ens.grid, np.zeros(256))
    mp = MartingalePath(2, ens.schedule.n_layers, ComplexParam(0.5, 1.0), f, 0.3)
    ens.stream([mp])
    assert np.all(mp.path == 0.0)


def test_martingale_increment_means_vanish():
    ens = make_ensemble(n=256, replicas=6000, seed=9)
    f = TestFunction.bump(ens.grid)
    gam = ComplexParam(0.5, 1.3229)
    mp = MartingalePath(6000, ens.schedule.n_layers, gam, f, 0.0)
    ens.stream([mp])
    inc = np.diff(mp.path, axis=1)
    for i in range(0, inc.shape[1], 7):
        se = inc[:, i].std() / np.sqrt(len(inc))
        assert abs(inc[:, i].mean()) < 4 * se, i


def test_path_final_consistency_with_gmc():
    # N_inf = m_omega(gmc) exactly (same formula, identity check)
    ens = make_ensemble(n=256, replicas=3, seed=10)
    f = TestFunction.bump(ens.grid)
    gam = ComplexParam(0.5, 1.3229)
    om = 0.7
    name = ens.add_filter("e", BUMP, 8 * ens.grid.h)
    mp = MartingalePath(3, ens.schedule.n_layers, gam, f, om, filter_name=name)
    fc = FinalChaos(3, f, [("m", gam, name)])
    ens.stream([mp, fc])
    want = m_omega(fc.values["m"], om)
    assert np.allclose(mp.path[:, -1], want, atol=1e-12)


def test_bracket_consistency_sum_sq_vs_integrands():
    # ensemble-mean agreement of the two bracket estimators within 10%
    ens = make_ensemble(n=512, replicas=2000, seed=11)
    f = TestFunction.bump(ens.grid)
    gam = ComplexParam(0.5, 1.3229)
    om = 0.0
    t_end = ens.schedule.t_max
    bi = BracketIntegrals(2000, ens, gam, f, om, [t_end], stride=2)
    ens.stream([bi])
    qv_int = bi.bracket(-1)
    qv_sq = bi.sq[:, -1]
    ratio = qv_sq.mean() / qv_int.mean()
    assert abs(ratio - 1.0) < 0.10


def test_window_weights_reduce_to_q_dt():
    # one thin window: weights ~ q dt in the small-dt limit
    ens = make_ensemble(n=256, replicas=2, seed=12)
    gam = ComplexParam(0.5, 1.3229)
    wa, wb = window_bracket_weights(ens, 3, 3, gam)
    row = ens.layer_cov_row(3)  # the layer's covariance increment (q dt)
    v = ens.var_diag(2)
    h2 = ens.grid.h**2
    # leading order in dt: wa = h^2 e^{(b^2-a^2) v} |g|^2 (q dt)
    assert np.allclose(wa, h2 * np.exp((gam.beta**2 - gam.alpha**2) * v)
                       * gam.abs_sq * row, rtol=0.2, atol=1e-18)
    assert np.allclose(wb, h2 * np.exp(-gam.gamma_sq * v)
                       * gam.gamma_sq * row, rtol=0.2, atol=1e-18)


def test_spectral_pair_sums_match_direct():
    from gmclab.chaos import bracket_weight_spectra, spectral_pair_sums
    rng = np.random.default_rng(20)
    u = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
    wa = rng.normal(size=16)
    wb = rng.normal(size=16) + 1j * rng.normal(size=16)
    ca, cb = pair_correlations(u, 1)
    want_a = np.real((ca * wa).sum(axis=-1))
    want_b = (cb * wb).sum(axis=-1)
    fu = np.fft.fft(u, axis=-1)
    ia, ib = spectral_pair_sums(fu, bracket_weight_spectra(wa, wb, 1), 1)
    assert np.allclose(ia, want_a, rtol=1e-10)
    assert np.allclose(ib, want_b, rtol=1e-10)
