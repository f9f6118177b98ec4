import numpy as np
import pytest

from gmclab.decomp import (
    build_K_delta,
    delta_part,
    find_t0,
    remainder_profile,
    scale_tail,
    splitting_identity_gap,
    synthetic_instance,
    verify_conditions,
)
from gmclab.kernels import ScaleKernel

TRI = ScaleKernel.triangle()


def test_delta_part_diagonal_exact():
    for delta in (0.05, 0.2, 1.0):
        for s in (1.7, 3.0, 4.2):
            assert delta_part(TRI, delta, s, 1, 0.0) == pytest.approx(delta,
                                                                      rel=1e-12)


def test_delta_part_vanishes_beyond_support():
    assert delta_part(TRI, 0.3, 2.5, 1, 1.0) == 0.0
    assert delta_part(TRI, 0.3, 2.5, 1, 1.7) == 0.0


def test_delta_part_quadrature_oracle():
    # independent trapezoid oracle in t
    delta, s, d = 0.4, 2.6, 1
    eta = (s - d) / 2
    t = np.linspace(0, 60, 600_001)
    for rho in (0.1, 0.5, 0.9):
        integrand = np.exp(-eta * t) * np.maximum(1 - rho * np.exp(t), 0.0)
        want = eta * delta * np.trapezoid(integrand, t)
        got = delta_part(TRI, delta, s, d, rho)
        assert got == pytest.approx(want, abs=1e-7)


def test_delta_part_monotone_in_rho():
    rho = np.linspace(0, 1, 201)
    vals = delta_part(TRI, 0.3, 2.4, 1, rho)
    assert np.all(np.diff(vals) <= 1e-12)


def test_delta_part_linear_in_delta():
    a = delta_part(TRI, 0.1, 2.4, 1, 0.3)
    b = delta_part(TRI, 0.2, 2.4, 1, 0.3)
    assert b == pytest.approx(2 * a, rel=1e-12)


def test_delta_part_generic_matches_triangle():
    r = np.linspace(0, 1, 2001)
    tab = ScaleKernel.tabulated(r, 1 - r, 1)
    for rho in (0.0, 0.2, 0.7):
        assert delta_part(tab, 0.3, 2.8, 1, rho) == pytest.approx(
            delta_part(TRI, 0.3, 2.8, 1, rho), abs=1e-6)


def test_verify_conditions_sup_and_psd():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, size=(256, 1))
    l_func = synthetic_instance()
    rep = verify_conditions(l_func, TRI, 0.25, 3.0, 1, pts)
    assert rep.sup_diff == pytest.approx(0.25, rel=1e-9)  # diagonal
    assert rep.min_eig_delta_part >= -1e-8 * rep.max_eig_delta_part


def test_verify_conditions_512_random_points():
    rng = np.random.default_rng(2)
    pts = rng.uniform(0, 1, size=(512, 1))
    rep = verify_conditions(synthetic_instance(), TRI, 0.1, 2.2, 1, pts)
    assert rep.min_eig_delta_part >= -1e-8 * rep.max_eig_delta_part


def test_splitting_identity():
    l_func = synthetic_instance()
    rho = np.linspace(1e-6, 1.5, 300)
    gap = splitting_identity_gap(l_func, TRI, 0.2, 3.0, 1, 2.5, rho)
    assert np.max(np.abs(gap)) < 1e-10


def test_find_t0_on_shipped_instance():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(200, 1))
    l_func = synthetic_instance()
    t0, min_eig, rep = find_t0(l_func, TRI, 0.2, 3.0, 1, pts)
    assert t0 is not None and t0 <= 30.0
    assert rep.t0_found == t0


def test_find_t0_trivial_when_already_star_form():
    # K with L = -j_kappa + khat-form: remainder at t0 = 0 already PD
    def l_func(rho):
        rho = np.asarray(rho, dtype=float)
        return TRI.V(np.minimum(rho, 1.0)) + np.where(
            rho > 1, np.log(np.maximum(rho, 1e-300)), 0.0) * 0.0

    rng = np.random.default_rng(4)
    pts = rng.uniform(0, 0.9, size=(128, 1))
    t0, _, _ = find_t0(l_func, TRI, 1.0, 3.0, 1, pts)
    assert t0 == 0.0


def test_remainder_monotone_min_eig_in_t0():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 1, size=(100, 1))
    dist = np.abs(pts[:, None, 0] - pts[None, :, 0])
    l_func = synthetic_instance(amplitude=0.3, width=0.15)
    eigs = []
    for t0 in (0.0, 1.0, 2.0, 4.0, 8.0):
        g = remainder_profile(l_func, TRI, 0.2, 3.0, 1, t0,
                              dist.ravel()).reshape(dist.shape)
        eigs.append(np.linalg.eigvalsh(0.5 * (g + g.T))[0])
    assert np.all(np.diff(eigs) >= -1e-10)


def test_build_K_delta_profiles():
    l_func = synthetic_instance()
    kdelta, dprof = build_K_delta(l_func, TRI, 0.15, 2.5, 1)
    rho = 0.3
    assert kdelta(rho) == pytest.approx(
        np.log(1 / rho) + l_func(rho) + dprof(rho))
    with pytest.raises(ValueError):
        build_K_delta(l_func, TRI, 0.1, 0.9, 1)  # s <= d


def test_find_t0_increases_as_delta_decreases():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(200, 1))
    l_func = synthetic_instance()
    t0s = []
    for delta in (0.4, 0.2, 0.1, 0.05):
        t0, _, _ = find_t0(l_func, TRI, delta, 3.0, 1, pts)
        assert t0 is not None
        t0s.append(t0)
    assert t0s[0] > 0.0 or t0s[-1] > 0.0  # nontrivial instance
    assert all(b >= a for a, b in zip(t0s, t0s[1:]))
