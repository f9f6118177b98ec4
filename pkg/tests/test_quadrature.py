import numpy as np
import pytest

from gmclab.quadrature import (
    adaptive_log_quad,
    gauss_legendre,
    integrate_smooth,
    log_moment,
    log_panel_integral,
)


def test_integrate_smooth_polynomial():
    assert integrate_smooth(lambda x: 3 * x**2, 0, 2) == pytest.approx(8.0)


def test_gauss_legendre_exactness():
    # degree-2n-1 exactness: integrate x^7 on [0,1] with n=4
    assert gauss_legendre(lambda x: x**7, 0, 1, n=4) == pytest.approx(1 / 8)


def test_log_moment_matches_quadrature():
    # oracle: midpoint rule on a fine grid, singularity at an irrational point
    z = 0.3137515
    w = np.linspace(0.0, 1.0, 2_000_001)
    mid = 0.5 * (w[1:] + w[:-1])
    oracle = np.sum(np.log(1.0 / np.abs(mid - z))) * (w[1] - w[0])
    assert log_moment(0.0, 1.0, z) == pytest.approx(oracle, abs=1e-6)


def test_log_panel_integral_linear_exact():
    # f(w) = 2 - w integrated against log(1/|w - z|): compare against the
    # subtraction-based adaptive quadrature (independent code path)
    z = 0.45
    w = np.linspace(0, 1, 3)          # coarse grid: f linear -> no interp error
    fw = 2.0 - w
    got = log_panel_integral(w, fw, z)
    want = adaptive_log_quad(lambda u: 2.0 - u, 0, 1, z, tol=1e-11)
    assert got == pytest.approx(want, abs=1e-9)


def test_adaptive_log_quad_outside_singularity():
    # singularity outside the interval: plain smooth integral
    want = integrate_smooth(lambda u: np.log(1 / abs(u - 3.0)), 0, 1)
    got = adaptive_log_quad(lambda u: 1.0, 0, 1, 3.0)
    assert got == pytest.approx(want, rel=1e-9)
