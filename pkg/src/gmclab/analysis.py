"""Statistical verification machinery.

Characteristic-function estimators with bootstrap bands, second-moment
scaling fits, quadratic-variation laws of large numbers and the Sobolev
tightness diagnostics.  Estimator functions consume immutable per-replica
arrays (produced by the experiments consumers); orchestration helpers that
run ensembles live at the end.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GmcLabError, OutOfPhaseError
from .scaling import in_phase_iii_closure

_MIN_REPLICAS = 100


def _boot_indices(rng, n, n_boot):
    return rng.integers(0, n, size=(n_boot, n))


@dataclass
class CFEstimate:
    """Empirical characteristic function with bootstrap standard errors."""

    xi_grid: np.ndarray
    phi_hat: np.ndarray
    stderr: np.ndarray
    n_replicas: int

    def __post_init__(self):
        bound = 1.0 + 3.0 * self.stderr
        if np.any(np.abs(self.phi_hat) > bound + 1e-12):
            raise GmcLabError("|phi_hat| exceeds 1 + 3 stderr")


def cf_estimate(samples, xi_grid, n_boot=500, seed=0):
    """phi_hat(xi) = mean_r e^{i xi s_r} with bootstrap stderr."""
    s = np.asarray(samples, dtype=float)
    if len(s) < _MIN_REPLICAS:
        raise GmcLabError(f"need >= {_MIN_REPLICAS} replicas, got {len(s)}")
    xi = np.asarray(xi_grid, dtype=float)
    ph = np.exp(1j * np.outer(xi, s))          # (n_xi, R)
    phi = ph.mean(axis=1)
    rng = np.random.default_rng(seed)
    idx = _boot_indices(rng, len(s), n_boot)
    boots = ph[:, idx].mean(axis=2)            # (n_xi, n_boot)
    stderr = np.sqrt(boots.real.var(axis=1) + boots.imag.var(axis=1))
    return CFEstimate(xi, phi, stderr, len(s))


def limit_cf(intensities, xi_grid, n_boot=500, seed=0):
    """mean_r e^{-xi^2 Z_r / 2}: the conditional-Gaussian limit CF."""
    z = np.asarray(intensities, dtype=float)
    if np.any(z < 0):
        raise GmcLabError("intensities must be nonnegative")
    xi = np.asarray(xi_grid, dtype=float)
    ph = np.exp(-0.5 * np.outer(xi**2, z))
    phi = ph.mean(axis=1)
    rng = np.random.default_rng(seed)
    idx = _boot_indices(rng, len(z), n_boot)
    boots = ph[:, idx].mean(axis=2)
    stderr = boots.std(axis=1)
    return CFEstimate(xi, phi.astype(complex), stderr, len(z))


def paired_cf_discrepancy(vm_samples, intensities, xi_grid, pairing=None,
                          n_boot=500, seed=0):
    """Same-replica CF comparison of Theorem-1.5 type.

    LHS(xi) = mean e^{i (<X,mu> + xi vM)}, RHS(xi) = mean e^{i <X,mu>
    - xi^2 Z / 2}; pairing is the per-replica <X,mu> (0 if None).  Returns
    per-xi (lhs, rhs, |diff|, stderr of the diff) with everything
    bootstrapped on the same resamples.
    """
    s = np.asarray(vm_samples, dtype=float)
    z = np.asarray(intensities, dtype=float)
    mu = np.zeros_like(s) if pairing is None else np.asarray(pairing, float)
    xi = np.asarray(xi_grid, dtype=float)
    lhs_terms = np.exp(1j * (mu[None, :] + np.outer(xi, s)))
    rhs_terms = np.exp(1j * mu[None, :] - 0.5 * np.outer(xi**2, z))
    diff_terms = lhs_terms - rhs_terms
    lhs = lhs_terms.mean(axis=1)
    rhs = rhs_terms.mean(axis=1)
    rng = np.random.default_rng(seed)
    idx = _boot_indices(rng, len(s), n_boot)
    boots = diff_terms[:, idx].mean(axis=2)
    stderr = np.sqrt(boots.real.var(axis=1) + boots.imag.var(axis=1))
    return {"xi": xi, "lhs": lhs, "rhs": rhs,
            "abs_diff": np.abs(lhs - rhs), "stderr": stderr}


def default_xi_grid(vm_samples):
    """{0.25, 0.5, 1, 2, 4} scaled by the empirical sd of v M(f, omega)."""
    sd = float(np.std(vm_samples))
    return np.array([0.25, 0.5, 1.0, 2.0, 4.0]) / max(sd, 1e-12)


def second_moment_fit(eps_values, m_samples, n_boot=500, seed=0):
    """Least-squares slope of log E|M_eps|^2 against log eps + bootstrap CI.

    m_samples: dict eps -> (R,) complex chaos values (same replicas).
    """
    eps = np.asarray(sorted(eps_values), dtype=float)
    if len(eps) < 4:
        raise GmcLabError("need >= 4 eps values on a geometric ladder")
    ratios = eps[1:] / eps[:-1]
    if np.max(np.abs(np.log(ratios) - np.log(ratios[0]))) > 1e-9:
        raise GmcLabError("eps ladder must be geometric")
    mat = np.stack([np.abs(np.asarray(m_samples[e])) ** 2 for e in eps])
    means = mat.mean(axis=1)
    if np.any(means <= 0):
        raise GmcLabError("nonpositive second-moment estimate")
    slope, intercept = np.polyfit(np.log(eps), np.log(means), 1)
    rng = np.random.default_rng(seed)
    idx = _boot_indices(rng, mat.shape[1], n_boot)
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        mb = mat[:, idx[b]].mean(axis=1)
        slopes[b] = np.polyfit(np.log(eps), np.log(mb), 1)[0]
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return {"slope": float(slope), "intercept": float(intercept),
            "ci": (float(lo), float(hi)),
            "log_eps": np.log(eps), "log_m2": np.log(means)}


def circle_log_fit(eps_values, m_samples):
    """Linear fit of E|M_eps|^2 against log(1/eps) with R^2."""
    eps = np.asarray(sorted(eps_values), dtype=float)
    y = np.array([np.mean(np.abs(np.asarray(m_samples[e])) ** 2)
                  for e in eps])
    x = np.log(1.0 / eps)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    r2 = 1.0 - resid.var() / y.var()
    return {"slope": float(slope), "intercept": float(intercept),
            "r_squared": float(r2)}


def qv_lln_stats(qv_values, intensities, n_boot=500, seed=0):
    """Pearson correlation and mean ratio of v^2 <N> against Z."""
    q = np.asarray(qv_values, dtype=float)
    z = np.asarray(intensities, dtype=float)
    corr = float(np.corrcoef(q, z)[0, 1])
    ratio = float(q.mean() / z.mean())
    rng = np.random.default_rng(seed)
    idx = _boot_indices(rng, len(q), n_boot)
    corrs = np.empty(n_boot)
    ratios = np.empty(n_boot)
    for b in range(n_boot):
        i = idx[b]
        corrs[b] = np.corrcoef(q[i], z[i])[0, 1]
        ratios[b] = q[i].mean() / z[i].mean()
    return {"correlation": corr, "mean_ratio": ratio,
            "correlation_ci": tuple(np.percentile(corrs, [2.5, 97.5])),
            "mean_ratio_ci": tuple(np.percentile(ratios, [2.5, 97.5])),
            "stderr_ratio": float(ratios.std()),
            "stderr_correlation": float(corrs.std())}


def b_share(ia, ib, omega):
    """|Re(e^{-2 i omega} gamma^2 int B)| / (|gamma|^2 int A), ensemble mean.

    ia, ib are the per-replica integrated |g|^2 A and g^2 B estimates.
    """
    num = abs(float(np.mean(np.real(np.exp(-2j * omega) * ib))))
    den = float(np.mean(ia))
    return num / den


@dataclass
class SobolevProfile:
    u: float
    eps_values: list
    norms: dict            # eps -> per-replica H^{-u} norm^2
    moment_tables: dict    # eps -> E[v^2 |Mhat(xi)|^2] over the xi grid
    increment_tables: dict  # eps -> {frac: E[v^2 |Mhat(xi+a)-Mhat(xi)|^2]}
    xi: np.ndarray
    parseval_gap: float
    dimension: int = 1

    def __post_init__(self):
        if not self.u > self.dimension / 2:
            raise GmcLabError(
                f"u = {self.u} must exceed d/2 = {self.dimension / 2}")

    def moment_bound(self):
        """max over xi and eps of the scaled Fourier moment."""
        return max(float(np.max(tab)) for tab in self.moment_tables.values())

    def moment_flatness(self):
        """max/min across eps of the sup-over-xi moment."""
        sups = [float(np.max(tab)) for tab in self.moment_tables.values()]
        return max(sups) / min(sups)

    def increment_ratio_bound(self, side):
        out = {}
        for eps, tabs in self.increment_tables.items():
            for frac, tab in tabs.items():
                a = frac * 2 * np.pi / side
                out[(eps, frac)] = float(np.max(tab)) / a**2
        return out

    def tail_mass(self, radii):
        """Criterion (i): sup over eps of the H^{-u} mass beyond |xi| > R."""
        out = []
        for r in radii:
            sel = np.abs(self.xi) > r
            vals = []
            for eps, tab in self.moment_tables.items():
                w = (1 + self.xi[sel] ** 2) ** (-self.u)
                vals.append(float(np.sum(w * tab[sel])))
            out.append(max(vals))
        return np.array(out)


def energy_distance_test(x, y, n_perm=199, seed=0, dtype=np.float32):
    """Two-sample energy-distance permutation test.

    Returns (statistic, p_value); p > threshold supports equality in law.
    """
    x = np.atleast_2d(np.asarray(x, dtype=dtype))
    y = np.atleast_2d(np.asarray(y, dtype=dtype))
    pooled = np.concatenate([x, y], axis=0)
    n, m = len(x), len(y)
    # pairwise distances once; permutations reindex block sums
    sq = (pooled**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pooled @ pooled.T)
    np.maximum(d2, 0.0, out=d2)
    dist = np.sqrt(d2, out=d2)

    def stat(labels_x):
        lx = labels_x.astype(dtype)
        ly = 1.0 - lx
        sx = dist @ lx
        s_xy = float(ly @ sx) / (n * m)
        s_xx = float(lx @ sx) / (n * n)
        sy = dist @ ly
        s_yy = float(ly @ sy) / (m * m)
        return 2 * s_xy - s_xx - s_yy

    base_labels = np.concatenate([np.ones(n), np.zeros(m)])
    observed = stat(base_labels)
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(n_perm):
        perm = rng.permutation(n + m)
        if stat(base_labels[perm]) >= observed:
            exceed += 1
    p = (exceed + 1) / (n_perm + 1)
    return float(observed), float(p)


# ----------------------------------------------------------------------
# orchestrators over ensembles
# ----------------------------------------------------------------------

def require_phase_iii(gamma, d):
    from .chaos import ComplexParam
    g = ComplexParam.of(gamma)
    if not in_phase_iii_closure(g.gamma, d):
        raise OutOfPhaseError(
            f"gamma = {g.gamma} outside the closure of P_III in d = {d}")


def stable_limit_report(vm, intensity, pairings, xi_grid=None, n_boot=500,
                        seed=0, companion_intensity=None):
    """Assemble the Theorem-1.5 CF comparison across measures and xi.

    vm: per-replica v(eps) M_eps(f, omega); intensity: same-replica
    M^{2a}(e^{|g|^2 L} f^2); pairings: dict label -> per-replica <X, mu>
    (the marginal mu = 0 is always included).  companion_intensity, when
    given, produces the sign-discrimination run (weight e^{-|g|^2 L}).
    """
    xi = default_xi_grid(vm) if xi_grid is None else np.asarray(xi_grid)
    measures = {"mu=0": None}
    measures.update(pairings or {})
    rows = {}
    max_diff = 0.0
    max_excess = -np.inf
    excess_stderr3 = 0.0
    for label, pairing in measures.items():
        res = paired_cf_discrepancy(vm, intensity, xi, pairing,
                                    n_boot=n_boot, seed=seed)
        rows[label] = res
        max_diff = max(max_diff, float(np.max(res["abs_diff"])))
        k = int(np.argmax(res["abs_diff"] - 3 * res["stderr"]))
        excess = float(res["abs_diff"][k] - 3 * res["stderr"][k])
        if excess > max_excess:
            max_excess = excess
            excess_stderr3 = float(3 * res["stderr"][k])
    out = {"xi": xi, "rows": rows, "max_abs_diff": max_diff,
           "max_excess": max_excess, "max_stderr3": excess_stderr3}
    if companion_intensity is not None:
        comp = {}
        for label, pairing in measures.items():
            comp[label] = paired_cf_discrepancy(
                vm, companion_intensity, xi, pairing, n_boot=n_boot,
                seed=seed)
        out["companion_rows"] = comp
        out["companion_max_abs_diff"] = max(
            float(np.max(r["abs_diff"])) for r in comp.values())
    return out


def stable_limit_test(ensemble, mollifier, gamma, f, omega, measures,
                      eps, n_boot=500, seed=0):
    """Theorem-1.5 CF test on an ensemble; skips outside the phase closure.

    Returns {"status": "skipped-out-of-phase"} for gamma outside the
    closure of P_III (e.g. the real subcritical control), otherwise the
    stable_limit_report plus the companion sign-discrimination run.
    """
    from .chaos import ComplexParam
    from .experiments import FinalChaos, FinalIntensity, MeasurePairing
    from .scaling import v_eps as _v_eps

    gamma = ComplexParam.of(gamma)
    if not in_phase_iii_closure(gamma.gamma, ensemble.grid.dimension):
        return {"status": "skipped-out-of-phase", "gamma": gamma.gamma}
    name = f"_slt_{eps:.8g}"
    if name not in ensemble.filters:
        ensemble.add_filter(name, mollifier, eps)
    r = ensemble.replicas
    fc = FinalChaos(r, f, [("m", gamma, name)])
    l_diag = ensemble.spec.L_diag()
    fi = FinalIntensity(r, f, gamma.alpha, gamma.abs_sq, l_diag, [name])
    mp = MeasurePairing(r, measures)
    ensemble.stream([fc, fi, mp])
    v = _v_eps(eps, mollifier, gamma)
    vm = v.value * np.array([1.0]) *         np.real(np.exp(-1j * omega) * fc.values["m"])
    z = fi.values[name]
    z_comp = z * np.exp(-2.0 * gamma.abs_sq * l_diag)
    rep = stable_limit_report(vm, z, mp.values, n_boot=n_boot, seed=seed,
                              companion_intensity=z_comp)
    rep["status"] = "ok"
    rep["v_eps"] = v.to_dict()
    return rep


def qv_lln_test(ensemble, gamma, f, omega, t_eval=None, mode="martingale",
                mollifier=None, eps=None, stride=2, seed=0):
    """Quadratic-variation LLN on an ensemble; skips outside the phase.

    mode "martingale": v_bar(t)^2 <N>_t against the same-replica intensity;
    mode "convolution": v(eps)^2 <N^(eps)>_inf with the mollified field.
    """
    from .chaos import ComplexParam
    from .experiments import BracketIntegrals, FinalIntensity
    from .scaling import v_bar as _v_bar, v_eps as _v_eps

    gamma = ComplexParam.of(gamma)
    if not in_phase_iii_closure(gamma.gamma, ensemble.grid.dimension):
        return {"status": "skipped-out-of-phase", "gamma": gamma.gamma}
    name = None
    if mode == "convolution":
        if mollifier is None or eps is None:
            raise GmcLabError("convolution mode needs mollifier and eps")
        name = f"_qv_{eps:.8g}"
        if name not in ensemble.filters:
            ensemble.add_filter(name, mollifier, eps)
    t_eval = ensemble.schedule.t_max if t_eval is None else t_eval
    r = ensemble.replicas
    bi = BracketIntegrals(r, ensemble, gamma, f, omega, [t_eval],
                          filter_name=name, stride=stride)
    fi = FinalIntensity(r, f, gamma.alpha, gamma.abs_sq,
                        ensemble.spec.L_diag(), [name])
    ensemble.stream([bi, fi])
    if mode == "convolution":
        const = _v_eps(eps, mollifier, gamma)
    else:
        const = _v_bar(bi.t_marks[-1], ensemble.spec.kappa, gamma)
    qv = const.value**2 * bi.bracket(-1)
    stats = qv_lln_stats(qv, fi.values[name], seed=seed)
    stats["status"] = "ok"
    stats["constant"] = const.to_dict()
    stats["b_share"] = b_share(bi.ia[:, -1], bi.ib[:, -1], omega)
    stats["sum_sq_over_integrand"] = float(
        bi.sq[:, -1].mean() / bi.bracket(-1).mean())
    return stats


def sobolev_diagnostics(ensemble, mollifier, gamma, rho_f, u, eps_values,
                        offsets=(1.0, 0.5, 0.25)):
    """Tightness diagnostics over an eps ladder; returns a SobolevProfile."""
    from .experiments import FourierStats
    from .scaling import v_eps as _v_eps

    d = ensemble.grid.dimension
    if u <= d / 2:
        raise GmcLabError(f"u = {u} must exceed d/2 = {d / 2}")
    names = {}
    for eps in eps_values:
        name = f"_sob_{eps:.8g}"
        if name not in ensemble.filters:
            ensemble.add_filter(name, mollifier, eps)
        names[eps] = name
    fs = FourierStats(ensemble.replicas, rho_f, gamma, u,
                      list(names.values()), offsets=offsets)
    ensemble.stream([fs])
    grid = ensemble.grid
    xi = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    norms, moments, increments = {}, {}, {}
    for eps in eps_values:
        v2 = _v_eps(eps, mollifier, gamma).value ** 2
        moments[eps] = v2 * fs.moments(names[eps])
        increments[eps] = {frac: v2 * fs.increments(names[eps], frac)
                           for frac in offsets}
        norms[eps] = v2 * fs.hnorm[names[eps]]
    return SobolevProfile(u=u, eps_values=list(eps_values), norms=norms,
                          moment_tables=moments, increment_tables=increments,
                          xi=xi, parseval_gap=max(fs.parseval_gap.values()),
                          dimension=d)
