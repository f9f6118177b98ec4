"""Streaming consumers: per-replica statistics in one pass over an ensemble.

Consumers plug into FieldEnsemble.stream and collect final-state chaos
values, measure pairings, martingale paths, integrated bracket estimates and
Fourier moments, indexed by absolute replica position.  They are composable:
a single pass typically carries one FinalChaos, one FinalIntensity, one
MeasurePairing and one BracketIntegrals consumer, so every acceptance
statistic shares the same replicas (same-replica pairing).
"""

import numpy as np

from . import chaos as cmod


class _Consumer:
    def start(self, ensemble, batch):
        self.ensemble = ensemble
        self.batch = batch


class FinalChaos(_Consumer):
    """M^{(gamma)}(f) at the final state, per (gamma, filter) request.

    requests: list of (label, gamma, filter_name or None).
    """

    def __init__(self, n_replicas, f, requests):
        self.f = f
        self.requests = list(requests)
        self.values = {label: np.zeros(n_replicas, dtype=complex)
                       for label, _, _ in self.requests}

    def on_final(self, state):
        ens = state.ensemble
        for label, gamma, name in self.requests:
            x = state.x() if name is None else state.x_filtered(name)
            v = ens.var_diag(state.index, name)
            self.values[label][state.batch] = cmod.gmc(
                x, v, gamma, self.f, ens.grid.h)


class FinalIntensity(_Consumer):
    """M^{(2 alpha)}(e^{|gamma|^2 L} f^2) at the final state per filter."""

    def __init__(self, n_replicas, f, alpha, gamma_abs_sq, l_diag, names):
        self.f = f
        self.alpha = alpha
        self.gamma_abs_sq = gamma_abs_sq
        self.l_diag = l_diag
        self.names = list(names)
        self.values = {n: np.zeros(n_replicas) for n in self.names}

    def on_final(self, state):
        ens = state.ensemble
        for name in self.names:
            x = state.x() if name is None else state.x_filtered(name)
            v = ens.var_diag(state.index, name)
            self.values[name][state.batch] = cmod.intensity_functional(
                x, v, self.alpha, self.l_diag, self.gamma_abs_sq, self.f,
                ens.grid.h, ens.grid.dimension)


class MeasurePairing(_Consumer):
    """<X, mu> at the final (unmollified) state, one value per measure."""

    def __init__(self, n_replicas, measures):
        # measures: dict label -> (atoms, weights)
        self.measures = measures
        self.values = {k: np.zeros(n_replicas) for k in measures}

    def on_final(self, state):
        ens = state.ensemble
        x = state.x()
        for label, (atoms, weights) in self.measures.items():
            idx = [ens.grid.index_of(a) for a in np.atleast_1d(atoms)]
            w = np.asarray(weights, dtype=float)
            if ens.grid.dimension == 1:
                cols = np.array([i[0] for i in idx])
                vals = x[:, cols] @ w
            else:
                vals = np.stack([x[:, i, j] for (i, j) in idx], axis=1) @ w
            self.values[label][state.batch] = vals


class MartingalePath(_Consumer):
    """N_t at every layer edge for one (gamma, f, omega, filter)."""

    def __init__(self, n_replicas, n_layers, gamma, f, omega,
                 filter_name=None):
        self.gamma = cmod.ComplexParam.of(gamma)
        self.f = f
        self.omega = float(omega)
        self.name = filter_name
        self.path = np.zeros((n_replicas, n_layers + 1))

    def on_base(self, state):
        self.path[state.batch, 0] = cmod.martingale_value(
            state, self.gamma, self.f, self.omega, self.name)

    def on_layer(self, state):
        self.path[state.batch, state.index + 1] = cmod.martingale_value(
            state, self.gamma, self.f, self.omega, self.name)


class BracketIntegrals(_Consumer):
    """Integrated bracket estimates up to each requested mark time.

    Per replica and mark t: IA = int_0^t |gamma|^2 A_s ds and IB = int_0^t
    gamma^2 B_s ds, accumulated over layer windows of `stride` layers with
    exact-in-mean weights; plus the squared-increment estimator SQ =
    sum (N_{edge} - N_{prev edge})^2 over the same window partition, and the
    final N value.   <N>_t then is IA/2 + Re(e^{-2 i omega} IB)/2.
    """

    def __init__(self, n_replicas, ensemble, gamma, f, omega, t_marks,
                 filter_name=None, stride=2):
        self.gamma = cmod.ComplexParam.of(gamma)
        self.f = f
        self.omega = float(omega)
        self.name = filter_name
        sched = ensemble.schedule
        self.upto = sched.index_at(max(t_marks))
        self.mark_indices = sorted(sched.index_at(t) for t in t_marks)
        self.t_marks = [float(sched.t_values[i + 1]) for i in self.mark_indices]
        # read states: base (-1) and every stride-th layer edge below upto
        reads = list(range(stride - 1, self.upto, stride))
        if not reads or reads[-1] != self.upto:
            reads.append(self.upto)
        # windows always end at mark indices so integrals split cleanly
        for m in self.mark_indices:
            if m not in reads and m < self.upto:
                reads.append(m)
        self.reads = sorted(set(reads))
        self._read_set = set(self.reads)
        self._weights = {}
        n_marks = len(self.mark_indices)
        self.ia = np.zeros((n_replicas, n_marks))
        self.ib = np.zeros((n_replicas, n_marks), dtype=complex)
        self.sq = np.zeros((n_replicas, n_marks))
        self.n_final = np.zeros((n_replicas, n_marks))
        self._prepared = False

    def start(self, ensemble, batch):
        super().start(ensemble, batch)
        if not self._prepared:
            d = ensemble.grid.dimension
            prev = -1
            for j in self.reads:
                wa, wb = cmod.window_bracket_weights(
                    ensemble, prev + 1, j, self.gamma, self.name)
                self._weights[prev] = cmod.bracket_weight_spectra(wa, wb, d)
                prev = j
            self._prepared = True
        self._n_prev = None
        self._acc_ia = np.zeros((len(batch), len(self.mark_indices)))
        self._acc_ib = np.zeros((len(batch), len(self.mark_indices)),
                                dtype=complex)
        self._acc_sq = np.zeros((len(batch), len(self.mark_indices)))

    def _marks_covering(self, window_end):
        return [k for k, m in enumerate(self.mark_indices) if m >= window_end]

    def on_base(self, state):
        self._read(state, -1)

    def on_layer(self, state):
        if state.index in self._read_set:
            self._read(state, state.index)

    def _read(self, state, j):
        ens = state.ensemble
        d = ens.grid.dimension
        fu, v = cmod.u_spectrum(state, self.gamma, self.f, self.name)
        # chaos value from the DC mode: gmc = h^d e^{-g^2 v/2} sum_x u
        dc = fu[(Ellipsis,) + (0,) * d]
        z = ens.grid.h**d * np.exp(-0.5 * self.gamma.gamma_sq * v) * dc
        n_now = cmod.m_omega(z, self.omega)
        if self._n_prev is not None:
            dn2 = (n_now - self._n_prev) ** 2
            for k in self._marks_covering(j):
                self._acc_sq[:, k] += dn2
        self._n_prev = n_now
        for k, m in enumerate(self.mark_indices):
            if m == j:
                self.n_final[state.batch, k] = n_now
        if j in self._weights and j < self.upto:
            window_end = min(x for x in self.reads if x > j)
            ia, ib = cmod.spectral_pair_sums(fu, self._weights[j], d)
            for k in self._marks_covering(window_end):
                self._acc_ia[:, k] += ia
                self._acc_ib[:, k] += ib
        if j == self.upto:
            self.ia[state.batch] = self._acc_ia
            self.ib[state.batch] = self._acc_ib
            self.sq[state.batch] = self._acc_sq

    def bracket(self, mark=-1):
        """<N>_t estimate from the integrand route at the given mark."""
        return 0.5 * self.ia[:, mark] + 0.5 * np.real(
            np.exp(-2j * self.omega) * self.ib[:, mark])


class FourierStats(_Consumer):
    """Tightness diagnostics: Fourier moments of the chaos field.

    For each filter: accumulates sum_r |Mhat(xi)|^2, the translation
    increments |Mhat(xi + a) - Mhat(xi)|^2 for a = frac * (2 pi / side),
    and the per-replica H^{-u} norm squared.
    """

    def __init__(self, n_replicas, rho_f, gamma, u, names,
                 offsets=(1.0, 0.5, 0.25)):
        self.rho_f = rho_f
        self.gamma = cmod.ComplexParam.of(gamma)
        self.u = float(u)
        self.names = list(names)
        self.offsets = tuple(offsets)
        self.moment_sum = {}
        self.increment_sum = {}
        self.hnorm = {n: np.zeros(n_replicas) for n in self.names}
        self.parseval_gap = {n: 0.0 for n in self.names}
        self.count = 0

    def on_final(self, state):
        ens = state.ensemble
        grid = ens.grid
        if grid.dimension != 1:
            raise NotImplementedError("Fourier stats implemented in d = 1")
        h = grid.h
        xi = 2 * np.pi * np.fft.fftfreq(grid.n, d=h)
        weight = (1.0 + xi**2) ** (-self.u) * (2 * np.pi / grid.side)
        coords = grid.coords()
        for name in self.names:
            x = state.x() if name is None else state.x_filtered(name)
            v = ens.var_diag(state.index, name)
            w = self.rho_f.values * np.exp(
                self.gamma.gamma * x - 0.5 * self.gamma.gamma_sq * v)
            mhat = np.fft.ifft(w, axis=-1) * grid.n * h
            p2 = np.abs(mhat) ** 2
            if name not in self.moment_sum:
                self.moment_sum[name] = np.zeros(grid.n)
                self.increment_sum[name] = {o: np.zeros(grid.n)
                                            for o in self.offsets}
            self.moment_sum[name] += p2.sum(axis=0)
            self.hnorm[name][state.batch] = p2 @ weight
            # Parseval: sum |W|^2 h = sum |Mhat|^2 dxi / (2 pi)
            lhs = (np.abs(w) ** 2).sum(axis=-1) * h
            rhs = p2.sum(axis=-1) * (2 * np.pi / grid.side) / (2 * np.pi)
            gap = float(np.max(np.abs(lhs - rhs) / np.maximum(lhs, 1e-300)))
            self.parseval_gap[name] = max(self.parseval_gap[name], gap)
            for frac in self.offsets:
                a = frac * 2 * np.pi / grid.side
                mhat_a = np.fft.ifft(w * np.exp(1j * a * coords),
                                     axis=-1) * grid.n * h
                self.increment_sum[name][frac] += \
                    (np.abs(mhat_a - mhat) ** 2).sum(axis=0)
        self.count += len(state.batch)

    def moments(self, name):
        return self.moment_sum[name] / self.count

    def increments(self, name, frac):
        return self.increment_sum[name][frac] / self.count


def martingale_path(ensemble, gamma, f, omega, mollifier=None, eps=None,
                    replicas=None):
    """The path t_i -> N_{t_i}^{(eps)} over the schedule, per replica.

    With a mollifier the path uses X_{t, eps}; the final value equals
    m_omega of the chaos at (t_max, eps) exactly (conditional-expectation
    consistency of the discrete model).
    """
    name = None
    if mollifier is not None:
        if eps is None:
            raise ValueError("eps required with a mollifier")
        name = f"_path_{eps:.8g}"
        if name not in ensemble.filters:
            ensemble.add_filter(name, mollifier, eps)
    reps = np.arange(ensemble.replicas) if replicas is None \
        else np.asarray(replicas)
    mp = MartingalePath(ensemble.replicas, ensemble.schedule.n_layers,
                        gamma, f, omega, filter_name=name)
    ensemble.stream([mp], replicas=reps)
    return mp.path[reps]
