"""Layered spectral synthesis of log-correlated Gaussian fields.

The martingale approximation X_t is built as a sum of independent stationary
layers: layer i adds covariance kappa(e^{t*_i} dist(x,y)) * dt with t*_i the
midpoint of [t_{i-1}, t_i].  Each layer is synthesized by circulant
embedding on the periodic grid: eigenvalues = DFT of the covariance row,
negatives clipped to zero (mass recorded), increments drawn in spectral
space so mollified versions cost one filtered inverse FFT.

Randomness is counter-based: one numpy Philox4x64-10 generator per
(seed, replica, layer), so any replica/layer is regenerable in isolation and
ensembles are replica-prefix stable.

Ensembles are consumed by streaming: consumers receive per-layer states with
lazy access to the plain and mollified fields, so chaos functionals and
bracket integrals accumulate in one pass without storing layer history.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotPositiveDefiniteError,
    OffGridAtomError,
    ResolutionError,
    SynthesisAccuracyError,
)
from . import kernels as kmod

_DT_DEFAULT = np.log(2.0) / 8.0
_MAX_SITES = 2**22
_CLIP_BUDGET = 1e-3
_TAG_LAYER = 0  # stream tags keep layer/oracle draws disjoint
_TAG_CHOL = 1

GENERATOR_ALGORITHM = f"numpy-philox4x64-10/{np.__version__}"


@dataclass(frozen=True)
class Grid:
    """Periodic lattice: n sites per axis (power of two), spacing h."""

    dimension: int
    n: int
    side: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise ValueError("points per axis must be a power of two >= 4")
        if self.n**self.dimension > _MAX_SITES:
            raise ValueError(f"grid exceeds the desk-scale guard {_MAX_SITES}")
        if self.side <= 0:
            raise ValueError("side must be positive")

    @property
    def h(self):
        return self.side / self.n

    @property
    def sites(self):
        return self.n**self.dimension

    def coords(self):
        x = np.arange(self.n) * self.h
        if self.dimension == 1:
            return x
        return x  # per-axis coordinates; mesh assembled by callers

    def row_distances(self):
        """Torus distance from site 0 to every site (covariance row shape)."""
        j = np.arange(self.n)
        axis = np.minimum(j, self.n - j) * self.h
        if self.dimension == 1:
            return axis
        return np.sqrt(axis[:, None] ** 2 + axis[None, :] ** 2)

    def index_of(self, point):
        """Snap a point to its grid index; error beyond h/2 per axis."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        if not np.all(np.isfinite(p)):
            raise OffGridAtomError(f"atom {point} is not finite")
        idx = np.rint(p / self.h).astype(int)
        # strictly-inside-h/2 snap; the ambiguous midpoint is rejected
        if np.any(np.abs(p - idx * self.h) > self.h / 2 * (1 - 1e-9)):
            raise OffGridAtomError(f"atom {point} further than h/2 from the grid")
        return tuple(int(i) % self.n for i in idx)

    def to_dict(self):
        return {"dimension": self.dimension, "n": self.n, "side": self.side}


@dataclass(frozen=True)
class LayerSchedule:
    """Uniform scale ticks 0 = t_0 < ... < t_M discretizing the filtration."""

    t_values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_values, dtype=float)
        object.__setattr__(self, "t_values", t)
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("t_values must increase from 0")
        steps = np.diff(t)
        if np.max(steps) - np.min(steps) > 1e-12:
            raise ValueError("layer steps must be uniform within 1e-12")

    @classmethod
    def uniform(cls, t_max, dt=_DT_DEFAULT):
        m = int(np.ceil(t_max / dt - 1e-12))
        return cls(np.arange(m + 1) * dt)

    @classmethod
    def default(cls, grid, dt=_DT_DEFAULT, t_extra=2.0):
        """Layers resolve to grid scale plus a sub-grid margin t_extra."""
        return cls.uniform(np.log(1.0 / grid.h) + t_extra, dt)

    @property
    def dt(self):
        return float(self.t_values[1] - self.t_values[0])

    @property
    def t_max(self):
        return float(self.t_values[-1])

    @property
    def n_layers(self):
        return len(self.t_values) - 1

    def nodes(self):
        """Midpoint node of each layer (covariance evaluation scale)."""
        t = self.t_values
        return 0.5 * (t[:-1] + t[1:])

    def index_at(self, t):
        """Last layer index whose right edge is <= t (+ tolerance)."""
        edges = self.t_values[1:]
        i = int(np.searchsorted(edges, t + 1e-9, side="right")) - 1
        if i < 0:
            raise ValueError(f"time {t} precedes the first layer edge")
        return i

    def edge_time(self, t):
        """Realized layer-edge time for a requested t."""
        return float(self.t_values[self.index_at(t) + 1])

    def validate_for_grid(self, grid):
        if self.t_max < np.log(1.0 / grid.h) - 1e-9:
            raise ValueError(
                "schedule must resolve the grid scale: t_max >= log(1/h)")

    def to_dict(self):
        return {"dt": self.dt, "t_max": self.t_max, "n_layers": self.n_layers}


def _philox(seed, replica, layer, tag):
    """Philox keyed by (seed, replica, layer, tag): counter-based substreams.

    The 128-bit key packs the seed in the first word and
    (replica, layer, tag) in the second (replica < 2^30, layer < 2^32).
    """
    word2 = (int(replica) << 34) | (int(layer) << 2) | int(tag)
    key = np.array([int(seed) & (2**64 - 1), word2], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class _Filter:
    """Grid-sampled mollifier filter (half spectrum, unit DC gain)."""

    def __init__(self, grid, mollifier, eps):
        if eps < 2 * grid.h - 1e-12:
            raise ResolutionError(
                f"eps = {eps} below the 2h resolution floor ({2*grid.h})")
        if 2 * eps >= grid.side / 2:
            raise ResolutionError("mollifier support exceeds half the torus")
        dist = grid.row_distances()
        theta = mollifier.radial_profile(dist / eps) / eps**grid.dimension
        total = theta.sum() * grid.h**grid.dimension
        theta = theta / total  # exact unit mass on the grid
        if grid.dimension == 1:
            self.half = np.fft.rfft(theta).real * grid.h
        else:
            self.half = np.fft.fft2(theta).real * grid.h**2
        self.eps = float(eps)
        self.mollifier = mollifier


class LayerState:
    """Per-batch view of the cumulative field after a given layer."""

    def __init__(self, ensemble, batch, spectral, index, t_right):
        self.ensemble = ensemble
        self.batch = batch          # slice of replica indices
        self.index = index          # layer index, -1 for the K0 base alone
        self.t = t_right            # right edge时 of the accumulated field
        self._spectral = spectral
        self._fields = {}

    def x(self):
        """Plain field values, shape (batch, grid sites...)."""
        return self._materialize(None)

    def x_filtered(self, name):
        """Mollified field X_{t,eps} for a registered filter."""
        return self._materialize(name)

    def _materialize(self, name):
        if name in self._fields:
            return self._fields[name]
        ens = self.ensemble
        spec = self._spectral
        if name is not None:
            spec = spec * ens.filters[name].half
        if ens.grid.dimension == 1:
            out = np.fft.irfft(spec, ens.grid.n, axis=-1)
        else:
            out = np.real(np.fft.ifft2(spec, axes=(-2, -1))) * ens.grid.n
        self._fields[name] = out
        return out

    def var_diag(self, name=None):
        """Exact variance of the synthesized (filtered) field at this layer."""
        return self.ensemble.var_diag(self.index, name)


class FieldEnsemble:
    """Replicated layered Gaussian field with deterministic substreams."""

    def __init__(self, spec, grid, schedule, replicas, seed):
        if spec.dimension != grid.dimension:
            raise ValueError("kernel and grid dimension mismatch")
        schedule.validate_for_grid(grid)
        # kappa support (radius e^{-t0} = 1) must fit half the torus
        if grid.side <= 2.0:
            raise ValueError(
                "kappa support does not fit half the torus: side must "
                "exceed 2 (coarsest layer support is e^{-t0} = 1)")
        self.spec = spec
        self.grid = grid
        self.schedule = schedule
        self.replicas = int(replicas)
        self.seed = int(seed)
        self.filters = {}
        self._sqrt_spectra = None
        self._layer_vars = None
        self.clipped_mass = 0.0
        self._base_half = None
        self._prepare_spectra()

    # -- deterministic layer spectra ------------------------------------

    def _row_transform(self, row):
        if self.grid.dimension == 1:
            return np.fft.rfft(row).real
        return np.fft.fft2(row).real

    def _prepare_spectra(self):
        dist = self.grid.row_distances()
        dt = self.schedule.dt
        sq = []
        lvars = []
        clipped = 0.0
        total = 0.0
        for node in self.schedule.nodes():
            row = self.spec.kappa(np.exp(node) * dist) * dt
            lam = self._row_transform(row)
            neg = lam < 0
            clipped += float(-lam[neg].sum())
            total += float(np.abs(lam).sum())
            lam[neg] = 0.0
            sq.append(np.sqrt(lam))
            lvars.append(float(lam.mean() if self.grid.dimension == 2
                                else (lam.sum() + lam[1:-1].sum()) / self.grid.n))
            # d=1 half-spectrum: interior modes count twice in the row mean
        k0 = self.spec.k0
        self._base_half = None
        self._base_chol = None
        self._base_var = 0.0
        if k0.form != "zero" and k0.stationary:
            # stationary K0: same circulant route as the layers (exact)
            row0 = k0.profile(dist)
            lam0 = self._row_transform(row0)
            neg = lam0 < 0
            clipped += float(-lam0[neg].sum())
            total += float(np.abs(lam0).sum())
            lam0[neg] = 0.0
            self._base_half = np.sqrt(lam0)
            self._base_var = float(lam0.mean() if self.grid.dimension == 2
                                   else (lam0.sum() + lam0[1:-1].sum()) / self.grid.n)
        elif k0.form != "zero":
            # non-stationary K0: dense factorization over the grid sites
            if self.grid.sites > 2048:
                raise NotPositiveDefiniteError(
                    "dense K0 factorization limited to 2048 sites")
            pts = (self.grid.coords().reshape(-1, 1)
                   if self.grid.dimension == 1 else None)
            if pts is None:
                ax = self.grid.coords()
                pts = np.stack(np.meshgrid(ax, ax, indexing="ij"),
                               axis=-1).reshape(-1, 2)
            m = len(pts)
            gram = np.asarray(
                k0(np.repeat(pts, m, 0), np.tile(pts, (m, 1)))
            ).reshape(m, m)
            jitter = 1e-10 * np.trace(gram) / m
            try:
                self._base_chol = np.linalg.cholesky(gram)
            except np.linalg.LinAlgError:
                try:
                    self._base_chol = np.linalg.cholesky(
                        gram + jitter * np.eye(m))
                except np.linalg.LinAlgError as exc:
                    raise NotPositiveDefiniteError(
                        "K0 Gram factorization failed") from exc
            self._base_var = np.diag(gram).copy()  # per-site array
        self.clipped_mass = clipped / max(total, 1e-300)
        if self.clipped_mass > _CLIP_BUDGET:
            raise SynthesisAccuracyError(
                f"clipped spectral mass {self.clipped_mass:.2e} exceeds "
                f"{_CLIP_BUDGET}")
        self._sqrt_spectra = sq
        self._layer_vars = np.array(lvars)

    # -- variance bookkeeping -------------------------------------------

    def layer_variances(self, name=None):
        """Realized per-layer variances (exact for the discrete field)."""
        if name is None:
            return self._layer_vars.copy()
        half = self.filters[name].half
        out = np.empty(self.schedule.n_layers)
        for i, sq in enumerate(self._sqrt_spectra):
            lam = sq**2 * half**2
            out[i] = (lam.mean() if self.grid.dimension == 2
                      else (lam.sum() + lam[1:-1].sum()) / self.grid.n)
        return out

    def var_diag(self, layer_index, name=None):
        """Variance of X_{t_i} (or its mollified version) on the diagonal."""
        lv = self._cached_layer_vars(name)
        base = self._base_var if name is None else self._filtered_base_var(name)
        if layer_index < 0:
            return base
        return base + float(np.cumsum(lv)[layer_index])

    def _cached_layer_vars(self, name):
        if not hasattr(self, "_lv_cache"):
            self._lv_cache = {}
        if name not in self._lv_cache:
            self._lv_cache[name] = self.layer_variances(name)
        return self._lv_cache[name]

    def _filtered_base_var(self, name):
        if self._base_chol is not None:
            raise NotImplementedError(
                "mollified variance bookkeeping needs a stationary K0")
        if self._base_half is None:
            return 0.0
        half = self.filters[name].half
        lam = self._base_half**2 * half**2
        return float(lam.mean() if self.grid.dimension == 2
                     else (lam.sum() + lam[1:-1].sum()) / self.grid.n)

    def cov_row(self, layer_index, name=None):
        """Exact covariance row of the synthesized field at layer_index.

        layer_index = -1 gives the base (K0) row alone.
        """
        if self._base_chol is not None:
            raise NotImplementedError(
                "covariance rows need a stationary K0")
        acc = np.zeros_like(self._sqrt_spectra[0])
        for i in range(layer_index + 1):
            acc = acc + self._sqrt_spectra[i] ** 2
        if self._base_half is not None:
            acc = acc + self._base_half**2
        if name is not None:
            acc = acc * self.filters[name].half ** 2
        if self.grid.dimension == 1:
            return np.fft.irfft(acc, self.grid.n)
        return np.real(np.fft.ifft2(acc))

    def layer_cov_row(self, i, name=None):
        """Covariance row contributed by layer i alone (the discrete Q_i dt)."""
        lam = self._sqrt_spectra[i] ** 2
        if name is not None:
            lam = lam * self.filters[name].half ** 2
        if self.grid.dimension == 1:
            return np.fft.irfft(lam, self.grid.n)
        return np.real(np.fft.ifft2(lam))

    # -- filters ----------------------------------------------------------

    def add_filter(self, name, mollifier, eps):
        self.filters[name] = _Filter(self.grid, mollifier, eps)
        return name

    # -- replica draws ------------------------------------------------------

    def _draw_half(self, rng, sqrt_lam):
        n = self.grid.n
        if self.grid.dimension == 1:
            z = rng.standard_normal(n)
            a = np.empty(n // 2 + 1, dtype=complex)
            a[0] = np.sqrt(n) * sqrt_lam[0] * z[0]
            a[-1] = np.sqrt(n) * sqrt_lam[-1] * z[1]
            a[1:-1] = np.sqrt(n / 2.0) * sqrt_lam[1:-1] * (
                z[2::2] + 1j * z[3::2])
            return a
        w = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return sqrt_lam * w

    def spectral_increment(self, replica, layer_index):
        rng = _philox(self.seed, replica, layer_index, _TAG_LAYER)
        return self._draw_half(rng, self._sqrt_spectra[layer_index])

    def base_spectral(self, replica):
        rng = _philox(self.seed, replica, 2**32 - 1, _TAG_LAYER)
        if self._base_half is not None:
            return self._draw_half(rng, self._base_half)
        if self._base_chol is not None:
            field = self._base_chol @ rng.standard_normal(self.grid.sites)
            if self.grid.dimension == 1:
                return np.fft.rfft(field)
            # d=2 states materialize as Re(ifft2(acc)) * n: compensate
            return np.fft.fft2(field.reshape(self.grid.n, self.grid.n)) \
                / self.grid.n
        return None

    # -- streaming ---------------------------------------------------------

    def stream(self, consumers, batch_size=None, replicas=None,
               upto_layer=None):
        """One pass over layers for all replicas, batch by batch.

        Consumers implement optional hooks:
          start(ensemble, batch)        batch = array of replica indices
          on_layer(state)               called after each layer accumulates
          on_final(state)               called at the last layer
          finish()
        """
        reps = np.arange(self.replicas) if replicas is None else \
            np.asarray(replicas)
        if batch_size is None:
            batch_size = max(1, int(2**22 / self.grid.sites))
        last = self.schedule.n_layers - 1 if upto_layer is None else upto_layer
        for lo in range(0, len(reps), batch_size):
            batch = reps[lo:lo + batch_size]
            shape = (len(batch), self.grid.n // 2 + 1) if \
                self.grid.dimension == 1 else (len(batch), self.grid.n, self.grid.n)
            acc = np.zeros(shape, dtype=complex)
            for b, r in enumerate(batch):
                base = self.base_spectral(int(r))
                if base is not None:
                    acc[b] += base
            for con in consumers:
                if hasattr(con, "start"):
                    con.start(self, batch)
            base_state = LayerState(self, batch, acc, -1, 0.0)
            for con in consumers:
                if hasattr(con, "on_base"):
                    con.on_base(base_state)
            for i in range(last + 1):
                for b, r in enumerate(batch):
                    acc[b] += self.spectral_increment(int(r), i)
                state = LayerState(self, batch, acc, i,
                                   float(self.schedule.t_values[i + 1]))
                for con in consumers:
                    if hasattr(con, "on_layer"):
                        con.on_layer(state)
                if i == last:
                    for con in consumers:
                        if hasattr(con, "on_final"):
                            con.on_final(state)
        for con in consumers:
            if hasattr(con, "finish"):
                con.finish()

    def fields_at(self, t, replicas, name=None):
        """Materialize X_t (optionally mollified) for chosen replicas."""
        idx = self.schedule.index_at(t)
        collected = {}

        class _Grab:
            def on_final(_self, state):
                key = name
                collected.setdefault("x", []).append(
                    state.x() if key is None else state.x_filtered(key))

        self.stream([_Grab()], replicas=replicas, upto_layer=idx)
        return np.concatenate(collected["x"], axis=0)

    def metadata(self):
        return {
            "kernel_spec": self.spec.to_dict(),
            "grid": self.grid.to_dict(),
            "schedule": self.schedule.to_dict(),
            "replicas": self.replicas,
            "seed": self.seed,
            "generator_algorithm": GENERATOR_ALGORITHM,
            "clipped_spectral_mass": self.clipped_mass,
        }

    def export(self, path, replicas=None, name=None):
        """Binary container of final fields + JSON sidecar."""
        reps = np.arange(min(self.replicas, 64)) if replicas is None \
            else np.asarray(replicas)
        fields = self.fields_at(self.schedule.t_max, reps, name=name)
        np.savez_compressed(path, fields=fields, replicas=reps)
        sidecar = str(path) + ".json"
        with open(sidecar, "w") as fh:
            json.dump(self.metadata(), fh, indent=2)
        return sidecar


# ----------------------------------------------------------------------
# spec operations
# ----------------------------------------------------------------------

def sample_layers(spec, grid, schedule, replicas, seed):
    """Construct the layered ensemble (validates pre-conditions)."""
    return FieldEnsemble(spec, grid, schedule, replicas, seed)


def mollify(ensemble, mollifier, eps, t=None, replicas=None):
    """X_{t,eps} arrays for chosen replicas (t defaults to t_max)."""
    name = f"_mollify_{eps:.6g}"
    if name not in ensemble.filters:
        ensemble.add_filter(name, mollifier, eps)
    t = ensemble.schedule.t_max if t is None else t
    reps = np.arange(ensemble.replicas) if replicas is None else replicas
    return ensemble.fields_at(t, reps, name=name)


def pair_with_measure(ensemble, atoms, weights, t=None, replicas=None):
    """<X_t, mu> = sum_j w_j X_t(atom_j) per replica."""
    t = ensemble.schedule.t_max if t is None else t
    reps = np.arange(ensemble.replicas) if replicas is None else replicas
    x = ensemble.fields_at(t, reps)
    idx = [ensemble.grid.index_of(a) for a in np.atleast_1d(atoms)]
    w = np.asarray(weights, dtype=float)
    if len(idx) != len(w):
        raise ValueError("atoms and weights must align")
    if ensemble.grid.dimension == 1:
        cols = np.array([i[0] for i in idx])
        return x[:, cols] @ w
    vals = np.stack([x[:, i, j] for (i, j) in idx], axis=1)
    return vals @ w


def cholesky_oracle(spec, mollifier, eps, points, replicas, seed,
                    jitter_scale=1e-10):
    """Exact dense sampler of X_eps on few points (synthesis ground truth)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != spec.dimension:
        pts = pts.reshape(-1, spec.dimension)
    m = len(pts)
    if m > 2048:
        raise ValueError("cholesky oracle limited to 2048 points")
    gram = _k_eps_gram(spec, mollifier, eps, pts)
    tr = np.trace(gram)
    jitter = jitter_scale * tr / m
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(gram + jitter * np.eye(m))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(
                f"K_eps Gram not PD after jitter {jitter:.2e}") from exc
    out = np.empty((int(replicas), m))
    for r in range(int(replicas)):
        rng = _philox(seed, r, 0, _TAG_CHOL)
        out[r] = chol @ rng.standard_normal(m)
    return out


def _k_eps_gram(spec, mollifier, eps, pts):
    """Pairwise K_eps Gram; stationary specs go through a radial table."""
    m = len(pts)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    if spec.k0.stationary:
        dmax = float(dist.max())
        n_tab = int(min(2049, max(129, 16 * dmax / eps)))
        rho = np.linspace(0.0, dmax * 1.0000001, n_tab)
        vals = np.array([
            kmod.kernel_K_eps(_unbounded(spec), mollifier, _origin(spec),
                              _shifted(spec, r), eps)
            for r in rho])
        return np.interp(dist, rho, vals)
    g = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            g[i, j] = g[j, i] = kmod.kernel_K_eps(
                _unbounded(spec), mollifier, pts[i], pts[j], eps)
    return g


def _unbounded(spec):
    return kmod.KernelSpec(spec.k0, spec.kappa, spec.dimension,
                           domain_side=np.inf)


def _origin(spec):
    return np.zeros(spec.dimension)


def _shifted(spec, r):
    out = np.zeros(spec.dimension)
    out[0] = r
    return out
