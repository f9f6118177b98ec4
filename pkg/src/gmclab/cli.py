"""Batch driver: config-validated experiments with JSON + CSV artifacts.

    gmclab <subcommand> --config cfg.json [--seed N] [--replicas R] [--out D]

Subcommands: constants, synthesize, limit-test, qv-test, scan-phase,
tightness, decompose, accept.  Every report embeds the verbatim config, its
hash, the constant ingredient breakdown and environment metadata; numeric
payloads are deterministic given (config, seed), timestamps live in a
separate "timing" block.  Exit status 0 iff all enabled checks pass.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from . import acceptance as acc
from . import analysis as amod
from . import chaos as cmod
from . import decomp as dmod
from . import kernels as kmod
from . import scaling as smod
from . import synth as ymod
from .errors import ConfigError, GmcLabError

_SCHEMA = {
    "kernel": dict, "mollifier": dict, "grid": dict, "schedule": dict,
    "gammas": list, "omega": (int, float), "f": dict, "measures": dict,
    "eps_fracs": list, "replicas": int, "seed": int, "out": str,
    "acceptance": dict, "delta": (int, float), "sobolev_s": (int, float),
    "points": int, "t_eval": (int, float),
}

_GRID_SCHEMA = {"dimension": int, "n": int, "side": (int, float)}
_SCHED_SCHEMA = {"dt": (int, float), "t_max": (int, float),
                 "t_extra": (int, float)}


def validate_config(cfg):
    """Structural validation with field-path diagnostics."""
    errors = []
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    for key, val in cfg.items():
        if key not in _SCHEMA:
            errors.append(f"$.{key}: unknown field")
        elif not isinstance(val, _SCHEMA[key]):
            errors.append(f"$.{key}: expected {_SCHEMA[key]}, got "
                          f"{type(val).__name__}")
    for sub, schema in (("grid", _GRID_SCHEMA), ("schedule", _SCHED_SCHEMA)):
        for key, val in cfg.get(sub, {}).items():
            if key not in schema:
                errors.append(f"$.{sub}.{key}: unknown field")
            elif not isinstance(val, schema[key]):
                errors.append(f"$.{sub}.{key}: expected {schema[key]}")
    for i, g in enumerate(cfg.get("gammas", [])):
        if not (isinstance(g, list) and len(g) == 2
                and all(isinstance(v, (int, float)) for v in g)):
            errors.append(f"$.gammas[{i}]: expected [alpha, beta]")
    for label, mu in cfg.get("measures", {}).items():
        if set(mu) != {"atoms", "weights"} or \
                len(mu["atoms"]) != len(mu["weights"]):
            errors.append(f"$.measures.{label}: needs matching atoms/weights")
    fr = cfg.get("eps_fracs", [])
    if fr and (len(fr) >= 2 and not np.allclose(
            np.diff(np.log(np.asarray(fr, dtype=float))),
            np.log(fr[1] / fr[0]), atol=1e-9)):
        errors.append("$.eps_fracs: ladder must be geometric")
    if cfg.get("replicas", 1) < 1:
        errors.append("$.replicas: must be >= 1")
    if errors:
        raise ConfigError(errors)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return validate_config(cfg)


def _resolved(cfg, args):
    out = dict(cfg)
    if args.seed is not None:
        out["seed"] = args.seed
    if args.replicas is not None:
        out["replicas"] = args.replicas
    if args.out is not None:
        out["out"] = args.out
    out.setdefault("seed", acc.SEED)
    out.setdefault("replicas", 2000)
    out.setdefault("out", "gmclab-out")
    out.setdefault("omega", 0.0)
    out.setdefault("gammas", [[0.5, 1.3229]])
    out.setdefault("eps_fracs", [2.0**-k for k in range(4, 10)])
    out.setdefault("grid", {})
    out.setdefault("schedule", {})
    return out


def _build_parts(cfg):
    grid_cfg = cfg.get("grid", {})
    d = grid_cfg.get("dimension", 1)
    side = grid_cfg.get("side", 2.5)
    n = grid_cfg.get("n", 4096)
    spec = kmod.KernelSpec.from_dict(cfg["kernel"]) if "kernel" in cfg \
        else kmod.KernelSpec.default(d, domain_side=side)
    moll = kmod.Mollifier.from_dict(cfg["mollifier"]) if "mollifier" in cfg \
        else kmod.Mollifier.standard_bump(d)
    grid = ymod.Grid(d, n, side)
    sc = cfg.get("schedule", {})
    dt = sc.get("dt", np.log(2.0) / 8.0)
    if "t_max" in sc:
        sched = ymod.LayerSchedule.uniform(sc["t_max"], dt=dt)
    else:
        sched = ymod.LayerSchedule.default(grid, dt=dt,
                                           t_extra=sc.get("t_extra", 1.0))
    return spec, moll, grid, sched


def _record(cfg, payload, t0):
    canon = json.dumps(cfg, sort_keys=True).encode()
    return {
        "config": cfg,
        "config_hash": hashlib.sha256(canon).hexdigest(),
        "environment": {
            "gmclab": __version__,
            "numpy": np.__version__,
            "generator_algorithm": ymod.GENERATOR_ALGORITHM,
        },
        "payload": payload,
        "timing": {"wall_s": time.time() - t0,
                   "finished_unix": time.time()},
    }


def _emit(cfg, name, payload, t0, csv_rows=None, csv_header=None):
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, f"{name}.json")
    with open(path, "w") as fh:
        json.dump(acc._jsonable(_record(cfg, payload, t0)), fh, indent=2)
    if csv_rows is not None:
        cpath = os.path.join(outdir, f"{name}.csv")
        with open(cpath, "w", newline="") as fh:
            writer = csv.writer(fh)
            if csv_header:
                writer.writerow(csv_header)
            writer.writerows(csv_rows)
    return path


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_constants(cfg):
    t0 = time.time()
    spec, moll, grid, sched = _build_parts(cfg)
    tri = spec.kappa
    rows = [("j_kappa", kmod.j_kappa(tri))]
    for r in (0.5, 1.0, np.e):
        rows.append((f"ell_kappa({r:.4g})", kmod.ell_kappa(tri, r)))
    for z in (0.0, 0.5, 2.0):
        rows.append((f"ell_theta({z:.4g})", kmod.ell_theta(moll, z)))
    payload = {"table": {k: v for k, v in rows}, "per_gamma": {}}
    for re_, im in cfg["gammas"]:
        gam = cmod.ComplexParam(re_, im)
        entry = {"abs_sq": gam.abs_sq,
                 "phase": str(smod.classify_phase(re_, im, grid.dimension))}
        if gam.abs_sq >= grid.dimension - 1e-12:
            entry["v_bar(t=8)"] = smod.v_bar(8.0, tri, gam).to_dict()
            entry["v_eps(eps=2^-8 side)"] = smod.v_eps(
                2.0**-8 * grid.side, moll, gam).to_dict()
            lhs, rhs = smod.xlink_limit_check(12.0, tri, gam)
            entry["xlink"] = {"lhs": lhs, "rhs": rhs}
        payload["per_gamma"][f"{re_}+{im}i"] = entry
    csv_rows = [(k, f"{v:.12g}") for k, v in rows]
    _emit(cfg, "constants", payload, t0, csv_rows, ["name", "value"])
    return 0


def cmd_synthesize(cfg):
    t0 = time.time()
    spec, moll, grid, sched = _build_parts(cfg)
    ens = ymod.sample_layers(spec, grid, sched, cfg["replicas"], cfg["seed"])
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "ensemble.npz")
    sidecar = ens.export(path, replicas=np.arange(min(cfg["replicas"], 64)))
    _emit(cfg, "synthesize", {"container": path, "sidecar": sidecar,
                              "clipped_spectral_mass": ens.clipped_mass}, t0)
    return 0


def _limit_pass(cfg):
    spec, moll, grid, sched = _build_parts(cfg)
    ens = ymod.sample_layers(spec, grid, sched, cfg["replicas"], cfg["seed"])
    f = cmod.TestFunction.bump(grid)
    gam = cmod.ComplexParam(*cfg["gammas"][0])
    eps_values = [fr * grid.side for fr in cfg["eps_fracs"]]
    names = {e: ens.add_filter(f"eps={e:.6g}", moll, e) for e in eps_values}
    from .experiments import FinalChaos, FinalIntensity, MeasurePairing
    reqs = [(f"{e:.6g}", gam, names[e]) for e in eps_values]
    fc = FinalChaos(cfg["replicas"], f, reqs)
    eps_fine = min(eps_values)
    fi = FinalIntensity(cfg["replicas"], f, gam.alpha, gam.abs_sq,
                        spec.L_diag(), [names[eps_fine]])
    measures = {}
    for label, mu in cfg.get("measures", {}).items():
        measures[label] = (mu["atoms"], mu["weights"])
    if not measures:
        a = np.round(0.38 * grid.n) * grid.h
        b = np.round(0.42 * grid.n) * grid.h
        measures = {"mu1": ([a, b], [0.35, -0.35])}
    mp = MeasurePairing(cfg["replicas"], measures)
    ens.stream([fc, fi, mp])
    return ens, moll, f, gam, eps_values, names, fc, fi, mp, spec


def cmd_limit_test(cfg):
    t0 = time.time()
    (ens, moll, f, gam, eps_values, names, fc, fi, mp, spec) = _limit_pass(cfg)
    amod.require_phase_iii(gam.gamma, ens.grid.dimension)
    eps_fine = min(eps_values)
    vconst = smod.v_eps(eps_fine, moll, gam)
    v = vconst.value
    vm = v * cmod.m_omega(fc.values[f"{eps_fine:.6g}"], cfg["omega"])
    z = fi.values[names[eps_fine]]
    z_comp = z * np.exp(-2.0 * gam.abs_sq * spec.L_diag())
    rep = amod.stable_limit_report(vm, z, mp.values, seed=cfg["seed"] % 2**16,
                                   companion_intensity=z_comp)
    passed = rep["max_excess"] <= 0.05
    m = fc.values[f"{eps_fine:.6g}"]
    csv_rows = [(r, m[r].real, m[r].imag, z[r]) for r in range(len(m))]
    n_r = len(m)
    payload = {"passed": passed, "max_abs_diff": rep["max_abs_diff"],
               "max_excess": rep["max_excess"],
               "companion_max_abs_diff": rep["companion_max_abs_diff"],
               "v_eps": vconst.to_dict(), "eps": eps_fine,
               "chaos_moments": {
                   "mean_re": float(m.real.mean()),
                   "mean_im": float(m.imag.mean()),
                   "stderr_re": float(m.real.std() / np.sqrt(n_r)),
                   "second_moment": float(np.mean(np.abs(m) ** 2)),
                   "second_moment_stderr":
                       float(np.std(np.abs(m) ** 2) / np.sqrt(n_r)),
                   "intensity_mean": float(z.mean())},
               "cf": {lab: {"xi": list(map(float, rep["xi"])),
                            "abs_diff": list(map(float, r["abs_diff"])),
                            "stderr": list(map(float, r["stderr"]))}
                      for lab, r in rep["rows"].items()}}
    _emit(cfg, "limit-test", payload, t0, csv_rows,
          ["replica", "re", "im", "intensity"])
    return 0 if passed else 1


def cmd_qv_test(cfg):
    t0 = time.time()
    spec, moll, grid, sched = _build_parts(cfg)
    ens = ymod.sample_layers(spec, grid, sched, cfg["replicas"], cfg["seed"])
    f = cmod.TestFunction.bump(grid)
    gam = cmod.ComplexParam(*cfg["gammas"][0])
    amod.require_phase_iii(gam.gamma, grid.dimension)
    t_eval = cfg.get("t_eval", min(8.0, sched.t_max - 1.3))
    from .experiments import BracketIntegrals, FinalIntensity
    bi = BracketIntegrals(cfg["replicas"], ens, gam, f, cfg["omega"],
                          [t_eval], stride=2)
    fi = FinalIntensity(cfg["replicas"], f, gam.alpha, gam.abs_sq,
                        spec.L_diag(), [None])
    ens.stream([bi, fi])
    vconst = smod.v_bar(bi.t_marks[-1], spec.kappa, gam)
    vbar = vconst.value
    qv = vbar**2 * bi.bracket(-1)
    stats = amod.qv_lln_stats(qv, fi.values[None], seed=cfg["seed"] % 2**16)
    share = amod.b_share(bi.ia[:, -1], bi.ib[:, -1], cfg["omega"])
    passed = stats["correlation"] >= 0.95 and \
        0.85 <= stats["mean_ratio"] <= 1.15
    payload = {"passed": passed, "t_eval": bi.t_marks[-1],
               "vbar": vconst.to_dict(), "b_share": share,
               **{k: v for k, v in stats.items()}}
    _emit(cfg, "qv-test", payload, t0,
          [(r, qv[r], fi.values[None][r]) for r in range(len(qv))],
          ["replica", "qv", "intensity"])
    return 0 if passed else 1


def cmd_scan_phase(cfg):
    t0 = time.time()
    spec, moll, grid, sched = _build_parts(cfg)
    ens = ymod.sample_layers(spec, grid, sched, cfg["replicas"], cfg["seed"])
    f = cmod.TestFunction.bump(grid)
    eps_values = [fr * grid.side for fr in cfg["eps_fracs"]]
    names = {e: ens.add_filter(f"eps={e:.6g}", moll, e) for e in eps_values}
    from .experiments import FinalChaos
    reqs = []
    gams = [cmod.ComplexParam(*g) for g in cfg["gammas"]]
    for gi, gam in enumerate(gams):
        for e in eps_values:
            reqs.append((f"{gi}:{e:.6g}", gam, names[e]))
    fc = FinalChaos(cfg["replicas"], f, reqs)
    ens.stream([fc])
    rows = []
    for gi, gam in enumerate(gams):
        samples = {e: fc.values[f"{gi}:{e:.6g}"] for e in eps_values}
        fit = amod.second_moment_fit(eps_values, samples, n_boot=200,
                                     seed=cfg["seed"] % 2**16)
        rows.append((gam.alpha, gam.beta, gam.abs_sq, fit["slope"],
                     fit["ci"][0], fit["ci"][1]))
    payload = {"rows": rows}
    _emit(cfg, "scan-phase", payload, t0, rows,
          ["alpha", "beta", "abs_sq", "slope", "ci_lo", "ci_hi"])
    return 0


def cmd_tightness(cfg):
    t0 = time.time()
    spec, moll, grid, sched = _build_parts(cfg)
    ens = ymod.sample_layers(spec, grid, sched, cfg["replicas"], cfg["seed"])
    f = cmod.TestFunction.bump(grid)
    gam = cmod.ComplexParam(*cfg["gammas"][0])
    eps_values = [fr * grid.side for fr in cfg["eps_fracs"]]
    names = {e: ens.add_filter(f"eps={e:.6g}", moll, e) for e in eps_values}
    from .experiments import FourierStats
    fs = FourierStats(cfg["replicas"], f, gam, 0.75,
                      [names[e] for e in eps_values])
    ens.stream([fs])
    xi = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    csv_rows = []
    payload = {"eps": {}}
    for e in eps_values:
        v2 = smod.v_eps(e, moll, gam).value ** 2
        mom = v2 * fs.moments(names[e])
        payload["eps"][f"{e:.6g}"] = {
            "max_moment": float(mom.max()),
            "hnorm_mean": float(np.mean(v2 * fs.hnorm[names[e]]))}
        for k in range(0, grid.n, max(1, grid.n // 256)):
            csv_rows.append((e, xi[k], mom[k]))
    _emit(cfg, "tightness", payload, t0, csv_rows, ["eps", "xi", "moment"])
    return 0


def cmd_decompose(cfg):
    t0 = time.time()
    rng = np.random.default_rng(cfg["seed"])
    pts = rng.uniform(0, 1, size=(cfg.get("points", 256), 1))
    tri = kmod.ScaleKernel.triangle()
    l_func = dmod.synthetic_instance()
    delta = cfg.get("delta", 0.2)
    s = cfg.get("sobolev_s", 3.0)
    t0_found, min_eig, rep = dmod.find_t0(l_func, tri, delta, s, 1, pts)
    payload = rep.to_dict()
    payload["passed"] = t0_found is not None
    _emit(cfg, "decompose", payload, t0)
    return 0 if t0_found is not None else 1


def cmd_accept(cfg, criteria=None):
    t0 = time.time()
    quick = bool(cfg.get("acceptance", {}).get("quick", False))
    acfg = acc.default_config(quick=quick)
    acfg["seed"] = cfg["seed"]
    summary = acc.run_all(acfg, criteria=criteria)
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    payload = {"all_passed": summary["all_passed"],
               "results": summary["results"]}
    _emit(cfg, "accept", payload, t0)
    for r in summary["results"]:
        print(f"{r['criterion']}: {'PASS' if r['passed'] else 'FAIL'}")
    return 0 if summary["all_passed"] else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="gmclab",
        description="Complex Gaussian multiplicative chaos laboratory")
    parser.add_argument("subcommand", choices=[
        "constants", "synthesize", "limit-test", "qv-test", "scan-phase",
        "tightness", "decompose", "accept"])
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--out", default=os.environ.get("GMCLAB_OUT"))
    parser.add_argument("--criteria", default=None,
                        help="comma-separated AC list for accept")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else {}
        cfg = _resolved(cfg, args)
        handlers = {
            "constants": cmd_constants, "synthesize": cmd_synthesize,
            "limit-test": cmd_limit_test, "qv-test": cmd_qv_test,
            "scan-phase": cmd_scan_phase, "tightness": cmd_tightness,
            "decompose": cmd_decompose,
        }
        if args.subcommand == "accept":
            criteria = args.criteria.split(",") if args.criteria else None
            return cmd_accept(cfg, criteria)
        return handlers[args.subcommand](cfg)
    except ConfigError as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except GmcLabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
