"""Batch experiment drivers: flat key=value configs, deterministic seeding,
CSV outputs and a manifest that reproduces the run.

Every driver takes a resolved config dict (strings, as parsed) plus an output
directory, writes its artifacts there, and returns a small summary dict that
the command-line layer prints one line at a time.  Sweeps optionally fan out
to a process pool; workers rebuild their problem from the plain config dict,
and the parent process alone writes files.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os

import numpy as np

from . import diagnostics, stationary
from .discretization import (Field, Interval, PeriodicStrip, field_to_csv,
                             make_operators)
from .errors import ConfigError
from .potentials import (BoundaryNonlinearity, check_sign_condition,
                         check_separation_condition, potential_from_config)
from .solver import SolverConfig, simulate

__all__ = [
    "DEFAULTS", "parse_config", "resolve_config", "write_manifest",
    "build_operators", "build_solver_config", "initial_field",
    "run_simulate", "run_converge_n", "run_lipschitz", "run_separation",
    "run_sign_condition", "run_stationary", "run_decay", "run_experiment",
]

EXPERIMENT_KINDS = ("simulate", "converge-n", "lipschitz", "separation",
                    "sign-condition", "stationary", "decay")

# Every known key with its default (as a string, the parsed form).
DEFAULTS = {
    "domain.kind": "interval",
    "domain.n": "64",
    "domain.a": "-1.0",
    "domain.b": "1.0",
    "domain.Lx": "2.0",
    "domain.nx": "32",
    "domain.ny": "33",
    "potential.kind": "logarithmic",
    "potential.kappa0": "0.0",
    "potential.kappa1": "1.0",
    "potential.kappa": "1.0",
    "potential.p": "3.0",
    "solver.N": "8",
    "solver.lam": "0.0",
    "solver.dt": "1e-3",
    "solver.newton_tol": "1e-10",
    "solver.newton_max_iter": "50",
    "boundary.g": "linear",
    "boundary.a": "0.5",
    "forcing.h1": "0.0",
    "forcing.h2": "0.0",
    "experiment.kind": "simulate",
    "experiment.T": "0.1",
    "experiment.cadence": "",
    "experiment.amplitude": "0.4",
    "experiment.mean": "0.0",
    "experiment.eps": "1e-2,1e-3,1e-4",
    "experiment.ensemble": "4",
    "experiment.K": "1.0",
    "experiment.sweep": "",
    "experiment.h2_violating": "3.0",
    "experiment.n_levels": "5",
    "seed": "0",
}


def parse_config(text) -> dict:
    """Flat key = value lines; # starts a comment; unknown keys are an error."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = val
    return out


def resolve_config(overrides=None, seed=None) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(overrides or {})
    if seed is not None:
        cfg["seed"] = str(int(seed))
    kind = cfg["experiment.kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"experiment.kind must be one of {EXPERIMENT_KINDS}, "
                          f"got {kind!r}")
    return cfg


def _f(cfg, key):
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {cfg[key]!r}") from exc


def _i(cfg, key):
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {cfg[key]!r}") from exc


def write_manifest(cfg, outdir):
    """The manifest is itself a valid config file reproducing the run."""
    from . import __version__

    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "manifest.txt")
    with open(path, "w") as fh:
        fh.write(f"# code version {__version__}\n")
        for key in sorted(cfg):
            fh.write(f"{key} = {cfg[key]}\n")
    return path


def build_operators(cfg):
    kind = cfg["domain.kind"]
    if kind == "interval":
        dom = Interval(_i(cfg, "domain.n"), _f(cfg, "domain.a"),
                       _f(cfg, "domain.b"))
    elif kind == "strip":
        dom = PeriodicStrip(_f(cfg, "domain.Lx"), _i(cfg, "domain.nx"),
                            _i(cfg, "domain.ny"))
    else:
        raise ConfigError(f"domain.kind must be interval or strip, got {kind!r}")
    return make_operators(dom)


def _boundary_g(cfg):
    name = cfg["boundary.g"]
    if name == "linear":
        return BoundaryNonlinearity.linear()
    if name == "tanh":
        return BoundaryNonlinearity.tanh_tilt(_f(cfg, "boundary.a"))
    raise ConfigError(f"boundary.g must be linear or tanh, got {name!r}")


def build_solver_config(cfg, N=None, h2=None) -> SolverConfig:
    pot = potential_from_config(
        cfg["potential.kind"],
        kappa0=_f(cfg, "potential.kappa0"), kappa1=_f(cfg, "potential.kappa1"),
        kappa=_f(cfg, "potential.kappa"), p=_f(cfg, "potential.p"))
    return SolverConfig(
        potential=pot,
        N=int(N if N is not None else _i(cfg, "solver.N")),
        lam=_f(cfg, "solver.lam"),
        dt=_f(cfg, "solver.dt"),
        g=_boundary_g(cfg),
        h1=_f(cfg, "forcing.h1"),
        h2=float(h2 if h2 is not None else _f(cfg, "forcing.h2")),
        newton_tol=_f(cfg, "solver.newton_tol"),
        newton_max_iter=_i(cfg, "solver.newton_max_iter"),
    )


def _cadence(cfg):
    raw = cfg["experiment.cadence"]
    return float(raw) if raw else None


def _snapshot_cadence(cfg, scfg, T):
    """Configured cadence, defaulting to every 10th step, capped by T."""
    cad = _cadence(cfg) or 10.0 * scfg.dt
    return min(cad, T)


def initial_field(ops, seed, amplitude, mean) -> Field:
    """Deterministic spinodal-like data: a few random low modes, normalized,
    then mean-corrected so that |u0| <= |mean| + amplitude < 1."""
    if abs(mean) + amplitude >= 1.0:
        raise ConfigError("require |experiment.mean| + experiment.amplitude < 1")
    rng = np.random.default_rng(seed)
    dom = ops.domain
    if dom.kind == "interval":
        x = dom.x
        prof = np.zeros_like(x)
        for k in range(1, 5):
            prof += rng.standard_normal() * np.cos(
                np.pi * k * (x - dom.a) / (dom.b - dom.a))
    else:
        X = dom.x[:, None]
        Y = dom.y[None, :]
        prof = np.zeros((dom.nx, dom.ny))
        for kx in range(3):
            for ky in range(3):
                if kx == 0 and ky == 0:
                    continue
                phase = rng.uniform(0.0, 2.0 * np.pi)
                prof += rng.standard_normal() * np.cos(
                    2.0 * np.pi * kx * X / dom.Lx + phase) * np.cos(
                    np.pi * ky * (Y + 1.0) / 2.0)
    prof = prof - ops.mean(prof)
    mx = np.max(np.abs(prof))
    u0 = mean + (amplitude / mx) * prof
    u0 += mean - ops.mean(u0)
    return ops.field_from_bulk(u0)


# --------------------------------------------------------------------------
# Drivers
# --------------------------------------------------------------------------

def run_simulate(cfg, outdir):
    ops = build_operators(cfg)
    scfg = build_solver_config(cfg)
    f0 = initial_field(ops, _i(cfg, "seed"), _f(cfg, "experiment.amplitude"),
                       _f(cfg, "experiment.mean"))
    traj = simulate(ops, scfg, f0, _f(cfg, "experiment.T"), _cadence(cfg))
    os.makedirs(outdir, exist_ok=True)
    for k, st in enumerate(traj.states):
        field_to_csv(ops, st.field, os.path.join(outdir, f"snapshot_{k:04d}.csv"))
    diagnostics.records_to_csv(traj.records,
                               os.path.join(outdir, "diagnostics.csv"))
    rep = diagnostics.dissipation_check(traj)
    last = traj.records[-1]
    return {
        "snapshots": len(traj.states),
        "final_time": traj.final.t,
        "final_energy": last.energy.total,
        "mass_drift": abs(last.mass - ops.mean(f0.bulk)),
        "dissipation_violations": rep.violations,
    }


def _converge_worker(args):
    cfg, N, times = args
    ops = build_operators(cfg)
    scfg = build_solver_config(cfg, N=N)
    f0 = initial_field(ops, _i(cfg, "seed"), _f(cfg, "experiment.amplitude"),
                       _f(cfg, "experiment.mean"))
    traj = simulate(ops, scfg, f0, max(times), cadence=scfg.dt)
    out = {}
    for t in times:
        k = int(np.argmin(np.abs(traj.times - t)))
        out[t] = traj.states[k].field
    return N, out


def _pool_map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def run_converge_n(cfg, outdir, workers=1, times=(0.1, 0.5, 1.0)):
    """Cauchy table || u_N - u_2N ||_phi_w at a few times over doubling N."""
    n_levels = _i(cfg, "experiment.n_levels")
    Ns = [4 * 2 ** k for k in range(n_levels + 1)]  # one extra for the 2N leg
    ops = build_operators(cfg)
    results = dict(_pool_map(_converge_worker,
                             [(cfg, N, tuple(times)) for N in Ns], workers))
    rows = []
    for t in times:
        for N in Ns[:-1]:
            d = ops.phi_w_distance(results[N][t], results[2 * N][t])
            rows.append((t, N, d))
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "converge_n.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["t", "N", "phi_w_diff"])
        for t, N, d in rows:
            wtr.writerow([f"{t:.17g}", N, f"{d:.17g}"])
    final = [d for t, N, d in rows if t == max(times)]
    return {
        "rows": len(rows),
        "final_time_diffs": final,
        "monotone": all(final[i + 1] <= final[i] for i in range(len(final) - 1)),
        "reduction": final[0] / final[-1] if final[-1] > 0 else np.inf,
    }


def _lipschitz_worker(args):
    cfg, eps = args
    ops = build_operators(cfg)
    scfg = build_solver_config(cfg)
    seed = _i(cfg, "seed")
    f0 = initial_field(ops, seed, _f(cfg, "experiment.amplitude"),
                       _f(cfg, "experiment.mean"))
    if eps > 0.0:
        # mean-neutral perturbation, fixed shape across eps
        if ops.domain.kind == "interval":
            x = ops.domain.x
            dv = np.cos(2.0 * np.pi * (x - ops.domain.a)
                        / (ops.domain.b - ops.domain.a))
        else:
            X = ops.domain.x[:, None]
            Y = ops.domain.y[None, :]
            dv = np.cos(2.0 * np.pi * X / ops.domain.Lx) * np.cos(
                np.pi * (Y + 1.0) / 2.0)
        dv = dv - ops.mean(dv)
        dv /= np.max(np.abs(dv))
        bulk = f0.bulk + eps * dv
        f0 = ops.field_from_bulk(bulk)
    T = _f(cfg, "experiment.T")
    traj = simulate(ops, scfg, f0, T, _snapshot_cadence(cfg, scfg, T))
    return eps, [(st.t, st.field) for st in traj.states]


def run_lipschitz(cfg, outdir, workers=1):
    eps_list = [float(s) for s in cfg["experiment.eps"].split(",") if s.strip()]
    ops = build_operators(cfg)
    runs = dict(_pool_map(_lipschitz_worker,
                          [(cfg, e) for e in [0.0] + eps_list], workers))
    base = runs[0.0]
    rows, fits = [], {}
    for eps in eps_list:
        dists = []
        for (t, fb), (_, fp) in zip(base, runs[eps]):
            dists.append((t, ops.phi_w_distance(fb, fp)))
        d0 = dists[0][1]
        for t, d in dists:
            rows.append((eps, t, d))
        ts = np.array([t for t, d in dists if d > 0 and t > 0])
        ds = np.array([d for t, d in dists if d > 0 and t > 0])
        if len(ts) >= 2:
            K_fit, logC = np.polyfit(ts, np.log(ds / d0), 1)
        else:
            # single sample: read the envelope straight off the endpoint
            K_fit = float(np.log(ds[-1] / d0) / ts[-1]) if len(ts) else 0.0
            logC = 0.0
        fits[eps] = (float(np.exp(logC)), float(K_fit), d0,
                     dists[-1][1] / d0)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "lipschitz.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["eps", "t", "phi_w_distance"])
        for eps, t, d in rows:
            wtr.writerow([f"{eps:.17g}", f"{t:.17g}", f"{d:.17g}"])
    ratios = {eps: fits[eps][3] for eps in eps_list}
    return {
        "eps": eps_list,
        "final_over_initial": ratios,
        "fitted_C": {eps: fits[eps][0] for eps in eps_list},
        "fitted_K": {eps: fits[eps][1] for eps in eps_list},
    }


def _margin_run(cfg, N, h2=None):
    ops = build_operators(cfg)
    scfg = build_solver_config(cfg, N=N, h2=h2)
    f0 = initial_field(ops, _i(cfg, "seed"), _f(cfg, "experiment.amplitude"),
                       _f(cfg, "experiment.mean"))
    T = _f(cfg, "experiment.T")
    traj = simulate(ops, scfg, f0, T, _snapshot_cadence(cfg, scfg, T))
    sep = diagnostics.separation_tracker(traj)
    gap = diagnostics.trace_mismatch(ops, scfg, traj.final).gap
    return sep, gap


def run_separation(cfg, outdir, workers=1, Ns=(8, 16, 32, 64)):
    """Boundary margins and trace gaps across the regularization sweep."""
    rows = []
    for N in Ns:
        sep, gap = _margin_run(cfg, N)
        rows.append((N, sep.final_bulk_margin, sep.final_boundary_margin, gap))
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "separation.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["N", "bulk_margin", "boundary_margin", "trace_gap"])
        for r in rows:
            wtr.writerow([r[0]] + [f"{v:.17g}" for v in r[1:]])
    cond = check_separation_condition(build_solver_config(cfg).potential)
    return {"rows": rows, "condition_satisfied": cond.satisfied,
            "note": cond.note}


def run_sign_condition(cfg, outdir, workers=1, Ns=(8, 16, 32, 64)):
    """Paired sweep: h2 satisfying the boundary sign condition vs violating
    it, identical solver settings otherwise."""
    g = _boundary_g(cfg)
    h2_ok = _f(cfg, "forcing.h2")
    h2_bad = _f(cfg, "experiment.h2_violating")
    eps = 0.05
    branches = {"satisfying": h2_ok, "violating": h2_bad}
    rows = []
    for label, h2 in branches.items():
        ok = check_sign_condition(g, h2, eps)
        for N in Ns:
            sep, gap = _margin_run(cfg, N, h2=h2)
            rows.append((label, h2, ok, N, sep.final_boundary_margin, gap))
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "sign_condition.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["branch", "h2", "condition_holds", "N",
                      "boundary_margin", "trace_gap"])
        for b, h2, ok, N, m, gp in rows:
            wtr.writerow([b, f"{h2:.17g}", ok, N, f"{m:.17g}", f"{gp:.17g}"])
    return {"rows": rows}


def run_stationary(cfg, outdir, workers=1):
    pot = build_solver_config(cfg).potential
    K = _f(cfg, "experiment.K")
    sol = stationary.solve_bvp(stationary.StationaryProblem(pot, K))
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "stationary_profile.csv"), "w",
              newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["x", "y", "yp"])
        for xi, yi, ypi in zip(sol.profile.x, sol.profile.y, sol.profile.yp):
            wtr.writerow([f"{xi:.17g}", f"{yi:.17g}", f"{ypi:.17g}"])
    summary = {"classification": stationary.classify(pot, K), "K": K,
               "s": sol.s, "kind": sol.kind, "defect": sol.defect}
    crit = stationary.critical_flux(pot)
    if crit is not None:
        summary["s_star"] = crit.s_star
        summary["K_plus"] = crit.K_plus
    sweep = cfg["experiment.sweep"]
    if sweep:
        try:
            lo, hi, steps = sweep.split(":")
            lo, hi, steps = float(lo), float(hi), int(steps)
        except ValueError as exc:
            raise ConfigError(
                f"experiment.sweep must be s_min:s_max:steps, got {sweep!r}"
            ) from exc
        with open(os.path.join(outdir, "stationary_sweep.csv"), "w",
                  newline="") as fh:
            wtr = csv.writer(fh)
            wtr.writerow(["s", "x1", "exit"])
            for s in np.linspace(lo, hi, steps):
                x1 = stationary.time_of_flight(pot, float(s))
                res = stationary.shoot(pot, float(s))
                wtr.writerow([f"{s:.17g}", f"{x1:.17g}", res.exit])
        summary["sweep_rows"] = steps
    return summary


def run_decay(cfg, outdir, workers=1):
    ops = build_operators(cfg)
    scfg = build_solver_config(cfg)
    seed = _i(cfg, "seed")
    n_ens = _i(cfg, "experiment.ensemble")
    amp = _f(cfg, "experiment.amplitude")
    mean = _f(cfg, "experiment.mean")
    fields = [initial_field(ops, seed + k, amp, mean) for k in range(n_ens)]
    T = _f(cfg, "experiment.T")
    rep = diagnostics.decay_experiment(ops, scfg, fields, T,
                                       _snapshot_cadence(cfg, scfg, T))
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "decay.csv"), "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(["t", "phi_w_diameter", "h1_diameter", "energy_spread"])
        for k in range(len(rep.times)):
            wtr.writerow([f"{v:.17g}" for v in
                          [rep.times[k], rep.phi_w_diameters[k],
                           rep.h1_diameters[k], rep.energy_spreads[k]]])
    return {"ensemble": n_ens, "decay_rate": rep.decay_rate,
            "initial_diameter": float(rep.phi_w_diameters[0]),
            "final_diameter": float(rep.phi_w_diameters[-1])}


_RUNNERS = {
    "simulate": run_simulate,
    "converge-n": run_converge_n,
    "lipschitz": run_lipschitz,
    "separation": run_separation,
    "sign-condition": run_sign_condition,
    "stationary": run_stationary,
    "decay": run_decay,
}


def run_experiment(cfg, outdir, workers=1):
    """Dispatch on experiment.kind; writes the manifest first so that a
    crashed run still documents what was attempted."""
    write_manifest(cfg, outdir)
    kind = cfg["experiment.kind"]
    runner = _RUNNERS[kind]
    if kind == "simulate":
        return runner(cfg, outdir)
    return runner(cfg, outdir, workers=workers)
