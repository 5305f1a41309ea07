"""Runtime-checkable diagnostics: energy breakdown, dissipation ledger,
variational-inequality residuals, boundary-trace mismatch, separation
margins, and ensemble decay.

Time derivatives are backward differences of stored snapshots and time
integrals use rules aligned with the snapshot cadence; no extra state is
kept in the solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (InadmissibleTestFunctionError, InsufficientDataError,
                     StaleStateError)

__all__ = [
    "EnergyBreakdown", "DiagnosticsRecord", "energy", "record",
    "dissipation_check", "DissipationReport",
    "compute_vi_constant", "vi_residual", "VIReport", "generate_test_functions",
    "trace_mismatch", "TraceMismatchReport",
    "separation_tracker", "SeparationReport",
    "decay_experiment", "DecayReport",
    "records_to_csv",
]


# --------------------------------------------------------------------------
# Energy
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    bulk_gradient: float       # (1/2) ||grad u||^2 over the bulk
    boundary_gradient: float   # (1/2) ||surface grad of psi||^2
    bulk_potential: float      # integral of the shifted regularized potential
    boundary_potential: float  # integral of G(psi) over the boundary
    forcing: float             # (h1, u) - (h2, psi)

    @property
    def total(self):
        return (self.bulk_gradient + self.boundary_gradient + self.bulk_potential
                + self.boundary_potential + self.forcing)


def energy(ops, cfg, fld) -> EnergyBreakdown:
    """Quadrature evaluation of every term of the free energy, with the
    shifted potential F_N(u) - lam*u^2/2 in the bulk."""
    reg = cfg.regularized
    u = fld.bulk.ravel()
    psi = fld.trace.ravel()
    h1 = np.broadcast_to(np.asarray(cfg.h1, dtype=float), ops.bulk_shape).ravel()
    h2 = np.broadcast_to(np.asarray(cfg.h2, dtype=float), ops.trace_shape).ravel()
    bulk_grad = 0.5 * float(u @ (ops.K @ u))
    bnd_grad = 0.5 * float(psi @ (ops.K_gamma @ psi))
    bulk_pot = float(ops.weights @ (reg.F(u) - 0.5 * cfg.lam * u * u))
    bnd_pot = float(ops.boundary_weights @ cfg.g.G(psi))
    forcing = ops.inner(h1, u) - ops.boundary_inner(h2, psi)
    return EnergyBreakdown(bulk_grad, bnd_grad, bulk_pot, bnd_pot, forcing)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy: EnergyBreakdown
    min_u: float
    max_u: float
    bulk_margin: float
    boundary_margin: float
    f_l1: float
    newton_iters: int
    newton_residual: float
    mu_mean: float


def record(ops, cfg, state, report) -> DiagnosticsRecord:
    u = state.field.bulk.ravel()
    psi = state.field.trace.ravel()
    reg = cfg.regularized
    mu_mean = ops.inner(state.mu, np.ones(ops.n_bulk)) / ops.area
    return DiagnosticsRecord(
        t=state.t,
        mass=ops.mean(state.field.bulk),
        energy=energy(ops, cfg, state.field),
        min_u=float(u.min()),
        max_u=float(u.max()),
        bulk_margin=float(1.0 - np.max(np.abs(u))),
        boundary_margin=float(1.0 - np.max(np.abs(psi))),
        f_l1=float(ops.weights @ np.abs(reg.f(u))),
        newton_iters=report.newton_iters,
        newton_residual=report.residual,
        mu_mean=float(mu_mean),
    )


def records_to_csv(records, path):
    cols = ["t", "mass", "total_energy", "bulk_gradient", "boundary_gradient",
            "bulk_potential", "boundary_potential", "forcing", "min_u", "max_u",
            "bulk_margin", "boundary_margin", "f_l1", "newton_iters",
            "newton_residual", "mu_mean"]
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        wtr.writerow(cols)
        for r in records:
            e = r.energy
            wtr.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in [
                r.t, r.mass, e.total, e.bulk_gradient, e.boundary_gradient,
                e.bulk_potential, e.boundary_potential, e.forcing, r.min_u,
                r.max_u, r.bulk_margin, r.boundary_margin, r.f_l1,
                r.newton_iters, r.newton_residual, r.mu_mean]])


# --------------------------------------------------------------------------
# Dissipation ledger
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DissipationReport:
    violations: int
    max_violation: float
    ledger: list  # rows (t0, t1, dE, dissipation_rate)


def dissipation_check(traj, tol_frac=0.2, abs_tol=1e-8) -> DissipationReport:
    """Check the discrete energy law between consecutive snapshots:
    E(t1) - E(t0) <= -(1 - tol_frac) * dt * (||du/dt||^2_{H^-1} + ||dpsi/dt||^2_Gamma)
    with a small absolute slack, plus strict energy monotonicity.
    Assumes static forcing."""
    if len(traj.states) < 2:
        raise InsufficientDataError("need at least two snapshots")
    ops, cfg = traj.ops, traj.cfg
    energies = [energy(ops, cfg, s.field).total for s in traj.states]
    violations = 0
    max_violation = -np.inf
    ledger = []
    for k in range(len(traj.states) - 1):
        s0, s1 = traj.states[k], traj.states[k + 1]
        dt = s1.t - s0.t
        du = (s1.field.bulk - s0.field.bulk) / dt
        dpsi = (s1.field.trace - s0.field.trace) / dt
        rate = ops.h_minus1_norm(du - ops.mean(du)) ** 2 \
            + ops.boundary_inner(dpsi, dpsi)
        dE = energies[k + 1] - energies[k]
        slack = abs_tol * (1.0 + abs(energies[k]))
        excess = dE + (1.0 - tol_frac) * dt * rate
        if excess > slack or dE > slack:
            violations += 1
        max_violation = max(max_violation, excess)
        ledger.append((s0.t, s1.t, dE, rate))
    return DissipationReport(violations, float(max_violation), ledger)


# --------------------------------------------------------------------------
# Variational inequality
# --------------------------------------------------------------------------

def compute_vi_constant(ops, lam, margin=0.1):
    """Smallest L making the quadratic form dominate (1/2)||.||^2_{H^1} on the
    zero-mean subspace, from a discrete eigenvalue computation, plus a margin.
    """
    n = ops.n_bulk
    w = ops.weights

    def apply_T(v):
        v = v - (w @ v) / ops.area
        y = (lam + 0.5) * (w * v) - 0.5 * (ops.K @ v)
        z = (ops.K @ (y / w)) / w
        return z - (w @ z) / ops.area

    if n <= 600:
        T = np.empty((n, n))
        eye = np.eye(n)
        for j in range(n):
            T[:, j] = apply_T(eye[j])
        lam_max = float(np.max(np.linalg.eigvals(T).real))
    else:
        op = spla.LinearOperator((n, n), matvec=apply_T)
        vals = spla.eigs(op, k=1, which="LR", return_eigenvectors=False,
                         v0=np.sin(np.arange(n)))
        lam_max = float(vals[0].real)
    return (1.0 + margin) * max(lam_max, 0.0) + 1e-12


@dataclass(frozen=True)
class VIReport:
    residuals: list
    min_residual: float
    max_residual: float
    L: float
    scales: list


def _b_form(ops, lam, L, a_bulk, a_trace, b_bulk, b_trace, Ab_bar=None):
    """B(a, b) = (grad a, grad b) - lam (a,b) + L (A a_bar, b_bar) + surface grads."""
    val = float(a_bulk @ (ops.K @ b_bulk)) - lam * ops.inner(a_bulk, b_bulk)
    a_bar = a_bulk - ops.mean(a_bulk)
    b_bar = b_bulk - ops.mean(b_bulk)
    Aa = ops.inverse_laplacian(a_bar)
    val += L * ops.inner(Aa, b_bar)
    val += float(a_trace @ (ops.K_gamma @ b_trace))
    return val


def _as_window_fields(tf, states):
    """Accept a static Field or a per-snapshot list of Fields."""
    if isinstance(tf, (list, tuple)):
        if len(tf) != len(states):
            raise InadmissibleTestFunctionError(
                "time-varying test function must match the window snapshots")
        return list(tf)
    return [tf] * len(states)


def vi_residual(traj, window, test_functions, L=None) -> VIReport:
    """Time-integrated left-minus-right of the defining variational
    inequality over a snapshot window, one residual per test function.

    Nonpositive residuals (up to discretization noise) mean the inequality is
    satisfied.  Test functions must carry the trajectory mass and stay
    strictly inside (-1, 1).
    """
    ops, cfg = traj.ops, traj.cfg
    s, t = window
    idx = [k for k, st in enumerate(traj.states) if s - 1e-12 <= st.t <= t + 1e-12]
    if len(idx) < 2:
        raise InsufficientDataError("window must contain at least two snapshots")
    states = [traj.states[k] for k in idx]
    if L is None:
        L = compute_vi_constant(ops, cfg.lam)
    mass = ops.mean(states[0].field.bulk)
    reg = cfg.regularized
    h1 = np.broadcast_to(np.asarray(cfg.h1, dtype=float), ops.bulk_shape).ravel()
    h2 = np.broadcast_to(np.asarray(cfg.h2, dtype=float), ops.trace_shape).ravel()

    residuals, scales = [], []
    for tf in test_functions:
        vs = _as_window_fields(tf, states)
        for v in vs:
            if np.max(np.abs(v.bulk)) >= 1.0 or np.max(np.abs(v.trace)) >= 1.0:
                raise InadmissibleTestFunctionError("test function reaches +-1")
            if abs(ops.mean(v.bulk) - mass) > 1e-8 * (1.0 + abs(mass)):
                raise InadmissibleTestFunctionError("test function mean mismatch")
        total = 0.0
        size = 0.0
        for k in range(len(states) - 1):
            s0, s1 = states[k], states[k + 1]
            dtau = s1.t - s0.t
            v = vs[k + 1]
            u = s1.field.bulk.ravel()
            psi = s1.field.trace.ravel()
            vb = v.bulk.ravel()
            vt = v.trace.ravel()
            du = (s1.field.bulk - s0.field.bulk).ravel()
            dpsi = (s1.field.trace - s0.field.trace).ravel()
            diff = u - vb
            diff_t = psi - vt
            # time-derivative pairings: the 1/dtau and the dtau of the
            # rectangle rule cancel
            Adu = ops.inverse_laplacian(du - ops.mean(du))
            total += ops.inner(Adu, diff) + ops.boundary_inner(dpsi, diff_t)
            lhs_rate = _b_form(ops, cfg.lam, L, vb, vt, diff, diff_t) \
                + ops.inner(reg.f(vb), diff)
            d_bar = diff - ops.mean(diff)
            Ad = ops.inverse_laplacian(d_bar)
            rhs_rate = (L * ops.inner(u, Ad)
                        - ops.boundary_inner(np.ravel(cfg.g.g(psi)), diff_t)
                        - ops.inner(h1, diff) + ops.boundary_inner(h2, diff_t))
            total += dtau * (lhs_rate - rhs_rate)
            size = max(size, np.sqrt(ops.inner(diff, diff))
                       + np.sqrt(ops.boundary_inner(diff_t, diff_t)))
        scale = (t - s) * (1.0 + size) * (1.0 + abs(cfg.lam))
        residuals.append(float(total))
        scales.append(float(scale))
    return VIReport(residuals, float(min(residuals)), float(max(residuals)),
                    float(L), scales)


def generate_test_functions(ops, mass, count=20, delta_w=0.05, seed=0,
                            anchor=None):
    """Admissible test functions: the constant at the conserved mass, convex
    combinations with an anchor snapshot, and mean-corrected smooth bumps
    rescaled into [-1+delta_w, 1-delta_w]."""
    rng = np.random.default_rng(seed)
    out = []
    const = ops.field_from_bulk(np.full(ops.bulk_shape, mass))
    out.append(const)
    if anchor is not None:
        for alpha in (0.25, 0.5, 0.75):
            bulk = (1.0 - alpha) * anchor.bulk + alpha * mass
            out.append(ops.field_from_bulk(bulk))
    while len(out) < count:
        if ops.domain.kind == "interval":
            x = ops.domain.x
            k = rng.integers(1, 4)
            prof = np.cos(np.pi * k * (x - ops.domain.a) / (ops.domain.b - ops.domain.a))
            prof = prof + 0.5 * rng.standard_normal() * np.exp(
                -((x - rng.uniform(-0.5, 0.5)) / 0.4) ** 2)
        else:
            X = ops.domain.x[:, None]
            Y = ops.domain.y[None, :]
            kx = int(rng.integers(1, 3))
            prof = np.cos(2.0 * np.pi * kx * X / ops.domain.Lx) * np.cos(
                np.pi * rng.integers(1, 3) * (Y + 1.0) / 2.0)
        prof = prof - ops.mean(prof)
        amp = (1.0 - delta_w - abs(mass)) * rng.uniform(0.2, 0.95)
        mx = np.max(np.abs(prof))
        bulk = mass + (amp / mx) * prof
        bulk += mass - ops.mean(bulk)  # mean correction, exact to quadrature
        if np.max(np.abs(bulk)) < 1.0 - delta_w / 2.0:
            out.append(ops.field_from_bulk(bulk))
    return out[:count]


# --------------------------------------------------------------------------
# Trace mismatch
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceMismatchReport:
    internal: np.ndarray
    external: np.ndarray
    gap: float  # L^1(Gamma) norm of internal - external


def trace_mismatch(ops, cfg, state) -> TraceMismatchReport:
    """Compare the normal derivative computed from the bulk with the value
    implied by the dynamic boundary equation."""
    if state.dpsi_dt is None:
        raise StaleStateError("state has not been stepped")
    internal = ops.normal_derivative(state.field.bulk)
    psi = state.field.trace.ravel()
    h2 = np.broadcast_to(np.asarray(cfg.h2, dtype=float), ops.trace_shape).ravel()
    lap_gamma = -(ops.K_gamma @ psi) / ops.boundary_weights
    external = (h2 - state.dpsi_dt.ravel() + lap_gamma
                - np.ravel(cfg.g.g(psi))).reshape(ops.trace_shape)
    gap = float(ops.boundary_weights @ np.abs(internal.ravel() - external.ravel()))
    return TraceMismatchReport(internal, external, gap)


# --------------------------------------------------------------------------
# Separation tracking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationReport:
    times: np.ndarray
    bulk_margins: np.ndarray
    boundary_margins: np.ndarray
    f_l1: np.ndarray

    @property
    def final_bulk_margin(self):
        return float(self.bulk_margins[-1])

    @property
    def final_boundary_margin(self):
        return float(self.boundary_margins[-1])


def separation_tracker(traj) -> SeparationReport:
    ops = traj.ops
    reg = traj.cfg.regularized
    ts, bm, gm, fl = [], [], [], []
    for s in traj.states:
        u = s.field.bulk.ravel()
        ts.append(s.t)
        bm.append(1.0 - float(np.max(np.abs(u))))
        gm.append(1.0 - float(np.max(np.abs(s.field.trace))))
        fl.append(float(ops.weights @ np.abs(reg.f(u))))
    return SeparationReport(np.array(ts), np.array(bm), np.array(gm), np.array(fl))


# --------------------------------------------------------------------------
# Ensemble decay
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    phi_w_diameters: np.ndarray
    h1_diameters: np.ndarray
    energy_spreads: np.ndarray
    decay_rate: float  # fitted exponential rate on the transient


def decay_experiment(ops, cfg, initial_fields, T, cadence) -> DecayReport:
    """Run an ensemble sharing the same mass and report diameter decay."""
    from . import solver  # runtime import; solver depends on this module

    trajs = [solver.simulate(ops, cfg, f0, T, cadence) for f0 in initial_fields]
    times = trajs[0].times
    n_snap = len(times)
    phi_d = np.zeros(n_snap)
    h1_d = np.zeros(n_snap)
    e_spread = np.zeros(n_snap)
    for k in range(n_snap):
        energies = [energy(ops, cfg, tr.states[k].field).total for tr in trajs]
        e_spread[k] = max(energies) - min(energies) if len(trajs) > 1 else 0.0
        for i in range(len(trajs)):
            for j in range(i + 1, len(trajs)):
                fi = trajs[i].states[k].field
                fj = trajs[j].states[k].field
                phi_d[k] = max(phi_d[k], ops.phi_w_distance(fi, fj))
                d = (fi.bulk - fj.bulk).ravel()
                h1 = np.sqrt(float(d @ (ops.K @ d)) + ops.inner(d, d))
                h1_d[k] = max(h1_d[k], h1)
    mask = (phi_d > 1e-14) & (times > 0)
    if mask.sum() >= 2:
        coef = np.polyfit(times[mask], np.log(phi_d[mask]), 1)
        rate = float(-coef[0])
    else:
        rate = 0.0
    return DecayReport(times, phi_d, h1_d, e_spread, rate)
