import numpy as np
import pytest

from chdbc import diagnostics as dg
from chdbc.discretization import Interval, PeriodicStrip, make_operators
from chdbc.errors import (InadmissibleTestFunctionError,
                          InsufficientDataError)
from chdbc.potentials import LogarithmicPotential
from chdbc.solver import SolverConfig, Trajectory, simulate


@pytest.fixture
def iops():
    return make_operators(Interval(48))


def run(ops, T=0.05, cadence=None, **kw):
    kw.setdefault("potential", LogarithmicPotential())
    kw.setdefault("N", 8)
    kw.setdefault("lam", 1.0)
    kw.setdefault("dt", 1e-3)
    cfg = SolverConfig(**kw)
    x = ops.domain.x
    u0 = 0.4 * np.cos(np.pi * (x + 1.0) / 2.0) - 0.05
    return simulate(ops, cfg, ops.field_from_bulk(u0), T, cadence)


class TestEnergy:
    def test_breakdown_sums(self, iops):
        traj = run(iops, T=5e-3, h1=0.1, h2=0.2)
        eb = dg.energy(iops, traj.cfg, traj.final.field)
        assert eb.total == pytest.approx(
            eb.bulk_gradient + eb.boundary_gradient + eb.bulk_potential
            + eb.boundary_potential + eb.forcing)

    def test_constant_field_no_gradient(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        f = iops.field_from_bulk(np.full(iops.n_bulk, 0.25))
        eb = dg.energy(iops, cfg, f)
        assert eb.bulk_gradient == pytest.approx(0.0, abs=1e-14)
        assert eb.boundary_gradient == pytest.approx(0.0, abs=1e-14)


class TestDissipation:
    def test_clean_run(self, iops):
        rep = dg.dissipation_check(run(iops, cadence=5e-3))
        assert rep.violations == 0
        assert len(rep.ledger) > 0

    def test_needs_two_snapshots(self, iops):
        traj = run(iops, T=1e-3)
        broken = Trajectory(iops, traj.cfg, traj.states[:1], [], 1e-3)
        with pytest.raises(InsufficientDataError):
            dg.dissipation_check(broken)


class TestVI:
    def test_residuals_nonpositive(self, iops):
        traj = run(iops, T=0.05)
        mass = iops.mean(traj.states[0].field.bulk)
        tfs = dg.generate_test_functions(iops, mass, count=20, seed=2,
                                         anchor=traj.states[0].field)
        assert len(tfs) == 20
        rep = dg.vi_residual(traj, (0.0, 0.02), tfs)
        assert rep.max_residual <= 1e-6 * min(rep.scales)

    def test_exact_zero_at_solution(self, iops):
        traj = run(iops, T=0.02)
        idx = [k for k, s in enumerate(traj.states) if s.t <= 0.01 + 1e-12]
        w = [traj.states[k].field for k in idx]
        rep = dg.vi_residual(traj, (0.0, 0.01), [w])
        assert rep.residuals == [0.0]

    def test_l_independence_of_sign(self, iops):
        traj = run(iops, T=0.03)
        mass = iops.mean(traj.states[0].field.bulk)
        tfs = dg.generate_test_functions(iops, mass, count=8, seed=3)
        L = dg.compute_vi_constant(iops, traj.cfg.lam)
        r1 = dg.vi_residual(traj, (0.0, 0.03), tfs, L=L)
        r2 = dg.vi_residual(traj, (0.0, 0.03), tfs, L=1.5 * L)
        for a, b in zip(r1.residuals, r2.residuals):
            assert (a <= 1e-12) == (b <= 1e-12)

    def test_inadmissible_mean(self, iops):
        traj = run(iops, T=0.01)
        bad = iops.field_from_bulk(np.full(iops.n_bulk, 0.9))
        with pytest.raises(InadmissibleTestFunctionError):
            dg.vi_residual(traj, (0.0, 0.01), [bad])

    def test_inadmissible_range(self, iops):
        traj = run(iops, T=0.01)
        mass = iops.mean(traj.states[0].field.bulk)
        bulk = np.full(iops.n_bulk, mass)
        bulk[0] += 1.5
        bulk[1] -= 1.5 * iops.weights[0] / iops.weights[1]
        bad = iops.field_from_bulk(bulk)
        with pytest.raises(InadmissibleTestFunctionError):
            dg.vi_residual(traj, (0.0, 0.01), [bad])

    def test_generated_admissibility(self, iops):
        tfs = dg.generate_test_functions(iops, -0.2, count=20, seed=5)
        for f in tfs:
            assert np.max(np.abs(f.bulk)) < 1.0
            assert iops.mean(f.bulk) == pytest.approx(-0.2, abs=1e-10)

    def test_strip_test_functions(self):
        ops = make_operators(PeriodicStrip(2.0, 12, 13))
        tfs = dg.generate_test_functions(ops, 0.1, count=12, seed=6)
        assert len(tfs) == 12
        for f in tfs:
            assert np.max(np.abs(f.bulk)) < 1.0


class TestTraceMismatch:
    def test_small_in_classical_regime(self, iops):
        traj = run(iops, T=0.05)
        rep = dg.trace_mismatch(iops, traj.cfg, traj.final)
        assert rep.gap < 1e-2
        assert rep.internal.shape == iops.trace_shape

    def test_stale(self, iops):
        from chdbc.errors import StaleStateError
        from chdbc.solver import State
        traj = run(iops, T=1e-3)
        s = State(t=0.0, field=traj.states[0].field)
        with pytest.raises(StaleStateError):
            dg.trace_mismatch(iops, traj.cfg, s)


class TestSeparationTracker:
    def test_shapes_and_margins(self, iops):
        traj = run(iops, T=0.02, cadence=5e-3)
        rep = dg.separation_tracker(traj)
        assert len(rep.times) == len(traj.states)
        assert np.all(rep.bulk_margins > 0)
        assert rep.final_boundary_margin > 0


class TestDecay:
    def _fields(self, ops, seeds):
        out = []
        for sd in seeds:
            rng = np.random.default_rng(sd)
            x = ops.domain.x
            prof = sum(rng.standard_normal() * np.cos(np.pi * k * (x + 1) / 2)
                       for k in range(1, 4))
            prof = prof - ops.mean(prof)
            prof = 0.3 * prof / np.max(np.abs(prof))
            u0 = prof + 0.1 - ops.mean(prof)
            u0 += 0.1 - ops.mean(u0)
            out.append(ops.field_from_bulk(u0))
        return out

    def test_diameter_decays(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, lam=1.0,
                           dt=1e-2)
        rep = dg.decay_experiment(iops, cfg, self._fields(iops, [0, 1, 2]),
                                  T=0.5, cadence=0.1)
        assert rep.phi_w_diameters[-1] < rep.phi_w_diameters[0]
        assert rep.decay_rate > 0

    def test_permutation_invariant(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-2)
        fields = self._fields(iops, [0, 1, 2])
        r1 = dg.decay_experiment(iops, cfg, fields, T=0.1, cadence=0.05)
        r2 = dg.decay_experiment(iops, cfg, fields[::-1], T=0.1, cadence=0.05)
        assert np.allclose(r1.phi_w_diameters, r2.phi_w_diameters, atol=1e-13)


def test_records_to_csv(tmp_path, iops):
    traj = run(iops, T=5e-3)
    path = tmp_path / "diag.csv"
    dg.records_to_csv(traj.records, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + len(traj.records)
    assert lines[0].startswith("t,mass,total_energy")
