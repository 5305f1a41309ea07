import numpy as np
import pytest

from chdbc.diagnostics import energy
from chdbc.discretization import Field, Interval, PeriodicStrip, make_operators
from chdbc.errors import StaleStateError
from chdbc.potentials import (BoundaryNonlinearity, LogarithmicPotential,
                              PowerSingularPotential)
from chdbc.solver import (SolverConfig, State, chemical_potential_mean,
                          simulate)


@pytest.fixture
def iops():
    return make_operators(Interval(48))


def smooth_data(ops, amp=0.4, mean=0.1):
    if ops.domain.kind == "interval":
        x = ops.domain.x
        u0 = amp * np.cos(np.pi * (x - ops.domain.a)
                          / (ops.domain.b - ops.domain.a)) + mean
    else:
        X, Y = np.meshgrid(ops.domain.x, ops.domain.y, indexing="ij")
        u0 = amp * np.cos(np.pi * X) * np.cos(np.pi * (Y + 1.0) / 2.0) + mean
    return ops.field_from_bulk(u0)


class TestStepBasics:
    def test_mass_conserved(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, lam=1.0,
                           dt=1e-3)
        f0 = smooth_data(iops)
        traj = simulate(iops, cfg, f0, T=0.02, cadence=1e-3)
        m0 = iops.mean(f0.bulk)
        for s in traj.states:
            assert abs(iops.mean(s.field.bulk) - m0) < 1e-13

    def test_trace_coupling_exact(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        traj = simulate(iops, cfg, smooth_data(iops), T=5e-3)
        for s in traj.states[1:]:
            assert np.array_equal(s.field.trace,
                                  iops.trace_of(s.field.bulk))

    def test_initial_trace_mismatch_resolved(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        f0 = smooth_data(iops)
        f0 = Field(f0.bulk, f0.trace + 0.3)  # inconsistent initial trace
        traj = simulate(iops, cfg, f0, T=3e-3)
        s1 = traj.states[1]
        assert np.array_equal(s1.field.trace, iops.trace_of(s1.field.bulk))

    def test_energy_decreases(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=16, lam=2.0,
                           dt=1e-2, h1=0.1, h2=-0.2)
        traj = simulate(iops, cfg, smooth_data(iops, amp=0.6), T=0.3,
                        cadence=1e-2)
        E = [energy(iops, cfg, s.field).total for s in traj.states]
        assert all(E[k + 1] <= E[k] + 1e-10 * (1.0 + abs(E[k]))
                   for k in range(len(E) - 1))

    def test_strip_runs(self):
        ops = make_operators(PeriodicStrip(2.0, 12, 13))
        cfg = SolverConfig(potential=PowerSingularPotential(p=3.0), N=8,
                           dt=1e-3)
        traj = simulate(ops, cfg, smooth_data(ops, amp=0.3, mean=0.0), T=5e-3)
        m0 = ops.mean(traj.states[0].field.bulk)
        assert abs(ops.mean(traj.final.field.bulk) - m0) < 1e-13


class TestSimulateContract:
    def test_snapshot_counts(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        traj = simulate(iops, cfg, smooth_data(iops), T=3e-3, cadence=1e-3)
        assert len(traj.states) == 4  # initial + 3
        assert len(traj.records) == 3

    def test_cadence_validation(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        with pytest.raises(ValueError):
            simulate(iops, cfg, smooth_data(iops), T=1e-3, cadence=1.0)
        with pytest.raises(ValueError):
            simulate(iops, cfg, smooth_data(iops), T=-1.0)

    def test_deterministic(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, lam=1.0,
                           dt=1e-3)
        t1 = simulate(iops, cfg, smooth_data(iops), T=0.01)
        t2 = simulate(iops, cfg, smooth_data(iops), T=0.01)
        assert np.array_equal(t1.final.field.bulk, t2.final.field.bulk)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(potential=LogarithmicPotential(), dt=0.0)
        with pytest.raises(ValueError):
            SolverConfig(potential=LogarithmicPotential(), N=1)


class TestRegularizationConsistency:
    def test_confined_run_invariant(self, iops):
        # data well inside both cutoffs: f_N and f_2N coincide on the range
        f0 = smooth_data(iops, amp=0.45, mean=0.0)
        outs = []
        for N in (8, 16):
            cfg = SolverConfig(potential=LogarithmicPotential(), N=N, lam=1.0,
                               dt=1e-3)
            outs.append(simulate(iops, cfg, f0, T=0.02, cadence=1e-2))
        for a, b in zip(outs[0].states, outs[1].states):
            assert np.max(np.abs(a.field.bulk - b.field.bulk)) < 1e-9


class TestMuMean:
    def test_identity(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, lam=1.5,
                           dt=1e-3, h1=0.2, h2=0.1,
                           g=BoundaryNonlinearity.tanh_tilt(0.3))
        traj = simulate(iops, cfg, smooth_data(iops), T=0.01)
        rep = chemical_potential_mean(iops, cfg, traj.final)
        assert rep.residual < 1e-11

    def test_stale_state(self, iops):
        cfg = SolverConfig(potential=LogarithmicPotential(), N=8, dt=1e-3)
        fresh = State(t=0.0, field=smooth_data(iops))
        with pytest.raises(StaleStateError):
            chemical_potential_mean(iops, cfg, fresh)
