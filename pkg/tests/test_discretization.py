import numpy as np
import pytest

from chdbc.discretization import (Field, Interval, PeriodicStrip,
                                  field_from_csv, field_to_csv, make_operators)
from chdbc.errors import NonZeroMeanError, UnsupportedDomainError


@pytest.fixture
def iops():
    return make_operators(Interval(65))


@pytest.fixture
def sops():
    return make_operators(PeriodicStrip(2.0, 16, 17))


class TestQuadrature:
    def test_weights_sum_to_area(self, iops, sops):
        assert iops.weights.sum() == pytest.approx(iops.area)
        assert sops.weights.sum() == pytest.approx(sops.area)

    def test_mean_of_constant(self, iops, sops):
        for ops in (iops, sops):
            assert ops.mean(np.full(ops.n_bulk, 3.5)) == pytest.approx(3.5)

    def test_boundary_mean_interval(self, iops):
        # counting measure on the two endpoints, divided by |Omega| = 2
        assert iops.boundary_mean(np.array([1.0, 1.0])) == pytest.approx(1.0)

    def test_boundary_mean_strip(self, sops):
        # two boundary lines of length Lx, |Omega| = 2 Lx: a constant c
        # averages to c
        c = 0.7
        psi = np.full(sops.trace_shape, c)
        assert sops.boundary_mean(psi) == pytest.approx(c)


class TestLaplacian:
    def test_constant_in_kernel(self, iops, sops):
        for ops in (iops, sops):
            v = np.full(ops.bulk_shape, 2.0)
            assert np.max(np.abs(ops.laplacian(v))) < 1e-12

    def test_conservative(self, iops, sops):
        rng = np.random.default_rng(0)
        for ops in (iops, sops):
            v = rng.standard_normal(ops.bulk_shape)
            lap = ops.laplacian(v)
            # Neumann: the weighted integral of the Laplacian vanishes
            assert abs(ops.weights @ lap.ravel()) < 1e-10

    def test_eigenfunction_interval(self, iops):
        x = iops.domain.x
        v = np.cos(np.pi * (x + 1.0) / 2.0)
        lam = (np.pi / 2.0) ** 2
        err = np.max(np.abs(iops.laplacian(v) + lam * v))
        assert err < 2e-3

    def test_eigenfunction_strip(self, sops):
        X, Y = np.meshgrid(sops.domain.x, sops.domain.y, indexing="ij")
        v = np.cos(np.pi * X) * np.cos(np.pi * (Y + 1.0) / 2.0)
        lam = np.pi ** 2 + (np.pi / 2.0) ** 2
        err = np.max(np.abs(sops.laplacian(v) + lam * v))
        assert err < 0.15  # coarse grid, O(h^2)


class TestInverseLaplacian:
    def test_roundtrip(self, iops, sops):
        rng = np.random.default_rng(1)
        for ops in (iops, sops):
            r = rng.standard_normal(ops.bulk_shape)
            r -= ops.mean(r)
            w = ops.inverse_laplacian(r)
            assert abs(ops.mean(w)) < 1e-12
            assert np.max(np.abs(-ops.laplacian(w) - r)) < 1e-9

    def test_rejects_nonzero_mean(self, iops):
        with pytest.raises(NonZeroMeanError):
            iops.inverse_laplacian(np.ones(iops.n_bulk))

    def test_h_minus1_eigenvalue(self, iops):
        # [DERIVED] first Neumann eigenfunction: ||v||^2_{H^-1} = ||v||^2 / lam
        # = 4/pi^2 since the eigenvalue is pi^2/4 and ||v||^2 = 1
        v = np.cos(np.pi * (iops.domain.x + 1.0) / 2.0)
        val = iops.h_minus1_norm(v) ** 2
        assert val == pytest.approx(4.0 / np.pi ** 2, abs=2e-4)

    def test_strip_matches_dense(self):
        # cross-check the FFT/banded path against a direct sparse solve
        import scipy.sparse.linalg as spla
        ops = make_operators(PeriodicStrip(1.5, 8, 9))
        rng = np.random.default_rng(2)
        r = rng.standard_normal(ops.bulk_shape)
        r -= ops.mean(r)
        w = ops.inverse_laplacian(r)
        resid = ops.K @ w.ravel() - ops.weights * r.ravel()
        assert np.max(np.abs(resid)) < 1e-10


class TestPhiW:
    def test_eigenfunction_example(self):
        # [DERIVED] bulk H^-1 part 4/pi^2, trace L^2 part 1^2 + (-1)^2 = 2
        ops = make_operators(Interval(257))
        v = np.cos(np.pi * (ops.domain.x + 1.0) / 2.0)
        f1 = ops.field_from_bulk(v)
        f0 = ops.field_from_bulk(np.zeros_like(v))
        d2 = ops.phi_w_distance(f1, f0) ** 2
        assert d2 == pytest.approx(2.0 + 4.0 / np.pi ** 2, abs=1e-4)

    def test_requires_equal_means(self, iops):
        f1 = iops.field_from_bulk(np.ones(iops.n_bulk))
        f0 = iops.field_from_bulk(np.zeros(iops.n_bulk))
        with pytest.raises(NonZeroMeanError):
            iops.phi_w_distance(f1, f0)

    def test_zero_distance(self, iops):
        v = np.sin(iops.domain.x)
        f = iops.field_from_bulk(v)
        assert iops.phi_w_distance(f, f.copy()) == 0.0


class TestBoundaryOperators:
    def test_normal_derivative_linear(self, iops):
        # exact (to stencil order) for linear functions: outward slopes +-a
        u = 3.0 * iops.domain.x + 1.0
        nd = iops.normal_derivative(u)
        assert nd[0] == pytest.approx(-3.0, abs=1e-10)
        assert nd[1] == pytest.approx(3.0, abs=1e-10)

    def test_normal_derivative_strip(self, sops):
        X, Y = np.meshgrid(sops.domain.x, sops.domain.y, indexing="ij")
        u = 2.0 * Y
        nd = sops.normal_derivative(u)
        assert np.allclose(nd[0], -2.0, atol=1e-10)
        assert np.allclose(nd[1], 2.0, atol=1e-10)

    def test_tangential_unsupported_on_interval(self, iops):
        with pytest.raises(UnsupportedDomainError):
            iops.tangential_gradient_seminorm(np.zeros(iops.n_bulk))

    def test_trace_of(self, iops):
        v = np.arange(iops.n_bulk, dtype=float)
        tr = iops.trace_of(v)
        assert tr[0] == 0.0 and tr[1] == iops.n_bulk - 1


class TestSerialization:
    def test_roundtrip_interval(self, iops, tmp_path):
        rng = np.random.default_rng(3)
        f = iops.field_from_bulk(rng.standard_normal(iops.bulk_shape))
        path = tmp_path / "f.csv"
        field_to_csv(iops, f, path)
        g = field_from_csv(iops, path)
        assert np.array_equal(f.bulk, g.bulk)
        assert np.array_equal(f.trace, g.trace)

    def test_roundtrip_strip(self, sops, tmp_path):
        rng = np.random.default_rng(4)
        f = sops.field_from_bulk(rng.standard_normal(sops.bulk_shape))
        path = tmp_path / "f.csv"
        field_to_csv(sops, f, path)
        g = field_from_csv(sops, path)
        assert np.array_equal(f.bulk, g.bulk)
        assert np.array_equal(f.trace, g.trace)


def test_field_copy_independent():
    ops = make_operators(Interval(17))
    f = ops.field_from_bulk(np.zeros(17))
    g = f.copy()
    g.bulk[0] = 5.0
    assert f.bulk[0] == 0.0
