"""Discrete domains, fields with boundary traces, and the discrete operators.

Two desk-scale domains are supported: a 1D interval whose boundary is the
two endpoints (counting measure, vanishing surface Laplacian) and a 2D
strip, periodic in x, whose boundary is the two lines y = +-1 (there the
surface Laplacian is the periodic second derivative in x).

Grids are node-centered and include the boundary nodes; boundary degrees of
freedom are identified with boundary nodes.  The Neumann Laplacian comes
from ghost-node elimination in conservative (flux) form, so the quadrature-
weighted row sums vanish exactly and mass conservation is exact to solver
tolerance.  The inverse Laplacian is defined on zero-mean functions only
and pins the mean through a bordered system rather than a pinned node.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .errors import NonZeroMeanError, SingularSystemError, UnsupportedDomainError

__all__ = [
    "Interval",
    "PeriodicStrip",
    "Field",
    "make_operators",
    "IntervalOperators",
    "StripOperators",
    "field_to_csv",
    "field_from_csv",
]


@dataclass(frozen=True)
class Interval:
    n: int
    a: float = -1.0
    b: float = 1.0

    kind = "interval"

    def __post_init__(self):
        if self.n < 5:
            raise ValueError("interval needs at least 5 nodes")

    @property
    def h(self):
        return (self.b - self.a) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.a, self.b, self.n)


@dataclass(frozen=True)
class PeriodicStrip:
    Lx: float
    nx: int
    ny: int

    kind = "strip"

    def __post_init__(self):
        if self.nx < 4 or self.ny < 5:
            raise ValueError("strip needs nx >= 4 and ny >= 5")

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def hy(self):
        return 2.0 / (self.ny - 1)

    @property
    def x(self):
        return self.dx * np.arange(self.nx)

    @property
    def y(self):
        return np.linspace(-1.0, 1.0, self.ny)


@dataclass
class Field:
    """Bulk values plus an independently stored boundary trace.

    After a time step the trace equals the bulk boundary values exactly;
    only the initial datum may carry a mismatch.
    """

    bulk: np.ndarray
    trace: np.ndarray

    def copy(self):
        return Field(self.bulk.copy(), self.trace.copy())


def _interval_stiffness(n, h):
    main = np.full(n, 2.0 / h)
    main[0] = main[-1] = 1.0 / h
    off = np.full(n - 1, -1.0 / h)
    return sp.diags_array([off, main, off], offsets=[-1, 0, 1], format="csr")


def _periodic_stiffness(n, h):
    K = sp.diags_array(
        [np.full(n - 1, -1.0), np.full(n, 2.0), np.full(n - 1, -1.0)],
        offsets=[-1, 0, 1],
    ).tolil()
    K[0, n - 1] = -1.0
    K[n - 1, 0] = -1.0
    return (K / h).tocsr()


def _trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


class _OperatorsBase:
    """Shared quadrature, H^-1 and Phi^w machinery; geometry in subclasses."""

    # --- quadrature -----------------------------------------------------
    def mean(self, v):
        return float(self.weights @ np.ravel(v)) / self.area

    def inner(self, v, w):
        return float((self.weights * np.ravel(v)) @ np.ravel(w))

    def boundary_mean(self, psi):
        """Gamma-integral divided by |Omega|, matching the mean-potential bookkeeping."""
        return float(self.boundary_weights @ np.ravel(psi)) / self.area

    def boundary_inner(self, psi, phi):
        return float((self.boundary_weights * np.ravel(psi)) @ np.ravel(phi))

    def trace_of(self, bulk):
        return np.ravel(bulk)[self.boundary_indices].reshape(self.trace_shape)

    def field_from_bulk(self, bulk):
        bulk = np.asarray(bulk, dtype=float).reshape(self.bulk_shape)
        return Field(bulk, self.trace_of(bulk))

    # --- Laplacian and its inverse --------------------------------------
    def laplacian(self, v):
        """Conservative Neumann Laplacian (ghost-node elimination)."""
        flat = -(self.K @ np.ravel(v)) / self.weights
        return flat.reshape(np.shape(v))

    def inverse_laplacian(self, r):
        """Solve -Lap w = r with Neumann data and zero mean.

        Requires mean(r) ~ 0; returns the zero-mean solution.
        """
        r = np.asarray(r, dtype=float)
        flat = np.ravel(r)
        nrm = np.linalg.norm(flat)
        # absolute floor so that all-roundoff inputs (norm ~ eps) pass
        if abs(self.mean(r)) * self.area > max(1e-8 * nrm, 1e-14):
            raise NonZeroMeanError("inverse Laplacian requires zero-mean input")
        w = self._poisson_solve(flat)
        w -= (self.weights @ w) / self.area
        return w.reshape(np.shape(r))

    def h_minus1_norm(self, r):
        """|| r ||_{H^-1}: (A r, r)^(1/2) on zero-mean r."""
        w = self.inverse_laplacian(r)
        val = self.inner(w, r)
        return float(np.sqrt(max(val, 0.0)))

    def phi_w_distance(self, f1: Field, f2: Field):
        """sqrt(||u1-u2||^2_{H^-1(Omega)} + ||psi1-psi2||^2_{L^2(Gamma)})."""
        d = f1.bulk - f2.bulk
        if abs(self.mean(d)) > 1e-8 * (1.0 + float(np.max(np.abs(d)))):
            raise NonZeroMeanError("phi_w_distance requires equal bulk means")
        d = d - self.mean(d)
        dpsi = f1.trace - f2.trace
        return float(np.sqrt(self.h_minus1_norm(d) ** 2 + self.boundary_inner(dpsi, dpsi)))


class IntervalOperators(_OperatorsBase):
    def __init__(self, domain: Interval):
        self.domain = domain
        n, h = domain.n, domain.h
        self.bulk_shape = (n,)
        self.trace_shape = (2,)
        self.n_bulk = n
        self.weights = _trapezoid_weights(n, h)
        self.area = domain.b - domain.a
        # Two-point boundary: counting measure on Gamma.
        self.boundary_weights = np.ones(2)
        self.boundary_indices = np.array([0, n - 1])
        self.K = _interval_stiffness(n, h)
        # Laplace-Beltrami on a two-point boundary vanishes.
        self.K_gamma = sp.csr_array((2, 2))
        self._poisson_lu = _bordered_lu(self.K, self.weights)

    def _poisson_solve(self, flat_r):
        rhs = np.concatenate([self.weights * flat_r, [0.0]])
        sol = self._poisson_lu.solve(rhs)
        return sol[:-1]

    def normal_derivative(self, bulk):
        """Outward one-sided second-order differences at the two endpoints."""
        u = np.ravel(bulk)
        h = self.domain.h
        left = (3.0 * u[0] - 4.0 * u[1] + u[2]) / (2.0 * h)
        right = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
        return np.array([left, right])

    def tangential_gradient_seminorm(self, bulk):
        raise UnsupportedDomainError("no tangential directions on the interval")


class StripOperators(_OperatorsBase):
    def __init__(self, domain: PeriodicStrip):
        self.domain = domain
        nx, ny = domain.nx, domain.ny
        dx, hy = domain.dx, domain.hy
        self.bulk_shape = (nx, ny)
        self.trace_shape = (2, nx)
        self.n_bulk = nx * ny
        wx = np.full(nx, dx)
        wy = _trapezoid_weights(ny, hy)
        self.weights = np.kron(wx, wy)  # C-order flattening of (nx, ny)
        self.area = 2.0 * domain.Lx
        self.boundary_weights = np.full(2 * nx, dx)
        idx = np.arange(nx) * ny
        self.boundary_indices = np.concatenate([idx, idx + ny - 1])  # y=-1 then y=+1
        Kx = _periodic_stiffness(nx, dx)
        Ky = _interval_stiffness(ny, hy)
        Mx = sp.diags_array(wx)
        My = sp.diags_array(wy)
        self.K = (sp.kron(Kx, My) + sp.kron(Mx, Ky)).tocsr()
        self.K_gamma = sp.block_diag(
            [_periodic_stiffness(nx, dx), _periodic_stiffness(nx, dx)], format="csr"
        )
        # Fourier path: -Lap diagonalizes in x, leaving tridiagonal solves in y.
        k = np.arange(nx)
        self._lam_x = (2.0 - 2.0 * np.cos(2.0 * np.pi * k / nx)) / dx ** 2
        self._Ay_banded = _neumann_second_derivative_banded(ny, hy)
        self._wy = wy

    def _poisson_solve(self, flat_r):
        nx, ny = self.bulk_shape
        r = flat_r.reshape(nx, ny)
        rhat = np.fft.fft(r, axis=0)
        what = np.empty_like(rhat)
        ab = self._Ay_banded
        for k in range(nx):
            lam = self._lam_x[k]
            if k == 0:
                what[0] = _zero_mode_solve(ab, self._wy, rhat[0])
                continue
            a = ab.copy()
            a[1] += lam
            what[k] = solve_banded((1, 1), a, rhat[k])
        w = np.fft.ifft(what, axis=0).real
        return w.ravel()

    def normal_derivative(self, bulk):
        u = np.asarray(bulk).reshape(self.bulk_shape)
        hy = self.domain.hy
        bottom = (3.0 * u[:, 0] - 4.0 * u[:, 1] + u[:, 2]) / (2.0 * hy)
        top = (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * hy)
        return np.stack([bottom, top])

    def tangential_gradient_seminorm(self, bulk):
        """L^2 norm of (d_xx u, d_y d_x u): second derivatives with at least
        one tangential direction."""
        u = np.asarray(bulk).reshape(self.bulk_shape)
        dx, hy = self.domain.dx, self.domain.hy
        ux = (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * dx)
        uxx = (np.roll(u, -1, axis=0) - 2.0 * u + np.roll(u, 1, axis=0)) / dx ** 2
        uxy = np.empty_like(u)
        uxy[:, 1:-1] = (ux[:, 2:] - ux[:, :-2]) / (2.0 * hy)
        uxy[:, 0] = (-3.0 * ux[:, 0] + 4.0 * ux[:, 1] - ux[:, 2]) / (2.0 * hy)
        uxy[:, -1] = (3.0 * ux[:, -1] - 4.0 * ux[:, -2] + ux[:, -3]) / (2.0 * hy)
        val = self.inner(uxx, uxx) + self.inner(uxy, uxy)
        return float(np.sqrt(val))


def _neumann_second_derivative_banded(ny, hy):
    """Banded (-d^2/dy^2) with ghost-eliminated Neumann rows, M^-1 K form."""
    wy = _trapezoid_weights(ny, hy)
    Ky = _interval_stiffness(ny, hy).toarray()
    A = Ky / wy[:, None]
    ab = np.zeros((3, ny))
    ab[0, 1:] = np.diag(A, 1)
    ab[1] = np.diag(A)
    ab[2, :-1] = np.diag(A, -1)
    return ab


def _zero_mode_solve(ab, wy, rhs):
    """Bordered solve of the singular Neumann y-problem at the zero x-mode."""
    ny = len(wy)
    A = np.zeros((ny + 1, ny + 1), dtype=complex)
    A[:ny, :ny] = _banded_to_dense(ab)
    A[:ny, ny] = 1.0
    A[ny, :ny] = wy
    b = np.concatenate([rhs, [0.0]])
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise SingularSystemError("zero-mode solve failed") from exc
    return sol[:ny]


def _banded_to_dense(ab):
    n = ab.shape[1]
    A = np.diag(ab[1])
    A += np.diag(ab[0, 1:], 1)
    A += np.diag(ab[2, :-1], -1)
    return A


def _bordered_lu(K, weights):
    n = K.shape[0]
    m = sp.csr_array(weights.reshape(1, -1))
    A = sp.block_array([[K, m.T], [m, None]], format="csc")
    try:
        return spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystemError("bordered Poisson factorization failed") from exc


def make_operators(domain):
    if isinstance(domain, Interval):
        return IntervalOperators(domain)
    if isinstance(domain, PeriodicStrip):
        return StripOperators(domain)
    raise TypeError(f"unknown domain: {domain!r}")


def field_to_csv(ops, field: Field, path):
    """One row per node (x[,y], u); the trace follows as flagged rows."""
    dom = ops.domain
    with open(path, "w", newline="") as fh:
        wtr = csv.writer(fh)
        if dom.kind == "interval":
            wtr.writerow(["x", "u", "kind"])
            for xi, ui in zip(dom.x, field.bulk):
                wtr.writerow([f"{xi:.17g}", f"{ui:.17g}", "bulk"])
            for xi, pi in zip([dom.a, dom.b], field.trace):
                wtr.writerow([f"{xi:.17g}", f"{pi:.17g}", "trace"])
        else:
            wtr.writerow(["x", "y", "u", "kind"])
            for ix, xi in enumerate(dom.x):
                for iy, yi in enumerate(dom.y):
                    wtr.writerow([f"{xi:.17g}", f"{yi:.17g}",
                                  f"{field.bulk[ix, iy]:.17g}", "bulk"])
            for side, yi in enumerate([-1.0, 1.0]):
                for ix, xi in enumerate(dom.x):
                    wtr.writerow([f"{xi:.17g}", f"{yi:.17g}",
                                  f"{field.trace[side, ix]:.17g}", "trace"])


def field_from_csv(ops, path):
    bulk_vals, trace_vals = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            (trace_vals if row["kind"] == "trace" else bulk_vals).append(float(row["u"]))
    bulk = np.array(bulk_vals).reshape(ops.bulk_shape)
    trace = np.array(trace_vals).reshape(ops.trace_shape)
    return Field(bulk, trace)
