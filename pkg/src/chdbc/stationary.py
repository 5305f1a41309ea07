"""The 1D singular boundary-value problem y'' = f(y), y'(+-1) = K.

Odd solutions are built by shooting from y(0) = 0, y'(0) = s.  The first
integral (1/2) y'^2 - F(y) = (1/2) s^2 turns the singular approach of
|y| -> 1 into a regular quadrature x(y) = int dv / sqrt(s^2 + 2 F(v)), which
is used both as an independent oracle for the shooting integrator and to
continue profiles into the stiff tail.

When F(1) is finite there is a critical outward slope: s_star is the initial
slope whose profile saturates exactly at the endpoint, and
K_plus = sqrt(s_star^2 + 2 F(1)).  For K > K_plus no classical odd solution
exists; the saturated profile (shot with s_star) takes over and the boundary
condition is met only in the variational sense, with defect K - K_plus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.optimize import brentq

from .errors import StiffnessFailureError

__all__ = [
    "StationaryProblem", "ShootingResult", "CriticalFlux", "BVPSolution",
    "shoot", "time_of_flight", "critical_flux", "solve_bvp", "classify",
    "variational_equilibrium_check", "first_integral_drift",
]

_Y_SWITCH = 1.0 - 1e-6  # hand over from the ODE to the quadrature here
_Y_EVENT = 1.0 - 1e-12


def _quad(fn, a, b):
    # adaptive quadrature at near-roundoff tolerance; the residual roundoff
    # warning is expected at these settings and the result is cross-checked
    # against the shooting integrator elsewhere
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(fn, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


@dataclass(frozen=True)
class StationaryProblem:
    potential: object
    K: float

    def __post_init__(self):
        if self.K < 0.0:
            raise ValueError("outward slope K must be >= 0")


@dataclass
class ShootingResult:
    s: float
    x: np.ndarray        # grid on [-1, 1]
    y: np.ndarray        # odd profile (clamped to +-1 past saturation)
    yp: np.ndarray       # slope from the first integral (inf at saturation if F(1)=inf)
    exit: str            # "interior" | "saturated"
    x_hit: float | None  # where |y| reaches 1, when saturated
    # raw ODE samples for first-integral verification
    ode_x: np.ndarray
    ode_y: np.ndarray
    ode_yp: np.ndarray


def _rhs(potential):
    def rhs(_x, z):
        y = min(max(z[0], -_Y_EVENT), _Y_EVENT)
        return [z[1], float(potential.f(y))]
    return rhs


def _switch_level(potential, s):
    """Where to hand the integration over to the quadrature.

    With F bounded the ODE can run almost to the endpoint.  When F blows up,
    integrating deep into the singular layer trades first-integral accuracy
    for nothing (the quadrature is exact there), so stop once F reaches a
    moderate multiple of the shot energy.
    """
    if math.isfinite(float(potential.F_at_one())):
        return _Y_SWITCH
    F_cap = 100.0 * (1.0 + s * s)
    if float(potential.F(_Y_SWITCH)) <= F_cap:
        return _Y_SWITCH
    return brentq(lambda v: float(potential.F(v)) - F_cap, 0.0, _Y_SWITCH,
                  xtol=1e-14)


def _tail_quadrature(potential, s, y_from, y_to=1.0):
    """x-distance spent between y_from and y_to, via the first integral.

    Near v = 1 the substitution v = 1 - w^2 removes the endpoint slowdown.
    """
    e = 0.5 * s * s

    def integrand(v):
        return 1.0 / math.sqrt(2.0 * e + 2.0 * float(potential.F(v)))

    split = min(max(y_from, 0.999), y_to)
    val = 0.0
    if split > y_from:
        val += _quad(integrand, y_from, split)
    if y_to > split:
        # v = 1 - w^2 only helps when the upper limit is the singular endpoint
        if y_to == 1.0:
            w_max = math.sqrt(1.0 - split)

            def sub_integrand(w):
                v = 1.0 - w * w
                F = float(potential.F(v)) if v < 1.0 else float(potential.F_at_one())
                if not math.isfinite(F):
                    return 0.0
                return 2.0 * w / math.sqrt(2.0 * e + 2.0 * F)

            val += _quad(sub_integrand, 0.0, w_max)
        else:
            val += _quad(integrand, split, y_to)
    return val


def time_of_flight(potential, s):
    """x_1(s) = int_0^1 dv / sqrt(s^2 + 2 F(v)): arrival position of y at 1.

    Monotone decreasing in s; +inf at s = 0 (the flight out of the
    degenerate equilibrium never starts).
    """
    if s < 0.0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return math.inf
    return _tail_quadrature(potential, s, 0.0, 1.0)


def shoot(potential, s, rtol=1e-11, atol=1e-13, n_profile=2001) -> ShootingResult:
    """Integrate y'' = f(y) from y(0)=0, y'(0)=s and mirror by oddness."""
    if s < 0.0:
        raise ValueError("initial slope s must be >= 0")
    half = np.linspace(0.0, 1.0, (n_profile + 1) // 2)
    if s == 0.0:
        x = np.concatenate([-half[::-1], half[1:]])
        z = np.zeros_like(x)
        return ShootingResult(s, x, z, np.zeros_like(x) + 0.0, "interior", None,
                              half, np.zeros_like(half), np.zeros_like(half))

    y_switch = _switch_level(potential, s)
    event = lambda _x, z: z[0] - y_switch
    event.terminal = True
    event.direction = 1.0
    sol = solve_ivp(_rhs(potential), (0.0, 1.0), [0.0, s], method="DOP853",
                    rtol=rtol, atol=atol, dense_output=True, events=[event],
                    max_step=0.05)
    if sol.status < 0:
        raise StiffnessFailureError(sol.message)

    e = 0.5 * s * s
    if sol.t_events[0].size:
        x_switch = float(sol.t_events[0][0])
        x_hit = x_switch + _tail_quadrature(potential, s, y_switch, 1.0)
        # the exactly-critical shot lands at the endpoint up to rounding
        saturated = x_hit <= 1.0 + 1e-9
        x_hit = min(x_hit, 1.0)
    else:
        x_switch = 1.0
        x_hit = None
        saturated = False

    def y_at(xq):
        if xq <= x_switch:
            return float(sol.sol(xq)[0])
        if x_hit is not None and xq >= x_hit:
            return 1.0
        # invert the quadrature map on the stiff tail
        lo, hi = y_switch, 1.0 - 1e-15
        return brentq(
            lambda v: x_switch + _tail_quadrature(potential, s, y_switch, v) - xq,
            lo, hi, xtol=1e-14)

    y_half = np.array([y_at(xq) for xq in half])
    with np.errstate(over="ignore"):
        Fv = np.array([float(potential.F(min(v, 1.0))) for v in y_half])
        yp_half = np.sqrt(2.0 * e + 2.0 * Fv)
    x = np.concatenate([-half[::-1], half[1:]])
    y = np.concatenate([-y_half[::-1], y_half[1:]])
    yp = np.concatenate([yp_half[::-1], yp_half[1:]])
    exit_kind = "saturated" if saturated else "interior"
    return ShootingResult(s, x, y, yp, exit_kind,
                          x_hit if saturated else None,
                          sol.t, sol.y[0], sol.y[1])


def first_integral_drift(potential, result: ShootingResult):
    """max |(1/2) y'^2 - F(y) - (1/2) s^2| along the raw ODE samples."""
    if result.ode_x.size == 0:
        return 0.0
    F = np.array([float(potential.F(v)) for v in np.clip(result.ode_y, -1.0, 1.0)])
    drift = 0.5 * result.ode_yp ** 2 - F - 0.5 * result.s ** 2
    return float(np.max(np.abs(drift)))


@dataclass(frozen=True)
class CriticalFlux:
    s_star: float
    K_plus: float


def critical_flux(potential) -> CriticalFlux | None:
    """Critical outward slope, or None when F(1) = inf (classical solutions
    then exist for every K: the strong-singularity regime)."""
    F1 = float(potential.F_at_one())
    if not math.isfinite(F1):
        return None
    g = lambda s: time_of_flight(potential, s) - 1.0
    s_lo, s_hi = 1e-6, 1.0
    while g(s_hi) > 0.0:
        s_hi *= 2.0
        if s_hi > 1e6:
            raise RuntimeError("no saturation bracket found")
    while g(s_lo) < 0.0:
        s_lo *= 0.5
        if s_lo < 1e-12:
            raise RuntimeError("no interior bracket found")
    s_star = brentq(g, s_lo, s_hi, xtol=1e-12, rtol=8.9e-16)
    return CriticalFlux(float(s_star), math.sqrt(s_star * s_star + 2.0 * F1))


@dataclass
class BVPSolution:
    kind: str  # "classical" | "variational-only"
    s: float
    profile: ShootingResult
    defect: float  # K - y'(1) of the returned profile (0 in the classical case)


def _boundary_state(potential, s):
    """(y(1), y'(1)) for an interior shot, through the quadrature map."""
    if s == 0.0:
        return 0.0, 0.0
    Y = brentq(lambda v: _tail_quadrature(potential, s, 0.0, v) - 1.0,
               1e-15, 1.0 - 1e-15, xtol=1e-15)
    return Y, math.sqrt(s * s + 2.0 * float(potential.F(Y)))


def solve_bvp(problem: StationaryProblem) -> BVPSolution:
    """Classical odd profile with y'(1) = K when one exists; otherwise the
    saturated profile shot with s_star, flagged variational-only."""
    pot, K = problem.potential, problem.K
    if K == 0.0:
        return BVPSolution("classical", 0.0, shoot(pot, 0.0), 0.0)
    crit = critical_flux(pot)
    if crit is not None and K > crit.K_plus:
        prof = shoot(pot, crit.s_star)
        return BVPSolution("variational-only", crit.s_star, prof,
                           K - crit.K_plus)
    s_max = crit.s_star if crit is not None else None
    if s_max is None:
        # strong singularity: K(s) sweeps (0, inf) on s in (0, s_sat)
        g = lambda s: time_of_flight(pot, s) - 1.0
        hi = 1.0
        while g(hi) > 0.0:
            hi *= 2.0
        s_max = brentq(g, 1e-9, hi, xtol=1e-13)
    slope = lambda s: _boundary_state(pot, s)[1] - K
    s_sol = brentq(slope, 1e-12, s_max * (1.0 - 1e-10), xtol=1e-13)
    return BVPSolution("classical", float(s_sol), shoot(pot, s_sol), 0.0)


def classify(potential, K):
    """"Classical" below the critical flux (or always, when F(1) = inf),
    "VariationalOnly" above."""
    crit = critical_flux(potential)
    if crit is None or K <= crit.K_plus:
        return "Classical"
    return "VariationalOnly"


def variational_equilibrium_check(potential, x, y, interior_margin=1e-3):
    """L^2 residual of y'' - f(y) = <y'' - f(y)> on the region |y| <= 1 - margin,
    by centered finite differences."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = x[1] - x[0]
    ypp = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / h ** 2
    yi = y[1:-1]
    mask = (np.abs(yi) <= 1.0 - interior_margin) \
        & (np.abs(y[2:]) < 1.0) & (np.abs(y[:-2]) < 1.0)
    r = ypp[mask] - np.array([float(potential.f(v)) for v in yi[mask]])
    r = r - np.mean(r)
    return float(np.sqrt(h * np.sum(r * r)))
