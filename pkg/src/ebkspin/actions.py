"""Action variables, frequencies, Maslov data and spin rotation angles for
spherically symmetric models.

Actions use the normalisation I = (1/2pi) * loop integral of p dx, so the
angular actions are I_phi = M and I_theta = L - M and the radial action is
I_r = (1/pi) * int_{r_min}^{r_max} |p_r| dr.  The radial rotation angle is

    alpha_r = | int_over_one_radial_period B(t) dt - 2 pi (w_L/w_r) L/|L| |

evaluated on a trajectory between consecutive perihelion passages.  Besides
this unsigned value (reduced to [0, 4pi)) the signed projection onto +L/|L|
is computed, reduced to (-2pi, 2pi]; the quantiser consumes the signed one,
which keeps the conventional quantum-number labels of both shipped models.
For the holonomy -identity (a 2pi rotation about any axis) the signed angle
is +2pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from . import su2
from .dynamics import integrate_cocycle, radial_loop
from .errors import NoBoundMotionError, NumericalError, QuadratureError

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class TorusSpec:
    """Invariant torus of a spherical model, labelled by its integrals."""

    E: float
    L: float
    M: float

    def __post_init__(self):
        if self.L < 0:
            raise NoBoundMotionError("L must be nonnegative")
        if abs(self.M) > self.L + 1e-12:
            raise NoBoundMotionError("|M| <= L violated")


@dataclass
class ActionData:
    I_r: float
    I_theta: float
    I_phi: float
    omega_r: float
    omega_L: float
    mu_r: int
    mu_theta: int
    mu_phi: int
    alpha_r: float
    alpha_L: float
    alpha_M: float


@dataclass
class RadialAngle:
    """Rotation angle data of the radial basis cycle."""

    alpha: float            # unsigned, in [0, 4pi)
    alpha_signed: float     # about +L/|L|, in (-2pi, 2pi]
    loop_integral: np.ndarray
    omega_ratio: float
    period: float
    axis: np.ndarray


_GAUSS_CACHE = {}


def _gauss_rule(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = leggauss(n)
    return _GAUSS_CACHE[n]


def radial_turning_points(model, E, L, rtol=1e-12):
    """Roots (r_min, r_max) of p_r^2 = 0 bracketing the allowed region."""
    lo, hi = model.energy_window(L)
    if E <= lo:
        raise NoBoundMotionError(
            "E=%g at or below the circular-orbit energy %g (I_r would be < 0)"
            % (E, lo)
        )
    if hi is not None and E >= hi:
        raise NoBoundMotionError("E=%g at or above the escape energy %g" % (E, hi))

    f = lambda r: model.radial_p2(E, L, r)
    # an interior point: degenerate turning radius of the circular orbit
    r_c = _allowed_point(model, E, L)
    # bracket inward
    r_in = r_c
    for _ in range(400):
        r_try = 0.7 * r_in
        if f(r_try) < 0:
            r_min = brentq(f, r_try, r_in, rtol=rtol, xtol=1e-300)
            break
        r_in = r_try
    else:
        raise NoBoundMotionError("no inner turning point found below r=%g" % r_c)
    # bracket outward
    r_out = r_c
    for _ in range(400):
        r_try = 1.5 * r_out
        if f(r_try) < 0:
            r_max = brentq(f, r_out, r_try, rtol=rtol, xtol=1e-300)
            break
        r_out = r_try
    else:
        raise NoBoundMotionError(
            "no outer turning point found above r=%g (unbound motion)" % r_c
        )
    return r_min, r_max


def _allowed_point(model, E, L):
    """Some radius strictly inside the classically allowed region: the
    circular-orbit radius at this L sits inside the annulus whenever E lies
    above the circular energy."""
    r = model.circular_orbit(L)[1]
    if model.radial_p2(E, L, r) <= 0:
        raise NoBoundMotionError(
            "no classically allowed radius at E=%g, L=%g" % (E, L)
        )
    return r


def radial_action(model, E, L, rel_tol=1e-12, max_nodes=4096):
    """I_r = (1/pi) int_{r_min}^{r_max} |p_r| dr.

    The substitution r = r_min + (r_max - r_min) sin^2(u) absorbs the
    square-root endpoint singularities, after which Gauss-Legendre quadrature
    with doubled node counts converges geometrically.
    """
    r_min, r_max = radial_turning_points(model, E, L)
    dr = r_max - r_min
    if dr <= 0:
        return 0.0

    def integrand(u):
        r = r_min + dr * np.sin(u) ** 2
        p2 = np.maximum(model.radial_p2(E, L, r), 0.0)
        return np.sqrt(p2) * dr * np.sin(2.0 * u)

    prev = None
    n = 32
    while n <= max_nodes:
        nodes, weights = _gauss_rule(n)
        u = 0.25 * np.pi * (nodes + 1.0)
        val = 0.25 * np.pi * float(weights @ integrand(u)) / np.pi
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        prev = val
        n *= 2
    raise QuadratureError(
        "radial action did not converge with %d nodes (last delta %.3g)"
        % (max_nodes, abs(val - prev))
    )


def frequencies(model, E, L, rel_tol=1e-13):
    """(omega_r, omega_L) from derivatives of the radial action.

    omega_r = (dI_r/dE)^-1 and omega_L = -dI_r/dL * omega_r by implicit
    differentiation of H(I_r(E, L), L) = E.
    """
    lo, hi = model.energy_window(L)
    span = (hi - lo) if hi is not None else max(E - lo, 1.0)
    hE = min(1e-4 * span, 0.4 * (E - lo))
    if hi is not None:
        hE = min(hE, 0.4 * (hi - E))
    if hE <= 0:
        raise NoBoundMotionError("degenerate energy window at E=%g, L=%g" % (E, L))
    dIdE = (radial_action(model, E + hE, L, rel_tol) -
            radial_action(model, E - hE, L, rel_tol)) / (2 * hE)
    if dIdE <= 0:
        raise NumericalError("dI_r/dE <= 0: near-degenerate Jacobian at E=%g" % E)
    hL = 1e-5 * max(L, 1e-3)
    if hasattr(model, "L_collision"):
        hL = min(hL, 0.4 * (L - model.L_collision))
    dIdL = (radial_action(model, E, L + hL, rel_tol) -
            radial_action(model, E, L - hL, rel_tol)) / (2 * hL)
    omega_r = 1.0 / dIdE
    return omega_r, -dIdL * omega_r


def _reduce_signed(angle, snap_tol=1e-3):
    """Reduce a signed angle to (-2pi, 2pi]; values within snap_tol of -2pi
    (the central holonomy seen from the other branch) map to +2pi."""
    a = np.mod(angle + TWO_PI, FOUR_PI) - TWO_PI  # (-2pi, 2pi]... up to edges
    if a <= -TWO_PI + snap_tol:
        a += FOUR_PI
    return float(a)


def rotation_angle_radial(model, E, L, tol=1e-12, action_rel_tol=1e-12):
    """Spin rotation angle of the radial basis cycle for torus (E, L).

    Runs one radial period from perihelion, accumulating int B dt along the
    flow, and subtracts the frame contribution 2 pi (w_L/w_r) L/|L|.
    """
    p0, x0 = model.torus_point(E, L)
    Lhat = np.cross(x0, p0)
    Lhat = Lhat / np.linalg.norm(Lhat)
    omega_r, omega_L = frequencies(model, E, L, rel_tol=action_rel_tol)
    traj = radial_loop(model, p0, x0, tol=tol, n_periods=1,
                       max_time=10.0 * TWO_PI / omega_r)
    period = traj.event_times[-1]
    loop_integral = traj.field_integral[-1].copy()
    ratio = omega_L / omega_r
    w = loop_integral - TWO_PI * ratio * Lhat
    signed = _reduce_signed(float(w @ Lhat))
    alpha = float(np.mod(np.linalg.norm(w), FOUR_PI))
    return RadialAngle(
        alpha=alpha,
        alpha_signed=signed,
        loop_integral=loop_integral,
        omega_ratio=ratio,
        period=period,
        axis=Lhat,
    )


def angular_rotation_angles(model, E, L, tol=1e-12):
    """Numeric check of the angular-cycle angles, both equal to 2 pi.

    Transport around the L cycle precesses the spin about the constant axis
    L/|L| at unit rate for one 2 pi turn of the conjugate angle; same for the
    M cycle about e_z.  Returns the two numerically accumulated angles.
    """
    p0, x0 = model.torus_point(E, L)
    Lv = np.cross(x0, p0)
    out = []
    for axis in (Lv / np.linalg.norm(Lv), np.array([0.0, 0.0, 1.0])):
        # ds/dt = axis x s over t in [0, 2pi]; accumulated angle about axis
        s = _orthonormal_to(axis)
        ts = np.linspace(0.0, TWO_PI, 2001)
        dt = ts[1] - ts[0]
        angle = 0.0
        for _ in range(len(ts) - 1):
            s_new = _rk4_spin(axis, s, dt)
            angle += _signed_step_angle(s, s_new, axis)
            s = s_new
        out.append(angle)
    return tuple(out)


def _orthonormal_to(axis):
    trial = np.array([1.0, 0.0, 0.0])
    if abs(axis @ trial) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    v = trial - (trial @ axis) * axis
    return v / np.linalg.norm(v)


def _rk4_spin(B, s, dt):
    f = lambda v: np.cross(B, v)
    k1 = f(s)
    k2 = f(s + 0.5 * dt * k1)
    k3 = f(s + 0.5 * dt * k2)
    k4 = f(s + dt * k3)
    s_new = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return s_new / np.linalg.norm(s_new)


def _signed_step_angle(s_old, s_new, axis):
    cross = np.cross(s_old, s_new)
    return float(np.arctan2(cross @ axis, s_old @ s_new))


def consistency_residual(model, E, L, n_samples=64, tol=1e-12):
    """Max-norm residual of B = w_r B_r + w_L B_L along one radial period,
    with B_r = (B - w_L B_L)/w_r from the spherical construction."""
    p0, x0 = model.torus_point(E, L)
    omega_r, omega_L = frequencies(model, E, L)
    traj = radial_loop(model, p0, x0, tol=tol, n_periods=1, with_cocycle=False,
                       max_time=10.0 * TWO_PI / omega_r)
    idx = np.linspace(0, len(traj.t) - 1, n_samples).astype(int)
    worst = 0.0
    for k in idx:
        p, x = traj.p[k], traj.x[k]
        B = model.precession_field(p, x)
        Lv = np.cross(x, p)
        BL = Lv / np.linalg.norm(Lv)
        Br = (B - omega_L * BL) / omega_r
        worst = max(worst, float(np.max(np.abs(B - (omega_r * Br + omega_L * BL)))))
    return worst


def count_radial_turning_points(model, E, L, tol=1e-11):
    """Sign changes of p_r along one radial period (the Maslov count mu_r)."""
    p0, x0 = model.torus_point(E, L)
    omega_r, _ = frequencies(model, E, L)
    traj = radial_loop(model, p0, x0, tol=tol, n_periods=1, with_cocycle=False,
                       max_time=10.0 * TWO_PI / omega_r)
    pr = np.einsum("ij,ij->i", traj.x, traj.p) / np.linalg.norm(traj.x, axis=1)
    # starting and ending exactly at perihelion: zeros at both ends; count
    # interior crossings plus the closing turning point
    inner = pr[1:-1]
    crossings = int(np.sum(np.abs(np.diff(np.sign(inner))) == 2))
    return crossings + 1


def radial_holonomy(model, E, L, tol=1e-12):
    """Transport cocycle around the radial basis cycle of torus (E, L).

    The cycle is one radial period of the physical flow closed by running the
    angular-momentum flow backwards through the accumulated angle w_L * T_r;
    cocycles compose as d(t+t') = d(end of first leg, t') d(start, t).
    Returns (holonomy, radial period).
    """
    from .models import AngularMomentumFlow

    p0, x0 = model.torus_point(E, L)
    omega_r, omega_L = frequencies(model, E, L)
    traj = radial_loop(model, p0, x0, tol=tol, n_periods=1,
                       max_time=10.0 * TWO_PI / omega_r)
    T = traj.event_times[-1]
    d_flow = su2.SU2(traj.q[-1])
    closer = integrate_cocycle(
        AngularMomentumFlow(), traj.p[-1], traj.x[-1], -omega_L * T,
        tol=tol, record=False,
    )
    return (su2.SU2(closer.q[-1]) @ d_flow).renormalized(), T


def angular_holonomy(model, E, L, cycle="L", tol=1e-12):
    """Transport cocycle around one 2 pi turn of the L or M basis cycle."""
    from .models import AngularMomentumFlow, AxialComponentFlow

    flow = AngularMomentumFlow() if cycle == "L" else AxialComponentFlow()
    p0, x0 = model.torus_point(E, L)
    traj = integrate_cocycle(flow, p0, x0, TWO_PI, tol=tol, record=False)
    return su2.SU2(traj.q[-1]).renormalized()


def action_data(model, spec, tol=1e-12):
    """Full ActionData record for a torus (E, L, M)."""
    ra = rotation_angle_radial(model, spec.E, spec.L, tol=tol)
    omega_r, omega_L = frequencies(model, spec.E, spec.L)
    return ActionData(
        I_r=radial_action(model, spec.E, spec.L),
        I_theta=spec.L - spec.M,
        I_phi=spec.M,
        omega_r=omega_r,
        omega_L=omega_L,
        mu_r=2,
        mu_theta=2,
        mu_phi=0,
        alpha_r=ra.alpha,
        alpha_L=TWO_PI,
        alpha_M=TWO_PI,
    )
