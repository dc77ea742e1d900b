"""Hamiltonian flows, spin transport, and the combined skew-product evolution.

State layout for the coupled system is ``[p (d), x (d), q (4), s (3), F (3)]``
where q is the transport cocycle as a quaternion, s the classical spin vector
and F the running time integral of the precession field along the orbit.  The
cocycle obeys

    q' = (0, B/2) * q        (quaternion product, B the precession field)

which is the quaternion form of  d' + (i/2) sigma.B d = 0,  and the spin obeys
s' = B x s.  A single adaptive Dormand-Prince 5(4) stepper drives everything;
unit-norm constraints on q and s are restored by projection after each
accepted step, and the pre-projection defect per step is tracked as an
integrator statistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import su2
from .errors import CollisionError, PeriodDetectionError, StepSizeUnderflow

# Dormand-Prince 5(4) tableau (FSAL)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


class HamiltonianModel:
    """Capabilities a phase-space flow must expose.

    Subclasses override ``hamiltonian`` (and ideally the analytic gradients
    and ``precession_field``); the base class supplies central-difference
    gradients with step h = 1e-6 * (1 + |coordinate|) and a zero field.
    """

    dim = 3
    hbar = 1.0
    fd_step = 1e-6

    def hamiltonian(self, p, x):
        raise NotImplementedError

    def grad_p(self, p, x):
        g = np.empty(self.dim)
        for i in range(self.dim):
            h = self.fd_step * (1.0 + abs(p[i]))
            dp = np.zeros(self.dim)
            dp[i] = h
            g[i] = (self.hamiltonian(p + dp, x) - self.hamiltonian(p - dp, x)) / (2 * h)
        return g

    def grad_x(self, p, x):
        g = np.empty(self.dim)
        for i in range(self.dim):
            h = self.fd_step * (1.0 + abs(x[i]))
            dx = np.zeros(self.dim)
            dx[i] = h
            g[i] = (self.hamiltonian(p, x + dx) - self.hamiltonian(p, x - dx)) / (2 * h)
        return g

    def precession_field(self, p, x):
        return np.zeros(3)

    def guard(self, p, x):
        """Raise CollisionError for states outside the trusted region."""


@dataclass(frozen=True)
class PhasePoint:
    p: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


@dataclass(frozen=True)
class SkewState:
    """Point of the combined flow: phase point, cocycle, classical spin."""

    phase: PhasePoint
    cocycle: su2.SU2
    spin: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "spin", np.asarray(self.spin, dtype=float))


@dataclass
class IntegratorStats:
    n_steps: int = 0
    n_rejected: int = 0
    max_energy_drift: float = 0.0
    max_unitarity_defect: float = 0.0
    max_spin_defect: float = 0.0


@dataclass
class Trajectory:
    """Samples (t_k, state_k) of one integration, strictly increasing in t."""

    t: np.ndarray
    p: np.ndarray
    x: np.ndarray
    q: np.ndarray | None = None
    s: np.ndarray | None = None
    field_integral: np.ndarray | None = None
    stats: IntegratorStats = field(default_factory=IntegratorStats)
    event_times: list = field(default_factory=list)

    def cocycle_at(self, k):
        return su2.SU2(self.q[k])

    def to_csv(self, path):
        """Write t, x, p, quaternion and spin columns (17 significant digits)."""
        d = self.x.shape[1]
        cols = ["t"]
        cols += ["x%d" % (i + 1) for i in range(d)]
        cols += ["p%d" % (i + 1) for i in range(d)]
        if self.q is not None:
            cols += ["q0", "q1", "q2", "q3"]
        if self.s is not None:
            cols += ["s1", "s2", "s3"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for k in range(len(self.t)):
                row = [self.t[k]]
                row += list(self.x[k])
                row += list(self.p[k])
                if self.q is not None:
                    row += list(self.q[k])
                if self.s is not None:
                    row += list(self.s[k])
                fh.write(",".join("%.17g" % v for v in row) + "\n")


class _System:
    """Packs/unpacks the coupled ODE state and evaluates its derivative."""

    def __init__(self, model, with_cocycle, with_spin):
        self.model = model
        self.d = model.dim
        self.with_cocycle = with_cocycle
        self.with_spin = with_spin
        n = 2 * self.d
        self.iq = n if with_cocycle else None
        n += 4 if with_cocycle else 0
        self.ispin = n if with_spin else None
        n += 3 if with_spin else 0
        self.iF = n if with_cocycle else None
        n += 3 if with_cocycle else 0
        self.size = n

    def pack(self, p, x, q=None, s=None):
        y = np.zeros(self.size)
        y[: self.d] = p
        y[self.d : 2 * self.d] = x
        if self.with_cocycle:
            y[self.iq : self.iq + 4] = q if q is not None else (1.0, 0.0, 0.0, 0.0)
        if self.with_spin:
            y[self.ispin : self.ispin + 3] = s
        return y

    def split(self, y):
        p = y[: self.d]
        x = y[self.d : 2 * self.d]
        q = y[self.iq : self.iq + 4] if self.with_cocycle else None
        s = y[self.ispin : self.ispin + 3] if self.with_spin else None
        return p, x, q, s

    def rhs(self, t, y):
        m = self.model
        p, x, q, s = self.split(y)
        m.guard(p, x)
        dy = np.empty(self.size)
        dy[: self.d] = -m.grad_x(p, x)
        dy[self.d : 2 * self.d] = m.grad_p(p, x)
        if self.with_cocycle or self.with_spin:
            B = m.precession_field(p, x)
        if self.with_cocycle:
            dy[self.iq : self.iq + 4] = su2.quat_mul(
                np.concatenate(([0.0], 0.5 * B)), q
            )
            dy[self.iF : self.iF + 3] = B
        if self.with_spin:
            dy[self.ispin : self.ispin + 3] = np.cross(B, s)
        return dy

    def project(self, y, stats):
        """Restore |q| = |s| = 1; record the pre-projection defects."""
        if self.with_cocycle:
            q = y[self.iq : self.iq + 4]
            defect = abs(q @ q - 1.0)
            if defect > stats.max_unitarity_defect:
                stats.max_unitarity_defect = defect
            y[self.iq : self.iq + 4] = q / np.sqrt(q @ q)
        if self.with_spin:
            s = y[self.ispin : self.ispin + 3]
            defect = abs(s @ s - 1.0)
            if defect > stats.max_spin_defect:
                stats.max_spin_defect = defect
            y[self.ispin : self.ispin + 3] = s / np.sqrt(s @ s)


def _rk_step(f, t, y, h, k1=None):
    """One DP5(4) step; returns (y5, error_estimate, k_last)."""
    k = [None] * 7
    k[0] = k1 if k1 is not None else f(t, y)
    for i in range(1, 7):
        yi = y + h * sum(a * k[j] for j, a in enumerate(_A[i]))
        k[i] = f(t + _C[i] * h, yi)
    y5 = y + h * sum(b * k[j] for j, b in enumerate(_B5) if b != 0.0)
    y4 = y + h * sum(b * k[j] for j, b in enumerate(_B4) if b != 0.0)
    return y5, y5 - y4, k[6]


def _integrate(
    system,
    y0,
    t_final,
    tol,
    record=True,
    event=None,
    event_direction=1,
    stop_after_events=None,
    max_steps=2_000_000,
):
    """Adaptive driver.  ``event`` is a scalar function g(t, y); crossings of
    zero in the requested direction are located to high accuracy by bisection
    on single sub-steps from the last accepted state."""
    f = system.rhs
    stats = IntegratorStats()
    t = 0.0
    y = np.asarray(y0, dtype=float).copy()
    direction = 1.0 if t_final >= 0 else -1.0
    span = abs(t_final)
    if span == 0.0:
        return [0.0], [y], stats, []

    ts = [0.0]
    ys = [y.copy()]
    events = []

    # initial step from the derivative scale
    k1 = f(t, y)
    scale = tol + tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale) ** 2))
    h = direction * min(span, 1e-2 * span if d1 == 0 else max(1e-10, 0.01 * d0 / d1))
    g_prev = event(t, y) if event is not None else None

    steps = 0
    while direction * (t_final - t) > 0:
        if steps >= max_steps:
            raise StepSizeUnderflow(t, "step budget exhausted at t=%g" % t)
        steps += 1
        if direction * (t + h - t_final) > 0:
            h = t_final - t
        try:
            y_new, err, k_last = _rk_step(f, t, y, h, k1)
        except CollisionError as exc:
            raise CollisionError("%s (while stepping at t=%g)" % (exc, t)) from exc
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2))
        if err_norm <= 1.0:
            t_prev, y_prev = t, y
            t = t + h
            y = y_new
            system.project(y, stats)
            stats.n_steps += 1
            k1 = f(t, y)  # projection invalidates FSAL reuse
            if event is not None:
                g_new = event(t, y)
                if (
                    g_prev is not None
                    and g_prev * g_new < 0
                    and np.sign(g_new - g_prev) == event_direction
                ):
                    t_ev = _locate_event(
                        f, system, event, t_prev, y_prev, t - t_prev, g_prev
                    )
                    events.append(t_ev)
                    if stop_after_events and len(events) >= stop_after_events:
                        # land exactly on the event
                        y_ev, _, _ = _rk_step(f, t_prev, y_prev, t_ev - t_prev)
                        system.project(y_ev, stats)
                        if record:
                            ts.append(t_ev)
                            ys.append(y_ev.copy())
                        return ts, ys, stats, events
                g_prev = g_new
            if record:
                ts.append(t)
                ys.append(y.copy())
        else:
            stats.n_rejected += 1
        # PI-free standard controller
        factor = 0.9 * err_norm ** (-0.2) if err_norm > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
        if abs(h) < 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(t)
    if not record:
        ts = [ts[0], t]
        ys = [ys[0], y]
    return ts, ys, stats, events


def _locate_event(f, system, event, t0, y0, h, g0):
    """Bisection on tau in (0, h] using single RK sub-steps from (t0, y0)."""

    def g_at(tau):
        if tau == 0.0:
            return g0
        y_tau, _, _ = _rk_step(f, t0, y0, tau)
        return event(t0 + tau, y_tau)

    lo, hi = 0.0, h
    g_lo = g0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = g_at(mid)
        if g_lo * g_mid <= 0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
        if abs(hi - lo) < 1e-13 * max(1.0, abs(t0) + abs(h)):
            break
    return t0 + 0.5 * (lo + hi)


def _run(model, p0, x0, t_final, tol, with_cocycle, with_spin, s0=None, q0=None,
         record=True, event=None, stop_after_events=None):
    system = _System(model, with_cocycle, with_spin)
    y0 = system.pack(np.asarray(p0, float), np.asarray(x0, float),
                     q=None if q0 is None else q0.q, s=s0)
    ts, ys, stats, events = _integrate(
        system, y0, t_final, tol, record=record, event=event,
        stop_after_events=stop_after_events,
    )
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    d = system.d
    traj = Trajectory(
        t=ts,
        p=ys[:, :d],
        x=ys[:, d : 2 * d],
        q=ys[:, system.iq : system.iq + 4] if with_cocycle else None,
        s=ys[:, system.ispin : system.ispin + 3] if with_spin else None,
        field_integral=(
            ys[:, system.iF : system.iF + 3] if with_cocycle else None
        ),
        stats=stats,
        event_times=list(events),
    )
    h0 = model.hamiltonian(traj.p[0], traj.x[0])
    h1 = model.hamiltonian(traj.p[-1], traj.x[-1])
    stats.max_energy_drift = abs(h1 - h0)
    return traj


def integrate_flow(model, p0, x0, t_final, tol=1e-10, record=True):
    """Hamiltonian flow only; energy drift is reported in ``stats``."""
    return _run(model, p0, x0, t_final, tol, False, False, record=record)


def integrate_cocycle(model, p0, x0, t_final, tol=1e-10, record=True):
    """Phase flow plus the SU(2) transport cocycle, d(0) = identity."""
    return _run(model, p0, x0, t_final, tol, True, False, record=record)


def precess_spin(model, p0, x0, s0, t_final, tol=1e-10, record=True):
    """Phase flow plus classical spin precession s' = B x s."""
    s0 = np.asarray(s0, dtype=float)
    if abs(s0 @ s0 - 1.0) > 1e-10:
        raise ValueError("initial spin must be a unit vector")
    return _run(model, p0, x0, t_final, tol, False, True, s0=s0, record=record)


def integrate_skew(model, p0, x0, t_final, tol=1e-10, s0=None, q0=None,
                   record=True):
    """Full system (phase, cocycle, spin) in one run."""
    if s0 is None:
        s0 = np.array([0.0, 0.0, 1.0])
    return _run(model, p0, x0, t_final, tol, True, True,
                s0=np.asarray(s0, float), q0=q0, record=record)


def evolve_skew(model, state, t_final, tol=1e-10):
    """Advance a SkewState under the combined flow Y^t."""
    traj = _run(
        model, state.phase.p, state.phase.x, t_final, tol, True, True,
        s0=state.spin, q0=None, record=False,
    )
    # the freshly integrated cocycle left-multiplies the incoming one
    q = su2.SU2(traj.q[-1]) @ state.cocycle
    s = su2.rotate_vector(su2.SU2(traj.q[-1]), state.spin)
    return SkewState(
        phase=PhasePoint(traj.p[-1], traj.x[-1]),
        cocycle=q.renormalized(),
        spin=s / np.linalg.norm(s),
    )


def _radial_rate(model):
    def rdot(t, y):
        d = model.dim
        p, x = y[:d], y[d : 2 * d]
        r = np.linalg.norm(x)
        return float(x @ model.grad_p(p, x)) / r

    return rdot


def radial_loop(model, p0, x0, tol=1e-11, n_periods=1, max_time=None,
                with_cocycle=True):
    """Integrate from a perihelion through ``n_periods`` full radial cycles.

    Period passages are located as sign changes - to + of dr/dt.  Returns the
    trajectory ending exactly at the last passage; the period is
    event_times[-1] / n_periods for a strictly periodic radial motion.
    """
    system = _System(model, with_cocycle, False)
    y0 = system.pack(np.asarray(p0, float), np.asarray(x0, float))
    if max_time is None:
        max_time = 1e7
    rdot = _radial_rate(model)
    ts, ys, stats, events = _integrate(
        system, y0, max_time, tol, record=True,
        event=rdot, event_direction=1, stop_after_events=n_periods,
    )
    if len(events) < n_periods:
        raise PeriodDetectionError(
            "found %d perihelion passages within t=%g, needed %d"
            % (len(events), max_time, n_periods)
        )
    ts = np.asarray(ts)
    ys = np.asarray(ys)
    d = system.d
    return Trajectory(
        t=ts,
        p=ys[:, :d],
        x=ys[:, d : 2 * d],
        q=ys[:, system.iq : system.iq + 4] if with_cocycle else None,
        field_integral=ys[:, system.iF : system.iF + 3] if with_cocycle else None,
        stats=stats,
        event_times=list(events),
    )


def flow_jacobian_det(model, p0, x0, t_final, tol=1e-12, h=1e-6):
    """det of the flow map's Jacobian by central differences (Liouville check)."""
    d = model.dim
    z0 = np.concatenate([np.asarray(p0, float), np.asarray(x0, float)])
    cols = []
    for i in range(2 * d):
        dz = np.zeros(2 * d)
        dz[i] = h * (1.0 + abs(z0[i]))
        zp = z0 + dz
        zm = z0 - dz
        tp = integrate_flow(model, zp[:d], zp[d:], t_final, tol, record=False)
        tm = integrate_flow(model, zm[:d], zm[d:], t_final, tol, record=False)
        fp = np.concatenate([tp.p[-1], tp.x[-1]])
        fm = np.concatenate([tm.p[-1], tm.x[-1]])
        cols.append((fp - fm) / (2 * dz[i]))
    return float(np.linalg.det(np.array(cols).T))
