"""Numerical verification of commuting skew products.

Two extended flows with generators (A_j, B_j) and (A_k, B_k) commute iff the
base flows commute and the residual

    R = {A_j, B_k} + {B_j, A_k} + B_j x B_k

vanishes, with the canonical bracket {f, g} = sum_i (df/dx_i dg/dp_i -
df/dp_i dg/dx_i).  The sign of the cross term is tied to that bracket
convention; it is fixed here by the requirement that the mixed derivative of
the commutator defect Delta(t, t') at the origin equals -(i/2) sigma.R, which
the test suite checks against direct integration.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.stats import qmc

from . import su2
from .dynamics import integrate_cocycle, integrate_flow
from .errors import NumericalError


def _gradients(obj, p, x, h0=1e-6):
    """(grad_p, grad_x) of a scalar; analytic when the object provides them."""
    if hasattr(obj, "grad_p"):
        return obj.grad_p(p, x), obj.grad_x(p, x)
    d = len(p)
    gp = np.empty(d)
    gx = np.empty(d)
    for i in range(d):
        hp = h0 * (1.0 + abs(p[i]))
        dp = np.zeros(d)
        dp[i] = hp
        gp[i] = (obj(p + dp, x) - obj(p - dp, x)) / (2 * hp)
        hx = h0 * (1.0 + abs(x[i]))
        dx = np.zeros(d)
        dx[i] = hx
        gx[i] = (obj(p, x + dx) - obj(p, x - dx)) / (2 * hx)
    return gp, gx


def poisson_bracket(f, g, p, x):
    """{f, g} at a phase-space point.

    Arguments may be plain callables f(p, x) (finite differences) or objects
    with analytic ``grad_p``/``grad_x`` methods.
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    fp, fx = _gradients(f, p, x)
    gp, gx = _gradients(g, p, x)
    out = float(fx @ gp - fp @ gx)
    if not np.isfinite(out):
        raise NumericalError(
            "non-finite Poisson bracket at p=%s, x=%s" % (p.tolist(), x.tolist())
        )
    return out


def _field_component(flow, i):
    return lambda p, x: flow.precession_field(p, x)[i]


def spin_involution_residual(flow_j, flow_k, p, x):
    """Componentwise residual R of the commutation condition for the pair.

    Each flow carries its generator via ``hamiltonian`` and its precession
    field via ``precession_field``.
    """
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    R = np.empty(3)
    for i in range(3):
        R[i] = poisson_bracket(flow_j, _field_component(flow_k, i), p, x)
        R[i] += poisson_bracket(_field_component(flow_j, i), flow_k, p, x)
    return R + np.cross(flow_j.precession_field(p, x), flow_k.precession_field(p, x))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_phase_points(box, n, seed=0, min_radius=0.0, min_L=0.0,
                        min_alignment=0.02):
    """Quasi-random (Sobol) phase-space points inside a box.

    ``box`` is ((p_lo, p_hi), (x_lo, x_hi)) applied per component.  Points too
    close to the origin, to zero angular momentum, or to the p || x set (where
    |L| is not smooth) are rejected and replaced.
    """
    (p_lo, p_hi), (x_lo, x_hi) = box
    sampler = qmc.Sobol(d=6, scramble=True, seed=seed)
    points = []
    while len(points) < n:
        raw = sampler.random(max(8, 2 * (n - len(points))))
        for row in raw:
            p = p_lo + (p_hi - p_lo) * row[:3]
            x = x_lo + (x_hi - x_lo) * row[3:]
            r = np.linalg.norm(x)
            pn = np.linalg.norm(p)
            if r <= min_radius or pn == 0.0:
                continue
            Lv = np.cross(x, p)
            Ln = np.linalg.norm(Lv)
            if Ln <= min_L or Ln <= min_alignment * r * pn:
                continue
            points.append((p, x))
            if len(points) == n:
                break
    return points


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class PairResiduals:
    pair: str
    max_residual: float
    mean_residual: float
    passed: bool


@dataclass
class InvolutionReport:
    n_points: int
    tolerance: float
    pairs: list
    max_residual: float
    passed: bool

    def to_dict(self):
        return asdict(self)


def involution_report(flows, box, n_points=200, tol=1e-6, seed=0, **sample_kw):
    """Residuals of all off-diagonal pairs from ``flows`` over sampled points."""
    points = sample_phase_points(box, n_points, seed=seed, **sample_kw)
    pair_rows = []
    overall = 0.0
    for a in range(len(flows)):
        for b in range(a + 1, len(flows)):
            res = np.array(
                [
                    np.max(np.abs(spin_involution_residual(flows[a], flows[b], p, x)))
                    for (p, x) in points
                ]
            )
            mx = float(res.max())
            overall = max(overall, mx)
            name_a = getattr(flows[a], "name", flows[a].__class__.__name__)
            name_b = getattr(flows[b], "name", flows[b].__class__.__name__)
            pair_rows.append(
                PairResiduals(
                    pair="%s-%s" % (name_a, name_b),
                    max_residual=mx,
                    mean_residual=float(res.mean()),
                    passed=bool(mx <= tol),
                )
            )
    return InvolutionReport(
        n_points=len(points),
        tolerance=tol,
        pairs=pair_rows,
        max_residual=overall,
        passed=all(row.passed for row in pair_rows),
    )


# ---------------------------------------------------------------------------
# Skew-product commutator Delta(t, t')
# ---------------------------------------------------------------------------

def _flow_endpoint(flow, p, x, t, tol):
    traj = integrate_flow(flow, p, x, t, tol=tol, record=False)
    return traj.p[-1], traj.x[-1]


def _cocycle(flow, p, x, t, tol):
    traj = integrate_cocycle(flow, p, x, t, tol=tol, record=False)
    return su2.SU2(traj.q[-1])


@dataclass
class DeltaResult:
    """Commutator defect of two extended flows at loop times (t, t')."""

    raw: np.ndarray        # quaternion components of the matrix difference
    norm: float            # max-abs component after double-cover sign alignment

    @property
    def norm_raw(self):
        return float(np.max(np.abs(self.raw)))


def skew_commutator_delta(flow_j, flow_k, p, x, t, tp, tol=1e-11):
    """Delta = d_j(phi_k^t z, t') d_k(z, t) - d_k(phi_j^t' z, t) d_j(z, t')."""
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    if t == 0.0 or tp == 0.0:
        return DeltaResult(raw=np.zeros(4), norm=0.0)
    dk_z = _cocycle(flow_k, p, x, t, tol)
    dj_z = _cocycle(flow_j, p, x, tp, tol)
    pk, xk = _flow_endpoint(flow_k, p, x, t, tol)
    pj, xj = _flow_endpoint(flow_j, p, x, tp, tol)
    dj_shift = _cocycle(flow_j, pk, xk, tp, tol)
    dk_shift = _cocycle(flow_k, pj, xj, t, tol)
    first = su2.quat_mul(dj_shift.q, dk_z.q)
    second = su2.quat_mul(dk_shift.q, dj_z.q)
    raw = first - second
    aligned = min(np.max(np.abs(raw)), np.max(np.abs(first + second)))
    return DeltaResult(raw=raw, norm=float(aligned))


def delta_mixed_derivative(flow_j, flow_k, p, x, h=0.05, tol=1e-12):
    """Numeric d^2 Delta / dt dt' (0,0) by a 4-point central difference."""
    vals = {}
    for st in (+1, -1):
        for sp in (+1, -1):
            vals[(st, sp)] = skew_commutator_delta(
                flow_j, flow_k, p, x, st * h, sp * h, tol=tol
            ).raw
    return (vals[(1, 1)] - vals[(1, -1)] - vals[(-1, 1)] + vals[(-1, -1)]) / (
        4.0 * h * h
    )


def predicted_delta_rate(flow_j, flow_k, p, x):
    """The involution residual mapped to the quaternion components of
    -(i/2) sigma.R, i.e. (0, R/2)."""
    R = spin_involution_residual(flow_j, flow_k, p, x)
    return np.concatenate(([0.0], 0.5 * R))


# ---------------------------------------------------------------------------
# Holonomy
# ---------------------------------------------------------------------------

@dataclass
class HolonomyReport:
    commutative: bool
    max_commutator: float
    common_axis: np.ndarray | None
    shared_axis: bool


def holonomy_commutativity(elements, tol=1e-6):
    """Whether a set of loop holonomies generates an Abelian subgroup.

    Also reports the common rotation axis when every non-central element
    rotates about one line (the local invariant direction); central elements
    (+-identity) put no constraint on the axis.
    """
    if not elements:
        raise ValueError("need at least one group element")
    worst = 0.0
    for a in range(len(elements)):
        for b in range(a + 1, len(elements)):
            worst = max(worst, su2.commutator_norm(elements[a], elements[b]))
    axes = []
    for g in elements:
        aa = su2.axis_angle_of(g, degenerate_tol=10 * tol)
        if not aa.degenerate:
            axes.append(aa.axis)
    common = None
    shared = True
    if axes:
        common = axes[0]
        for ax in axes[1:]:
            if abs(abs(ax @ common) - 1.0) > tol:
                shared = False
        if shared:
            common = common.copy()
    return HolonomyReport(
        commutative=bool(worst <= tol),
        max_commutator=float(worst),
        common_axis=common if shared else None,
        shared_axis=bool(shared and axes),
    )
