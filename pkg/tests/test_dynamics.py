"""Integrator, cocycle and spin-precession tests."""

import numpy as np
import pytest

from ebkspin import su2
from ebkspin.dynamics import (
    HamiltonianModel,
    PhasePoint,
    SkewState,
    evolve_skew,
    flow_jacobian_det,
    integrate_cocycle,
    integrate_flow,
    integrate_skew,
    precess_spin,
    radial_loop,
)
from ebkspin.errors import CollisionError
from ebkspin.models import HOModel, KeplerModel

RNG = np.random.default_rng(7)


class FreeParticle(HamiltonianModel):
    def hamiltonian(self, p, x):
        return 0.5 * (p @ p)

    def grad_p(self, p, x):
        return p.copy()

    def grad_x(self, p, x):
        return np.zeros(3)


class ConstantField(FreeParticle):
    """Free motion with a constant precession field."""

    def __init__(self, b):
        self.b = np.asarray(b, dtype=float)

    def precession_field(self, p, x):
        return self.b.copy()


def test_free_particle_ballistic():
    traj = integrate_flow(FreeParticle(), [1.0, 0, 0], [0.0, 0, 0], 2.0, tol=1e-12)
    assert np.allclose(traj.x[-1], [2.0, 0, 0], atol=1e-12)
    assert np.allclose(traj.p[-1], [1.0, 0, 0], atol=1e-14)


def test_oscillator_period_returns_to_start():
    ho = HOModel(m=1.0, omega=1.3, kappa=0.0)
    p0, x0 = np.array([0.2, 0.7, -0.1]), np.array([0.5, -0.3, 0.9])
    traj = integrate_flow(ho, p0, x0, 2 * np.pi / 1.3, tol=1e-12)
    assert np.linalg.norm(traj.x[-1] - x0) < 1e-8
    assert np.linalg.norm(traj.p[-1] - p0) < 1e-8


def test_zero_time_single_row():
    traj = integrate_flow(FreeParticle(), [1.0, 0, 0], [0.0, 0, 0], 0.0)
    assert len(traj.t) == 1


def test_kepler_orbit_matches_rosette():
    model = KeplerModel(alpha=0.25)
    L = 1.0
    lo, hi = model.energy_window(L)
    E = lo + 0.55 * (hi - lo)  # generic bound torus
    p0, x0 = model.torus_point(E, L)
    const = model.orbit_constants(E, L)
    traj = radial_loop(model, p0, x0, tol=1e-12, n_periods=1, with_cocycle=False)
    phi = np.unwrap(np.arctan2(traj.x[:, 1], traj.x[:, 0]))
    u = 1.0 / np.linalg.norm(traj.x, axis=1)
    u_pred = const.C + const.A * np.cos(const.gamma * phi)
    assert np.max(np.abs(u - u_pred) / u) < 1e-6


def test_energy_drift_budget_ten_radial_periods():
    tol = 1e-10
    for model, (E, L) in (
        (KeplerModel(alpha=0.25), (0.99, 1.0)),
        (HOModel(kappa=0.1), (3.1, 2.3)),
    ):
        p0, x0 = model.torus_point(E, L)
        traj = radial_loop(model, p0, x0, tol=tol, n_periods=10,
                           with_cocycle=False, max_time=1e6)
        drift = traj.stats.max_energy_drift
        assert drift <= 100 * tol * abs(model.hamiltonian(p0, x0))


def test_cocycle_zero_field_is_identity():
    traj = integrate_cocycle(FreeParticle(), [0.3, 0.1, 0], [0, 0.2, 0], 5.0)
    assert np.max(np.abs(traj.q[-1] - [1, 0, 0, 0])) < 1e-12


def test_cocycle_constant_field_closed_form():
    b = np.array([0.4, -0.2, 0.5])
    t = 3.7
    traj = integrate_cocycle(ConstantField(b), [0.1, 0, 0], [0, 0, 0], t, tol=1e-12)
    expect = su2.exp_algebra(b, t)
    assert np.max(np.abs(traj.q[-1] - expect.q)) < 1e-10


def test_cocycle_unitarity_defect_per_step():
    tol = 1e-10
    model = KeplerModel(alpha=0.25)
    p0, x0 = model.torus_point(0.97, 1.0)
    traj = integrate_cocycle(model, p0, x0, 200.0, tol=tol)
    assert traj.stats.max_unitarity_defect <= 10 * tol


def test_cocycle_composition_law():
    model = KeplerModel(alpha=0.25)
    p0, x0 = model.torus_point(0.97, 1.0)
    for t1, t2 in ((10.0, 17.3), (40.0, 3.1), (1.0, 1.0)):
        full = integrate_cocycle(model, p0, x0, t1 + t2, tol=1e-12, record=False)
        first = integrate_cocycle(model, p0, x0, t1, tol=1e-12, record=False)
        second = integrate_cocycle(
            model, first.p[-1], first.x[-1], t2, tol=1e-12, record=False
        )
        lhs = su2.SU2(full.q[-1])
        rhs = su2.SU2(second.q[-1]) @ su2.SU2(first.q[-1])
        assert lhs.distance(rhs) < 1e-7


def test_spin_constant_when_field_zero():
    s0 = np.array([0.0, 0.6, 0.8])
    traj = precess_spin(FreeParticle(), [0.2, 0, 0], [0, 0, 0], s0, 8.0)
    assert np.max(np.abs(traj.s - s0)) < 1e-12


def test_spin_parallel_to_field_is_fixed():
    b = np.array([0.0, 0.0, 0.9])
    traj = precess_spin(ConstantField(b), [0.1, 0, 0], [0, 0, 0],
                        [0.0, 0.0, 1.0], 11.0, tol=1e-12)
    assert np.max(np.abs(traj.s - [0, 0, 1.0])) < 1e-11


def test_spin_requires_unit_vector():
    with pytest.raises(ValueError):
        precess_spin(FreeParticle(), [0.1, 0, 0], [0, 0, 0], [0.0, 0.0, 2.0], 1.0)


@pytest.mark.parametrize(
    "model,E,L",
    [(KeplerModel(alpha=0.25), 0.98, 1.0), (HOModel(kappa=0.17), 3.1, 2.3)],
)
def test_covering_map_consistency_along_trajectory(model, E, L):
    # spin transported by the cocycle must equal the directly precessed spin
    p0, x0 = model.torus_point(E, L)
    s0 = np.array([0.6, -0.64, 0.48])
    s0 /= np.linalg.norm(s0)
    traj = integrate_skew(model, p0, x0, 150.0, tol=1e-11, s0=s0)
    worst = 0.0
    for k in range(0, len(traj.t), 5):
        worst = max(
            worst,
            np.linalg.norm(su2.rotate_vector(traj.cocycle_at(k), s0) - traj.s[k]),
        )
    assert worst < 1e-7


def test_evolve_skew_identity_at_zero_time():
    model = HOModel(kappa=0.1)
    p0, x0 = model.torus_point(2.0, 1.0)
    state = SkewState(PhasePoint(p0, x0), su2.SU2.identity(), np.array([0, 0, 1.0]))
    out = evolve_skew(model, state, 0.0)
    assert np.allclose(out.phase.p, p0) and np.allclose(out.phase.x, x0)
    assert np.allclose(out.cocycle.q, state.cocycle.q)
    assert np.allclose(out.spin, state.spin)


def test_evolve_skew_flow_property():
    model = HOModel(kappa=0.17)
    p0, x0 = model.torus_point(3.1, 2.3)
    s0 = np.array([0.0, 0.6, 0.8])
    state = SkewState(PhasePoint(p0, x0), su2.SU2.identity(), s0)
    t1, t2 = 1.7, 2.9
    one = evolve_skew(model, evolve_skew(model, state, t1, tol=1e-12), t2, tol=1e-12)
    two = evolve_skew(model, state, t1 + t2, tol=1e-12)
    assert np.linalg.norm(one.phase.p - two.phase.p) < 1e-7
    assert np.linalg.norm(one.phase.x - two.phase.x) < 1e-7
    assert one.cocycle.distance(two.cocycle) < 1e-7
    assert np.linalg.norm(one.spin - two.spin) < 1e-7


def test_circular_orbit_precession_angle():
    # closed-form loop angle per revolution on a circular relativistic orbit:
    # |B| T_phi = 2 pi e^2 / ((E + mc^2) r0 + e^2)
    model = KeplerModel(alpha=0.25)
    L = 1.0
    E, r0 = model.circular_orbit(L)
    eps = E + model.e2 / r0
    phidot = model.c**2 * L / (eps * r0**2)
    T_phi = 2 * np.pi / phidot
    expect = 2 * np.pi * model.e2 / ((E + model.mc2) * r0 + model.e2)

    p0 = np.array([0.0, L / r0, 0.0])
    x0 = np.array([r0, 0.0, 0.0])
    traj = integrate_cocycle(model, p0, x0, T_phi, tol=1e-12, record=False)
    angle = su2.signed_angle_about(su2.SU2(traj.q[-1]), np.array([0, 0, 1.0]))
    assert angle == pytest.approx(expect, abs=1e-9)
    # r stays constant on the circular orbit
    assert abs(np.linalg.norm(traj.x[-1]) - r0) < 1e-9


def test_liouville_volume_preservation():
    model = HOModel(kappa=0.0)
    p0, x0 = model.torus_point(2.7, 1.4)
    det = flow_jacobian_det(model, p0, x0, np.pi / model.omega, tol=1e-12)
    assert abs(det - 1.0) < 1e-4
    kep = KeplerModel(alpha=0.25)
    p0, x0 = kep.torus_point(0.97, 1.0)
    T = radial_loop(kep, p0, x0, tol=1e-11, n_periods=1).event_times[-1]
    det = flow_jacobian_det(kep, p0, x0, T, tol=1e-12)
    assert abs(det - 1.0) < 1e-4


def test_kepler_collision_guard():
    model = KeplerModel(alpha=0.25)
    # radial infall: no angular momentum, falls into the guarded region
    with pytest.raises(CollisionError) as err:
        integrate_flow(model, [0.0, 0.0, 0.0], [0.05, 0.0, 0.0], 50.0)
    assert "t=" in str(err.value)


def test_trajectory_csv_export(tmp_path):
    model = HOModel(kappa=0.1)
    p0, x0 = model.torus_point(2.0, 1.0)
    traj = integrate_skew(model, p0, x0, 1.0, tol=1e-9)
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,x3,p1,p2,p3,q0,q1,q2,q3,s1,s2,s3"
    assert len(lines) == len(traj.t) + 1
