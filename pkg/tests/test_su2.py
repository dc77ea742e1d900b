"""Group arithmetic, covering map and representation tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebkspin import su2

RNG = np.random.default_rng(20240817)


def random_su2(rng=RNG):
    q = rng.normal(size=4)
    return su2.SU2(q / np.linalg.norm(q))


def test_exp_zero_generator_is_identity():
    g = su2.exp_algebra([0.0, 0.0, 0.0], 1.0)
    assert np.allclose(g.q, [1, 0, 0, 0], atol=0)


def test_exp_z_axis_closed_form():
    b, t = 1.3, 0.9
    g = su2.exp_algebra([0.0, 0.0, b], t)
    assert g.q[0] == pytest.approx(np.cos(b * t / 2), abs=1e-15)
    assert g.q[3] == pytest.approx(np.sin(b * t / 2), abs=1e-15)
    assert g.q[1] == g.q[2] == 0.0


def test_exp_against_series_oracle():
    # independent oracle: truncated series of the 2x2 matrix exponential
    v = np.array([1.0, 1.0, 1.0])
    t = 0.7
    A = sum(-0.5j * v[k] * su2.SIGMA[k] for k in range(3)) * t
    series = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, 40):
        term = term @ A / k
        series = series + term
    got = su2.exp_algebra(v, t).to_matrix()
    assert np.max(np.abs(got - series)) < 1e-14


def test_composition_stays_unit_norm():
    for _ in range(200):
        g = random_su2() @ random_su2()
        assert g.unit_defect() < 1e-12


def test_covering_map_identity_kernel():
    for g in (su2.SU2.identity(), su2.SU2.minus_identity()):
        assert np.allclose(su2.covering_map(g), np.eye(3), atol=1e-15)


def test_covering_map_z_rotation():
    alpha = 0.77
    R = su2.covering_map(su2.exp_algebra([0, 0, 1.0], alpha))
    expect = np.array(
        [
            [np.cos(alpha), -np.sin(alpha), 0],
            [np.sin(alpha), np.cos(alpha), 0],
            [0, 0, 1],
        ]
    )
    assert np.max(np.abs(R - expect)) < 1e-14


def test_covering_map_conjugation_oracle():
    # phi(g) z must match the Pauli-basis expansion of g (z.sigma) g^-1
    for _ in range(50):
        g = random_su2()
        z = RNG.normal(size=3)
        zs = sum(z[k] * su2.SIGMA[k] for k in range(3))
        gm = g.to_matrix()
        conj = gm @ zs @ np.linalg.inv(gm)
        via_matrix = np.array(
            [0.5 * np.trace(conj @ su2.SIGMA[k]).real for k in range(3)]
        )
        assert np.linalg.norm(su2.covering_map(g) @ z - via_matrix) < 1e-10
        assert np.linalg.norm(su2.rotate_vector(g, z) - via_matrix) < 1e-10


def test_covering_map_two_to_one():
    for _ in range(20):
        g = random_su2()
        assert np.max(np.abs(su2.covering_map(g) - su2.covering_map(-g))) < 1e-12


def test_covering_map_rejects_non_unit():
    with pytest.raises(ValueError):
        su2.covering_map(su2.SU2(2.0, 0.0, 0.0, 0.0))


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(-1, 1) for _ in range(8)]))
def test_homomorphism_property(raw):
    qa = np.array(raw[:4])
    qb = np.array(raw[4:])
    if np.linalg.norm(qa) < 1e-3 or np.linalg.norm(qb) < 1e-3:
        return
    g = su2.SU2(qa / np.linalg.norm(qa))
    h = su2.SU2(qb / np.linalg.norm(qb))
    lhs = su2.covering_map(g @ h)
    rhs = su2.covering_map(g) @ su2.covering_map(h)
    assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_axis_angle_z_axis_case():
    theta = 1.1
    aa = su2.axis_angle_of(su2.SU2(np.cos(theta), 0, 0, np.sin(theta)))
    assert np.allclose(aa.axis, [0, 0, 1])
    assert aa.angle == pytest.approx(2 * theta, abs=1e-14)
    assert not aa.degenerate


def test_axis_angle_center_elements():
    aa = su2.axis_angle_of(su2.SU2.minus_identity())
    assert aa.degenerate and aa.angle == pytest.approx(2 * np.pi)
    assert np.allclose(aa.axis, [0, 0, 1])
    aa0 = su2.axis_angle_of(su2.SU2.identity())
    assert aa0.degenerate and aa0.angle == 0.0


def test_axis_angle_round_trip_random():
    for _ in range(100):
        g = random_su2()
        aa = su2.axis_angle_of(g)
        back = su2.from_axis_angle(aa.axis, aa.angle)
        assert np.max(np.abs(back.q - g.q)) < 1e-10


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.01, 4 * np.pi - 0.01),
    st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
)
def test_axis_angle_round_trip_double_cover(alpha, nx, ny, nz):
    # identity on (n, alpha) up to the double-cover identification
    if abs(alpha - 2 * np.pi) < 1e-2:
        return
    n = np.array([nx, ny, nz])
    if np.linalg.norm(n) < 1e-3:
        return
    n = n / np.linalg.norm(n)
    aa = su2.axis_angle_of(su2.from_axis_angle(n, alpha))
    if alpha <= 2 * np.pi:
        assert aa.angle == pytest.approx(alpha, abs=1e-9)
        assert np.linalg.norm(aa.axis - n) < 1e-9
    else:
        # (n, alpha) and (-n, 4 pi - alpha) are the same group element
        assert aa.angle == pytest.approx(4 * np.pi - alpha, abs=1e-9)
        assert np.linalg.norm(aa.axis + n) < 1e-9


def test_signed_angle_about_axis():
    n = np.array([0.0, 0.0, 1.0])
    for alpha in (-1.3, 0.4, 2.8, -2.9):
        g = su2.from_axis_angle(n, alpha)
        assert su2.signed_angle_about(g, n) == pytest.approx(alpha, abs=1e-12)
    assert su2.signed_angle_about(su2.SU2.minus_identity(), n) == pytest.approx(
        2 * np.pi
    )
    with pytest.raises(ValueError):
        su2.signed_angle_about(su2.from_axis_angle([1, 0, 0], 1.0), n)


# -- spin-s representations --------------------------------------------------

def test_spin_half_matches_defining_rep():
    for _ in range(20):
        g = random_su2()
        phases = su2.spin_rep_eigenphases(0.5, g)
        direct = np.linalg.eigvals(g.to_matrix())
        assert _multiset_close(phases, direct, 1e-10)


def test_spin_one_pi_rotation():
    g = su2.exp_algebra([0, 0, np.pi], 1.0)  # exp(-(i/2) pi sigma_3)... angle pi
    # rotation angle pi about z; eigenphases exp(-i m pi) = {-1, 1, -1}
    phases = su2.spin_rep_eigenphases(1.0, g)
    expect = [np.exp(-1j * m * np.pi) for m in (-1, 0, 1)]
    assert _multiset_close(phases, expect, 1e-12)
    assert _multiset_close(phases, [-1.0, 1.0, -1.0], 1e-12)
    # explicit 3x3 representation matrix agrees
    direct = np.linalg.eigvals(su2.spin_rep_matrix(1.0, g))
    assert _multiset_close(direct, expect, 1e-12)


def test_spin_zero_trivial():
    for _ in range(5):
        assert np.allclose(su2.spin_rep_eigenphases(0.0, random_su2()), [1.0])


def _multiset_close(a, b, tol):
    # greedy nearest matching; robust against sort-order ties on the circle
    b = list(np.asarray(b, dtype=complex))
    for za in np.asarray(a, dtype=complex):
        k = int(np.argmin([abs(za - zb) for zb in b]))
        if abs(za - b[k]) >= tol:
            return False
        b.pop(k)
    return not b


@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0])
def test_eigenphase_consistency_both_paths(s):
    for _ in range(10):
        g = random_su2()
        from_formula = su2.spin_rep_eigenphases(s, g)
        from_matrix = np.linalg.eigvals(su2.spin_rep_matrix(s, g))
        assert _multiset_close(from_formula, from_matrix, 1e-8)


def test_spin_rep_unitarity():
    for s in (0.5, 1.0, 1.5):
        g = random_su2()
        U = su2.spin_rep_matrix(s, g)
        dim = int(2 * s + 1)
        assert np.max(np.abs(U @ U.conj().T - np.eye(dim))) < 1e-12


def test_spin_validation():
    g = su2.SU2.identity()
    with pytest.raises(ValueError):
        su2.spin_rep_eigenphases(-0.5, g)
    with pytest.raises(ValueError):
        su2.spin_rep_eigenphases(0.3, g)
