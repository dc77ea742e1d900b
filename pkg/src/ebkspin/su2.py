"""SU(2) group arithmetic, the covering map to SO(3), and spin-s irreps.

Group elements are stored as unit quaternions (q0, q1, q2, q3) encoding

    g = q0*1 - i*(q1*sigma_1 + q2*sigma_2 + q3*sigma_3),

which is an algebra isomorphism onto Hamilton's quaternions, so composition
is the ordinary quaternion product.  With this sign convention

    exp_algebra(n, alpha) = exp(-(i/2)*alpha*sigma.n)

maps under the covering map to the right-handed rotation by +alpha about n.
Rotation angles live on the double cover and are measured modulo 4*pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_UNIT_TOL = 1e-12

SIGMA = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


class SU2:
    """Unit quaternion wrapper; immutable by convention."""

    __slots__ = ("q",)

    def __init__(self, q0, q1=None, q2=None, q3=None):
        if q1 is None:
            self.q = np.asarray(q0, dtype=float).copy()
        else:
            self.q = np.array([q0, q1, q2, q3], dtype=float)
        if self.q.shape != (4,):
            raise ValueError("SU2 needs exactly four real components")

    @staticmethod
    def identity():
        return SU2(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def minus_identity():
        return SU2(-1.0, 0.0, 0.0, 0.0)

    @property
    def scalar(self):
        return self.q[0]

    @property
    def vector(self):
        return self.q[1:]

    def norm(self):
        return float(np.sqrt(self.q @ self.q))

    def unit_defect(self):
        """|q.q - 1|, the violation of the group constraint."""
        return abs(float(self.q @ self.q) - 1.0)

    def renormalized(self):
        return SU2(self.q / self.norm())

    def inverse(self):
        # conjugate of a unit quaternion
        return SU2(self.q[0], -self.q[1], -self.q[2], -self.q[3])

    def __neg__(self):
        return SU2(-self.q)

    def __matmul__(self, other):
        return SU2(quat_mul(self.q, other.q))

    def __repr__(self):
        return "SU2(%r)" % (self.q.tolist(),)

    def to_matrix(self):
        """The 2x2 complex matrix q0*1 - i q.sigma."""
        m = self.q[0] * np.eye(2, dtype=complex)
        for k in range(3):
            m = m - 1.0j * self.q[1 + k] * SIGMA[k]
        return m

    def distance(self, other):
        """Max component difference, modulo the double-cover sign."""
        d1 = np.max(np.abs(self.q - other.q))
        d2 = np.max(np.abs(self.q + other.q))
        return float(min(d1, d2))


@dataclass(frozen=True)
class AxisAngle:
    """Axis-angle data of a group element; ``degenerate`` flags +-identity,
    where the axis is an arbitrary canonical (0,0,1)."""

    axis: np.ndarray
    angle: float
    degenerate: bool = False


def quat_mul(a, b):
    """Hamilton product of two 4-vectors (not necessarily unit)."""
    a0, av = a[0], a[1:]
    b0, bv = b[0], b[1:]
    out = np.empty(4)
    out[0] = a0 * b0 - av @ bv
    out[1:] = a0 * bv + b0 * av + np.cross(av, bv)
    return out


def exp_algebra(v, t=1.0):
    """exp(-(i/2) sigma.v t) as a group element.

    Total function: v = 0 gives the identity.  The rotation implemented on
    spin vectors is right-handed by angle |v|t about v/|v|.
    """
    v = np.asarray(v, dtype=float)
    theta = float(np.linalg.norm(v)) * t / 2.0
    if theta == 0.0:
        return SU2.identity()
    axis = v / np.linalg.norm(v)
    return SU2(np.concatenate(([np.cos(theta)], np.sin(theta) * axis)))


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("axis must be nonzero")
    return exp_algebra(axis / n, angle)


def _require_unit(g):
    if g.unit_defect() > 1e-9:
        raise ValueError(
            "group element violates the unit-norm invariant: |q|^2 - 1 = %g"
            % (g.unit_defect(),)
        )


def covering_map(g):
    """Rotation matrix R with R z . sigma = g (z.sigma) g^-1 for all z.

    Two-to-one: covering_map(-g) == covering_map(g).
    """
    _require_unit(g)
    w, x, y, z = g.q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rotate_vector(g, v):
    """Apply covering_map(g) to a 3-vector without building the matrix."""
    w = g.q[0]
    u = g.q[1:]
    v = np.asarray(v, dtype=float)
    # q v q^-1 for unit quaternions, expanded
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def axis_angle_of(g, degenerate_tol=1e-12):
    """Extract (axis, angle) with angle in [0, 2*pi].

    Angles in (2*pi, 4*pi) are represented as (4*pi - angle, -axis), which is
    the same group element; callers needing a specific 4*pi branch reduce the
    angle themselves.  +-identity is flagged degenerate with axis (0,0,1) and
    angle 0 (for +1) or 2*pi (for -1).
    """
    _require_unit(g)
    vec_norm = float(np.linalg.norm(g.vector))
    if vec_norm <= degenerate_tol:
        angle = 0.0 if g.scalar > 0 else 2.0 * np.pi
        return AxisAngle(axis=np.array([0.0, 0.0, 1.0]), angle=angle, degenerate=True)
    angle = 2.0 * np.arctan2(vec_norm, g.scalar)
    return AxisAngle(axis=g.vector / vec_norm, angle=float(angle), degenerate=False)


def signed_angle_about(g, axis, central_tol=1e-9):
    """Rotation angle of g about the given reference axis, sign included.

    Valid when g lies in the one-parameter subgroup generated by ``axis`` (its
    quaternion vector part is parallel to the axis).  Central elements return
    0 (identity) or 2*pi (minus identity) regardless of axis.  The result is
    reduced to (-2*pi, 2*pi].
    """
    _require_unit(g)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    vec_norm = float(np.linalg.norm(g.vector))
    if vec_norm <= central_tol:
        return 0.0 if g.scalar > 0 else 2.0 * np.pi
    proj = float(g.vector @ axis)
    perp = float(np.linalg.norm(g.vector - proj * axis))
    if perp > 1e-6 * vec_norm + central_tol:
        raise ValueError("element does not rotate about the reference axis")
    angle = 2.0 * np.arctan2(proj, g.scalar)  # in (-2*pi, 2*pi]
    if angle <= -2.0 * np.pi:
        angle += 4.0 * np.pi
    return float(angle)


def reduce_angle(alpha):
    """Reduce an angle to the fundamental double-cover range [0, 4*pi)."""
    return float(np.mod(alpha, 4.0 * np.pi))


def commutator_norm(a, b):
    """Max component of a@b - b@a in the quaternion representation."""
    return float(np.max(np.abs(quat_mul(a.q, b.q) - quat_mul(b.q, a.q))))


def _check_spin(s):
    two_s = 2.0 * s
    if s < 0 or abs(two_s - round(two_s)) > 1e-12:
        raise ValueError("spin must be a nonnegative half-integer, got %r" % (s,))
    return int(round(two_s))


def spin_matrices(s):
    """Angular-momentum matrices (J1, J2, J3) in the 2s+1 dimensional irrep.

    Built from the standard ladder-operator matrix elements
    <m+-1|J+-|m> = sqrt(s(s+1) - m(m+-1)); basis ordered m = s, s-1, ..., -s.
    """
    two_s = _check_spin(s)
    dim = two_s + 1
    m = s - np.arange(dim)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        # raises m[k] -> m[k] + 1 = m[k-1]
        jp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    return jx, jy, jz


def spin_rep_matrix(s, g):
    """The (2s+1)-dimensional unitary representation matrix of g."""
    from scipy.linalg import expm

    _check_spin(s)
    aa = axis_angle_of(g)
    jx, jy, jz = spin_matrices(s)
    jn = aa.axis[0] * jx + aa.axis[1] * jy + aa.axis[2] * jz
    return expm(-1.0j * aa.angle * jn)


def spin_rep_eigenphases(s, g):
    """Eigenvalues exp(-i m alpha), m = -s..s, of the spin-s rep of g.

    Computed from the axis-angle decomposition; ``spin_rep_matrix`` provides
    the independent construction that tests diagonalise for comparison.
    """
    _check_spin(s)
    alpha = axis_angle_of(g).angle
    ms = np.arange(-s, s + 0.5, 1.0)
    return np.exp(-1.0j * ms * alpha)
