"""Model catalog: Dirac symbol utilities, the relativistic Coulomb problem,
and the isotropic oscillator with spin-orbit coupling.

Every model works in the unit system it is constructed with; the shipped
presets use hbar = c = m = 1 so the Coulomb coupling is the dimensionless
fine-structure constant.  Spherical models additionally expose

    radial_p2(E, L, r)   -- squared radial momentum on the (E, L) shell
    energy_window(L)     -- (circular-orbit energy, escape energy or None)
    torus_point(E, L)    -- a perihelion point with angular momentum || e_z
    probe_energy(L)      -- a safe interior energy for exploratory runs

which is what the action-angle machinery consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dynamics import HamiltonianModel
from .errors import CollisionError, ConfigError, NoBoundMotionError

FINE_STRUCTURE_CONSTANT = 0.0072973525693


# ---------------------------------------------------------------------------
# Dirac principal-symbol utilities
# ---------------------------------------------------------------------------

def _fd_vector_grad(f, x, h0=1e-6):
    g = np.empty(3)
    for i in range(3):
        h = h0 * (1.0 + abs(x[i]))
        dx = np.zeros(3)
        dx[i] = h
        g[i] = (f(x + dx) - f(x - dx)) / (2 * h)
    return g


def _fd_curl(A, x, h0=1e-6):
    J = np.empty((3, 3))
    for j in range(3):
        h = h0 * (1.0 + abs(x[j]))
        dx = np.zeros(3)
        dx[j] = h
        J[:, j] = (np.asarray(A(x + dx)) - np.asarray(A(x - dx))) / (2 * h)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])


@dataclass
class DiracSymbolParams:
    """Mass, light speed, charge and the external potentials.

    ``phi`` is the scalar potential, ``A`` the vector potential (or None).
    Analytic field callables may be supplied; otherwise E = -grad(phi) and
    B = curl(A) fall back to central differences.
    """

    m: float
    c: float
    e: float
    phi: Callable[[np.ndarray], float] = lambda x: 0.0
    A: Optional[Callable[[np.ndarray], np.ndarray]] = None
    E_field: Optional[Callable[[np.ndarray], np.ndarray]] = None
    B_field: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def electric(self, x):
        if self.E_field is not None:
            return np.asarray(self.E_field(x), dtype=float)
        return -_fd_vector_grad(self.phi, x)

    def magnetic(self, x):
        if self.B_field is not None:
            return np.asarray(self.B_field(x), dtype=float)
        if self.A is None:
            return np.zeros(3)
        return _fd_curl(self.A, x)

    def kinetic_momentum(self, p, x):
        p = np.asarray(p, dtype=float)
        if self.A is None:
            return self.c * p
        return self.c * p - self.e * np.asarray(self.A(x), dtype=float)


def epsilon(params, p, x):
    """Kinetic energy branch  sqrt((cp - eA)^2 + m^2 c^4); always >= mc^2."""
    k = params.kinetic_momentum(p, x)
    return np.sqrt(k @ k + (params.m * params.c**2) ** 2)


def dirac_hamiltonians(params, p, x):
    """Both eigenvalue branches (H+, H-) of the Dirac principal symbol.

    Each branch is doubly degenerate as a matrix eigenvalue; the returned
    scalars act as classical Hamiltonians for the two bands.
    """
    x = np.asarray(x, dtype=float)
    eps = epsilon(params, p, x)
    ephi = params.e * params.phi(x)
    return ephi + eps, ephi - eps


def dirac_precession_field(params, branch, p, x):
    """Precession field of the chosen band:

        B_pm = -+ (ec/eps) B + ec/(eps(eps+mc^2)) (cp - eA) x E
    """
    if branch not in (+1, -1):
        raise ValueError("branch must be +1 or -1")
    x = np.asarray(x, dtype=float)
    eps = epsilon(params, p, x)
    mc2 = params.m * params.c**2
    k = params.kinetic_momentum(p, x)
    ec = params.e * params.c
    out = ec / (eps * (eps + mc2)) * np.cross(k, params.electric(x))
    Bmag = params.magnetic(x)
    if np.any(Bmag):
        out = out - branch * (ec / eps) * Bmag
    return out


# ---------------------------------------------------------------------------
# Relativistic Kepler problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KeplerOrbitConstants:
    """1/r(phi) = C + A cos(gamma phi) for a bound rosette orbit."""

    C: float
    A: float
    gamma: float


class KeplerModel(HamiltonianModel):
    """H = -e^2/r + sqrt(c^2 p^2 + m^2 c^4) with the Thomas precession field
    of the positive-energy Dirac band,  B = e^2 c^2/(eps(eps+mc^2)) L/r^3."""

    def __init__(self, m=1.0, c=1.0, e=None, alpha=None, hbar=1.0,
                 r_guard_factor=1e-3):
        if (e is None) == (alpha is None):
            raise ConfigError("give exactly one of charge e or coupling alpha")
        self.m = float(m)
        self.c = float(c)
        self.hbar = float(hbar)
        if e is not None:
            self.e2 = float(e) ** 2
        else:
            self.e2 = float(alpha) * self.hbar * self.c
        self.alpha_S = self.e2 / (self.hbar * self.c)
        self.mc2 = self.m * self.c**2
        # collision threshold: orbits with cL <= e^2 spiral into the centre
        self.L_collision = self.e2 / self.c
        self.r_guard = r_guard_factor * self.e2 / self.mc2

    # -- flow interface ----------------------------------------------------
    def hamiltonian(self, p, x):
        r = np.linalg.norm(x)
        return -self.e2 / r + np.sqrt(self.c**2 * (p @ p) + self.mc2**2)

    def grad_p(self, p, x):
        eps = np.sqrt(self.c**2 * (p @ p) + self.mc2**2)
        return self.c**2 * p / eps

    def grad_x(self, p, x):
        r = np.linalg.norm(x)
        return self.e2 * x / r**3

    def precession_field(self, p, x):
        eps = np.sqrt(self.c**2 * (p @ p) + self.mc2**2)
        r = np.linalg.norm(x)
        coeff = self.e2 * self.c**2 / (eps * (eps + self.mc2) * r**3)
        return coeff * np.cross(x, p)

    def guard(self, p, x):
        r = np.linalg.norm(x)
        if r < self.r_guard:
            raise CollisionError(
                "orbit entered r=%g < guard radius %g" % (r, self.r_guard)
            )

    def dirac_params(self):
        """The symbol parameters this model descends from (phi = -e/r)."""
        e = np.sqrt(self.e2)
        return DiracSymbolParams(
            m=self.m, c=self.c, e=e,
            phi=lambda x: -e / np.linalg.norm(x),
            E_field=lambda x: -e * x / np.linalg.norm(x) ** 3,
        )

    # -- spherical-model interface ------------------------------------------
    def _check_L(self, L):
        if L <= self.L_collision:
            raise NoBoundMotionError(
                "collision regime: need c*L > e^2, got cL=%g <= e^2=%g"
                % (self.c * L, self.e2)
            )

    def gamma(self, L):
        self._check_L(L)
        return np.sqrt(self.c**2 * L**2 - self.e2**2) / (self.c * L)

    def energy_window(self, L):
        """(circular energy gamma*mc^2, escape energy mc^2)."""
        return self.gamma(L) * self.mc2, self.mc2

    def probe_energy(self, L):
        lo, hi = self.energy_window(L)
        return 0.5 * (lo + hi)

    def radial_p2(self, E, L, r):
        """p_r^2 on the (E, L) shell; negative outside the allowed region."""
        return (
            (E**2 - self.mc2**2) / self.c**2
            + 2.0 * E * self.e2 / (self.c**2 * r)
            - (L**2 - self.e2**2 / self.c**2) / r**2
        )

    def turning_points_analytic(self, E, L):
        self._check_L(L)
        D = self.c**2 * L**2 - self.e2**2
        disc = self.e2**2 * E**2 + D * (E**2 - self.mc2**2)
        if disc < 0 or E >= self.mc2:
            raise NoBoundMotionError(
                "no bound radial motion at E=%g, L=%g" % (E, L)
            )
        u_plus = (self.e2 * E + np.sqrt(disc)) / D
        u_minus = (self.e2 * E - np.sqrt(disc)) / D
        if u_minus <= 0:
            raise NoBoundMotionError("outer turning point at infinity (E above escape)")
        return 1.0 / u_plus, 1.0 / u_minus

    def torus_point(self, E, L):
        r0, _ = self.turning_points_analytic(E, L)
        p = np.array([0.0, L / r0, 0.0])
        x = np.array([r0, 0.0, 0.0])
        return p, x

    def orbit_constants(self, E, L):
        """Constants of the rosette orbit 1/r = C + A cos(gamma phi).

        A is the half-spread of 1/r between the turning points,
        A = sqrt(c^2 L^2 E^2 - (c^2 L^2 - e^4) m^2 c^4) / (c^2 L^2 - e^4).
        """
        self._check_L(L)
        D = self.c**2 * L**2 - self.e2**2
        C = self.e2 * E / D
        A2 = self.c**2 * L**2 * E**2 - D * self.mc2**2
        if A2 < 0:
            raise NoBoundMotionError("E below the circular-orbit energy")
        return KeplerOrbitConstants(C=C, A=np.sqrt(A2) / D, gamma=self.gamma(L))

    def circular_orbit(self, L):
        """(E, r) of the circular orbit at angular momentum L."""
        E = self.gamma(L) * self.mc2
        D = self.c**2 * L**2 - self.e2**2
        return E, D / (self.e2 * E)

    # -- closed forms used as test oracles only ------------------------------
    def radial_action_analytic(self, E, L):
        self._check_L(L)
        return self.e2 * E / (self.c * np.sqrt(self.mc2**2 - E**2)) - np.sqrt(
            L**2 - self.e2**2 / self.c**2
        )

    def energy_from_actions(self, I_r, L):
        """Inverse of the radial action: the Hamiltonian in action variables."""
        self._check_L(L)
        den = I_r + np.sqrt(L**2 - self.e2**2 / self.c**2)
        return self.mc2 / np.sqrt(1.0 + (self.e2 / self.c) ** 2 / den**2)


def fine_structure_energy(n_r, l, m_s, alpha_S=FINE_STRUCTURE_CONSTANT, mc2=1.0):
    """Energy of the spin-1/2 Coulomb level labelled (n_r, l, m_s):

        E = mc^2 [1 + a^2 / (n_r + 1/2 + m_s + sqrt((l+1/2+m_s)^2 - a^2))^2]^(-1/2)

    Tuples with l + m_s < 0 or n_r + 1/2 + m_s < 0 are rejected.
    """
    if l + m_s < 0:
        raise ConfigError("inadmissible tuple: j = l + m_s < 0")
    ir = n_r + 0.5 + m_s
    if ir < 0:
        raise ConfigError("inadmissible tuple: radial action would be negative")
    lam = (l + 0.5 + m_s) ** 2 - alpha_S**2
    if lam <= 0:
        raise ConfigError("coupling too strong for this angular momentum")
    den = ir + np.sqrt(lam)
    return mc2 / np.sqrt(1.0 + alpha_S**2 / den**2)


def sommerfeld_energy(n_r, l, alpha_S=FINE_STRUCTURE_CONSTANT, mc2=1.0):
    """Historical fine-structure formula,

        E = mc^2 [1 + a^2/(n_r + sqrt(l^2 - a^2))^2]^(-1/2),

    with n_r >= 0 and l >= 1 (l = 0 is the collision orbit and is excluded).
    """
    if l < 1:
        raise ConfigError("l = 0 is excluded from the historical spectrum")
    if n_r < 0:
        raise ConfigError("n_r must be nonnegative")
    den = n_r + np.sqrt(l**2 - alpha_S**2)
    return mc2 / np.sqrt(1.0 + alpha_S**2 / den**2)


# ---------------------------------------------------------------------------
# Harmonic oscillator with spin-orbit coupling
# ---------------------------------------------------------------------------

class HOModel(HamiltonianModel):
    """H = p^2/2m + m w^2 r^2/2 with precession field B = kappa*L.

    kappa is free; ``thomas_kappa`` gives the value w^2/(2 m c^2) induced by
    the leading relativistic correction for a given light speed.
    """

    def __init__(self, m=1.0, omega=1.0, kappa=0.1, hbar=1.0):
        if m <= 0 or omega <= 0:
            raise ConfigError("oscillator needs m > 0 and omega > 0")
        self.m = float(m)
        self.omega = float(omega)
        self.kappa = float(kappa)
        self.hbar = float(hbar)

    @staticmethod
    def thomas_kappa(m, omega, c):
        return omega**2 / (2.0 * m * c**2)

    def hamiltonian(self, p, x):
        return (p @ p) / (2 * self.m) + 0.5 * self.m * self.omega**2 * (x @ x)

    def grad_p(self, p, x):
        return p / self.m

    def grad_x(self, p, x):
        return self.m * self.omega**2 * x

    def precession_field(self, p, x):
        return self.kappa * np.cross(x, p)

    # -- spherical-model interface ------------------------------------------
    def energy_window(self, L):
        if L < 0:
            raise NoBoundMotionError("L must be nonnegative")
        return self.omega * L, None

    def probe_energy(self, L):
        return self.omega * L + 2.0 * self.hbar * self.omega

    def radial_p2(self, E, L, r):
        return 2 * self.m * E - (self.m * self.omega * r) ** 2 - L**2 / r**2

    def circular_orbit(self, L):
        return self.omega * L, np.sqrt(L / (self.m * self.omega))

    def turning_points_analytic(self, E, L):
        disc = E**2 - self.omega**2 * L**2
        if disc < 0:
            raise NoBoundMotionError("E below the circular-orbit energy omega*L")
        r2m = (E - np.sqrt(disc)) / (self.m * self.omega**2)
        r2p = (E + np.sqrt(disc)) / (self.m * self.omega**2)
        return np.sqrt(r2m), np.sqrt(r2p)

    def torus_point(self, E, L):
        r0, _ = self.turning_points_analytic(E, L)
        return np.array([0.0, L / r0, 0.0]), np.array([r0, 0.0, 0.0])

    # -- closed forms used as test oracles only ------------------------------
    def radial_action_analytic(self, E, L):
        return 0.5 * (E / self.omega - L)

    def energy_from_actions(self, I_r, L):
        return self.omega * (2.0 * I_r + L)

    def spectrum_closed_form(self, n_r, l, m_s):
        """E = hbar w (2 n_r + l + 3/2) + m_s hbar^2 kappa (l + 1/2 + m_s)."""
        hw = self.hbar * self.omega
        return hw * (2 * n_r + l + 1.5) + m_s * self.hbar**2 * self.kappa * (
            l + 0.5 + m_s
        )


# ---------------------------------------------------------------------------
# Auxiliary commuting flows for spherical symmetry
# ---------------------------------------------------------------------------

class AngularMomentumFlow(HamiltonianModel):
    """Flow generated by L = |x cross p|, extended with the field B_L = L/|L|.

    The flow rotates (p, x) rigidly about L/|L| at unit rate.  Singular on
    the p || x set, which all sampling deliberately avoids.
    """

    name = "L"

    def hamiltonian(self, p, x):
        return np.linalg.norm(np.cross(x, p))

    def grad_p(self, p, x):
        Lv = np.cross(x, p)
        return np.cross(Lv / np.linalg.norm(Lv), x)

    def grad_x(self, p, x):
        Lv = np.cross(x, p)
        return np.cross(p, Lv / np.linalg.norm(Lv))

    def precession_field(self, p, x):
        Lv = np.cross(x, p)
        return Lv / np.linalg.norm(Lv)


class AxialComponentFlow(HamiltonianModel):
    """Flow generated by M = (x cross p) . e_z with field B_M = e_z."""

    name = "M"
    _field = np.array([0.0, 0.0, 1.0])

    def hamiltonian(self, p, x):
        return x[0] * p[1] - x[1] * p[0]

    def grad_p(self, p, x):
        return np.array([-x[1], x[0], 0.0])

    def grad_x(self, p, x):
        return np.array([p[1], -p[0], 0.0])

    def precession_field(self, p, x):
        return self._field.copy()


class BrokenAxialFlow(AxialComponentFlow):
    """Negative-control fixture: same flow M but the deliberately wrong field
    e_x, which violates the commutation condition at order one."""

    name = "M_broken"
    _field = np.array([1.0, 0.0, 0.0])


def spherical_flow_triple(model):
    """The (H, B), (L, B_L), (M, B_M) commuting triple of a spherical model."""
    return model, AngularMomentumFlow(), AxialComponentFlow()


# ---------------------------------------------------------------------------
# Config-driven construction
# ---------------------------------------------------------------------------

_MODEL_KEYS = {
    "kepler": {"m", "c", "e", "alpha", "hbar"},
    "ho": {"m", "omega", "kappa", "hbar"},
}


def model_from_config(cfg):
    """Build a model from a config mapping.

    Schema: ``{"name": "kepler"|"ho", ...parameters}``.  Kepler accepts
    m, c, hbar and exactly one of e / alpha; the oscillator accepts m,
    omega, kappa, hbar.  Unknown keys are rejected.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("model config must be a mapping")
    cfg = dict(cfg)
    name = cfg.pop("name", None)
    if name not in _MODEL_KEYS:
        raise ConfigError(
            "unknown model %r (expected one of %s)" % (name, sorted(_MODEL_KEYS))
        )
    unknown = set(cfg) - _MODEL_KEYS[name]
    if unknown:
        raise ConfigError("unknown %s parameter(s): %s" % (name, sorted(unknown)))
    try:
        if name == "kepler":
            if "e" not in cfg and "alpha" not in cfg:
                cfg["alpha"] = FINE_STRUCTURE_CONSTANT
            return KeplerModel(**cfg)
        return HOModel(**cfg)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
