"""Discrete spectra from the spin-extended torus quantisation conditions.

For a spherically symmetric model with spin s the conditions are

    L   = hbar (l + 1/2 + m_s)            (angular cycles, both angles 2 pi)
    M   = hbar m_j,   j = l + m_s >= 0,   m_j in {-j, ..., j}
    I_r = hbar (n_r + 1/2 + m_s alpha_r / 2 pi)

with the radial Maslov index 2 and alpha_r the signed radial rotation angle.
Since alpha_r may depend on the energy, the radial condition is solved by a
fixed-point loop around a bracketed root search on the numeric radial action.

Distinct quantised tori (I_r, L) are the states; two label tuples that land
on the same torus (which happens whenever alpha_r is an exact multiple of
2 pi, e.g. the Coulomb problem) describe the same level, so the multiplicity
of a level is the number of admissible M values, 2j + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .actions import radial_action, rotation_angle_radial
from .errors import (
    InadmissibleLineError,
    NoRootError,
    NumericalError,
    SelfConsistencyError,
)

TWO_PI = 2.0 * np.pi


def _is_half_integer(s):
    return abs(2 * s - round(2 * s)) < 1e-12


def _ms_values(s):
    return [(-s + k) for k in range(int(round(2 * s)) + 1)]


@dataclass(frozen=True)
class AngularLine:
    """One admissible angular tuple (l, m_s) and its derived numbers."""

    l: int
    m_s: float
    s: float
    j: float
    L: float            # in units of hbar
    m_j_values: tuple

    @property
    def multiplicity(self):
        return len(self.m_j_values)


@dataclass
class SpectralLine:
    """One energy level: a quantised torus with its angular multiplicity."""

    n_r: int
    l: int
    m_s: float
    j: float
    L: float
    I_r: float
    energy: float
    multiplicity: int
    labels: list = field(default_factory=list)
    n: int | None = None  # principal label round((I_r + L)/hbar) where integral

    def states(self):
        """Expand into per-m_j rows (n_r, l, m_s, j, m_j, E)."""
        j = self.j
        m_j = [(-j + k) for k in range(int(round(2 * j)) + 1)]
        return [(self.n_r, self.l, self.m_s, j, m, self.energy) for m in m_j]


@dataclass
class SpectrumResult:
    lines: list
    skipped: list


def quantize_angular(s, l_max):
    """All admissible (l, m_l seen through m_j, m_s) tuples up to l_max.

    Rejects combinations with j = l + m_s < 0 (negative total angular
    momentum), e.g. l = 0 with m_s = -1/2.  M values are the half-integers
    (integers for integer j) with |m_j| <= j.
    """
    if not _is_half_integer(s) or s < 0:
        raise InadmissibleLineError("spin must be a nonnegative half-integer")
    if l_max < 0:
        raise InadmissibleLineError("l_max must be nonnegative")
    out = []
    for l in range(int(l_max) + 1):
        for m_s in _ms_values(s):
            j = l + m_s
            if j < -1e-12:
                continue
            m_j = tuple(-j + k for k in range(int(round(2 * j)) + 1))
            out.append(
                AngularLine(l=l, m_s=float(m_s), s=float(s), j=float(j),
                            L=float(j + 0.5), m_j_values=m_j)
            )
    return out


def default_alpha_provider(model, E, L, tol=1e-11):
    """Signed radial rotation angle from the numeric trajectory pipeline."""
    return rotation_angle_radial(model, E, L, tol=tol).alpha_signed


def _memoized(provider):
    cache = {}

    def wrapped(model, E, L):
        key = (float(E), float(L))
        if key not in cache:
            cache[key] = provider(model, E, L)
        return cache[key]

    return wrapped


def quantize_radial(model, l, m_s, n_r, alpha_provider=None, rtol=1e-10,
                    action_rel_tol=1e-12, max_fixed_point=100, alpha_tol=1e-9):
    """Solve the radial condition for one line; returns (E, I_r, alpha).

    ``alpha_provider(model, E, L)`` supplies the signed rotation angle; the
    default runs the trajectory pipeline.  When alpha depends on E the
    condition is closed by fixed-point iteration: solve E at frozen alpha,
    re-evaluate alpha at the solution, repeat.
    """
    if alpha_provider is None:
        alpha_provider = default_alpha_provider
    hbar = model.hbar
    j = l + m_s
    if j < -1e-12:
        raise InadmissibleLineError("j = l + m_s < 0 for l=%s, m_s=%s" % (l, m_s))
    L = hbar * (l + 0.5 + m_s)
    E_lo, E_hi = model.energy_window(L)

    E_probe = model.probe_energy(L)
    alpha = alpha_provider(model, E_probe, L)
    E = None
    for _ in range(max_fixed_point):
        target = hbar * (n_r + 0.5 + m_s * alpha / TWO_PI)
        if target < -1e-9 * hbar:
            raise InadmissibleLineError(
                "I_r = %g < 0 for (n_r=%s, l=%s, m_s=%s)" % (target, n_r, l, m_s)
            )
        if target < 1e-9 * hbar:
            # degenerate torus: the circular orbit carries I_r = 0
            E_new = E_lo
        else:
            E_new = _solve_energy(model, L, target, E_lo, E_hi, rtol,
                                  action_rel_tol)
            alpha_new = alpha_provider(model, E_new, L)
            if abs(alpha_new - alpha) > alpha_tol * (1.0 + abs(alpha)):
                alpha = alpha_new
                E = E_new
                continue
            alpha = alpha_new
        return E_new, max(target, 0.0), alpha
    raise SelfConsistencyError(
        "alpha_r(E) fixed point did not converge in %d iterations for "
        "(n_r=%s, l=%s, m_s=%s); last E=%s" % (max_fixed_point, n_r, l, m_s, E)
    )


def _solve_energy(model, L, target, E_lo, E_hi, rtol, action_rel_tol):
    """Bracketed root of I_r(E, L) = target; I_r grows monotonically from 0
    at the circular-orbit energy E_lo.

    The upper bracket expands geometrically from the probe energy (halving
    the remaining gap to the escape energy when there is one), which keeps
    the quadrature away from the near-parabolic edge."""
    f = lambda E: radial_action(model, E, L, rel_tol=action_rel_tol) - target
    hi = model.probe_energy(L)
    for _ in range(120):
        if f(hi) > 0:
            break
        if E_hi is not None:
            gap = E_hi - hi
            if gap < 1e-12 * (1.0 + abs(E_hi)):
                raise NoRootError(
                    "target action %g not reached below the escape energy" % target
                )
            hi = E_hi - 0.25 * gap
        else:
            hi = E_lo + 2.0 * (hi - E_lo)
    else:
        raise NoRootError("could not bracket the radial condition")
    # lower bracket: walk down toward the circular edge until f < 0
    lo = None
    for k in range(1, 60):
        lo_try = E_lo + (hi - E_lo) * 2.0 ** (-k)
        if f(lo_try) < 0:
            lo = lo_try
            break
    if lo is None:
        # target indistinguishable from the degenerate torus
        return E_lo
    return brentq(f, lo, hi, rtol=rtol, xtol=1e-300, maxiter=200)


def build_spectrum(model, s, n_max=None, n_r_max=None, l_max=None,
                   alpha_provider=None, rtol=1e-10, action_rel_tol=1e-12,
                   dedupe_tol=1e-7, group_rel_tol=1e-9):
    """Enumerate, solve and group all lines within the requested ranges.

    Either ``n_max`` (principal cutoff: I_r + L <= hbar n_max, the natural
    range for Coulomb-like spectra) or ``n_r_max`` and ``l_max`` must be
    given.  Per-line failures are collected into ``skipped``, not raised.
    """
    if not _is_half_integer(s) or s < 0:
        raise InadmissibleLineError("spin must be a nonnegative half-integer")
    hbar = model.hbar
    if n_max is not None:
        l_cap = int(np.floor(n_max + s))
    elif l_max is not None:
        l_cap = int(l_max)
    else:
        raise InadmissibleLineError("give n_max or (n_r_max, l_max)")
    # probe evaluations repeat per (E, L); the rotation-angle trajectory is
    # the expensive part, so share it across lines
    alpha_provider = _memoized(alpha_provider or default_alpha_provider)

    tori = {}   # (L rounded) -> list of dict records
    skipped = []
    for ang in quantize_angular(s, l_cap):
        L = hbar * ang.L
        if n_max is not None:
            if ang.L > n_max + 1e-9:
                continue
            ir_cap = hbar * (n_max - ang.L) + 1e-9
            nr_hi = int(np.ceil(n_max - ang.L + s + 2))
        else:
            ir_cap = None
            nr_hi = int(n_r_max)
        nr_lo = int(np.floor(-0.5 - s)) - 2
        for n_r in range(nr_lo, nr_hi + 1):
            try:
                E, I_r, alpha = quantize_radial(
                    model, ang.l, ang.m_s, n_r,
                    alpha_provider=alpha_provider, rtol=rtol,
                    action_rel_tol=action_rel_tol,
                )
            except InadmissibleLineError:
                continue
            except NumericalError as exc:
                skipped.append(
                    {"n_r": n_r, "l": ang.l, "m_s": ang.m_s, "reason": str(exc)}
                )
                continue
            if ir_cap is not None and I_r > ir_cap:
                continue
            key = round(ang.L * 4)  # 2j+1 is integral; exact key
            rec_list = tori.setdefault(key, [])
            for rec in rec_list:
                if abs(rec["I_r"] - I_r) <= dedupe_tol * (1.0 + abs(I_r)):
                    rec["labels"].append((n_r, ang.l, ang.m_s))
                    break
            else:
                rec_list.append(
                    {
                        "I_r": I_r,
                        "E": E,
                        "ang": ang,
                        "labels": [(n_r, ang.l, ang.m_s)],
                    }
                )

    lines = []
    for key, recs in sorted(tori.items()):
        for rec in recs:
            ang = rec["ang"]
            labels = sorted(set(rec["labels"]), key=lambda t: (t[2], t[0]))
            n_r0, l0, ms0 = labels[0]
            total = rec["I_r"] + hbar * ang.L
            n = int(round(total / hbar)) if abs(
                total / hbar - round(total / hbar)
            ) < 1e-6 else None
            lines.append(
                SpectralLine(
                    n_r=n_r0, l=l0, m_s=ms0, j=ang.j, L=hbar * ang.L,
                    I_r=rec["I_r"], energy=rec["E"],
                    multiplicity=ang.multiplicity, labels=labels, n=n,
                )
            )
    lines.sort(key=lambda ln: (ln.energy, ln.j))
    return SpectrumResult(lines=_group_lines(lines, group_rel_tol),
                          skipped=skipped)


def _group_lines(lines, rel_tol):
    """Merge lines that are degenerate in energy *and* angular momentum."""
    out = []
    for ln in lines:
        for kept in out:
            if (
                abs(kept.energy - ln.energy) <= rel_tol * max(abs(kept.energy), 1e-300)
                and abs(kept.L - ln.L) < 1e-9
                and abs(kept.I_r - ln.I_r) < 1e-6 * (1 + abs(kept.I_r))
            ):
                kept.multiplicity += ln.multiplicity
                kept.labels.extend(ln.labels)
                break
        else:
            out.append(ln)
    return out


def sommerfeld_spectrum(n_r_max, l_max, alpha_S, mc2=1.0):
    """The historical fine-structure spectrum on integer actions.

    Levels are labelled (n_r >= 0, l >= 1); l = 0 is excluded (collision
    orbit).  Multiplicity bookkeeping uses the 2l+1 orientation count, which
    is the pattern that disagrees with the spin-corrected spectrum.
    """
    from .models import sommerfeld_energy

    if n_r_max < 0 or l_max < 1:
        raise InadmissibleLineError("need n_r_max >= 0 and l_max >= 1")
    lines = []
    for l in range(1, int(l_max) + 1):
        for n_r in range(int(n_r_max) + 1):
            lines.append(
                SpectralLine(
                    n_r=n_r, l=l, m_s=0.0, j=float(l), L=float(l),
                    I_r=float(n_r),
                    energy=sommerfeld_energy(n_r, l, alpha_S, mc2),
                    multiplicity=2 * l + 1,
                    labels=[(n_r, l, 0.0)],
                    n=n_r + l,
                )
            )
    lines.sort(key=lambda ln: ln.energy)
    return lines
