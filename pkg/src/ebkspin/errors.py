"""Exception hierarchy.

Config problems exit the CLI with code 1, numerical failures with code 2;
the split below mirrors that.
"""


class EbkspinError(Exception):
    """Base class for everything raised by this package."""


class ConfigError(EbkspinError):
    """Invalid user input: unknown model, bad ranges, malformed config file."""


class NumericalError(EbkspinError):
    """Base class for runtime numerical failures."""


class StepSizeUnderflow(NumericalError):
    """Adaptive integrator drove the step size to zero (singular field)."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"step size underflow at t={t!r}")


class CollisionError(NumericalError):
    """Trajectory entered the guarded near-collision region r < r_guard."""


class NoBoundMotionError(NumericalError):
    """(E, L) does not admit a bound radial libration; message names the
    violated condition."""


class QuadratureError(NumericalError):
    """Action quadrature failed to converge; message carries the node count."""


class PeriodDetectionError(NumericalError):
    """No two perihelion passages found within the allotted time."""


class SelfConsistencyError(NumericalError):
    """Fixed-point iteration for an energy-dependent rotation angle did not
    converge."""


class NoRootError(NumericalError):
    """Radial quantisation condition has no solution in the bound window."""


class InadmissibleLineError(EbkspinError):
    """Quantum-number tuple violates I_r >= 0 or L >= 0."""
