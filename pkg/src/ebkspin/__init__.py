"""Torus quantisation for spinning particles.

Transport a classical spin along integrable orbits, verify that the extended
flows commute, compute action variables and spin rotation angles, and solve
the resulting quantisation conditions for discrete spectra.
"""

from .su2 import (
    SU2,
    AxisAngle,
    axis_angle_of,
    covering_map,
    exp_algebra,
    from_axis_angle,
    rotate_vector,
    spin_matrices,
    spin_rep_eigenphases,
    spin_rep_matrix,
)
from .dynamics import (
    HamiltonianModel,
    PhasePoint,
    SkewState,
    Trajectory,
    evolve_skew,
    integrate_cocycle,
    integrate_flow,
    integrate_skew,
    precess_spin,
    radial_loop,
)
from .models import (
    DiracSymbolParams,
    HOModel,
    KeplerModel,
    AngularMomentumFlow,
    AxialComponentFlow,
    BrokenAxialFlow,
    dirac_hamiltonians,
    dirac_precession_field,
    fine_structure_energy,
    model_from_config,
    sommerfeld_energy,
    spherical_flow_triple,
)
from .integrability import (
    holonomy_commutativity,
    involution_report,
    poisson_bracket,
    skew_commutator_delta,
    spin_involution_residual,
)
from .actions import (
    ActionData,
    TorusSpec,
    action_data,
    frequencies,
    radial_action,
    radial_turning_points,
    rotation_angle_radial,
)
from .quantize import (
    SpectralLine,
    build_spectrum,
    quantize_angular,
    quantize_radial,
    sommerfeld_spectrum,
)

__version__ = "0.1.0"
