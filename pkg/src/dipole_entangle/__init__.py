"""Postselected photon polarization entanglement from two distant Lambda-type dipole sources."""

__version__ = "0.1.0"

from .efficiency import CollectionWindow, QuadSpec, pair_probability_analytic, pair_probability_numeric
from .errors import (
    ContractViolation,
    EnvelopeViolation,
    FactorizationError,
    QuadratureError,
    ZeroAmplitudeError,
)
from .geometry import (
    DetectorRing,
    EmissionGeometry,
    condition_residual,
    find_detector_rings,
    geometry_from_spherical,
    placement_config,
)
from .jumps import JumpContext, conditional_hamiltonian, emission_density, reset_operator, ucond
from .measures import EntanglementReport, dicke_sector_overlap, entanglement_of_formation, pure_state_concurrence
from .montecarlo import (
    CoincidenceStats,
    EmissionEvent,
    TrajectoryResult,
    coincidence_window_analysis,
    estimate_pair_statistics,
    sample_trajectory,
)
from .postselection import (
    TwoPhotonRecord,
    analytic_pair_state,
    conditional_pair_state,
    order_symmetry_check,
    two_photon_amplitudes,
)
from .sources import SourcePairConfig, dicke_basis_vector, inner_product, ket
