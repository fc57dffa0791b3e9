"""Viscosity identification from boundary data for 2D Stokes-type flows.

Spectral collocation on the unit disk for the variable-viscosity Stokes and
stationary Navier-Stokes systems, the equivalent plate-like fourth-order
equation, complex d-bar operators, the first-order system built from the
viscosity potentials, and synthetic identifiability experiments.
"""

from .complex_calculus import (
    PompeiuReport,
    QuadratureDensity,
    dz,
    dzbar,
    gauss_residual,
    pompeiu_reconstruct,
    solve_bi_dbar2,
    solve_dbar,
    wirtinger,
)
from .equivalence import (
    BoundaryJet,
    airy_from_stokes,
    dirichlet_bridge,
    neumann_bridge,
    recover_boundary_jets,
    velocity_from_strain,
)
from .errors import (
    CompatibilityError,
    ConfigurationError,
    InconsistencyError,
    MultivaluednessError,
    PicardDivergenceError,
    SolverError,
    ViscosityLabError,
)
from .first_order import (
    FirstOrderState,
    PotentialPair,
    TransportFactor,
    alpha_beta,
    assemble_V,
    check_ab_identity,
    dv_residual,
    lift_to_U,
    mu_from_alpha,
    potential_from_U,
    transport_factor,
)
from .flow import (
    FlowState,
    StokesCauchyDatum,
    ViscosityField,
    linearization_experiment,
    solve_nse,
    solve_stokes,
    traction,
)
from .geometry import Domain, build_disk_domain
from .inverse import (
    CauchyDataset,
    ReconstructionResult,
    cauchy_gap,
    reconstruct_mu,
    synth_dataset,
    uniqueness_probe,
)
from .plate import PlateCauchyDatum, nondiv_residual, plate_neumann, solve_plate

__version__ = "0.1.0"
