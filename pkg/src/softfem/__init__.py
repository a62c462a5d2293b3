"""softfem: Galerkin FEM and softFEM spectral laboratory."""

from .assembly import (
    FeSpace,
    SymMatrix,
    assemble_mass,
    assemble_penalty,
    assemble_stiffness,
    build_space,
    soften,
    softness_parameters,
)
from .coefficient import CoefficientField, CoefficientParseError, parse_coefficient
from .gevp import (
    Spectrum,
    StiffnessMetrics,
    coercivity_margin,
    condition_number,
    rayleigh_quotient,
    solve_gmevp,
    stiffness_reduction,
)
from .mesh import (
    Interface,
    InvalidMeshError,
    Mesh,
    build_cartesian_mesh,
    build_simplicial_mesh,
    characteristic_lengths,
    interfaces,
    load_mesh,
    mesh_from_spec,
)
from .polyref import (
    QuadratureRule,
    ReferenceBasis,
    basis_eval,
    gauss_legendre_rule,
    gauss_lobatto_rule,
    legendre_eval,
)

__version__ = "0.1.0"
