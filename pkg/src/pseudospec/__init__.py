"""Structured pseudospectra, resultant-based root counting and eigenvalue homotopies."""

from .core_linalg import (
    SpectrumReport,
    cluster_spectrum,
    eigenvalues,
    nullity,
    singular_values,
    spectral_norm,
    spectrum,
)
from .exceptions import (
    BoxError,
    ConvergenceError,
    CoverageError,
    DimensionError,
    DiscontinuityError,
    HypothesisError,
    InputFormatError,
    PreconditionError,
    PseudospecError,
    StructureError,
)
from .bounds import (
    distance_lower_bound,
    minimal_enclosing_circle,
    mu_eps,
    simple_eigenvalue_guarantee,
    witness_higher_multiplicity,
)
from .homotopy import (
    HomotopyTracker,
    chebyshev_grid,
    distinct_count_profile,
    local_conservation_check,
    match_step,
    multiplicity_constancy_check,
    refine_bifurcation,
    track,
)
from .polynomials import (
    GeneralPolynomial,
    MonicPolynomial,
    char_poly,
    count_common_roots,
    count_distinct_roots,
    count_roots_mult_at_least,
    count_roots_mult_exact,
    derivative,
    generalized_resultant,
    root_structure,
)
from .pseudospectrum import (
    GridRegion,
    StructuredPseudospectrum,
    component_eigen_report,
    component_of,
    connected_components,
    grid_pseudospectrum,
    structured_distance_upper,
    unstructured_membership,
)
from .structure import PerturbationVector, StructurePattern, embed, extract, perturbed, sample_ball

__version__ = "0.1.0"
