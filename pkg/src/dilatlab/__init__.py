"""Dilatation structures on metric spaces.

Concrete instances (affine, chart-perturbed, Carnot/conical groups,
contraction groups), the approximate group operations induced by
base-pointed dilations, and a numerical engine that verifies the defining
axioms and the structural identities by seeded scale sweeps.
"""

from .analysis import (
    SweepConfig,
    SweepReport,
    axiom3_sweep,
    axiom4_sweep,
    axiom_suite,
    cone_sweep,
    diff_sweep,
    embedding_defect,
    embedding_sweep,
    fit_order,
    identity_suite,
    inflin_sweep,
    tangent_metric_sweep,
)
from .ccdist import (
    GeneratorWord,
    HorizontalPath,
    cc_lower,
    cc_upper,
    endpoint,
    path_length,
    t_bound_check,
    word_decomposition,
)
from .conical import (
    ContractionGroup,
    NormedGroupWithDilatations,
    as_dilatation_structure,
    beta_limit,
    from_contraction,
    inverse_limit,
    left_dilatation,
    matrix_contraction,
    norm_distance,
    norm_limit,
    tangent_reconstruction_defect,
)
from .core import (
    DilatationStructure,
    LimitEstimate,
    diff_op,
    dilate,
    inv_op,
    linear_map_defect,
    linearity_defect,
    relative_dist,
    shifted_structure,
    sum_diff_swap_defect,
    sum_op,
    tangent_diff,
    tangent_dist,
    tangent_inv,
    tangent_sum,
)
from .euclidean import AffineStructure, ChartPerturbedStructure, affine_closed_forms
from .nilpotent import CarnotGroup, GradedLieAlgebra, builtin, load_algebra_json
from .registry import resolve_group, resolve_structure
from .scales import CONTINUOUS, DYADIC, Scale, ScaleGroup, dyadic_grid, geometric_grid

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
