"""Point-scatterer recovery from far-field acoustic measurements."""

__version__ = "0.1.0"

from .blasso import SfwOptions, SfwTrace, sfw_solve
from .bounds import (
    BoundReport,
    empirical_linearization_error,
    general_bound_basic,
    general_bound_pairwise,
    linearization_sweep,
    two_scatterer_bound,
)
from .kernel import KernelProfile, RegionCheckReport, advisory, check_regions, kernel_eval
from .measures import Box, DiscreteMeasure
from .metrics import MatchReport, match_measures
from .refine import (
    PipelineResult,
    RefineOptions,
    grid_initialization,
    gradient_foldy,
    objective_foldy,
    refine_measure,
    run_pipeline,
)
from .sampling import (
    DirectionPair,
    MeasurementPlan,
    ObservationVector,
    add_noise,
    build_plan,
    directions_from_frequency,
    sample_ball,
)
from .scatter import (
    FoldySolution,
    ScattererConfig,
    SingularSystemError,
    apply_born_operator,
    apply_foldy_operator,
    far_field_born,
    far_field_foldy,
    foldy_matrix,
    foldy_solve,
    green,
    phi_envelope,
)
