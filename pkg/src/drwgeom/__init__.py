"""Information geometry of discriminative random walks on labeled graphs."""
from .errors import *  # noqa: F401,F403
from .graph import (
    ClassDecomposition,
    LabeledGraph,
    WeightedKernel,
    build_graph,
    build_kernel,
    decompose_for_class,
    kernel_derivatives,
    load_graph,
)
from .hitting import (
    HittingLaw,
    fundamental_matrix,
    hitting_law,
    hitting_moments,
    hitting_pgf,
    hitting_pmf,
    spectral_pmf,
)
from .quotient import QuotientChart, build_chart, chart_coordinates, projector, quotient_metric
from .score import (
    SensitivityReport,
    betweenness,
    betweenness_gradient,
    proposition_check,
    riemannian_gradient,
    zeta,
)
from .sensitivity import (
    SensitivityField,
    derivative_of_Z,
    fisher_closed,
    fisher_series,
    mean_gradient,
    score_function,
    sensitivity_field,
    xi,
)

__version__ = "0.1.0"
