"""Theory-driven causal analysis: confirmatory SEM feeding a discrete
Bayesian network with exact inference and information-theoretic reports."""

__version__ = "0.1.0"

from .dataset import (  # noqa: F401
    ObservedDataset,
    SplitAssignment,
    VariableSchema,
    complete_cases,
    load_csv,
    split,
)
from .modelspec import SemModel, parse_model_spec  # noqa: F401
from .sem import (  # noqa: F401
    SemFit,
    factor_scores,
    fit_indices,
    fit_ml,
    implied_covariance,
    loading_summary,
    standardized_loadings,
)
from .discretize import (  # noqa: F401
    DiscreteDataset,
    DiscretizationSpec,
    QuantileDiscretizer,
    discretize_scores,
    quantile_thresholds,
)
from .bn.graph import Dag, d_separated, dag_from_sem  # noqa: F401
from .bn.net import (  # noqa: F401
    BayesNet,
    Cpt,
    PosteriorDistribution,
    joint_probability,
    posterior,
)
from .bn.estimators import fit_bdeu, fit_em, fit_mle  # noqa: F401
from .analysis import (  # noqa: F401
    classification_metrics,
    conditional_entropy,
    conditional_profile,
    contour_grid,
    entropy,
    info_gain_report,
    information_gain,
    predict,
)
