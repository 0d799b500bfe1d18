"""Strategy mining from multi-agent episode logs."""

from ._stratmine import (
    DataError,
    FormulaSyntaxError,
    __version__,
    calinski_harabasz,
    evaluate,
    feature_counts,
    gated_score,
    generate_episodes,
    hac_complete,
    kl_bernoulli,
    render_formula,
    run_pipeline,
    select_partition,
)

__all__ = [
    "DataError",
    "FormulaSyntaxError",
    "__version__",
    "calinski_harabasz",
    "evaluate",
    "feature_counts",
    "gated_score",
    "generate_episodes",
    "hac_complete",
    "kl_bernoulli",
    "render_formula",
    "run_pipeline",
    "select_partition",
]
