"""Statistical inference for matched case-control data.

Paired tests (McNemar, paired Hotelling), conditional logistic regression
(score, Wald and likelihood ratio tests, Newton maximum likelihood, general
strata likelihood), and a Monte Carlo lab comparing the score and Hotelling
statistics under local alternatives.
"""

from .classic import (
    DiscordantCounts,
    TestResult,
    discordant_counts,
    hotelling_paired,
    mcnemar,
)
from .clr import (
    FitResult,
    fit_mle,
    fit_mle_strata,
    lr_test,
    pair_fisher_info,
    pair_loglik,
    pair_score,
    score_test,
    strata_fisher_info_recursive,
    strata_loglik_bruteforce,
    strata_loglik_recursive,
    strata_score_bruteforce,
    strata_score_recursive,
    wald_test,
)
from .data import (
    DataError,
    MatchedDataset,
    Observation,
    PairSummary,
    PairedDifferences,
    Stratum,
    load_dataset,
    pair_differences,
    parse_dataset,
    serialize_dataset,
    summarize,
)
from .equivalence import (
    NOISE_FAMILIES,
    ExperimentReport,
    HistogramData,
    LocalAlternativeSpec,
    generate_local_alternative,
    histogram,
    ks_statistic,
    run_equivalence_experiment,
    sample_k,
    scaled_difference,
)
from .numerics import (
    RandomStream,
    SingularMatrixError,
    SpdFactor,
    chi2_sf,
    derive_seed,
    draw_mvn,
    draw_std_normal,
    f_sf,
    finite_diff_grad,
    normal_stream,
    quad_form_inv,
    spd_factor,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DiscordantCounts",
    "ExperimentReport",
    "FitResult",
    "HistogramData",
    "LocalAlternativeSpec",
    "MatchedDataset",
    "NOISE_FAMILIES",
    "Observation",
    "PairSummary",
    "PairedDifferences",
    "RandomStream",
    "SingularMatrixError",
    "SpdFactor",
    "Stratum",
    "TestResult",
    "chi2_sf",
    "derive_seed",
    "discordant_counts",
    "draw_mvn",
    "draw_std_normal",
    "f_sf",
    "finite_diff_grad",
    "fit_mle",
    "fit_mle_strata",
    "generate_local_alternative",
    "histogram",
    "hotelling_paired",
    "ks_statistic",
    "load_dataset",
    "lr_test",
    "mcnemar",
    "normal_stream",
    "pair_differences",
    "pair_fisher_info",
    "pair_loglik",
    "pair_score",
    "parse_dataset",
    "quad_form_inv",
    "run_equivalence_experiment",
    "sample_k",
    "scaled_difference",
    "score_test",
    "serialize_dataset",
    "spd_factor",
    "strata_fisher_info_recursive",
    "strata_loglik_bruteforce",
    "strata_loglik_recursive",
    "strata_score_bruteforce",
    "strata_score_recursive",
    "summarize",
    "wald_test",
]
