"""Exact Bayesian inference for multiple-changepoint models.

Segment means and variances are integrated out against a conjugate
normal-inverse-chi-squared prior, changepoint configurations are summed out
by a log-domain dynamic-programming recursion, and everything downstream —
marginal evidence, the posterior over segment counts, exact independent
posterior samples, MAP segmentations, changepoint marginals, and Monte Carlo
EM hyperparameter estimates — follows from that table.
"""

from .engine import ForwardTable, forward, log_marginal_evidence, log_posterior_num_segments, log_sum_exp
from .exceptions import (
    BayescpError,
    ConfigError,
    DegenerateVarianceError,
    DomainError,
    IngestError,
    InsufficientDataError,
    ModelError,
    OracleNumericsError,
    OracleScaleError,
    WindowError,
)
from .inference import (
    SampleSet,
    Segmentation,
    changepoint_marginals,
    exact_changepoint_marginals,
    map_segmentation,
    posterior_position_summary,
    sample_segmentations,
)
from .mcem import McemConfig, McemResult, m_step_objective, mcem_fit
from .model import (
    Hyperparams,
    ModelVariant,
    ObservedSequence,
    PosteriorParams,
    SegmentEvidence,
    SufficientStats,
    ar1_log_evidence,
    default_hyperparams,
    iid_log_evidence,
    posterior_update,
    segment_log_evidence,
    segment_log_evidence_ar1,
    segment_log_evidence_multi,
    window_stats,
)
from .oracle import EnumeratedPosterior, enumerate_posterior, quadrature_evidence
from .segprior import SegPrior, build_seg_prior, log_prior_num_segments, log_prior_segmentation
from .simulate import Scenario, SimResult, SimSpec, collapse_gaps, gap_study_spec, simulate, single_shift_spec

__version__ = "0.1.0"
