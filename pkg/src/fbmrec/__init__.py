"""Record statistics of fractional Brownian motion: exact path synthesis,
record sets, box-counting dimension and Monte Carlo scaling checks."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("fbmrec")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .core import (
    FbmPath,
    FgnAutocovariance,
    GeneratorId,
    HurstParameter,
    derive_seed,
    fgn_autocovariance,
    generate_cholesky_oracle,
    generate_circulant,
    generate_durbin_levinson,
    normal_tail,
)
from .errors import (
    DegenerateRegression,
    EmbeddingNotPSD,
    FbmRecError,
    InsufficientHits,
    NotPositiveDefinite,
    NumericalBreakdown,
    ScaleTooFine,
)
from .estimator import Covering, DimensionEstimate, alpha_value, estimate_dimension, ols_slope
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    estimate_argmax_prob,
    estimate_record_interval_prob,
    estimate_sup_tail,
    estimate_survival_prob,
    run_dimension_sweep,
)
from .records import BoxCountCurve, RecordSet, box_count, box_count_curve, extract_records
