"""Universal rate-efficient scalar quantization with a modulo quantizer.

Signals are measured by a dithered Gaussian ensemble and each measurement is
quantized with ``ceil(y / delta) mod 2**B``.  The package provides the
measurement layer, exact consistency probabilities and bounds, rate
planners, Monte Carlo validators and a brute-force reconstruction oracle.
"""
from .analytics import (
    ConsistencyBounds,
    FailureBound,
    RatePlan,
    TheoremParams,
    ball_pair_failure_bound,
    consistency_bounds,
    consistency_prob_series,
    corollary_distance,
    covering_log,
    norm_tail,
    plan_rate,
    rate_overhead,
    required_rate,
    theorem_failure_bound,
    triangle_consistency,
    triangle_consistency_multibit,
)
from .core import (
    MeasurementEnsemble,
    QuantizedCode,
    SimilarSignal,
    Sparse,
    UnionOfSubspaces,
    UnitBall,
    consistency,
    make_ensemble,
    measure,
    quantize,
    quantize_many,
    quantize_scalar,
)
from .errors import DomainError, ParameterError, VacuousBoundError
from .kernels import BACKEND
from .montecarlo import McEstimate, mc_ball_guarantee, mc_consistency, mc_norm_tail
from .reconstruct import (
    CandidateSet,
    DecayReport,
    consistent_reconstruct,
    decay_experiment,
    worst_consistent_distance,
)

__version__ = "0.1.0"
