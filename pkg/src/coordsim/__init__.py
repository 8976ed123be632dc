"""coordsim: coordination codes over noisy agent observations.

A first node acts i.i.d.; L agents see independently corrupted versions of
the action through a common memoryless channel and talk to a second node
over rate-limited links.  This package simulates the random-codebook schemes
that let the second node match the empirical joint type of the two action
sequences to a target law, and computes the inner-bound rate regions (exact
and within a total-variation radius) those schemes achieve.
"""

from .probkit import (Alphabet, CondPmf, JointPmf, JointType, Pmf,
                      compose_markov, conditional_mutual_information, entropy,
                      in_delta_neighborhood, joint_type, mutual_information,
                      tv_distance)
from .typicality import (TypBound, TypicalityParams, conditional_set_size_bound,
                         count_bounds, delta_t, epsilon_m,
                         hit_probability_lower_bound, is_conditionally_typical,
                         is_marginally_typical, is_strongly_typical,
                         markov_lemma_bound, typical_set_size_bound, typ_bounds)
from .source import ActionDraw, SourceConfig, draw_actions
from .coding import (BinnedDecodeResult, BinnedSchemeConfig, CodebookSpec,
                     DecoderBudgetExceeded, DecoderLimits, DirectSchemeConfig,
                     EncodeResult, ErrorCase, TrialInternals, TrialOutcome,
                     case_b_upper_bound, classify_error, codeword,
                     codeword_block, decode_binned, decode_direct,
                     encode_binned, encode_direct, run_binned_trial,
                     run_direct_trial)
from .region import (CurvePoint, RegionPoint, RegionQuery, SolverOptions,
                     finite_agent_rate, induced_target, min_achievable_delta,
                     min_finite_agent_rate, min_per_agent_rate, per_agent_rate,
                     rate_delta_curve)
from .harness import (ExperimentAborted, ExperimentConfig, ExperimentStats,
                      SweepCell, check_delta_coordination, run_experiment,
                      sweep)
from .runspec import RunSpec, SpecError, load_runspec, parse_runspec

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Pmf", "CondPmf", "JointPmf", "JointType",
    "joint_type", "tv_distance", "in_delta_neighborhood", "entropy",
    "mutual_information", "conditional_mutual_information", "compose_markov",
    "TypicalityParams", "TypBound", "epsilon_m", "delta_t", "count_bounds",
    "is_strongly_typical", "is_marginally_typical", "is_conditionally_typical",
    "typical_set_size_bound", "conditional_set_size_bound",
    "hit_probability_lower_bound", "markov_lemma_bound", "typ_bounds",
    "SourceConfig", "ActionDraw", "draw_actions",
    "CodebookSpec", "DirectSchemeConfig", "BinnedSchemeConfig",
    "EncodeResult", "TrialOutcome", "TrialInternals", "ErrorCase",
    "DecoderLimits", "DecoderBudgetExceeded", "BinnedDecodeResult",
    "codeword", "codeword_block", "encode_direct", "decode_direct",
    "encode_binned", "decode_binned", "classify_error",
    "run_direct_trial", "run_binned_trial", "case_b_upper_bound",
    "RegionQuery", "RegionPoint", "CurvePoint", "SolverOptions",
    "finite_agent_rate", "per_agent_rate", "induced_target",
    "min_achievable_delta", "min_per_agent_rate", "min_finite_agent_rate",
    "rate_delta_curve",
    "ExperimentConfig", "ExperimentStats", "ExperimentAborted", "SweepCell",
    "run_experiment", "check_delta_coordination", "sweep",
    "RunSpec", "SpecError", "load_runspec", "parse_runspec",
]
