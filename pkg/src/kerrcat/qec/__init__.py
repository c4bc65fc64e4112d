"""Repetition-cat memory: circuit sampler, MWPM decoding and logical-error analysis."""

from .analysis import (
    ETA_GRID,
    EXPONENT_SCALE,
    SCHEMES,
    FitError,
    FitResult,
    LogicalErrorResult,
    OptimumResult,
    SurrogateBundle,
    calibrate_surrogates,
    circuit_model,
    fit_scaling,
    load_default_surrogates,
    logical_error_rate,
    optimize_logical,
    p_z_na_closed_form,
    t_star,
    wilson_interval,
)
from .circuit import (
    CircuitErrorModel,
    Location,
    RepetitionCircuit,
    SampleBatch,
    SyndromeRecord,
    build_and_sample,
)
from .decoder import (
    DecodingGraph,
    MatchingDecodeError,
    brute_force_min_weight,
    build_decoding_graph,
    decode_batch,
    mwpm_decode,
)
