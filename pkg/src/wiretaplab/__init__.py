"""Numerical laboratory for one-shot private communication over quantum wiretap channels.

The package is organized bottom-up: validated operator and ensemble
constructors, one-shot divergences (hypothesis-testing and smooth max),
achievability and converse rate formulas, a random-codebook wiretap
simulator with pretty-good-measurement decoding, a covering-lemma
verification suite, matrix concentration bounds with Monte Carlo
harnesses, finite-block spectral diagnostics, and a batch CLI.
"""
from ._kernels import BACKEND
from .concentration import (
    BoundSpec,
    NonsquareReport,
    TraceLowerReport,
    TrialReport,
    aw_chernoff_bound,
    chi2_lower_tail,
    cyclic_singular_diag,
    evaluate_bound,
    gaussian_block_embed,
    gaussian_matrix,
    hermitian_embed,
    nonsquare_chernoff_experiment,
    pad_columns,
    reverse_markov,
    shifted_chernoff_trial,
    trace_lower_trial,
)
from .covering import (
    BandDecomposition,
    BandSplit,
    CoveringInstance,
    CoveringReport,
    band_decomposition,
    band_split,
    build_covering_instance,
    covering_experiment,
    covering_tail_bound,
    gentle_measurement_check,
    key_lemma_check,
    offdiag_block_experiment,
    plus_mass_check,
    primed_average_distance,
    projected_distance_tail,
)
from .divergences import (
    DivergenceResult,
    HypothesisTest,
    PinskerCheck,
    cq_hypothesis_testing_divergence,
    hypothesis_testing_divergence,
    pinsker_floor,
    smooth_max_divergence,
    smoothing_tail,
)
from .ensembles import (
    CqState,
    Ensemble,
    WiretapChannelModel,
    average_state,
    bob_marginals,
    eve_marginals,
    load_channel,
    load_ensemble,
    save_channel,
    save_ensemble,
)
from .errors import (
    DegenerateEpsilon,
    DomainError,
    EmptyBand,
    ExpurgationFailed,
    FormatError,
    InvalidOperator,
    NoFiniteValue,
    NotPositive,
    PreconditionError,
    ShapeError,
    TooLarge,
    ValidationError,
    WiretapLabError,
)
from .rates import (
    AchievabilityInputs,
    RatePair,
    SecrecyCheck,
    achievable_rate,
    code_params_for_targets,
    converse_bound,
    converse_secrecy_check,
)
from .spectral import SpectralSeries, classical_spectral_estimate, tensor_power_rates
from .wiretap import (
    Codebook,
    CodePerformance,
    ExpurgationReport,
    SrmDecoder,
    append_results_csv,
    build_srm_decoder,
    evaluate_code,
    expurgate,
    generate_codebook,
    hayashi_nagaoka_gap,
)

__version__ = "0.1.0"
