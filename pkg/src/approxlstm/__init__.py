"""Anytime LSTM inference through iterative rank-1 refinement of pruned gate matrices."""

from .approx import (
    ApproxConfig,
    GateFactors,
    RefinementTerm,
    SparseMaskedVector,
    approximation_error,
    build_augmented,
    build_augmented_input,
    decompose,
    error_profile,
    prune_topk,
    reconstruct,
)
from .bleu import BleuScore, bleu, corpus_bleu
from .containers import load_factors, load_model, save_factors, save_model
from .errors import (
    ApproxLstmError,
    ConfigError,
    ContainerError,
    ConvergenceError,
    FormatError,
    InputError,
    NonFiniteError,
    NumericError,
    RangeError,
    ScaleError,
    ShapeError,
    TruncationError,
    ZeroMatrixError,
)
from .evaluation import (
    SwitchingPolicy,
    TradeoffCurve,
    baseline_curve,
    evaluate_baseline,
    evaluate_grid,
    select_switching_policy,
    tradeoff_curve,
)
from .linalg import Rank1Triple, frobenius_norm, full_svd_oracle, matvec, rank1_svd
from .lstm import (
    ApproxLstmModel,
    LstmModel,
    LstmState,
    approximate_model,
    greedy_decode,
    lstm_step_approx,
    lstm_step_dense,
    lstm_step_partial,
    run_sequence,
)
from .perf import (
    DesignPoint,
    DseResult,
    PlatformSpec,
    attainable,
    baseline_estimate,
    calibration_platform,
    ctc,
    dse,
    dse_baseline,
    estimate,
    initiation_interval,
    latency_seconds,
    load_platform,
    memory_bytes,
    parse_platform,
    workload_ops,
)

__version__ = "0.1.0"
