"""Character-level predictive typing: engine, noise model, metrics, service."""

from .backends import (
    BackendDescriptor,
    BackendTransportError,
    ExternalBackend,
    NgramBackend,
    TokenDistribution,
    build_backend_app,
)
from .engine import (
    BeamConfig,
    BeamHypothesis,
    CharDistribution,
    InterpolationConfig,
    NextCharPredictor,
    char_unigram,
    interpolate,
    predict_beam,
    predict_closed_vocab,
    predict_direct,
)
from .metrics import (
    DeltaReport,
    MetricsReport,
    TrialResult,
    delta_report,
    emit_report,
    mrr_at_k,
    recall_at_k,
    run_campaign,
)
from .noise import NoiseSpec, corrupt
from .text import (
    Alphabet,
    DEFAULT_ALPHABET,
    Phrase,
    PredictionInstance,
    TextNormalizer,
    load_corpus,
    make_instances,
    normalize,
)
from .vocab import (
    Token,
    Vocabulary,
    VocabTrie,
    char_after_prefix,
    detokenize,
    find_partial_suffix,
    greedy_tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "DEFAULT_ALPHABET",
    "BackendDescriptor",
    "BackendTransportError",
    "BeamConfig",
    "BeamHypothesis",
    "CharDistribution",
    "DeltaReport",
    "ExternalBackend",
    "InterpolationConfig",
    "MetricsReport",
    "NextCharPredictor",
    "NgramBackend",
    "NoiseSpec",
    "Phrase",
    "PredictionInstance",
    "TextNormalizer",
    "Token",
    "TokenDistribution",
    "TrialResult",
    "Vocabulary",
    "VocabTrie",
    "build_backend_app",
    "char_after_prefix",
    "char_unigram",
    "corrupt",
    "delta_report",
    "detokenize",
    "emit_report",
    "find_partial_suffix",
    "greedy_tokenize",
    "interpolate",
    "load_corpus",
    "make_instances",
    "mrr_at_k",
    "normalize",
    "predict_beam",
    "predict_closed_vocab",
    "predict_direct",
    "recall_at_k",
    "run_campaign",
]
