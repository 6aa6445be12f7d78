"""Deterministic packing of tokenized documents into fixed-length
training samples: four arrangement strategies, long-document policies,
quality metrics, verifiable manifests, and bit-exact binary emission.
"""

from .corpus import (
    CorpusStats,
    FileTokenStore,
    InMemoryTokenStore,
    corpus_stats,
    ingest_corpus,
)
from .emitter import DecodeResult, EmitSummary, decode_samples, emit_samples
from .longdoc import apply_policy, preprocess_drop, preprocess_slide, preprocess_split
from .manifest_io import (
    manifest_from_json,
    manifest_to_json,
    read_manifest,
    write_manifest,
)
from .metrics import (
    StrategyComparison,
    StrategyRow,
    compare_strategies,
    compute_metrics,
    fragmentation_rate,
    padding_rate,
    scaled_token_budget,
)
from .model import (
    CapacityError,
    ConfigError,
    CorpusError,
    CorpusSummary,
    DecodeError,
    DocumentRecord,
    EmitError,
    LongDocPolicy,
    ManifestError,
    PackedSample,
    PackingConfig,
    PackingError,
    PackingManifest,
    PackingMetrics,
    Placement,
    Strategy,
    TokenRef,
    effective_length,
)
from .oracle import brute_force_min_bins, simulate_reference
from .strategies import (
    pack_best_fit,
    pack_concat_then_split,
    pack_corpus,
    pack_pad_last_document,
    pack_restart_last_document,
)
from .verify import VerificationReport, Violation, verify_manifest

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigError",
    "CorpusError",
    "CorpusStats",
    "CorpusSummary",
    "DecodeError",
    "DecodeResult",
    "DocumentRecord",
    "EmitError",
    "EmitSummary",
    "FileTokenStore",
    "InMemoryTokenStore",
    "LongDocPolicy",
    "ManifestError",
    "PackedSample",
    "PackingConfig",
    "PackingError",
    "PackingManifest",
    "PackingMetrics",
    "Placement",
    "Strategy",
    "StrategyComparison",
    "StrategyRow",
    "TokenRef",
    "VerificationReport",
    "Violation",
    "apply_policy",
    "brute_force_min_bins",
    "compare_strategies",
    "compute_metrics",
    "corpus_stats",
    "decode_samples",
    "effective_length",
    "emit_samples",
    "fragmentation_rate",
    "ingest_corpus",
    "manifest_from_json",
    "manifest_to_json",
    "pack_best_fit",
    "pack_concat_then_split",
    "pack_corpus",
    "pack_pad_last_document",
    "pack_restart_last_document",
    "padding_rate",
    "preprocess_drop",
    "preprocess_slide",
    "preprocess_split",
    "read_manifest",
    "scaled_token_budget",
    "simulate_reference",
    "verify_manifest",
    "write_manifest",
]
