"""Structural verification of packing manifests.

``verify_manifest`` re-checks every invariant a strategy promises —
sample capacity, exact tiling, per-document coverage discipline, the
document-head rule, and metric counters — against the corpus the
manifest claims to describe.  It reports violations as data instead of
raising, so a caller can show all of them at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .metrics import compute_metrics
from .model import (
    DocumentRecord,
    PackingManifest,
    Placement,
    Strategy,
)

__all__ = ["Violation", "VerificationReport", "verify_manifest"]

_FRAGMENT_FREE = (Strategy.PAD_LAST_DOCUMENT, Strategy.BEST_FIT)
_HEAD_RULE = (
    Strategy.RESTART_LAST_DOCUMENT,
    Strategy.PAD_LAST_DOCUMENT,
    Strategy.BEST_FIT,
)


@dataclass(frozen=True, slots=True)
class Violation:
    sample_index: int | None
    doc_id: str | None
    message: str

    def __str__(self) -> str:
        where = []
        if self.sample_index is not None:
            where.append(f"sample {self.sample_index}")
        if self.doc_id is not None:
            where.append(f"doc {self.doc_id}")
        prefix = " ".join(where)
        return f"{prefix}: {self.message}" if prefix else self.message


@dataclass(frozen=True, slots=True)
class VerificationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_manifest(
    manifest: PackingManifest, documents: Sequence[DocumentRecord]
) -> VerificationReport:
    """Check a manifest against the corpus it was packed from.

    ``documents`` must be the retained corpus (after the long-document
    policy): placement bounds and fragmentation can only be judged with
    the true document lengths at hand.
    """
    v: list[Violation] = []
    cfg = manifest.config
    L = cfg.context_length
    strategy = cfg.strategy
    lengths = {d.doc_id: d.length for d in documents}

    if manifest.documents.document_count != len(documents):
        v.append(
            Violation(
                None,
                None,
                f"corpus summary mismatch: manifest says "
                f"{manifest.documents.document_count} documents, corpus has "
                f"{len(documents)}",
            )
        )
    total_tokens = sum(d.length for d in documents)
    if manifest.documents.total_tokens != total_tokens:
        v.append(
            Violation(
                None,
                None,
                f"corpus summary mismatch: manifest says "
                f"{manifest.documents.total_tokens} tokens, corpus has {total_tokens}",
            )
        )
    for doc_id in manifest.documents.dropped:
        if doc_id in lengths:
            v.append(Violation(None, doc_id, "dropped document still in corpus"))

    placed: dict[str, list[Placement]] = {}
    for i, sample in enumerate(manifest.samples):
        if sample.sample_index != i:
            v.append(Violation(i, None, f"sample index {sample.sample_index} out of order"))
        if not sample.placements:
            v.append(Violation(i, None, "sample has no placements"))
            continue

        spans: list[tuple[int, int]] = []
        last_offset = -1
        for p in sample.placements:
            if p.sample_index != sample.sample_index:
                v.append(Violation(i, p.doc_id, "placement assigned to wrong sample"))
            if p.offset <= last_offset:
                v.append(Violation(i, p.doc_id, "placements out of order"))
            last_offset = p.offset
            n = lengths.get(p.doc_id)
            if n is None:
                v.append(Violation(i, p.doc_id, "unknown doc_id"))
                continue
            if not 0 <= p.start < p.end <= n:
                v.append(
                    Violation(
                        i,
                        p.doc_id,
                        f"placement range [{p.start}, {p.end}) outside document "
                        f"bounds (length {n})",
                    )
                )
                continue
            if p.offset < 0 or p.offset + (p.end - p.start) > L:
                v.append(
                    Violation(
                        i,
                        p.doc_id,
                        f"capacity exceeded: offset {p.offset} + length "
                        f"{p.end - p.start} > {L}",
                    )
                )
                continue
            spans.append((p.offset, p.offset + p.end - p.start))
            placed.setdefault(p.doc_id, []).append(p)

        for off in sample.separator_positions:
            if not 0 <= off < L:
                v.append(Violation(i, None, f"separator position {off} out of range"))
                continue
            if any(a <= off < b for a, b in spans):
                v.append(Violation(i, None, f"separator at {off} inside a placement"))
            spans.append((off, off + 1))

        spans.sort()
        overlap = any(spans[j][1] > spans[j + 1][0] for j in range(len(spans) - 1))
        if overlap:
            v.append(Violation(i, None, "overlapping spans within sample"))

        occupied = sum(b - a for a, b in spans)
        pad = sample.padding_span
        pad_len = 0
        if pad is not None:
            ps, pe = pad
            pad_len = pe - ps
            if pe != L or ps > pe or ps != occupied:
                v.append(Violation(i, None, "padding span must be the sample suffix"))
        if occupied + pad_len != L:
            v.append(
                Violation(
                    i,
                    None,
                    f"sample occupancy {occupied} + padding {pad_len} != "
                    f"context length {L}",
                )
            )
        elif not overlap:
            cursor = 0
            for a, b in spans:
                if a != cursor:
                    v.append(Violation(i, None, f"gap in sample at offset {cursor}"))
                    break
                cursor = b

        if pad_len and cfg.drop_final_partial and strategy in (
            Strategy.CONCAT_THEN_SPLIT,
            Strategy.RESTART_LAST_DOCUMENT,
        ):
            v.append(Violation(i, None, "unexpected padding under zero-padding strategy"))

        if strategy in _HEAD_RULE and sample.placements:
            first = sample.placements[0]
            if first.offset != 0 or first.start != 0:
                v.append(Violation(i, first.doc_id, "sample must start with a document head"))

    for doc_id, pls in placed.items():
        n = lengths[doc_id]
        pls = sorted(pls, key=lambda p: (p.sample_index, p.offset))
        if strategy in _FRAGMENT_FREE:
            if len(pls) > 1:
                v.append(Violation(None, doc_id, "duplicate coverage"))
            if pls[0].start != 0 or pls[0].end != n:
                v.append(
                    Violation(None, doc_id, "fragmented document under fragment-free strategy")
                )
        elif strategy is Strategy.CONCAT_THEN_SPLIT:
            cursor = 0
            for p in pls:
                if p.start < cursor:
                    v.append(Violation(None, doc_id, "duplicate coverage"))
                    break
                if p.start > cursor:
                    v.append(Violation(None, doc_id, f"gap in coverage at token {cursor}"))
                    break
                cursor = p.end
        else:  # restart_last_document: prefix fragments only, one restart at most
            fulls = [p for p in pls if p.end == n]
            partials = [p for p in pls if p.end < n]
            for p in pls:
                if p.start != 0:
                    v.append(
                        Violation(None, doc_id, "placement must start at document offset 0")
                    )
                    break
            if len(fulls) > 1 or len(partials) > 1:
                v.append(Violation(None, doc_id, "duplicate coverage"))
            elif partials and fulls and partials[0].sample_index >= fulls[0].sample_index:
                v.append(Violation(None, doc_id, "restart precedes its tail fragment"))

    if strategy in _FRAGMENT_FREE:
        for doc_id in lengths:
            if doc_id not in placed:
                v.append(Violation(None, doc_id, "document missing from packing"))

    try:
        recomputed = compute_metrics(list(manifest.samples), list(documents), L)
    except KeyError:
        v.append(Violation(None, None, "metrics not recomputable: placements reference unknown documents"))
    else:
        stored = manifest.metrics
        for field in (
            "sample_count",
            "total_training_tokens",
            "fragmented_doc_count",
            "padding_token_count",
            "fragmentation_rate",
            "padding_rate",
        ):
            a, b = getattr(stored, field), getattr(recomputed, field)
            if a != b:
                v.append(
                    Violation(None, None, f"metrics mismatch: {field} stored {a}, recomputed {b}")
                )

    return VerificationReport(tuple(v))
