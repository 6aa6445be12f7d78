"""Policies for documents longer than the context length.

All three handlers are pure: they take document records and return
document records, leaving short documents untouched.  Chunks derived
from an over-length document inherit the parent id with a ``#<k>``
suffix and carry token locators adjusted to the covered range, so a
derived corpus still resolves against the original token store.
"""

from __future__ import annotations

from .model import (
    ConfigError,
    CorpusError,
    DocumentRecord,
    LongDocPolicy,
    PackingConfig,
    TokenRef,
)

__all__ = ["preprocess_split", "preprocess_slide", "preprocess_drop", "apply_policy"]

_TOKEN_BYTES = 4


def _chunk(doc: DocumentRecord, index: int, start: int, end: int) -> DocumentRecord:
    ref = doc.token_ref
    if ref is not None:
        ref = TokenRef(ref.file, ref.offset + _TOKEN_BYTES * start)
    return DocumentRecord(f"{doc.doc_id}#{index}", end - start, ref)


def preprocess_split(doc: DocumentRecord, context_length: int) -> list[DocumentRecord]:
    """Cut an over-length document into consecutive chunks of exactly
    ``context_length`` tokens; the final chunk keeps whatever remains
    and may be shorter.  Fitting documents pass through unchanged."""
    if context_length < 2:
        raise ConfigError(f"context_length must be at least 2, got {context_length}")
    if doc.length <= context_length:
        return [doc]
    parts = []
    for k, start in enumerate(range(0, doc.length, context_length)):
        end = min(start + context_length, doc.length)
        parts.append(_chunk(doc, k, start, end))
    return parts


def preprocess_slide(
    doc: DocumentRecord, context_length: int, overlap: int
) -> list[DocumentRecord]:
    """Cover an over-length document with overlapping windows of exactly
    ``context_length`` tokens.

    Consecutive windows advance by ``context_length - overlap``; the
    final window is pulled back so it ends flush with the document, so
    every window is full-size and every token is covered at least once.
    """
    if not 1 <= overlap <= context_length - 1:
        raise ConfigError(
            f"overlap must be in [1, {context_length - 1}], got {overlap}"
        )
    if doc.length <= context_length:
        return [doc]
    stride = context_length - overlap
    starts = [0]
    while starts[-1] + context_length < doc.length:
        nxt = starts[-1] + stride
        if nxt + context_length >= doc.length:
            nxt = doc.length - context_length
            starts.append(nxt)
            break
        starts.append(nxt)
    return [_chunk(doc, k, s, s + context_length) for k, s in enumerate(starts)]


def preprocess_drop(doc: DocumentRecord, context_length: int) -> DocumentRecord | None:
    """Return the document iff it fits the context length, else None."""
    return doc if doc.length <= context_length else None


def apply_policy(
    docs: list[DocumentRecord], cfg: PackingConfig
) -> tuple[list[DocumentRecord], tuple[str, ...]]:
    """Run the configured long-document policy over a corpus in order.

    Returns the retained (possibly derived) records plus the ids of
    documents removed by the drop policy.  Derived chunk ids must not
    collide with any other id in the resulting corpus.
    """
    L = cfg.context_length
    retained: list[DocumentRecord] = []
    dropped: list[str] = []
    derived_any = False
    for doc in docs:
        if doc.length <= L:
            retained.append(doc)
        elif cfg.long_doc_policy is LongDocPolicy.DROP:
            dropped.append(doc.doc_id)
        elif cfg.long_doc_policy is LongDocPolicy.SPLIT:
            retained.extend(preprocess_split(doc, L))
            derived_any = True
        else:
            retained.extend(preprocess_slide(doc, L, cfg.slide_overlap))
            derived_any = True
    if derived_any:
        seen: set[str] = set()
        for rec in retained:
            if rec.doc_id in seen:
                raise CorpusError(
                    f"derived chunk id {rec.doc_id!r} collides with another document"
                )
            seen.add(rec.doc_id)
    return retained, tuple(dropped)
