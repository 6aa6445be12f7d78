"""The four packing strategies.

Every strategy maps an ordered corpus plus a config to a manifest: the
complete plan of which document tokens land where in which sample.
All four are deterministic — identical corpus order and config give an
identical manifest.

Capacity accounting is shared: a document charges its token count plus
one trailing separator (see :func:`seqpack.model.effective_length`);
the separator is charged to the same sample as its document.
"""

from __future__ import annotations

import heapq
from dataclasses import replace

from .longdoc import apply_policy
from .metrics import compute_metrics
from .model import (
    CapacityError,
    CorpusSummary,
    DocumentRecord,
    PackedSample,
    PackingConfig,
    PackingManifest,
    Placement,
    Strategy,
    effective_length,
)

__all__ = [
    "pack_concat_then_split",
    "pack_restart_last_document",
    "pack_pad_last_document",
    "pack_best_fit",
    "pack_corpus",
]


def _require_fits(docs: list[DocumentRecord], cfg: PackingConfig) -> None:
    L = cfg.context_length
    for d in docs:
        if d.length > L:
            raise CapacityError(
                f"document {d.doc_id!r} (length {d.length}) exceeds sample "
                f"capacity {L}; apply a long-document policy"
            )


def _finish(
    docs: list[DocumentRecord],
    cfg: PackingConfig,
    samples: list[PackedSample],
    discarded: int,
) -> PackingManifest:
    summary = CorpusSummary(len(docs), sum(d.length for d in docs))
    metrics = compute_metrics(samples, docs, cfg.context_length)
    return PackingManifest(cfg, summary, tuple(samples), metrics, discarded)


def pack_concat_then_split(
    docs: list[DocumentRecord], cfg: PackingConfig
) -> PackingManifest:
    """Concatenate the whole corpus into one virtual stream and cut it
    at multiples of the context length.

    Zero padding by construction; documents straddling a cut fragment.
    The incomplete final chunk is dropped under ``drop_final_partial``
    (the discarded token count is recorded on the manifest), otherwise
    it is kept and padded.  Over-length documents are tolerated here —
    they simply fragment across several chunks.
    """
    L = cfg.context_length
    sep_cost = cfg.separator_cost

    spans: list[tuple[DocumentRecord, int]] = []
    pos = 0
    for doc in docs:
        spans.append((doc, pos))
        pos += doc.length + sep_cost
    stream_len = pos

    if cfg.drop_final_partial:
        sample_count = stream_len // L
        retained = sample_count * L
    else:
        sample_count = -(-stream_len // L)
        retained = stream_len

    placements: list[list[Placement]] = [[] for _ in range(sample_count)]
    separators: list[list[int]] = [[] for _ in range(sample_count)]
    for doc, s in spans:
        end = min(s + doc.length, retained)
        cursor = s
        while cursor < end:
            idx = cursor // L
            seg_end = min(end, (idx + 1) * L)
            placements[idx].append(
                Placement(doc.doc_id, cursor - s, seg_end - s, idx, cursor - idx * L)
            )
            cursor = seg_end
        if sep_cost:
            p = s + doc.length
            if p < retained:
                separators[p // L].append(p % L)

    samples = []
    for i in range(sample_count):
        pad = None
        if not cfg.drop_final_partial and i == sample_count - 1:
            fill = stream_len - i * L
            if fill < L:
                pad = (fill, L)
        samples.append(
            PackedSample(i, tuple(placements[i]), tuple(separators[i]), pad)
        )
    return _finish(docs, cfg, samples, stream_len - retained)


def pack_restart_last_document(
    docs: list[DocumentRecord], cfg: PackingConfig
) -> PackingManifest:
    """Sequential fill where every sample begins at a document head.

    A document that cannot finish inside the open sample leaves its
    prefix behind as a tail fragment and restarts from token zero at
    the start of the next sample.  When a document's tokens reach the
    sample boundary exactly, it completes there and only its separator
    is elided — restarting it would duplicate the whole document.
    """
    _require_fits(docs, cfg)
    L = cfg.context_length

    samples: list[PackedSample] = []
    cur_pl: list[Placement] = []
    cur_sep: list[int] = []
    pos = 0

    def close(pad: tuple[int, int] | None = None) -> None:
        nonlocal cur_pl, cur_sep, pos
        samples.append(PackedSample(len(samples), tuple(cur_pl), tuple(cur_sep), pad))
        cur_pl, cur_sep, pos = [], [], 0

    for doc in docs:
        n = doc.length
        eff = effective_length(n, cfg)
        rem = L - pos
        if eff > rem:
            if rem == n:
                # tokens land flush on the boundary: complete, separator elided
                cur_pl.append(Placement(doc.doc_id, 0, n, len(samples), pos))
                close()
                continue
            if rem < n:
                cur_pl.append(Placement(doc.doc_id, 0, rem, len(samples), pos))
            close()
        cur_pl.append(Placement(doc.doc_id, 0, n, len(samples), pos))
        pos += n
        if eff > n:
            cur_sep.append(pos)
            pos += 1
        if pos == L:
            close()

    discarded = 0
    if pos > 0:
        if cfg.drop_final_partial:
            discarded = pos
        else:
            close((pos, L))
    return _finish(docs, cfg, samples, discarded)


def pack_pad_last_document(
    docs: list[DocumentRecord], cfg: PackingConfig
) -> PackingManifest:
    """Sequential fill that pads instead of fragmenting: when the next
    document (with its separator) does not fit in the open sample, the
    remainder becomes masked padding and the document starts the next
    sample.  No document ever fragments."""
    _require_fits(docs, cfg)
    L = cfg.context_length

    samples: list[PackedSample] = []
    cur_pl: list[Placement] = []
    cur_sep: list[int] = []
    pos = 0

    def close(pad: tuple[int, int] | None = None) -> None:
        nonlocal cur_pl, cur_sep, pos
        samples.append(PackedSample(len(samples), tuple(cur_pl), tuple(cur_sep), pad))
        cur_pl, cur_sep, pos = [], [], 0

    for doc in docs:
        n = doc.length
        eff = effective_length(n, cfg)
        if eff > L - pos:
            close((pos, L))
        cur_pl.append(Placement(doc.doc_id, 0, n, len(samples), pos))
        pos += n
        if eff > n:
            cur_sep.append(pos)
            pos += 1
        if pos == L:
            close()
    if pos > 0:
        close((pos, L))
    return _finish(docs, cfg, samples, 0)


class _ResidualIndex:
    """Open-sample lookup for best-fit: the sample with the smallest
    residual capacity that still fits a given need, ties broken toward
    the lowest sample index.

    Residuals are small integers, so samples live in per-residual
    buckets with a flat segment tree of live counts on top answering
    "first non-empty bucket at or above r" in O(log capacity).  Each
    bucket is a heap of sample ids with lazy invalidation: a sample's
    residual only shrinks, so stale entries are detected by comparing
    against the current residual and skipped on access.
    """

    __slots__ = ("_leaves", "_tree", "_heaps", "_residual")

    def __init__(self, capacity: int) -> None:
        leaves = 1
        while leaves < capacity + 1:
            leaves <<= 1
        self._leaves = leaves
        self._tree = [0] * (2 * leaves)
        self._heaps: list[list[int]] = [[] for _ in range(capacity + 1)]
        self._residual: list[int] = []

    def put(self, sample_id: int, residual: int) -> None:
        res = self._residual
        while len(res) <= sample_id:
            res.append(-1)
        res[sample_id] = residual
        heapq.heappush(self._heaps[residual], sample_id)
        tree = self._tree
        i = self._leaves + residual
        while i:
            tree[i] += 1
            i >>= 1

    def take(self, need: int) -> int | None:
        """Pop and return the best sample for ``need``, or None."""
        if need >= len(self._heaps):
            return None
        tree = self._tree
        leaves = self._leaves
        total = tree[1]
        if total == 0:
            return None
        # live samples with residual < need
        before = 0
        lo, hi = leaves, leaves + need
        while lo < hi:
            if lo & 1:
                before += tree[lo]
                lo += 1
            if hi & 1:
                hi -= 1
                before += tree[hi]
            lo >>= 1
            hi >>= 1
        if before == total:
            return None
        # descend to the (before+1)-th live entry, i.e. the smallest fit
        k = before
        node = 1
        while node < leaves:
            node <<= 1
            if tree[node] <= k:
                k -= tree[node]
                node += 1
        residual = node - leaves
        heap = self._heaps[residual]
        res = self._residual
        while res[heap[0]] != residual:
            heapq.heappop(heap)
        sample_id = heapq.heappop(heap)
        res[sample_id] = -1
        i = node
        while i:
            tree[i] -= 1
            i >>= 1
        return sample_id


def pack_best_fit(docs: list[DocumentRecord], cfg: PackingConfig) -> PackingManifest:
    """Whole-document bin packing: each document goes into the open
    sample with the least remaining room that still fits it entirely,
    or opens a new sample when none fits.

    Documents are taken in order of decreasing effective length (ties
    by ascending doc_id) unless ``cfg.online`` asks for corpus order.
    No document ever fragments; sample residuals become padding.
    """
    _require_fits(docs, cfg)
    L = cfg.context_length

    items = docs
    if not cfg.online:
        items = sorted(docs, key=lambda d: (-effective_length(d.length, cfg), d.doc_id))

    index = _ResidualIndex(L)
    fills: list[int] = []
    placements: list[list[Placement]] = []
    separators: list[list[int]] = []
    for doc in items:
        n = doc.length
        eff = effective_length(n, cfg)
        sample_id = index.take(eff)
        if sample_id is None:
            sample_id = len(fills)
            fills.append(0)
            placements.append([])
            separators.append([])
        pos = fills[sample_id]
        placements[sample_id].append(Placement(doc.doc_id, 0, n, sample_id, pos))
        if eff > n:
            separators[sample_id].append(pos + n)
        fill = pos + eff
        fills[sample_id] = fill
        if fill < L:
            index.put(sample_id, L - fill)

    samples = [
        PackedSample(
            i,
            tuple(placements[i]),
            tuple(separators[i]),
            (fills[i], L) if fills[i] < L else None,
        )
        for i in range(len(fills))
    ]
    return _finish(docs, cfg, samples, 0)


_DISPATCH = {
    Strategy.CONCAT_THEN_SPLIT: pack_concat_then_split,
    Strategy.RESTART_LAST_DOCUMENT: pack_restart_last_document,
    Strategy.PAD_LAST_DOCUMENT: pack_pad_last_document,
    Strategy.BEST_FIT: pack_best_fit,
}


def pack_corpus(docs: list[DocumentRecord], cfg: PackingConfig) -> PackingManifest:
    """Full pipeline: apply the configured long-document policy, pack
    with the configured strategy, and record any dropped documents on
    the manifest."""
    retained, dropped = apply_policy(docs, cfg)
    manifest = _DISPATCH[cfg.strategy](retained, cfg)
    if dropped:
        manifest = replace(
            manifest, documents=replace(manifest.documents, dropped=dropped)
        )
    return manifest
