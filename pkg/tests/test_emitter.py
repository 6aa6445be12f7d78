from __future__ import annotations

import io
import random
import struct

import numpy as np
import pytest

from seqpack import (
    DecodeError,
    EmitError,
    InMemoryTokenStore,
    Strategy,
    decode_samples,
    emit_samples,
    pack_corpus,
)
from seqpack.emitter import MAGIC, VERSION
from seqpack.model import PackedSample, Placement

from util import ALL_STRATEGIES, docs_from_lengths, make_config, random_lengths

HEADER = struct.Struct("<4sHHIQ")


def _toy_store():
    return InMemoryTokenStore(
        {"A": [10, 11, 12], "B": [20, 21, 22, 23], "C": [30, 31]}
    )


def _emit(manifest, store=None, **kw):
    sink = io.BytesIO()
    summary = emit_samples(manifest, store or _toy_store(), sink, **kw)
    return sink.getvalue(), summary


def _random_store(rng, lengths, prefix="d"):
    return InMemoryTokenStore(
        {f"{prefix}{i}": [rng.randrange(2, 2**31) for _ in range(n)] for i, n in enumerate(lengths)}
    )


def test_header_fields(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, summary = _emit(m)
    magic, version, flags, L, count = HEADER.unpack(blob[: HEADER.size])
    assert magic == MAGIC == b"PKSB"
    assert version == VERSION == 1
    assert flags == 3  # mask and boundary planes present
    assert L == 5
    assert count == 3
    assert summary.samples_written == 3
    assert summary.tokens_written == 15


def test_sample_planes_bit_exact(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    body = blob[HEADER.size :]
    # sample 0: A's three tokens, separator, padding
    tokens = np.frombuffer(body[:20], dtype="<u4")
    assert tokens.tolist() == [10, 11, 12, 1, 0]
    mask = np.frombuffer(body[20:25], dtype=np.uint8)
    assert mask.tolist() == [1, 1, 1, 1, 0]
    (n_bounds,) = struct.unpack("<H", body[25:27])
    assert n_bounds == 1
    assert np.frombuffer(body[27:31], dtype="<u4").tolist() == [0]


def test_mask_separators_flag(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m, mask_separators=True)
    body = blob[HEADER.size :]
    mask = np.frombuffer(body[20:25], dtype=np.uint8)
    assert mask.tolist() == [1, 1, 1, 0, 0]


def test_emission_is_deterministic(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.BEST_FIT))
    blob1, s1 = _emit(m)
    blob2, s2 = _emit(m)
    assert blob1 == blob2
    assert s1.checksum == s2.checksum


def test_decode_round_trip(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, summary = _emit(m)
    result = decode_samples(io.BytesIO(blob), m, summary.checksum)
    assert result.checksum == summary.checksum
    assert result.zero_mask_tokens == m.metrics.padding_token_count == 3
    store = _toy_store()
    for doc_id in ("A", "B", "C"):
        n = {"A": 3, "B": 4, "C": 2}[doc_id]
        assert result.documents[doc_id].tolist() == store.get(doc_id, 0, n).tolist()


def test_decode_reassembles_fragments_and_partial_prefixes(toy_docs):
    store = _toy_store()
    # concat fragments B across two samples; C loses its last token
    m = pack_corpus(toy_docs, make_config(Strategy.CONCAT_THEN_SPLIT))
    blob, summary = _emit(m, store)
    result = decode_samples(io.BytesIO(blob), m, summary.checksum)
    assert result.documents["A"].tolist() == [10, 11, 12]
    assert result.documents["B"].tolist() == [20, 21, 22, 23]
    assert result.documents["C"].tolist() == [30]  # covered prefix only
    assert result.zero_mask_tokens == 0


def test_decode_rejects_truncation(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    with pytest.raises(DecodeError, match="truncation"):
        decode_samples(io.BytesIO(blob[:-3]), m)


def test_decode_rejects_trailing_bytes(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    with pytest.raises(DecodeError, match="trailing bytes"):
        decode_samples(io.BytesIO(blob + b"\x00"), m)


def test_decode_rejects_wrong_magic(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    with pytest.raises(DecodeError, match="not a packed sample stream"):
        decode_samples(io.BytesIO(b"XXXX" + blob[4:]), m)


def test_decode_rejects_wrong_version(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    tampered = blob[:4] + struct.pack("<H", 9) + blob[6:]
    with pytest.raises(DecodeError, match="unsupported stream version"):
        decode_samples(io.BytesIO(tampered), m)


def test_decode_rejects_checksum_mismatch(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, summary = _emit(m)
    # flip one token byte in the first sample plane
    i = HEADER.size
    tampered = blob[:i] + bytes([blob[i] ^ 1]) + blob[i + 1 :]
    with pytest.raises(DecodeError, match="checksum mismatch"):
        decode_samples(io.BytesIO(tampered), m, summary.checksum)


def test_decode_rejects_manifest_stream_mismatch(toy_docs):
    pld = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    cts = pack_corpus(toy_docs, make_config(Strategy.CONCAT_THEN_SPLIT))
    blob, _ = _emit(pld)
    with pytest.raises(DecodeError, match="manifest/stream mismatch"):
        decode_samples(io.BytesIO(blob), cts)


def test_decode_rejects_boundary_disagreement(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    blob, _ = _emit(m)
    # boundary plane of sample 0 sits after token+mask planes; overwrite its offset
    i = HEADER.size + 20 + 5 + 2
    tampered = blob[:i] + struct.pack("<I", 2) + blob[i + 4 :]
    with pytest.raises(DecodeError, match="boundary plane"):
        decode_samples(io.BytesIO(tampered), m)


def test_emit_rejects_short_token_store(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))

    class Short:
        def get(self, doc_id, start, end):
            return np.zeros(max(0, end - start - 1), dtype="<u4")

    with pytest.raises(EmitError, match="token store returned"):
        emit_samples(m, Short(), io.BytesIO())


def test_emit_rejects_boundary_overflow(toy_docs):
    m = pack_corpus(toy_docs, make_config(Strategy.PAD_LAST_DOCUMENT))
    # graft 65536 single-token placements onto one sample
    many = tuple(
        Placement("A", 0, 1, 0, 0) for _ in range(65536)
    )
    from dataclasses import replace

    bad = replace(m, samples=(replace(m.samples[0], placements=many),) + m.samples[1:])
    with pytest.raises(EmitError, match="boundary plane holds at most"):
        emit_samples(bad, _toy_store(), io.BytesIO())


def test_random_round_trips_across_strategies():
    rng = random.Random(51)
    for trial in range(12):
        lengths = random_lengths(rng, rng.randint(1, 30), 10)
        docs = docs_from_lengths(lengths)
        store = _random_store(rng, lengths)
        strategy = ALL_STRATEGIES[trial % 4]
        cfg = make_config(
            strategy,
            context_length=10,
            sep_after_every_doc=rng.random() < 0.5,
            drop_final_partial=rng.random() < 0.5,
        )
        m = pack_corpus(docs, cfg)
        sink = io.BytesIO()
        summary = emit_samples(m, store, sink)
        result = decode_samples(io.BytesIO(sink.getvalue()), m, summary.checksum)
        assert result.zero_mask_tokens == m.metrics.padding_token_count
        for doc_id, got in result.documents.items():
            expected = store.get(doc_id, 0, len(got))
            assert np.array_equal(got, expected)


def test_decode_empty_stream_round_trip():
    m = pack_corpus([], make_config(Strategy.BEST_FIT))
    blob, summary = _emit(m, InMemoryTokenStore({}))
    assert len(blob) == HEADER.size
    result = decode_samples(io.BytesIO(blob), m, summary.checksum)
    assert result.documents == {}
    assert result.zero_mask_tokens == 0
