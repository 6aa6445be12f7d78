"""Shared helpers for the test suite: corpus builders and generators."""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np

from seqpack import DocumentRecord, PackingConfig, Strategy


def docs_from_lengths(lengths, prefix="d") -> list[DocumentRecord]:
    return [DocumentRecord(f"{prefix}{i}", n) for i, n in enumerate(lengths)]


def make_config(strategy, context_length=5, **kwargs) -> PackingConfig:
    return PackingConfig(context_length=context_length, strategy=strategy, **kwargs)


def random_lengths(rng: random.Random, count: int, max_len: int) -> list[int]:
    return [rng.randint(1, max_len) for _ in range(count)]


def write_token_corpus(
    directory: Path, lengths, rng: random.Random, store_name: str = "tokens.bin"
) -> tuple[Path, dict[str, list[int]]]:
    """Write a full-mode corpus: one flat token store plus a JSONL index
    pointing into it.  Returns the corpus path and the tokens per doc."""
    tokens: dict[str, list[int]] = {}
    blob = bytearray()
    lines = []
    offset = 0
    for i, n in enumerate(lengths):
        doc_id = f"d{i}"
        ids = [rng.getrandbits(31) for _ in range(n)]
        tokens[doc_id] = ids
        blob += np.asarray(ids, dtype="<u4").tobytes()
        lines.append(
            json.dumps(
                {"doc_id": doc_id, "length": n, "token_file": store_name, "offset": offset}
            )
        )
        offset += 4 * n
    (directory / store_name).write_bytes(bytes(blob))
    corpus_path = directory / "corpus.jsonl"
    corpus_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return corpus_path, tokens


def write_lengths_corpus(directory: Path, lengths, name: str = "corpus.jsonl") -> Path:
    lines = [
        json.dumps({"doc_id": f"d{i}", "length": n}) for i, n in enumerate(lengths)
    ]
    path = directory / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


ALL_STRATEGIES = (
    Strategy.CONCAT_THEN_SPLIT,
    Strategy.RESTART_LAST_DOCUMENT,
    Strategy.PAD_LAST_DOCUMENT,
    Strategy.BEST_FIT,
)
