from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqpack import DocumentRecord


@pytest.fixture
def toy_docs() -> list[DocumentRecord]:
    """Three short documents that exercise every strategy's edge at
    context length 5 with separators on."""
    return [DocumentRecord("A", 3), DocumentRecord("B", 4), DocumentRecord("C", 2)]
