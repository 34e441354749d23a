from __future__ import annotations

import os
import sys
from pathlib import Path

# The witness cache reads REDIS_URL at import time; tests run without Redis
os.environ.pop("REDIS_URL", None)
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

import pytest

from gforge.corpus import entry
from gforge.logic_syntax import Signature
from gforge.normal_form import identity_split, normalize


@pytest.fixture
def binary_sig() -> Signature:
    return Signature((("R", 2), ("P", 1)))


@pytest.fixture
def normal_form():
    """Identity-split normal form of a corpus entry: (sentence, nf)."""

    def build(name: str):
        sentence = entry(name).sentence()
        nf, _ = normalize(sentence, identity_split(sentence))
        return sentence, nf

    return build
