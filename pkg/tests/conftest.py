from __future__ import annotations

import glob
import os

import pytest

from parmodel import parse_model

MODELS_DIR = os.path.join(os.path.dirname(__file__), "..", "models")


def corpus_paths() -> list:
    return sorted(glob.glob(os.path.join(MODELS_DIR, "*.pmod")))


def load_corpus_model(path: str):
    with open(path, encoding="utf-8") as fh:
        source = fh.read()
    result = parse_model(source)
    assert result.ok, f"{path}: {[d.render() for d in result.diagnostics]}"
    return result.model


@pytest.fixture
def pi_path() -> str:
    return os.path.join(MODELS_DIR, "pi_montecarlo.pmod")


@pytest.fixture
def models_dir() -> str:
    return MODELS_DIR
