from pathlib import Path

import pytest

from choreo.services.syntax import parse

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def load_sample(name: str):
    return parse((SAMPLES / f"{name}.chor").read_text(encoding="utf-8"))


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES


@pytest.fixture
def intro():
    return load_sample("intro")


@pytest.fixture
def intro_connected():
    return load_sample("intro_connected")


@pytest.fixture
def parallel():
    return load_sample("parallel")


@pytest.fixture
def two_buyers():
    return load_sample("two_buyers")


@pytest.fixture
def same_roles():
    return load_sample("same_roles")
