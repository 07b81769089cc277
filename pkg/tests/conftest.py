from pathlib import Path

import pytest

from grafcet_analyzer.frontend import parse, parse_file

CORPUS = Path(__file__).parent / "corpus"


def load(name: str):
    return parse_file(CORPUS / name)


@pytest.fixture
def corpus():
    return CORPUS


@pytest.fixture(scope="session")
def g20():
    return load("g20.grafcet")


@pytest.fixture
def grafcet_from():
    return parse
