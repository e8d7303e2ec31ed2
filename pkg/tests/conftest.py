import pathlib

import pytest

from heterotest.model_io import load_model_file

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir():
    return MODELS


@pytest.fixture(scope="session")
def ps2():
    return load_model_file(MODELS / "ps2.json")[1]


@pytest.fixture(scope="session")
def counter():
    return load_model_file(MODELS / "counter.json")[1]


@pytest.fixture(scope="session")
def counter_testable():
    return load_model_file(MODELS / "counter_testable.json")[1]


@pytest.fixture()
def ps2_heterotic():
    return load_model_file(MODELS / "ps2_heterotic.json")[1]
