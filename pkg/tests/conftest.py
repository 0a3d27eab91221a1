import numpy as np
import pytest
from hypothesis import settings

from wordentropy.toy import deterministic_model, toy_model_a, toy_model_b

settings.register_profile("ci", max_examples=50, deadline=None)
settings.register_profile("dev", max_examples=15, deadline=None)
settings.load_profile("ci")

np.seterr(over="raise", invalid="raise", divide="raise")


@pytest.fixture
def model_a():
    return toy_model_a()


@pytest.fixture
def model_b():
    return toy_model_b()


@pytest.fixture
def det_model():
    return deterministic_model()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for label in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[label])
