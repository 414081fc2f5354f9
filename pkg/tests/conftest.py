import math

import numpy as np
import pytest

from bellsim.core import paper_configuration, paper_policy
from bellsim.models import build_model

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def config():
    return paper_configuration()


@pytest.fixture(scope="session")
def policy():
    return paper_policy()


@pytest.fixture(scope="session")
def zoo():
    ids = ("singlet", "sign", "leak", "leak-ablated", "dice:0.9,0.2", "randfac:4:1",
           "resultleak", "adversarial")
    return {i: build_model(i) for i in ids}


def pytest_configure(config):
    np.seterr(all="raise", under="ignore")


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.acceptance_lines():
        terminalreporter.write_line(line)
