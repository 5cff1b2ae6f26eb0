import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(scope="session")
def sa_family():
    """set_agreement(3, 2) and its compatible family; the search takes a few seconds."""
    from chromatic_ebp.search import search_compatible_family
    from chromatic_ebp.tasks import set_agreement
    t = set_agreement(3, 2)
    return t, search_compatible_family(t).artifact


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
