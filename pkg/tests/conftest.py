import os
import sys

import hypothesis
import numpy as np
import pytest

from zchange import limits

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session", autouse=True)
def table_cache(tmp_path_factory):
    """Keep every critical-value table written by the suite in a private directory."""
    path = tmp_path_factory.mktemp("tables")
    old = os.environ.get(limits.CACHE_ENV)
    os.environ[limits.CACHE_ENV] = str(path)
    yield path
    if old is None:
        os.environ.pop(limits.CACHE_ENV, None)
    else:
        os.environ[limits.CACHE_ENV] = old


@pytest.fixture(scope="session")
def small_table_2d():
    table, _ = limits.load_or_simulate(2, grid_n=1024, reps=4000, seed=99)
    return table


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(results.values(), key=lambda r: r[1]):
            terminalreporter.write_line(line)
