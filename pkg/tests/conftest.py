import os

import pytest
from hypothesis import settings

import criteria

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")

OPT_IN = {"slow": "ABS_POLAR_SLOW", "extended": "ABS_POLAR_EXTENDED"}


def pytest_collection_modifyitems(config, items):
    for item in items:
        for marker, env in OPT_IN.items():
            if marker in item.keywords and os.environ.get(env) != "1":
                item.add_marker(pytest.mark.skip(reason=f"opt in with {env}=1"))


def pytest_terminal_summary(terminalreporter):
    if not criteria.RESULTS:
        return
    from abs_polar.decoder import POOL_HIGH_WATER

    terminalreporter.section("acceptance criteria")
    for line in criteria.summary_lines():
        terminalreporter.write_line(line)
    for family, peaks in POOL_HIGH_WATER.items():
        terminalreporter.write_line(
            f"pool peaks over the whole session, {family}: "
            f"probabilities {peaks['prob']:.0f}L, bits {peaks['bit']:.0f}L")
