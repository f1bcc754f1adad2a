import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dodona.suite import gen_suite  # noqa: E402


@pytest.fixture(scope="session")
def suite_seed0():
    """The desk-scale suite: seed 0, all families, max-results 50.
    Generated once per session and shared by every test that needs it."""
    return gen_suite(0, max_results=50)


@pytest.fixture(scope="session")
def suite_seed0_dir(suite_seed0, tmp_path_factory):
    from dodona.suite import write_suite

    outdir = tmp_path_factory.mktemp("suite0")
    write_suite(suite_seed0, str(outdir))
    return str(outdir)
