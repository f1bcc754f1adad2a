import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    """A small generated suite, produced through the generator CLI."""
    d = tmp_path_factory.mktemp("suite")
    out = d / "ds"
    r = subprocess.run(
        [
            sys.executable,
            "-m",
            "dodona.cli",
            "gen",
            "--seed",
            "3",
            "--families",
            "identity,arithmetic",
            "--max-results",
            "8",
            "--out",
            str(out),
        ],
        capture_output=True,
        text=True,
        timeout=300,
    )
    assert r.returncode == 0, r.stderr
    return out
