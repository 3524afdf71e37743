import json

import pytest

from cvqode.cli import cmd_train


@pytest.fixture(scope="session")
def linear_run(tmp_path_factory):
    """The shipped linear preset trained once per session: (output dir, run record, exit code)."""
    out = tmp_path_factory.mktemp("linear_run")
    code = cmd_train("linear", str(out))
    return out, json.loads((out / "run.json").read_text()), code


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
