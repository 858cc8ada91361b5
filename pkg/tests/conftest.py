"""Shared fixtures: reference channels, a CLI runner, and random
doubly-stochastic channel generation for the invariance tests."""

import contextlib
import io

import numpy as np
import pytest

from treerecon import OptimizerConfig, binary_channel, make_channel
from treerecon.cli import main as cli_main


@pytest.fixture(scope="session")
def binary_0301():
    return binary_channel(0.3, 0.1)


@pytest.fixture(scope="session")
def quick_config():
    # fewer starts than the default; plenty for the smooth low-dimensional
    # objectives exercised outside the acceptance tests
    return OptimizerConfig(starts=16, grid_points=100_001)


def _sym_doubly_stochastic(rng, q):
    """Random symmetric doubly stochastic channel (uniform stationary law,
    reversible w.r.t. equidistribution).  Built by symmetric scaling."""
    a = rng.uniform(0.2, 1.0, size=(q, q))
    a = 0.5 * (a + a.T)
    for _ in range(2000):
        d = 1.0 / np.sqrt(a.sum(axis=1))
        a = a * d[:, None] * d[None, :]
        if np.abs(a.sum(axis=1) - 1.0).max() < 1e-13:
            break
    assert np.abs(a.sum(axis=1) - 1.0).max() < 1e-12
    return make_channel(0.5 * (a + a.T))


@pytest.fixture(scope="session")
def sym_channel_factory():
    return _sym_doubly_stochastic


@pytest.fixture()
def run_cli():
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""

    def invoke(argv):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            try:
                code = cli_main(list(argv))
            except SystemExit as exc:
                code = exc.code if isinstance(exc.code, int) else 1
        return code, out.getvalue(), err.getvalue()

    return invoke


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one pass/fail line per acceptance criterion after the run."""
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::test_criterion" in nodeid:
                name = nodeid.split("::")[-1]
                rows[name] = "PASS" if outcome == "passed" else "FAIL"
    if rows:
        terminalreporter.section("acceptance criteria")
        for name in sorted(rows):
            terminalreporter.write_line(f"{name}: {rows[name]}")
