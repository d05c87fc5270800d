import numpy as np
import pytest

from qworkbench.rng import make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


def unitary_error(U: np.ndarray) -> float:
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max())


# one small invocation per CLI subcommand and figure
CLI_SMALL_RUNS = {
    "sample": ["sample", "--n", "4", "--depth", "2", "--shots", "20"],
    "analyze": ["analyze", "--n", "4", "--instances", "3"],
    "verify": ["verify", "--n", "4", "--depth", "4", "--shots", "200"],
    "certify": ["certify", "--rows", "1", "--cols", "2", "--runs", "3", "--eps", "0.2", "--delta", "0.2"],
    "qmc": ["qmc", "--n", "2", "--m", "6", "--mode", "mc", "--steps", "2000"],
    "ease": ["ease", "--model", "ladder", "--max_iters", "20", "--restarts", "1"],
    "gadget": ["gadget", "--vertices", "3", "--edges", "0-1,1-2"],
    "fig4.4": ["reproduce", "fig4.4", "--n", "4..6:2", "--instances", "3"],
    "fig4.5": ["reproduce", "fig4.5", "--n", "4", "--instances", "3"],
    "fig10.1": ["reproduce", "fig10.1", "--instances", "2", "--alpha", "0,200", "--n", "3", "--m", "10"],
    "fig11.2a": ["reproduce", "fig11.2a", "--instances", "2", "--d", "2", "--restarts", "1"],
    "fig11.4": ["reproduce", "fig11.4", "--jperp", "0.8", "--jx", "1.0", "--restarts", "1"],
    "table7.5": ["reproduce", "table7.5"],
}


# acceptance verdicts, printed once at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
