import numpy as np
import pytest

ACCEPTANCE_LINES = []


def project_dense(H, n, target=0):
    """Independent oracle: restrict a dense N x N matrix to span{|alpha>, |beta>}
    with |beta> uniform over the non-target indices."""
    alpha = np.zeros(n)
    alpha[target] = 1.0
    beta = np.full(n, 1.0 / np.sqrt(n - 1))
    beta[target] = 0.0
    B = np.column_stack([alpha, beta])
    return B.T @ np.asarray(H) @ B


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def report():
    """Collects one pass/fail line per acceptance criterion."""

    def _report(label, ok, detail=""):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip())
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
