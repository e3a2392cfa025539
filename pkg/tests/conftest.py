import numpy as np
import pytest

from gcqw.walk import build_coin

ACCEPTANCE_LINES: list[str] = []


def dense_walk_operator(config) -> np.ndarray:
    """Materialize U_phi from its tensor-product definition (test oracle)."""
    N = config.N
    coin = build_coin(config.coin)
    phases = np.exp(1j * config.phase.phases(N))
    shifts = []
    for c in range(2):
        S = np.zeros((N, N), dtype=complex)
        for n in range(N):
            S[(n + (1 if c == 0 else -1)) % N, n] = phases[n]
        shifts.append(S)
    proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    shift_part = sum(np.kron(proj[c], shifts[c]) for c in range(2))
    return shift_part @ np.kron(coin, np.eye(N))


@pytest.fixture
def dense_operator():
    return dense_walk_operator


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
