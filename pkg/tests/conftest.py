import numpy as np
import pytest

from nlqrm.model import ModelParams


def scaled(omega=0.1, big_omega=1.0, g1=0.0, g2=0.0, eps=0.0) -> ModelParams:
    """Params with g1 in units of g_s, g2 in units of g_t and eps in units of Omega."""
    g_s = np.sqrt(omega * big_omega) / 2.0
    g_t = omega / 2.0
    return ModelParams(omega, big_omega, g1 * g_s, g2 * g_t, eps * big_omega)


def kron_hamiltonian(p: ModelParams, n_c: int) -> np.ndarray:
    """Dense H built from ladder-operator matrices; basis index 2n + s."""
    a = np.diag(np.sqrt(np.arange(1, n_c)), 1)
    x = a + a.T
    x2 = a.T @ a.T + a @ a
    sz = np.diag([1.0, -1.0])
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    eye_b, eye_s = np.eye(n_c), np.eye(2)
    return (
        p.omega * np.kron(a.T @ a, eye_s)
        + 0.5 * p.big_omega * np.kron(eye_b, sx)
        + p.g1 * np.kron(x, sz)
        + p.g2 * np.kron(x2, sz)
        - p.eps * np.kron(eye_b, sz)
    )


@pytest.fixture
def decoupled() -> ModelParams:
    return ModelParams(0.1, 1.0)


# (criterion, passed, detail) lines collected by the acceptance module
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
