import mpmath
import pytest


@pytest.fixture(autouse=True)
def _mp_precision():
    with mpmath.workdps(50):
        yield


def mp_kernel(rho, rho0, dt):
    """Closed-form kernel in 50-digit arithmetic (``rho0 = 0`` uses the limit)."""
    rho, rho0, dt = mpmath.mpf(rho), mpmath.mpf(rho0), mpmath.mpf(dt)
    pre = mpmath.exp(-dt) / (2 * mpmath.pi * mpmath.sqrt(4 * mpmath.pi * dt))
    gauss = mpmath.exp(-(rho ** 2 + rho0 ** 2) / (4 * dt))
    if rho0 == 0:
        ratio = 1 / (2 * dt) if rho == 0 else rho / (2 * dt * mpmath.sinh(rho))
    elif rho == 0:
        ratio = rho0 / (2 * dt * mpmath.sinh(rho0))
    else:
        ratio = mpmath.sinh(rho * rho0 / (2 * dt)) / (mpmath.sinh(rho0) * mpmath.sinh(rho))
    return pre * ratio * gauss


#: One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
