import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from sublevel_sense.spin import SpinF

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

spins = st.integers(min_value=1, max_value=21).map(SpinF)
integer_spins = st.integers(min_value=1, max_value=8).map(lambda k: SpinF(2 * k))
# keeps away from the exact degeneracies at multiples of pi/2
generic_phases = st.floats(min_value=0.05, max_value=np.pi / 2 - 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_state(rng, dim, count=None):
    shape = (dim,) if count is None else (count, dim)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Call with ``(ok, detail)``; records one PASS/FAIL line and asserts."""

    def check(ok: bool, detail: str):
        number = request.node.get_closest_marker("criterion").args[0]
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return check


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
