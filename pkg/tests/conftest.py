import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from krylovreg import arnoldi

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    line = f"ACCEPTANCE {number:>2d} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


@pytest.fixture
def acceptance():
    return record_acceptance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, m, n=None):
    n = m if n is None else n
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


# Every Arnoldi recursion started during a test is checked for the relation
# ||A V - V H|| and basis orthogonality when the test finishes.
_RUNS = []
_orig_init = arnoldi.ArnoldiIteration.__init__


def _tracking_init(self, *args, **kwargs):
    _orig_init(self, *args, **kwargs)
    _RUNS.append(self)


@pytest.fixture(autouse=True)
def arnoldi_invariants(request):
    arnoldi.ArnoldiIteration.__init__ = _tracking_init
    _RUNS.clear()
    yield
    arnoldi.ArnoldiIteration.__init__ = _orig_init
    if request.node.get_closest_marker("no_arnoldi_check"):
        _RUNS.clear()
        return
    runs = list(_RUNS)
    _RUNS.clear()
    for it in runs:
        if it.k >= 1 and it.breakdown_tol > 0:
            it.decomposition(it.k).check(it.A, rtol=1e-10)


def pytest_configure(config):
    config.addinivalue_line("markers", "no_arnoldi_check: skip the automatic Arnoldi invariant check")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
