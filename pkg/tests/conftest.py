import numpy as np
import pytest

from patomo import _kernels
from patomo.operators import AcquisitionGeometry, ImageGrid, build_radon

BACKENDS = ["python"] + (["cython"] if _kernels.BACKEND == "cython" else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_op(n, angles, backend=None):
    return build_radon(ImageGrid(n), AcquisitionGeometry(n, tuple(angles)), backend=backend)


def uniform_angles(count, start=-90.0, span=180.0):
    return tuple(start + span * np.arange(count) / count)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, passed, detail):
    ACCEPTANCE[criterion] = (bool(passed), detail)
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if passed else 'FAIL'}  {detail}")
