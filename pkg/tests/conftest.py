import numpy as np
import pytest
from scipy.stats import unitary_group

from ctrlop import Operator


def random_unitary(dim: int, seed: int) -> np.ndarray:
    return unitary_group.rvs(dim, random_state=seed)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def qubit_op(m) -> Operator:
    m = np.asarray(m, complex)
    n = int(np.log2(m.shape[0]))
    return Operator(m, (2,) * n, (2,) * n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: dict[int, bool] = {}


def record(criterion: int, ok: bool, detail: str = "") -> None:
    """Store a verdict, print it, then fail the calling test if it is red."""
    ACCEPTANCE[criterion] = ACCEPTANCE.get(criterion, True) and bool(ok)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"criterion {criterion} failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ACCEPTANCE[k] else 'FAIL'}")
