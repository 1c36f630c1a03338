import numpy as np
import pytest

from gammafilm.potential import PotentialSpec


def diag(*v):
    return np.diag(np.asarray(v, dtype=float))


@pytest.fixture(scope="session")
def iso_spec():
    """A' = B' = 0, A3 = -B3 = e3."""
    return PotentialSpec.prototype(diag(0, 0, 1), diag(0, 0, -1))


@pytest.fixture(scope="session")
def generic_spec():
    """A = -B = diag(1, 0, 1): rank-two bulk difference, tilt undefined-free."""
    return PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1))


@pytest.fixture(scope="session")
def e1_spec():
    """A = -B = e1 (x) e1: rank-one bulk with lambda = 0."""
    return PotentialSpec.prototype(diag(1, 0, 0), diag(-1, 0, 0))


@pytest.fixture(scope="session")
def rigid_spec():
    """Wells I and diag(2, 1, 2)."""
    return PotentialSpec.prototype(np.eye(3), diag(2, 1, 2))


@pytest.fixture(scope="session")
def k0_iso(iso_spec):
    from gammafilm.profiles import solve_K0

    return solve_K0(iso_spec, ell=4.0, n=256)


@pytest.fixture(scope="session")
def kgamma_generic(generic_spec):
    from gammafilm.profiles import solve_Kgamma

    return solve_Kgamma(generic_spec, 1.0, ell=8.0, grid=(128, 16))


@pytest.fixture(scope="session")
def kinf_e1(e1_spec):
    from gammafilm.profiles import solve_Kinfty

    return solve_Kinfty(e1_spec, 0.0, resolution=32)


# -- acceptance reporting ------------------------------------------------------------------------

ACCEPTANCE_IDS = [f"C{k}" for k in range(1, 12)]
ACCEPTANCE = {}


def verdict(cid: str, ok: bool, detail: str) -> None:
    """Record and print one acceptance line, then fail the calling test if needed."""
    line = f"{cid:>3} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[cid] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for cid in ACCEPTANCE_IDS:
        terminalreporter.write_line(ACCEPTANCE.get(cid, f"{cid:>3} FAIL  not run or errored"))
