import numpy as np
import pytest
from hypothesis import settings

from so3filter import so3

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_rotations(rng, n):
    """Uniform random rotations via the QR trick with a sign fix."""
    q, r = np.linalg.qr(rng.standard_normal((n, 3, 3)))
    q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[:, None, :]
    det = np.linalg.det(q)
    q[det < 0, :, 0] *= -1
    return q


def random_spd(rng, n, min_eig=0.05):
    """Symmetric positive-definite matrices with unit-mean eigenvalues (trace 3)."""
    lam = min_eig + (3 - 3 * min_eig) * rng.dirichlet(np.ones(3), size=n)
    q = random_rotations(rng, n)
    return np.einsum("nij,nj,nkj->nik", q, lam, q)


def small_rotation(delta):
    return so3.exp_map(np.asarray(delta, dtype=float))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
