import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric(rng, d, rank=None, scale=1.0):
    """Random symmetric matrix with the requested rank (full if None)."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = scale * rng.uniform(0.5, 2.0, d) * rng.choice([-1.0, 1.0], d)
    if rank is not None:
        lam[rank:] = 0.0
    A = (Q * lam) @ Q.T
    return 0.5 * (A + A.T)


_CRITERIA = []


@pytest.fixture
def criterion(capsys):
    """Record one acceptance line; printed immediately and in the session summary."""

    def report(number, ok, detail=""):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _CRITERIA.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
