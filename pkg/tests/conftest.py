import numpy as np
import pytest

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def sinkhorn_mrp(n, k, rng, power=3.0, sweeps=3000):
    """Dense random n x k MRP matrix by alternate scaling of an extended matrix."""
    if k == n:
        E = rng.random((n, n)) ** power + 1e-3
        target = np.ones(n)
    else:
        E = rng.random((n, k + 1)) ** power + 1e-3
        target = np.array([1.0] * k + [n - k])
    for _ in range(sweeps):
        E /= E.sum(axis=1, keepdims=True)
        E *= target / E.sum(axis=0)
    P = E[:, :k].copy()
    P /= P.sum(axis=0)
    if k == n:
        for _ in range(20):
            P /= P.sum(axis=1, keepdims=True)
            P /= P.sum(axis=0)
    return P


def mixture_mrp(n, k, rng, terms=None):
    """Sparse random MRP matrix as a random mixture of random top-k rankings."""
    terms = terms or int(rng.integers(1, 2 * n + 2))
    w = rng.dirichlet(np.ones(terms))
    P = np.zeros((n, k))
    for a in w:
        r = rng.permutation(n)[:k]
        P[r, np.arange(k)] += a
    return P


def random_mrp(n, k, rng):
    return sinkhorn_mrp(n, k, rng) if rng.random() < 0.5 else mixture_mrp(n, k, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20221019)


@pytest.fixture
def acceptance():
    """Record a named criterion's pass/fail line for the terminal summary."""
    def record(name, ok, detail=""):
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
