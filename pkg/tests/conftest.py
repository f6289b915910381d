import numpy as np
import pytest

from atomclass.datagen import GenParams, generate, instance_from_arrays


def random_spectral_box_matrix(rng, m, rho_minus, rho_plus):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    lam = rng.uniform(rho_minus, rho_plus, m)
    R = (Q * lam) @ Q.T
    return 0.5 * (R + R.T)


def random_small_instance(rng, n=8, m=3, K=2, train_frac=0.5):
    """Small Erdos-Renyi instance with random features and a random training split."""
    upper = np.triu(rng.random((n, n)) < 0.4, 1)
    A = (upper | upper.T).astype(int)
    y = rng.integers(K, size=n)
    train = rng.random(n) < train_frac
    noisy = rng.integers(K, size=n)
    return instance_from_arrays(A, rng.standard_normal((n, m)), y, train, noisy)


def random_simplex_rows(rng, n, r, low=0.05):
    W = rng.uniform(low, 1.0, (n, r))
    return W / W.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def default_instance():
    return generate(GenParams())


@pytest.fixture(scope="session")
def ideal_instance():
    return generate(GenParams(p=1.0, q=0.0, omega=0.001))


ACCEPTANCE_LINES = {}


def record_acceptance(number, passed, detail):
    """Store one criterion outcome; printed in the terminal summary."""
    line = f"acceptance criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
