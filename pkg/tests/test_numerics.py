import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from atomclass.errors import NumericalError
from atomclass.numerics import (
    in_spectral_box, project_spectral_box, simplex_vertex_argmin, spd_solve, sym_eig,
)
from conftest import random_spectral_box_matrix


def random_symmetric(rng, m):
    B = rng.standard_normal((m, m))
    return B + B.T


class TestSymEig:
    def test_diagonal(self):
        eig = sym_eig(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(eig.eigenvalues, [3, 2, 1])
        P = np.abs(eig.eigenvectors)
        np.testing.assert_allclose(P, np.eye(3)[:, [0, 2, 1]])

    def test_two_by_two(self):
        eig = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(eig.eigenvalues, [3, 1])

    @pytest.mark.parametrize("seed", range(5))
    def test_reconstruction_and_orthonormality(self, seed):
        A = random_symmetric(np.random.default_rng(seed), 20)
        eig = sym_eig(A)
        U = eig.eigenvectors
        assert np.linalg.norm(eig.reconstruct() - A) <= 1e-8 * max(1, np.linalg.norm(A))
        assert np.linalg.norm(U.T @ U - np.eye(20)) <= 1e-8
        assert np.all(np.diff(eig.eigenvalues) <= 0)
        assert abs(eig.eigenvalues.sum() - np.trace(A)) <= 1e-8 * np.linalg.norm(A)

    def test_deterministic(self):
        A = random_symmetric(np.random.default_rng(1), 7)
        a, b = sym_eig(A), sym_eig(A.copy())
        assert np.array_equal(a.eigenvalues, b.eigenvalues)
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            sym_eig(np.ones((2, 3)))


class TestSpdSolve:
    def test_identity(self):
        x = np.array([0.3, -1.0, 2.0])
        np.testing.assert_allclose(spd_solve(np.eye(3), x), x)

    def test_diagonal(self):
        np.testing.assert_allclose(spd_solve(np.diag([2.0, 4.0]), [2.0, 4.0]), [1.0, 1.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_residual(self, seed):
        rng = np.random.default_rng(seed)
        R = random_spectral_box_matrix(rng, 10, 0.1, 3.0)
        x = rng.standard_normal(10)
        y = spd_solve(R, x)
        assert np.linalg.norm(R @ y - x) <= 1e-8 * np.linalg.norm(x)

    def test_batched(self):
        rng = np.random.default_rng(0)
        R = np.stack([random_spectral_box_matrix(rng, 4, 0.5, 2.0) for _ in range(6)])
        X = rng.standard_normal((6, 4))
        Y = spd_solve(R, X)
        for k in range(6):
            np.testing.assert_allclose(R[k] @ Y[k], X[k], atol=1e-10)

    def test_singular(self):
        with pytest.raises(NumericalError):
            spd_solve(np.diag([1.0, 1e-14]), [1.0, 1.0])


class TestSpectralBox:
    def test_diagonal_sign_rule(self):
        out = project_spectral_box(np.diag([2.0, -3.0]), 0.1, 1.0)
        np.testing.assert_allclose(out, np.diag([0.1, 1.0]), atol=1e-14)

    def test_zero_gradient(self):
        np.testing.assert_allclose(project_spectral_box(np.zeros((4, 4)), 0.1, 1.0), np.eye(4))

    @pytest.mark.parametrize("seed", range(3))
    def test_monte_carlo_optimality(self, seed):
        rng = np.random.default_rng(seed)
        G = random_symmetric(rng, 5)
        best = np.sum(G * project_spectral_box(G, 0.1, 1.0))
        for _ in range(2000):
            R = random_spectral_box_matrix(rng, 5, 0.1, 1.0)
            assert best <= np.sum(G * R) + 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_output_spectrum_and_scale_invariance(self, seed):
        rng = np.random.default_rng(seed)
        G = random_symmetric(rng, 6)
        out = project_spectral_box(G, 0.2, 1.5)
        lam = np.linalg.eigvalsh(out)
        assert np.all(np.isclose(lam, 0.2) | np.isclose(lam, 1.5))
        assert in_spectral_box(out, 0.2, 1.5)
        np.testing.assert_allclose(project_spectral_box(3.7 * G, 0.2, 1.5), out, atol=1e-12)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            project_spectral_box(np.eye(2), 0.0, 1.0)
        with pytest.raises(ValueError):
            project_spectral_box(np.eye(2), 1.0, 1.0)


class TestSimplexVertex:
    def test_argmin(self):
        np.testing.assert_array_equal(simplex_vertex_argmin([0.5, -1.2, 0.3]), [0, 1, 0])

    def test_tie_break(self):
        np.testing.assert_array_equal(simplex_vertex_argmin([1.0, 1.0, 1.0]), [1, 0, 0])

    def test_nan(self):
        with pytest.raises(ValueError):
            simplex_vertex_argmin([0.0, np.nan])

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-1e6, 1e6)))
    def test_matches_vertex_enumeration(self, g):
        out = simplex_vertex_argmin(g)
        values = [g[k] for k in range(g.size)]
        assert out.sum() == 1
        assert g @ out == min(values)
