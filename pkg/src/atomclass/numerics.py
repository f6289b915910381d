"""Dense symmetric linear-algebra kernels.

Everything here is small-matrix work (feature dimension ``m`` is at most a few
thousand), so LAPACK through :mod:`numpy.linalg` does the heavy lifting.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

SYMMETRY_RTOL = 1e-10
SINGULAR_EIG = 1e-12
MAX_DIM = 4096


@dataclass(frozen=True)
class SymEig:
    """Eigenpairs of a symmetric matrix, eigenvalues in descending order.

    Column ``k`` of ``eigenvectors`` pairs with ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T


def _check_symmetric(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > SYMMETRY_RTOL * max(scale, 1.0):
        raise ValueError(f"{name} is not symmetric")
    return A


def sym_eig(A):
    """Eigendecomposition of a symmetric matrix.

    Eigenvalues come back sorted in descending order. Each eigenvector's sign
    is fixed so that its largest-magnitude entry (lowest index on ties) is
    positive, which makes the output reproducible across calls.

    Raises
    ------
    ValueError
        If ``A`` is not square, not finite, or not symmetric.
    NumericalError
        If LAPACK fails to converge.
    """
    A = _check_symmetric(A)
    if A.shape[0] > MAX_DIM:
        raise ValueError(f"matrix dimension {A.shape[0]} exceeds {MAX_DIM}")
    try:
        lam, U = np.linalg.eigh(0.5 * (A + A.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}") from exc
    lam = lam[::-1]
    U = U[:, ::-1]
    if U.size:
        pivot = np.argmax(np.abs(U), axis=0)
        signs = np.sign(U[pivot, np.arange(U.shape[1])])
        signs[signs == 0] = 1.0
        U = U * signs
    return SymEig(np.ascontiguousarray(lam), np.ascontiguousarray(U))


def spd_solve(R, x, check=True):
    """Solve ``R y = x`` for symmetric positive-definite ``R``.

    Broadcasts over leading dimensions: ``R`` may be ``(..., m, m)`` with
    ``x`` of shape ``(..., m)``. With ``check`` the smallest eigenvalue is
    compared against ``SINGULAR_EIG`` first; callers that already guarantee a
    spectral lower bound can skip that cost.
    """
    R = np.asarray(R, dtype=float)
    x = np.asarray(x, dtype=float)
    if R.shape[-1] != R.shape[-2] or x.shape[-1] != R.shape[-1]:
        raise ValueError(f"shape mismatch: R {R.shape}, x {x.shape}")
    if check:
        lam_min = np.linalg.eigvalsh(R)[..., 0]
        if np.any(lam_min < SINGULAR_EIG):
            raise NumericalError(
                f"matrix is numerically singular (min eigenvalue {np.min(lam_min):.3e})"
            )
    try:
        return np.linalg.solve(R, x[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular matrix: {exc}") from exc


def project_spectral_box(G, rho_minus, rho_plus):
    """Minimize ``<G, R>`` over symmetric ``R`` with spectrum in ``[rho_minus, rho_plus]``.

    Directions where ``G`` has a positive eigenvalue get ``rho_minus``, the
    rest (negative *and* zero) get ``rho_plus``.
    """
    if not rho_minus > 0:
        raise ValueError("rho_minus must be positive")
    if not rho_plus > rho_minus:
        raise ValueError("rho_plus must exceed rho_minus")
    eig = sym_eig(G)
    r = np.where(eig.eigenvalues > 0, rho_minus, rho_plus)
    U = eig.eigenvectors
    out = (U * r) @ U.T
    return 0.5 * (out + out.T)


def simplex_vertex_argmin(g):
    """One-hot vector at the first index attaining ``min(g)``."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("g must be a non-empty vector")
    if np.any(np.isnan(g)):
        raise ValueError("g contains NaN")
    out = np.zeros_like(g)
    out[int(np.argmin(g))] = 1.0
    return out


def in_spectral_box(R, rho_minus, rho_plus, atol=1e-8):
    """True when ``R`` is symmetric with every eigenvalue in the closed box (within ``atol``)."""
    R = np.asarray(R, dtype=float)
    if np.linalg.norm(R - R.T) > atol * max(1.0, np.linalg.norm(R)):
        return False
    lam = np.linalg.eigvalsh(R)
    return bool(lam[0] >= rho_minus - atol and lam[-1] <= rho_plus + atol)
