"""Case-study losses, the weighted objective, the SON diagnostic and all gradients.

The objective over squared embeddings ``W`` (``n x r``, rows in the simplex) and
per-atom models ``(R_i, pi_i)`` is::

    phi = -beta_g <A_bar, L> + beta_f sum_v f_feature(x_v; R_v)
          + beta_l sum_{v in train} f_label(y_v; pi_v)

with ``L = sum_i sqrt(W[:, i]) sqrt(W[:, i])^T``, ``R_v = sum_i W[v, i] R_i`` and
``pi_v = sum_i W[v, i] pi_i``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import ParameterError
from .numerics import in_spectral_box, spd_solve

EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class TermWeights:
    """Weights of the graph, feature and label terms."""

    beta_g: float = 1.0
    beta_f: float = 2.5
    beta_l: float = 13.0

    def __post_init__(self):
        for name in ("beta_g", "beta_f", "beta_l"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise ParameterError(name, f"must be finite and >= 0, got {val!r}")

    def as_tuple(self):
        return (self.beta_g, self.beta_f, self.beta_l)


@dataclass(frozen=True, eq=False)
class AtomModels:
    """Per-atom covariances ``(r, m, m)`` and label distributions ``(r, K)``."""

    covariances: np.ndarray
    label_dists: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.covariances, dtype=float)
        P = np.asarray(self.label_dists, dtype=float)
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise ValueError(f"covariances must have shape (r, m, m), got {R.shape}")
        if P.ndim != 2 or P.shape[0] != R.shape[0]:
            raise ValueError(f"label_dists must have shape (r, K), got {P.shape}")
        object.__setattr__(self, "covariances", R)
        object.__setattr__(self, "label_dists", P)

    @property
    def r(self):
        return self.covariances.shape[0]

    @property
    def m(self):
        return self.covariances.shape[1]

    @property
    def K(self):
        return self.label_dists.shape[1]

    def is_feasible(self, rho_minus, rho_plus, atol=1e-8):
        """Every covariance in the spectral box and every label vector in the simplex."""
        P = self.label_dists
        if np.any(P < -atol) or np.any(np.abs(P.sum(axis=1) - 1.0) > atol):
            return False
        return all(in_spectral_box(R, rho_minus, rho_plus, atol) for R in self.covariances)

    def copy(self):
        return AtomModels(self.covariances.copy(), self.label_dists.copy())


def check_weight_matrix(W, atol=1e-10):
    """Raise ``ValueError`` unless every row of ``W`` lies in the simplex."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValueError(f"W must be 2-D, got shape {W.shape}")
    if np.any(W < -atol):
        raise ValueError("W has negative entries")
    dev = np.abs(W.sum(axis=1) - 1.0)
    if dev.size and dev.max() > atol:
        raise ValueError(f"W rows do not sum to 1 (max deviation {dev.max():.3e})")
    return W


# ---------------------------------------------------------------- losses

def f_feature(x, R):
    """``(x^T R^{-1} x + tr R) / m``."""
    x = np.asarray(x, dtype=float)
    R = np.asarray(R, dtype=float)
    y = spd_solve(R, x)
    return float((x @ y + np.trace(R)) / x.shape[0])


def f_label(y_tilde, pi):
    """Negative probability assigned to the observed label."""
    pi = np.asarray(pi, dtype=float)
    if not (0 <= y_tilde < pi.shape[0]):
        raise IndexError(f"label {y_tilde} out of range for K={pi.shape[0]}")
    return -float(pi[y_tilde])


def mixed_models(W, models, v):
    """Node ``v``'s covariance and label distribution as ``W``-weighted mixtures."""
    w = np.asarray(W, dtype=float)[v]
    return (
        np.tensordot(w, models.covariances, axes=1),
        w @ models.label_dists,
    )


def _mixed_all(W, models):
    Rv = np.einsum("vi,iab->vab", W, models.covariances)
    return Rv, W @ models.label_dists


def _whitened(features, Rv, check=True):
    """Rows ``R_v^{-1} x_v``."""
    return spd_solve(Rv, features, check=check)


def _train_arrays(instance):
    idx = np.flatnonzero(instance.train_mask)
    return idx, np.asarray(instance.noisy_labels)[idx].astype(np.int64)


# ------------------------------------------------------------- objective

def graph_alignment(polarized, W):
    """``<A_bar, L>`` with ``L = sqrt(W) sqrt(W)^T``."""
    S = np.sqrt(np.clip(W, 0.0, None))
    return float(np.sum(S * (polarized @ S)))


def feature_loss(instance, W, models, check=True):
    X = instance.features
    Rv, _ = _mixed_all(W, models)
    Y = _whitened(X, Rv, check)
    vals = np.einsum("va,va->v", X, Y) + np.trace(Rv, axis1=1, axis2=2)
    return float(np.sum(vals) / X.shape[1])


def label_loss(instance, W, models):
    idx, y = _train_arrays(instance)
    if idx.size == 0:
        return 0.0
    piv = W[idx] @ models.label_dists
    return -float(np.sum(piv[np.arange(idx.size), y]))


def objective_phi(instance, W, models, weights, check=True):
    """Weighted objective value. Terms with zero weight are skipped.

    ``check=False`` skips the singularity test on the mixed covariances.
    """
    W = np.asarray(W, dtype=float)
    bg, bf, bl = weights.as_tuple()
    val = 0.0
    if bg:
        val -= bg * graph_alignment(instance.polarized_float, W)
    if bf:
        val += bf * feature_loss(instance, W, models, check)
    if bl:
        val += bl * label_loss(instance, W, models)
    return float(val)


def son_penalty(W, models):
    """Sum over node pairs of the distance between their mixed models.

    A node's model is flattened to the vector ``[vec(R_v), pi_v]``.
    """
    W = np.asarray(W, dtype=float)
    if W.shape[0] < 2:
        return 0.0
    Rv, piv = _mixed_all(W, models)
    theta = np.hstack([Rv.reshape(W.shape[0], -1), piv])
    return float(np.sum(pdist(theta)))


# ------------------------------------------------------------- gradients

def structural_grad_W(polarized, W, floor=EPS_FLOOR):
    """Unweighted derivative of ``-<A_bar, L>`` with respect to ``W``.

    Entry ``(v, i)`` is ``-sum_u A_bar[u, v] sqrt(W[u, i]) / sqrt(W[v, i])``, the
    denominator clamped below at ``floor``.
    """
    S = np.sqrt(np.clip(W, 0.0, None))
    return -(polarized @ S) / np.sqrt(np.maximum(W, floor))


def feature_grad_W(instance, W, models, check=True):
    """Unweighted derivative of the summed feature loss with respect to ``W``."""
    X = instance.features
    m = X.shape[1]
    Rv, _ = _mixed_all(W, models)
    Y = _whitened(X, Rv, check)
    quad = np.einsum("va,iab,vb->vi", Y, models.covariances, Y)
    tr = np.trace(models.covariances, axis1=1, axis2=2)
    return (tr[None, :] - quad) / m


def label_grad_W(instance, W, models):
    """Unweighted derivative of the summed label loss with respect to ``W``."""
    G = np.zeros(np.shape(W))
    idx, y = _train_arrays(instance)
    if idx.size:
        G[idx] = -models.label_dists[:, y].T
    return G


def grad_W(instance, W, models, weights, floor=EPS_FLOOR):
    """Gradient of ``objective_phi`` with respect to ``W`` (``n x r``)."""
    W = np.asarray(W, dtype=float)
    bg, bf, bl = weights.as_tuple()
    G = np.zeros_like(W)
    if bg:
        G += bg * structural_grad_W(instance.polarized_float, W, floor)
    if bf:
        G += bf * feature_grad_W(instance, W, models)
    if bl:
        G += bl * label_grad_W(instance, W, models)
    return G


def grad_R_all(instance, W, models, weights, check=True):
    """Gradients with respect to every atom covariance, shape ``(r, m, m)``."""
    W = np.asarray(W, dtype=float)
    r, m = models.r, models.m
    bf = weights.beta_f
    if not bf:
        return np.zeros((r, m, m))
    Rv, _ = _mixed_all(W, models)
    Y = _whitened(instance.features, Rv, check)
    outer = np.einsum("vi,va,vb->iab", W, Y, Y)
    mass = W.sum(axis=0)
    G = (mass[:, None, None] * np.eye(m)[None] - outer) * (bf / m)
    return 0.5 * (G + np.swapaxes(G, 1, 2))


def grad_R(instance, W, models, weights, i):
    """Gradient with respect to the covariance of atom ``i``."""
    if not (0 <= i < models.r):
        raise IndexError(f"atom index {i} out of range for r={models.r}")
    return grad_R_all(instance, W, models, weights)[i]


def grad_pi_all(instance, W, models, weights):
    """Gradients with respect to every atom label distribution, shape ``(r, K)``."""
    W = np.asarray(W, dtype=float)
    G = np.zeros((models.r, models.K))
    idx, y = _train_arrays(instance)
    if idx.size and weights.beta_l:
        onehot = np.zeros((idx.size, models.K))
        onehot[np.arange(idx.size), y] = 1.0
        G = -weights.beta_l * (W[idx].T @ onehot)
    return G


def grad_pi(instance, W, models, weights, i):
    """Gradient with respect to the label distribution of atom ``i``."""
    if not (0 <= i < models.r):
        raise IndexError(f"atom index {i} out of range for r={models.r}")
    return grad_pi_all(instance, W, models, weights)[i]
