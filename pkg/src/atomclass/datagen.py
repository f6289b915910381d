"""Planted-partition instances: SBM graph, Gaussian subspace features, noisy labels."""
from dataclasses import dataclass, asdict, fields
from functools import cached_property

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GenParams:
    """Generator settings. Defaults reproduce the standard experiment."""

    K: int = 3
    n0: int = 300
    p: float = 0.1
    q: float = 0.05
    m: int = 6
    m_omega: int = 4
    omega: float = 0.04
    sigma: float = 1.0
    train_ratio: float = 0.2
    pi_correct: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def n(self):
        return self.K * self.n0

    @property
    def n_train_per_cluster(self):
        return int(round(self.train_ratio * self.n0))

    def validate(self):
        def _int(name, lo):
            val = getattr(self, name)
            if isinstance(val, bool) or int(val) != val or val < lo:
                raise ParameterError(name, f"must be an integer >= {lo}, got {val!r}")

        def _unit(name):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise ParameterError(name, f"must lie in [0, 1], got {val!r}")

        _int("K", 1)
        _int("n0", 1)
        _int("m", 1)
        _int("m_omega", 0)
        for name in ("p", "q", "train_ratio", "pi_correct"):
            _unit(name)
        if self.m_omega > self.m:
            raise ParameterError("m_omega", f"must not exceed m={self.m}, got {self.m_omega}")
        if not (self.omega >= 0 and np.isfinite(self.omega)):
            raise ParameterError("omega", f"must be finite and >= 0, got {self.omega!r}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ParameterError("sigma", f"must be finite and > 0, got {self.sigma!r}")
        if not (0 <= self.seed < 2**64):
            raise ParameterError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for key, val in d.items():
            if key not in kinds:
                raise ParameterError(key, "unknown generator parameter")
            out[key] = int(val) if kinds[key] in (int, "int") else float(val)
        return cls(**out)


@dataclass(frozen=True, eq=False)
class PlantedInstance:
    """A generated graph with node features and partial noisy labels.

    ``noisy_labels`` has length ``n`` and holds ``-1`` on non-training nodes.
    """

    adjacency: np.ndarray
    polarized: np.ndarray
    features: np.ndarray
    true_labels: np.ndarray
    train_mask: np.ndarray
    noisy_labels: np.ndarray
    params: "GenParams | None" = None

    @property
    def n(self):
        return self.adjacency.shape[0]

    @cached_property
    def polarized_float(self):
        """``polarized`` as float64, cached for repeated products."""
        return self.polarized.astype(np.float64)

    @property
    def m(self):
        return self.features.shape[1]

    @property
    def K(self):
        if self.params is not None:
            return self.params.K
        top = max(int(np.max(self.true_labels, initial=-1)), int(np.max(self.noisy_labels, initial=-1)))
        return top + 1

    def equals(self, other):
        return (
            self.params == other.params
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("adjacency", "polarized", "features", "true_labels",
                             "train_mask", "noisy_labels")
            )
        )


def polarize(adjacency):
    """+1 on edges, -1 on non-edges, 0 on the diagonal (as ``int8``)."""
    A = np.asarray(adjacency)
    out = np.where(A > 0, 1, -1).astype(np.int8)
    np.fill_diagonal(out, 0)
    return out


def generate(params):
    """Draw a planted-partition instance. Same ``params`` give bit-identical output."""
    params.validate()
    rng = np.random.default_rng(params.seed)
    K, n0, m = params.K, params.n0, params.m
    n = K * n0
    labels = np.repeat(np.arange(K), n0)

    # graph: one uniform per unordered pair {u < v}, drawn row by row
    A = np.zeros((n, n), dtype=np.int8)
    for u in range(n - 1):
        prob = np.where(labels[u + 1:] == labels[u], params.p, params.q)
        A[u, u + 1:] = rng.random(n - u - 1) < prob
    A |= A.T

    scales = np.concatenate([
        np.full(params.m_omega, params.omega),
        np.full(m - params.m_omega, params.sigma),
    ])
    X = np.empty((n, m))
    for i in range(K):
        Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
        z = rng.standard_normal((n0, m))
        X[i * n0:(i + 1) * n0] = (z * scales) @ Q.T

    n_t = params.n_train_per_cluster
    train = np.zeros(n, dtype=bool)
    for i in range(K):
        picked = rng.permutation(n0)[:n_t] + i * n0
        train[picked] = True

    noisy = np.full(n, -1, dtype=np.int64)
    for v in np.flatnonzero(train):
        y = labels[v]
        if K == 1 or rng.random() < params.pi_correct:
            noisy[v] = y
        else:
            wrong = rng.integers(K - 1)
            noisy[v] = wrong if wrong < y else wrong + 1

    return PlantedInstance(
        adjacency=A,
        polarized=polarize(A),
        features=X,
        true_labels=labels.astype(np.int64),
        train_mask=train,
        noisy_labels=noisy,
        params=params,
    )


def instance_from_arrays(adjacency, features, true_labels, train_mask=None, noisy_labels=None):
    """Wrap hand-built arrays as an instance (``params`` is left as ``None``).

    Missing training data means no training nodes; missing noisy labels copy
    the true labels on the training split.
    """
    A = np.asarray(adjacency).astype(np.int8)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.array_equal(A, A.T):
        raise ValueError("adjacency must be a symmetric square matrix")
    if np.any(np.diag(A) != 0):
        raise ValueError("adjacency must have a zero diagonal")
    n = A.shape[0]
    X = np.asarray(features, dtype=float).reshape(n, -1)
    y = np.asarray(true_labels, dtype=np.int64)
    train = np.zeros(n, dtype=bool) if train_mask is None else np.asarray(train_mask, dtype=bool)
    if noisy_labels is None:
        noisy = np.where(train, y, -1)
    else:
        noisy = np.where(train, np.asarray(noisy_labels, dtype=np.int64), -1)
    return PlantedInstance(
        adjacency=A, polarized=polarize(A), features=X, true_labels=y,
        train_mask=train, noisy_labels=noisy, params=None,
    )


def cluster_indices(instance, i):
    """Sorted node indices whose true label is ``i``."""
    if not (0 <= i < instance.K):
        raise IndexError(f"cluster index {i} out of range for K={instance.K}")
    return np.flatnonzero(instance.true_labels == i)
