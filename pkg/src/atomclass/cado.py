"""Alternating conditional-gradient solver over a fixed number of atoms.

Each iteration takes a Frank-Wolfe step on the squared embeddings ``W`` and
then on the per-atom models, both with step size ``2 / (t + 2)``.

Two choices of embedding search direction are available:

``"vertex"`` (default)
    The structural score of atom ``i`` at node ``v`` is
    ``-sum_u A_bar[u, v] sqrt(W[u, i])``, i.e. the structural gradient
    evaluated at the candidate one-hot row, where the denominator
    ``sqrt(W[v, i])`` equals one. The graph weight is additionally scaled by
    ``graph_scale`` (default ``1 / sqrt(n r)``) so the graph term is on the
    same footing as the per-node losses. A small seeded dither breaks ties
    between nodes whose rows coincide.
``"literal"``
    The exact gradient :func:`objective.grad_W`; combine with ``dither=0`` for
    the literal oracle. After the first step ``W``
    rows are one-hot and the clamped ``1 / sqrt(W[v, i])`` factor dominates
    every other term, which freezes the embedding near its first LMO output.
"""
from dataclasses import dataclass, field, replace
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import objective as obj
from .errors import NumericalError, ParameterError, UnsupportedConfiguration
from .numerics import project_spectral_box
from .objective import AtomModels, TermWeights

STRUCTURAL_MODES = ("vertex", "literal")
INIT_SPREAD = 0.05


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings. ``r=None`` means one atom per class."""

    r: "int | None" = None
    weights: TermWeights = field(default_factory=TermWeights)
    rho_minus: float = 0.01
    rho_plus: float = 1.0
    max_iters: int = 500
    tol: float = 1e-6
    seed: int = 0
    use_graph: bool = True
    use_feature: bool = True
    use_label: bool = True
    structural: str = "vertex"
    graph_scale: "float | None" = None
    dither: float = 0.01
    restarts: int = 3
    window: int = 10

    def __post_init__(self):
        if self.r is not None and (int(self.r) != self.r or self.r < 1):
            raise ParameterError("r", f"must be a positive integer, got {self.r!r}")
        if not (np.isfinite(self.rho_minus) and self.rho_minus > 0):
            raise ParameterError("rho_minus", f"must be positive, got {self.rho_minus!r}")
        if not (np.isfinite(self.rho_plus) and self.rho_plus > self.rho_minus):
            raise ParameterError("rho_plus", f"must exceed rho_minus, got {self.rho_plus!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ParameterError("max_iters", f"must be a non-negative integer, got {self.max_iters!r}")
        if not (self.tol >= 0):
            raise ParameterError("tol", f"must be >= 0, got {self.tol!r}")
        if self.structural not in STRUCTURAL_MODES:
            raise ParameterError("structural", f"must be one of {STRUCTURAL_MODES}, got {self.structural!r}")
        if self.graph_scale is not None and not (np.isfinite(self.graph_scale) and self.graph_scale > 0):
            raise ParameterError("graph_scale", f"must be positive, got {self.graph_scale!r}")
        if not (np.isfinite(self.dither) and self.dither >= 0):
            raise ParameterError("dither", f"must be finite and >= 0, got {self.dither!r}")
        if int(self.restarts) != self.restarts or self.restarts < 1:
            raise ParameterError("restarts", f"must be a positive integer, got {self.restarts!r}")
        if int(self.window) != self.window or self.window < 1:
            raise ParameterError("window", f"must be a positive integer, got {self.window!r}")

    def atoms(self, instance):
        return instance.K if self.r is None else int(self.r)

    def resolved_graph_scale(self, instance):
        if self.graph_scale is not None:
            return float(self.graph_scale)
        if self.structural == "literal":
            return 1.0
        return 1.0 / np.sqrt(instance.n * self.atoms(instance))

    def effective_weights(self, instance):
        """Term weights after ablation flags and graph scaling."""
        w = self.weights
        return TermWeights(
            w.beta_g * self.resolved_graph_scale(instance) if self.use_graph else 0.0,
            w.beta_f if self.use_feature else 0.0,
            w.beta_l if self.use_label else 0.0,
        )

    @property
    def midpoint(self):
        return 0.5 * (self.rho_minus + self.rho_plus)


@dataclass(frozen=True, eq=False)
class SolverState:
    t: int
    W: np.ndarray
    models: AtomModels
    objective_trace: tuple = ()

    @property
    def final_objective(self):
        return self.objective_trace[-1] if self.objective_trace else float("nan")


@dataclass(frozen=True, eq=False)
class Prediction:
    atom_assignment: np.ndarray
    class_assignment: np.ndarray
    atom_to_class: np.ndarray


# ------------------------------------------------------------------ setup

def init_state(instance, config):
    """Near-uniform ``W`` rows, midpoint covariances and uniform label vectors."""
    n, m, K = instance.n, instance.m, instance.K
    r = config.atoms(instance)
    if r > n:
        raise ParameterError("r", f"atom count {r} exceeds node count {n}")
    rng = np.random.default_rng(config.seed)
    noise = rng.uniform(-INIT_SPREAD / 2, INIT_SPREAD / 2, size=(n, r))
    noise -= noise.mean(axis=1, keepdims=True)
    W = 1.0 / r + noise
    models = AtomModels(
        np.repeat((config.midpoint * np.eye(m))[None], r, axis=0),
        np.full((r, K), 1.0 / K),
    )
    return SolverState(t=0, W=W, models=models, objective_trace=())


# ------------------------------------------------------------------- LMOs

def embedding_scores(instance, state, config):
    """Search direction whose row-wise argmin defines the embedding LMO."""
    weights = config.effective_weights(instance)
    if config.structural == "literal":
        return obj.grad_W(instance, state.W, state.models, weights)
    bg, bf, bl = weights.as_tuple()
    W = state.W
    G = np.zeros_like(W)
    if bg:
        G -= bg * (instance.polarized_float @ np.sqrt(np.clip(W, 0.0, None)))
    if bf:
        G += bf * obj.feature_grad_W(instance, W, state.models, check=False)
    if bl:
        G += bl * obj.label_grad_W(instance, W, state.models)
    return G


def rowwise_argmin_onehot(G):
    """One-hot rows at the first minimizing column."""
    G = np.asarray(G, dtype=float)
    if not np.all(np.isfinite(G)):
        raise NumericalError("scores contain non-finite entries")
    out = np.zeros_like(G)
    out[np.arange(G.shape[0]), np.argmin(G, axis=1)] = 1.0
    return out


def dither_noise(shape, config, t):
    """Seeded Gaussian perturbation of the embedding scores, shrinking like ``gamma_t``."""
    if not config.dither:
        return np.zeros(shape)
    rng = np.random.default_rng([config.seed, t, 1])
    return config.dither * step_size(t) * rng.standard_normal(shape)


def embedding_lmo(instance, state, config):
    """Vertex of the row-simplex product minimizing ``<scores, W>``.

    With ``config.dither > 0`` the scores carry a small seeded perturbation.
    Nodes whose rows are identical would otherwise receive identical one-hot
    rows forever, so two clusters that share an atom after the first full step
    could never separate.
    """
    G = embedding_scores(instance, state, config)
    return rowwise_argmin_onehot(G + dither_noise(G.shape, config, state.t))


def model_lmo(instance, state, config):
    """Spectral-box covariance and simplex-vertex label vector per atom."""
    weights = config.effective_weights(instance)
    GR = obj.grad_R_all(instance, state.W, state.models, weights, check=False)
    GP = obj.grad_pi_all(instance, state.W, state.models, weights)
    if not (np.all(np.isfinite(GR)) and np.all(np.isfinite(GP))):
        raise NumericalError(f"model gradient became non-finite at iteration {state.t}")
    R = np.stack([project_spectral_box(g, config.rho_minus, config.rho_plus) for g in GR])
    P = rowwise_argmin_onehot(GP)
    return AtomModels(R, P)


# -------------------------------------------------------------- iteration

def step_size(t):
    return 2.0 / (t + 2.0)


def step(instance, state, config):
    """One embedding update followed by one model update."""
    gamma = step_size(state.t)
    W_dir = embedding_lmo(instance, state, config)
    W = (1.0 - gamma) * state.W + gamma * W_dir
    mid = replace(state, W=W)
    target = model_lmo(instance, mid, config)
    models = AtomModels(
        (1.0 - gamma) * state.models.covariances + gamma * target.covariances,
        (1.0 - gamma) * state.models.label_dists + gamma * target.label_dists,
    )
    value = obj.objective_phi(instance, W, models, config.effective_weights(instance), check=False)
    if not np.isfinite(value):
        raise NumericalError(f"objective became non-finite at iteration {state.t}")
    return SolverState(
        t=state.t + 1, W=W, models=models,
        objective_trace=state.objective_trace + (value,),
    )


def converged(trace, tol, window=10):
    """Relative objective change over the last ``window`` iterations below ``tol``."""
    if len(trace) <= window:
        return False
    now, before = trace[-1], trace[-1 - window]
    return abs(now - before) / max(1.0, abs(now)) < tol


def restart_seed(seed, k):
    """Initialization seed of restart ``k``; restart 0 uses ``seed`` itself."""
    if k == 0:
        return seed
    return int(np.random.SeedSequence([seed, k]).generate_state(1, dtype=np.uint64)[0])


def run_once(instance, config, callback=None):
    """Step from the initial state until converged or ``max_iters`` steps."""
    state = init_state(instance, config)
    while state.t < config.max_iters:
        state = step(instance, state, config)
        if callback is not None:
            callback(state)
        if converged(state.objective_trace, config.tol, config.window):
            break
    return state


def iterate(instance, config, callback=None):
    """Run ``config.restarts`` seeded starts and keep the lowest final objective.

    The objective is non-convex and a start can settle in a state where two
    atoms share a class; such states have a clearly higher objective, so the
    best of a few starts is kept (earliest start on ties). ``callback(state)``
    is invoked after every step of every start.
    """
    best = None
    for k in range(config.restarts):
        run_config = replace(config, seed=restart_seed(config.seed, k))
        state = run_once(instance, run_config, callback)
        if best is None or state.final_objective < best.final_objective:
            best = state
    return best


def solve(instance, config, callback=None):
    """Run :func:`iterate` and decode the final state."""
    state = iterate(instance, config, callback)
    return state, decode_prediction(instance, state, config)


# --------------------------------------------------------------- decoding

def align_atoms(atoms, labels, r, K):
    """Atom-to-class map maximizing agreement between ``atoms`` and ``labels``."""
    if r != K:
        raise UnsupportedConfiguration(
            f"label-free decoding needs one atom per class (r={r}, K={K})"
        )
    C = np.zeros((r, K))
    np.add.at(C, (np.asarray(atoms), np.asarray(labels)), 1.0)
    rows, cols = linear_sum_assignment(-C)
    mapping = np.zeros(r, dtype=np.int64)
    mapping[rows] = cols
    return mapping


def decode_prediction(instance, state, config):
    """Assign each node to its heaviest atom and each atom to a class.

    With the label term active an atom takes the class its label vector favours.
    Otherwise atoms are matched one-to-one to classes by agreement on the
    training split: with the observed noisy labels when the label term is
    enabled but weighted zero, and with the true labels in label-free
    ablations, which never see labels during the solve.
    """
    atoms = np.argmax(state.W, axis=1)
    r = state.W.shape[1]
    if config.use_label and config.weights.beta_l > 0:
        mapping = np.argmax(state.models.label_dists, axis=1).astype(np.int64)
    else:
        train = np.flatnonzero(instance.train_mask)
        if train.size == 0:
            raise UnsupportedConfiguration("label-free decoding needs a non-empty training split")
        reference = instance.noisy_labels if config.use_label else instance.true_labels
        mapping = align_atoms(atoms[train], reference[train], r, instance.K)
    return Prediction(atoms, mapping[atoms], mapping)


def test_accuracy(instance, prediction):
    """Accuracy on nodes outside the training split (``nan`` if there are none)."""
    test = ~np.asarray(instance.train_mask)
    if not test.any():
        return float("nan")
    hits = prediction.class_assignment[test] == instance.true_labels[test]
    return float(np.mean(hits))


def best_permutation_accuracy(assignment, labels, K, mask=None):
    """Accuracy under the best one-to-one relabeling of ``assignment``."""
    a = np.asarray(assignment)
    y = np.asarray(labels)
    if mask is not None:
        a, y = a[mask], y[mask]
    if a.size == 0:
        return float("nan")
    k = max(K, int(a.max()) + 1)
    C = np.zeros((k, k))
    np.add.at(C, (a, y), 1.0)
    rows, cols = linear_sum_assignment(-C)
    return float(C[rows, cols].sum() / a.size)


# ----------------------------------------------------------- feasibility

def feasibility_violations(state, config, atol=1e-8):
    """List of human-readable feasibility violations (empty when feasible)."""
    out = []
    W = state.W
    if np.any(W < -1e-12):
        out.append(f"W has entry {W.min():.3e} < 0")
    dev = np.max(np.abs(W.sum(axis=1) - 1.0))
    if dev > atol:
        out.append(f"W row sum off by {dev:.3e}")
    for i, R in enumerate(state.models.covariances):
        lam = np.linalg.eigvalsh(0.5 * (R + R.T))
        if lam[0] < config.rho_minus - atol or lam[-1] > config.rho_plus + atol:
            out.append(f"atom {i} covariance spectrum [{lam[0]:.3e}, {lam[-1]:.3e}] outside box")
    P = state.models.label_dists
    if np.any(P < -atol) or np.any(np.abs(P.sum(axis=1) - 1.0) > atol):
        out.append("label distribution left the simplex")
    return out


__all__ = [
    "SolverConfig", "SolverState", "Prediction", "init_state", "embedding_scores",
    "embedding_lmo", "model_lmo", "step", "iterate", "solve", "decode_prediction",
    "test_accuracy", "best_permutation_accuracy", "feasibility_violations",
    "align_atoms", "converged", "step_size", "run_once", "restart_seed",
]
