"""Recovery-condition diagnostics on a concrete instance.

Misconnection counts follow the planted partition: for node ``v`` and cluster
``j``, ``n_vj`` is the number of neighbours of ``v`` in ``C_j``; the
misconnection count ``n+_vj`` is the number of *missing* edges to ``C_j`` when
``v`` belongs to ``C_j`` and the number of *present* edges otherwise.

Simple graphs have no self-loops, so under the literal count a node always
misses its own loop and ``rho+_ii >= 1 / n_i`` even for perfect clusters. The
``"excluded"`` convention drops the self pair and divides by ``n_j - 1``.
"""
from dataclasses import dataclass
import csv
import io

import numpy as np
from scipy.spatial.distance import pdist

from .numerics import spd_solve, sym_eig

CONVENTIONS = ("literal", "excluded")


@dataclass(frozen=True, eq=False)
class MisconnectionStats:
    rho_plus_matrix: np.ndarray
    homogeneity_margin: float
    visibility_margin: float
    convention: str

    def assumption2_holds(self, delta=None):
        """Visibility holds with the smallest admissible homogeneity slack."""
        d = self.homogeneity_margin if delta is None else delta
        return bool(self.visibility_margin > d)


@dataclass(frozen=True, eq=False)
class BlockNorms:
    """Operator norms of the intra, extra and inter blocks of one cluster."""

    intra: float
    extra: float
    inter: float
    intra_scale: float
    extra_scale: float
    inter_scale: float

    @property
    def ratios(self):
        return (
            self.intra / self.intra_scale,
            self.extra / self.extra_scale if self.extra_scale else 0.0,
            self.inter / self.inter_scale if self.inter_scale else 0.0,
        )


@dataclass(frozen=True)
class NodeOnlyMargin:
    rho: float
    bound: float
    satisfied: bool


@dataclass(frozen=True, eq=False)
class RecoveryReport:
    literal: MisconnectionStats
    excluded: MisconnectionStats
    block_op_norms: tuple
    node_only: "tuple | None" = None

    # the literal convention is the headline, mirroring the definitions
    @property
    def rho_plus_matrix(self):
        return self.literal.rho_plus_matrix

    @property
    def homogeneity_margin(self):
        return self.literal.homogeneity_margin

    @property
    def visibility_margin(self):
        return self.literal.visibility_margin

    def to_keyvalue(self):
        """Flat ``key=value`` lines."""
        lines = []
        for stats in (self.literal, self.excluded):
            tag = stats.convention
            K = stats.rho_plus_matrix.shape[0]
            for i in range(K):
                for j in range(K):
                    lines.append(f"{tag}.rho_plus.{i}.{j}={float(stats.rho_plus_matrix[i, j])!r}")
            lines.append(f"{tag}.homogeneity_margin={float(stats.homogeneity_margin)!r}")
            lines.append(f"{tag}.visibility_margin={float(stats.visibility_margin)!r}")
        for i, b in enumerate(self.block_op_norms):
            for key in ("intra", "extra", "inter"):
                lines.append(f"block.{i}.{key}={float(getattr(b, key))!r}")
                lines.append(f"block.{i}.{key}_scale={float(getattr(b, key + '_scale'))!r}")
        if self.node_only is not None:
            for i, c in enumerate(self.node_only):
                lines.append(f"node_only.{i}.rho={float(c.rho)!r}")
                lines.append(f"node_only.{i}.bound={float(c.bound)!r}")
                lines.append(f"node_only.{i}.satisfied={str(c.satisfied).lower()}")
        return "\n".join(lines) + "\n"

    def to_csv(self):
        """One row per cluster."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["cluster", "intra_op", "extra_op", "inter_op",
                  "intra_ratio", "extra_ratio", "inter_ratio"]
        if self.node_only is not None:
            header += ["node_only_rho", "node_only_bound", "node_only_satisfied"]
        writer.writerow(header)
        for i, b in enumerate(self.block_op_norms):
            row = [i, *(repr(float(x)) for x in (b.intra, b.extra, b.inter, *b.ratios))]
            if self.node_only is not None:
                c = self.node_only[i]
                row += [repr(float(c.rho)), repr(float(c.bound)), str(c.satisfied).lower()]
            writer.writerow(row)
        return buf.getvalue()


def _clusters(instance):
    y = np.asarray(instance.true_labels)
    return [np.flatnonzero(y == i) for i in range(instance.K)]


def neighbour_counts(instance):
    """``n_vj``: neighbours of each node in each cluster, shape ``(n, K)``."""
    A = np.asarray(instance.adjacency, dtype=float)
    onehot = np.zeros((instance.n, instance.K))
    onehot[np.arange(instance.n), instance.true_labels] = 1.0
    return A @ onehot


def misconnection_stats(instance, convention="literal"):
    """Misconnection rates ``rho+`` and the Assumption 1 and 2 margins."""
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    y = np.asarray(instance.true_labels)
    K = instance.K
    sizes = np.bincount(y, minlength=K).astype(float)
    counts = neighbour_counts(instance)
    own = y[:, None] == np.arange(K)[None, :]
    reach = sizes[None, :] - (1.0 if convention == "excluded" else 0.0) * own
    n_plus = np.where(own, reach - counts, counts)

    N_plus = np.zeros((K, K))
    np.add.at(N_plus, y, n_plus)
    pair_reach = sizes[:, None] * sizes[None, :]
    if convention == "excluded":
        pair_reach = pair_reach - np.diag(sizes)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(pair_reach > 0, N_plus / pair_reach, 0.0)
        per_node = np.where(reach > 0, n_plus / reach, 0.0)
    present = sizes > 0
    rho = np.where(present[:, None] & present[None, :], rho, 0.0)
    homogeneity = float(np.max(np.abs(per_node - rho[y]))) if y.size else 0.0
    visibility = float(np.min(0.5 - rho[np.ix_(present, present)]))
    return MisconnectionStats(rho, homogeneity, visibility, convention)


def op_norm(M):
    """Largest singular value via the eigenvalues of the smaller Gram matrix."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    G = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
    lam = sym_eig(0.5 * (G + G.T)).eigenvalues[0]
    return float(np.sqrt(max(lam, 0.0)))


def centered_adjacency(instance, self_loop_adjusted=True):
    """``A`` minus the mean edge density of each block pair.

    With ``self_loop_adjusted`` the diagonal blocks use the density over
    distinct pairs, ``N_ii / (n_i (n_i - 1))``.
    """
    A = np.asarray(instance.adjacency, dtype=float)
    y = np.asarray(instance.true_labels)
    K = instance.K
    onehot = np.zeros((instance.n, K))
    onehot[np.arange(instance.n), y] = 1.0
    N = onehot.T @ A @ onehot
    sizes = onehot.sum(axis=0)
    pairs = np.outer(sizes, sizes)
    if self_loop_adjusted:
        pairs = pairs - np.diag(sizes)
    with np.errstate(divide="ignore", invalid="ignore"):
        density = np.where(pairs > 0, N / pairs, 0.0)
    return A - density[y][:, y]


def centered_block_norms(instance, self_loop_adjusted=True):
    """Per-cluster operator norms of the centered intra, extra and inter blocks."""
    At = centered_adjacency(instance, self_loop_adjusted)
    n = instance.n
    out = []
    for idx in _clusters(instance):
        rest = np.setdiff1d(np.arange(n), idx)
        out.append(BlockNorms(
            intra=op_norm(At[np.ix_(idx, idx)]),
            extra=op_norm(At[np.ix_(rest, rest)]),
            inter=op_norm(At[np.ix_(idx, rest)]),
            intra_scale=float(np.sqrt(idx.size)),
            extra_scale=float(np.sqrt(n)),
            inter_scale=float(np.sqrt(n)),
        ))
    return tuple(out)


def node_loss_gradients(instance, nodes, centroid_R, centroid_pi, label_weight=1.0):
    """Stacked per-node loss gradients ``[vec(dR), dpi]`` at one centroid.

    The feature gradient is ``(I - R^{-1} x x^T R^{-1}) / m``; training nodes add
    ``-label_weight * e_y`` in the label block.
    """
    X = instance.features[nodes]
    m = X.shape[1]
    K = np.shape(centroid_pi)[0]
    Y = spd_solve(np.broadcast_to(centroid_R, (len(nodes), m, m)), X)
    dR = (np.eye(m)[None] - Y[:, :, None] * Y[:, None, :]) / m
    dpi = np.zeros((len(nodes), K))
    train = instance.train_mask[nodes]
    labels = instance.noisy_labels[nodes]
    dpi[train, labels[train]] = -label_weight
    return np.hstack([dR.reshape(len(nodes), -1), dpi])


def node_only_certificate_margin(instance, gamma, centroids, label_weight=1.0):
    """Per-cluster gradient spread ``rho_i`` against the bound ``gamma n_i / n``.

    Atom ``i`` of ``centroids`` is the model for cluster ``i``.
    """
    if centroids.r < instance.K:
        raise ValueError(f"need one centroid per cluster, got {centroids.r} for K={instance.K}")
    out = []
    for i, idx in enumerate(_clusters(instance)):
        if idx.size == 0:
            raise ValueError(f"cluster {i} is empty")
        G = node_loss_gradients(
            instance, idx, centroids.covariances[i], centroids.label_dists[i], label_weight
        )
        rho = float(np.max(pdist(G))) if idx.size > 1 else 0.0
        bound = float(gamma * idx.size / instance.n)
        out.append(NodeOnlyMargin(rho, bound, rho <= bound))
    return tuple(out)


def recovery_report(instance, gamma=None, centroids=None, label_weight=1.0):
    """Collect every diagnostic; the node-only part needs ``gamma`` and ``centroids``."""
    node_only = None
    if gamma is not None and centroids is not None:
        node_only = node_only_certificate_margin(instance, gamma, centroids, label_weight)
    return RecoveryReport(
        literal=misconnection_stats(instance, "literal"),
        excluded=misconnection_stats(instance, "excluded"),
        block_op_norms=centered_block_norms(instance),
        node_only=node_only,
    )
