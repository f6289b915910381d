"""Flat-file persistence for instances, traces, predictions and assignments."""
import csv
from pathlib import Path

import numpy as np

from .datagen import GenParams, PlantedInstance, polarize

EDGES = "edges.txt"
FEATURES = "features.csv"
LABELS = "labels.csv"
PARAMS = "params.txt"


def write_keyvalue(path, mapping):
    with open(path, "w") as fh:
        for key, val in mapping.items():
            fh.write(f"{key}={val!r}\n" if isinstance(val, float) else f"{key}={val}\n")


def read_keyvalue(path):
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def save_instance(instance, directory):
    """Write the four instance files into ``directory`` (created if missing)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    u, v = np.nonzero(np.triu(instance.adjacency, k=1))
    with open(d / EDGES, "w") as fh:
        fh.writelines(f"{a} {b}\n" for a, b in zip(u, v))
    with open(d / FEATURES, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in instance.features:
            w.writerow([repr(float(x)) for x in row])
    with open(d / LABELS, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "true_label", "is_train", "noisy_label"])
        for node in range(instance.n):
            train = bool(instance.train_mask[node])
            noisy = int(instance.noisy_labels[node]) if train else ""
            w.writerow([node, int(instance.true_labels[node]), int(train), noisy])
    if instance.params is not None:
        write_keyvalue(d / PARAMS, instance.params.to_dict())


def load_instance(directory):
    """Inverse of :func:`save_instance`."""
    d = Path(directory)
    params = GenParams.from_dict(read_keyvalue(d / PARAMS)) if (d / PARAMS).exists() else None
    with open(d / LABELS, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = len(rows)
    y = np.array([int(r["true_label"]) for r in rows], dtype=np.int64)
    train = np.array([r["is_train"] == "1" for r in rows], dtype=bool)
    noisy = np.array([int(r["noisy_label"]) if r["noisy_label"] else -1 for r in rows], dtype=np.int64)
    A = np.zeros((n, n), dtype=np.int8)
    with open(d / EDGES) as fh:
        for line in fh:
            if line.strip():
                a, b = map(int, line.split())
                A[a, b] = A[b, a] = 1
    X = np.loadtxt(d / FEATURES, delimiter=",", ndmin=2)
    return PlantedInstance(
        adjacency=A, polarized=polarize(A), features=X, true_labels=y,
        train_mask=train, noisy_labels=noisy, params=params,
    )


def write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "objective"])
        for t, val in enumerate(trace, 1):
            w.writerow([t, repr(float(val))])


def write_prediction(path, instance, prediction):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "atom", "class", "is_train", "correct"])
        for v in range(instance.n):
            cls = int(prediction.class_assignment[v])
            w.writerow([v, int(prediction.atom_assignment[v]), cls,
                        int(instance.train_mask[v]), int(cls == instance.true_labels[v])])


def write_assignment(path, assignment):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "cluster"])
        for v, c in enumerate(assignment):
            w.writerow([v, int(c)])
