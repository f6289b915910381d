"""Ablation sweeps: configuration encoding, execution, aggregation and CSV I/O."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
import csv
import io
import math
import time
from pathlib import Path

import numpy as np

from . import cado
from .baseline import SpectralConfig, spectral_cluster
from .datagen import GenParams, generate
from .errors import ParameterError, StageError, UnsupportedConfiguration
from .objective import TermWeights

AXES = ("p", "omega", "train_ratio", "beta_g", "beta_f", "beta_l", "n", "m", "K")
INT_AXES = ("n", "m", "K")
CONFIGURATIONS = ("G", "F", "GF", "GL", "FL", "GFL", "G-spectral")
SPECTRAL_CONFIGS = ("G", "G-spectral")
CSV_FIELDS = ("axis", "axis_value", "configuration", "seed", "test_accuracy",
              "final_objective", "iterations", "wall_ms", "status")


def ablation(solver, configuration):
    """Solver config with term flags matching a configuration name like ``"GL"``.

    ``"G"`` yields the graph-only solver even though sweeps route it to the
    spectral baseline.
    """
    if configuration not in CONFIGURATIONS or configuration == "G-spectral":
        raise ParameterError("configuration", f"not a solver configuration: {configuration!r}")
    return replace(
        solver,
        use_graph="G" in configuration,
        use_feature="F" in configuration,
        use_label="L" in configuration,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One axis swept over ``values`` for every configuration and seed.

    ``timing`` records wall-clock milliseconds per run; it is off by default so
    repeated sweeps write byte-identical CSVs.
    """

    axis: str
    values: tuple
    configurations: tuple = ("GFL", "G-spectral")
    seeds: tuple = (0, 1, 2, 3, 4)
    gen: GenParams = field(default_factory=GenParams)
    solver: cado.SolverConfig = field(default_factory=cado.SolverConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    output_path: "str | None" = None
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "configurations", tuple(self.configurations))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.axis not in AXES:
            raise ParameterError("axis", f"must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ParameterError("values", "must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ParameterError("values", "must be strictly increasing")
        if not self.configurations:
            raise ParameterError("configurations", "must be non-empty")
        for c in self.configurations:
            if c not in CONFIGURATIONS:
                raise ParameterError("configurations", f"unknown configuration {c!r}")
        if not self.seeds:
            raise ParameterError("seeds", "must be non-empty")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ParameterError("workers", f"must be >= 1, got {self.workers!r}")

    def point(self, value, seed):
        """Generator, solver and spectral settings for one sweep point."""
        gen, solver, spectral = self.gen, self.solver, self.spectral
        a = self.axis
        if a in ("p", "omega", "train_ratio"):
            gen = replace(gen, **{a: float(value)})
        elif a in ("beta_g", "beta_f", "beta_l"):
            solver = replace(solver, weights=replace(solver.weights, **{a: float(value)}))
        elif a == "n":
            gen = replace(gen, n0=int(value) // gen.K)
        elif a == "m":
            gen = replace(gen, m=int(value))
        elif a == "K":
            gen = replace(gen, K=int(value))
            if solver.r is not None:
                solver = replace(solver, r=int(value))
        gen = replace(gen, seed=seed)
        solver = replace(solver, seed=seed)
        spectral = replace(spectral, K=gen.K, seed=seed)
        return gen, solver, spectral


@dataclass(frozen=True)
class SweepRow:
    axis: str
    axis_value: object
    configuration: str
    seed: int
    test_accuracy: float
    final_objective: float
    iterations: int
    wall_ms: "float | None" = None
    status: str = "ok"

    def _key(self):
        return tuple(repr(getattr(self, f.name)) for f in fields(self))

    def __eq__(self, other):
        return isinstance(other, SweepRow) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())


@dataclass
class SweepResult:
    rows: list

    @property
    def ok_rows(self):
        return [r for r in self.rows if r.status == "ok"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow([
                r.axis, repr(r.axis_value), r.configuration, r.seed,
                repr(r.test_accuracy), repr(r.final_objective), r.iterations,
                "" if r.wall_ms is None else repr(r.wall_ms), r.status,
            ])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            axis = rec["axis"]
            raw = rec["axis_value"]
            value = int(raw) if axis in INT_AXES and raw.lstrip("-").isdigit() else float(raw)
            rows.append(SweepRow(
                axis=axis, axis_value=value, configuration=rec["configuration"],
                seed=int(rec["seed"]), test_accuracy=float(rec["test_accuracy"]),
                final_objective=float(rec["final_objective"]),
                iterations=int(rec["iterations"]),
                wall_ms=float(rec["wall_ms"]) if rec["wall_ms"] else None,
                status=rec["status"],
            ))
        return cls(rows)

    def write(self, path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read(cls, path):
        with open(path, newline="") as fh:
            return cls.from_csv(fh.read())


# ------------------------------------------------------------- execution

def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def spectral_accuracy(instance, spectral):
    """Test accuracy of the spectral baseline, clusters aligned to true labels on the training split."""
    labels = _stage("baseline", spectral_cluster, instance.adjacency, spectral)
    train = np.flatnonzero(instance.train_mask)

    def _decode():
        if train.size == 0:
            raise UnsupportedConfiguration("cluster alignment needs a non-empty training split")
        mapping = cado.align_atoms(labels[train], instance.true_labels[train], spectral.K, instance.K)
        return cado.Prediction(labels, mapping[labels], mapping)

    pred = _stage("decode", _decode)
    return cado.test_accuracy(instance, pred), pred


def run_single(gen, solver, configuration="GFL", spectral=None):
    """Generate, solve (or run the spectral baseline) and score one point.

    Returns ``(test_accuracy, state)``; ``state`` is ``None`` for the baseline.
    Failures are re-raised as :class:`StageError` naming the stage.
    """
    instance = _stage("generate", generate, gen)
    if configuration in SPECTRAL_CONFIGS:
        spectral = spectral or SpectralConfig(K=gen.K, seed=gen.seed)
        acc, _ = spectral_accuracy(instance, spectral)
        return acc, None
    config = _stage("configure", ablation, solver, configuration)
    state = _stage("solve", cado.iterate, instance, config)
    pred = _stage("decode", cado.decode_prediction, instance, state, config)
    return cado.test_accuracy(instance, pred), state


def _run_point(spec, value, configuration, seed):
    gen, solver, spectral = spec.point(value, seed)
    start = time.perf_counter()
    acc, state = run_single(gen, solver, configuration, spectral)
    wall = (time.perf_counter() - start) * 1e3 if spec.timing else None
    return SweepRow(
        axis=spec.axis, axis_value=value, configuration=configuration, seed=seed,
        test_accuracy=acc,
        final_objective=state.final_objective if state is not None else math.nan,
        iterations=state.t if state is not None else 0,
        wall_ms=wall,
    )


def sweep_points(spec):
    """Cartesian product in output order: value, then configuration, then seed."""
    return [(v, c, s) for v in spec.values for c in spec.configurations for s in spec.seeds]


def run_sweep(spec):
    """Run every sweep point and write the CSV if ``output_path`` is set.

    Points may run on several threads; rows are always collected in
    :func:`sweep_points` order. On the first failing point the rows before it
    are written together with a failure marker row and the error is re-raised.
    """
    points = sweep_points(spec)
    rows = []
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        futures = [pool.submit(_run_point, spec, *pt) for pt in points]
        for (value, configuration, seed), fut in zip(points, futures):
            try:
                rows.append(fut.result())
            except Exception as exc:
                for other in futures:
                    other.cancel()
                rows.append(SweepRow(
                    axis=spec.axis, axis_value=value, configuration=configuration,
                    seed=seed, test_accuracy=math.nan, final_objective=math.nan,
                    iterations=0, wall_ms=None,
                    status=f"failed: {exc}".replace("\n", " "),
                ))
                if spec.output_path:
                    SweepResult(rows).write(spec.output_path)
                raise exc if isinstance(exc, StageError) else StageError("sweep", exc)
    result = SweepResult(rows)
    if spec.output_path:
        result.write(spec.output_path)
    return result


# ----------------------------------------------------------- aggregation

@dataclass(frozen=True)
class SummaryRow:
    axis_value: object
    configuration: str
    count: int
    median: float
    q25: float
    q75: float

    @property
    def iqr(self):
        return self.q75 - self.q25


def summarize(result):
    """Median and quartiles of test accuracy per (axis value, configuration).

    Groups appear in first-seen order; failure rows are ignored.
    """
    groups = {}
    for r in result.ok_rows:
        groups.setdefault((r.axis_value, r.configuration), []).append(r.test_accuracy)
    if not groups:
        raise ValueError("no successful rows to summarize")
    out = []
    for (value, configuration), accs in groups.items():
        q25, med, q75 = np.percentile(accs, [25, 50, 75])
        out.append(SummaryRow(value, configuration, len(accs), float(med), float(q25), float(q75)))
    return out


def medians(result):
    """``{(axis_value, configuration): median accuracy}``."""
    return {(s.axis_value, s.configuration): s.median for s in summarize(result)}


# ----------------------------------------------------------- config file

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_list(text, cast):
    return tuple(cast(t.strip()) for t in text.split(",") if t.strip())


def _coerce(cls, name, raw):
    kind = {f.name: f.type for f in fields(cls)}[name]
    if kind in (bool, "bool"):
        if raw.lower() not in _BOOL:
            raise ParameterError(name, f"expected a boolean, got {raw!r}")
        return _BOOL[raw.lower()]
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float"):
        return float(raw)
    if kind == "int | None":
        return None if raw.lower() in ("", "none") else int(raw)
    if kind == "float | None":
        return None if raw.lower() in ("", "none") else float(raw)
    return raw


def build_configs(mapping):
    """Split ``gen.*``, ``solver.*`` and ``spectral.*`` keys into config objects.

    Keys without a known prefix are returned untouched in the last element.
    """
    gen_kw, solver_kw, weight_kw, spectral_kw, rest = {}, {}, {}, {}, {}
    gen_names = {f.name for f in fields(GenParams)}
    solver_names = {f.name for f in fields(cado.SolverConfig)} - {"weights"}
    weight_names = {f.name for f in fields(TermWeights)}
    spectral_names = {f.name for f in fields(SpectralConfig)}
    for key, raw in mapping.items():
        prefix, _, name = key.partition(".")
        if prefix == "gen":
            if name not in gen_names:
                raise ParameterError(key, "unknown generator parameter")
            gen_kw[name] = _coerce(GenParams, name, raw)
        elif prefix == "solver":
            if name in weight_names:
                weight_kw[name] = float(raw)
            elif name in solver_names:
                solver_kw[name] = _coerce(cado.SolverConfig, name, raw)
            else:
                raise ParameterError(key, "unknown solver parameter")
        elif prefix == "spectral":
            if name not in spectral_names:
                raise ParameterError(key, "unknown spectral parameter")
            spectral_kw[name] = _coerce(SpectralConfig, name, raw)
        else:
            rest[key] = raw
    gen = GenParams(**gen_kw)
    solver = cado.SolverConfig(weights=TermWeights(**weight_kw), **solver_kw)
    spectral_kw.setdefault("K", gen.K)
    spectral = SpectralConfig(**spectral_kw)
    return gen, solver, spectral, rest


def sweep_spec_from_mapping(mapping):
    """Build a :class:`SweepSpec` from flat ``key=value`` pairs."""
    gen, solver, spectral, rest = build_configs(mapping)
    known = {"sweep.axis", "sweep.values", "sweep.configurations", "sweep.seeds",
             "sweep.output", "sweep.workers", "sweep.timing"}
    for key in rest:
        if key not in known:
            raise ParameterError(key, "unknown configuration key")
    if "sweep.axis" not in rest:
        raise ParameterError("sweep.axis", "is required")
    if "sweep.values" not in rest:
        raise ParameterError("sweep.values", "is required")
    axis = rest["sweep.axis"]
    cast = int if axis in INT_AXES else float
    kw = dict(axis=axis, values=_parse_list(rest["sweep.values"], cast),
              gen=gen, solver=solver, spectral=spectral)
    if "sweep.configurations" in rest:
        kw["configurations"] = _parse_list(rest["sweep.configurations"], str)
    if "sweep.seeds" in rest:
        kw["seeds"] = _parse_list(rest["sweep.seeds"], int)
    if "sweep.output" in rest:
        kw["output_path"] = rest["sweep.output"]
    if "sweep.workers" in rest:
        kw["workers"] = int(rest["sweep.workers"])
    if "sweep.timing" in rest:
        kw["timing"] = _BOOL[rest["sweep.timing"].lower()]
    return SweepSpec(**kw)


def load_sweep_spec(path):
    from .io import read_keyvalue

    return sweep_spec_from_mapping(read_keyvalue(path))
