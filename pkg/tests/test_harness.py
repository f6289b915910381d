from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from atomclass import harness
from atomclass.cado import SolverConfig
from atomclass.datagen import GenParams
from atomclass.errors import ParameterError, StageError
from atomclass.harness import SweepResult, SweepRow, SweepSpec

FAST_GEN = GenParams(n0=40)
FAST_SOLVER = SolverConfig(max_iters=30, restarts=1)


def fast_spec(**kw):
    base = dict(axis="p", values=(0.1, 0.3), configurations=("GFL", "G-spectral"),
                seeds=(0, 1), gen=FAST_GEN, solver=FAST_SOLVER)
    base.update(kw)
    return SweepSpec(**base)


class TestSpec:
    def test_empty_values(self):
        with pytest.raises(ParameterError):
            fast_spec(values=())

    def test_not_increasing(self):
        with pytest.raises(ParameterError):
            fast_spec(values=(0.2, 0.1))

    def test_bad_axis_and_config(self):
        with pytest.raises(ParameterError):
            fast_spec(axis="q")
        with pytest.raises(ParameterError):
            fast_spec(configurations=("XYZ",))
        with pytest.raises(ParameterError):
            fast_spec(seeds=())

    @pytest.mark.parametrize("axis,value,check", [
        ("omega", 5.0, lambda g, s: g.omega == 5.0),
        ("train_ratio", 0.05, lambda g, s: g.train_ratio == 0.05),
        ("beta_f", 4.0, lambda g, s: s.weights.beta_f == 4.0 and s.weights.beta_l == 13.0),
        ("n", 120, lambda g, s: g.n0 == 40),
        ("m", 8, lambda g, s: g.m == 8 and g.m_omega == 4),
        ("K", 4, lambda g, s: g.K == 4 and s.r is None),
    ])
    def test_point(self, axis, value, check):
        spec = fast_spec(axis=axis, values=(value,))
        gen, solver, spectral = spec.point(value, 7)
        assert check(gen, solver)
        assert gen.seed == 7 and solver.seed == 7 and spectral.seed == 7
        assert spectral.K == gen.K

    def test_m_below_noise_dims(self):
        spec = fast_spec(axis="m", values=(2,))
        with pytest.raises(ParameterError):
            spec.point(2, 0)


def test_ablation_flags():
    cfg = harness.ablation(SolverConfig(), "FL")
    assert (cfg.use_graph, cfg.use_feature, cfg.use_label) == (False, True, True)
    with pytest.raises(ParameterError):
        harness.ablation(SolverConfig(), "G-spectral")


class TestRunSingle:
    def test_defaults_full_model(self):
        acc, state = harness.run_single(GenParams(), SolverConfig(), "GFL")
        assert acc >= 0.95
        assert state.t > 0

    def test_spectral_chance_band(self):
        accs = [harness.run_single(GenParams(p=0.05, q=0.05, seed=s), SolverConfig(), "G-spectral")[0]
                for s in range(10)]
        assert all(0.18 <= a <= 0.52 for a in accs)

    def test_feature_only_small_noise(self):
        acc, _ = harness.run_single(GenParams(), SolverConfig(), "F")
        assert acc >= 0.9

    def test_stage_named_on_failure(self):
        with pytest.raises(StageError) as err:
            harness.run_single(GenParams(n0=10, train_ratio=0.0), FAST_SOLVER, "GF")
        assert err.value.stage == "decode"


class TestSweep:
    def test_row_count_and_order(self, tmp_path):
        spec = fast_spec(values=(0.05, 0.1, 0.15), seeds=(0, 1, 2), output_path=str(tmp_path / "s.csv"))
        res = harness.run_sweep(spec)
        assert len(res.rows) == 18
        assert [(r.axis_value, r.configuration, r.seed) for r in res.rows] == harness.sweep_points(spec)
        assert SweepResult.read(spec.output_path) == res

    def test_workers_do_not_change_output(self, tmp_path):
        a = harness.run_sweep(fast_spec(output_path=str(tmp_path / "a.csv")))
        b = harness.run_sweep(fast_spec(workers=3, output_path=str(tmp_path / "b.csv")))
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_failure_marker(self, tmp_path):
        out = tmp_path / "f.csv"
        spec = fast_spec(axis="train_ratio", values=(0.0, 0.2), configurations=("GF",),
                         seeds=(0,), output_path=str(out))
        with pytest.raises(StageError):
            harness.run_sweep(spec)
        rows = SweepResult.read(out).rows
        assert len(rows) == 1
        assert rows[0].status.startswith("failed")

    def test_failure_after_success_keeps_prefix(self, tmp_path):
        out = tmp_path / "f.csv"
        # p = 1.5 is rejected by the generator after p = 0.5 has run
        spec = fast_spec(values=(0.5, 1.5), configurations=("GFL",), seeds=(0,),
                         output_path=str(out))
        with pytest.raises(StageError):
            harness.run_sweep(spec)
        rows = SweepResult.read(out).rows
        assert [r.status for r in rows[:1]] == ["ok"]
        assert rows[1].status.startswith("failed") and "p:" in rows[1].status
        assert len(rows) == 2


class TestSummarize:
    def row(self, value, cfg, seed, acc, status="ok"):
        return SweepRow("p", value, cfg, seed, acc, 0.0, 1, None, status)

    def test_single_row(self):
        (s,) = harness.summarize(SweepResult([self.row(0.1, "GFL", 0, 0.7)]))
        assert s.median == 0.7 and s.iqr == 0.0

    def test_constant(self):
        rows = [self.row(0.1, "GFL", s, 0.9) for s in range(5)]
        (s,) = harness.summarize(SweepResult(rows))
        assert s.median == 0.9 and s.iqr == 0.0

    def test_skips_failures(self):
        rows = [self.row(0.1, "GFL", 0, 0.5), self.row(0.1, "GFL", 1, float("nan"), "failed: x")]
        (s,) = harness.summarize(SweepResult(rows))
        assert s.count == 1

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from([0.1, 0.2]), st.sampled_from(["GFL", "F"]),
                              st.floats(0, 1)), min_size=1, max_size=30))
    def test_brute_force_grouping(self, data):
        rows = [self.row(v, c, i, a) for i, (v, c, a) in enumerate(data)]
        summary = {(s.axis_value, s.configuration): s for s in harness.summarize(SweepResult(rows))}
        for key in set((v, c) for v, c, _ in data):
            accs = sorted(a for v, c, a in data if (v, c) == key)
            n = len(accs)
            mid = accs[n // 2] if n % 2 else 0.5 * (accs[n // 2 - 1] + accs[n // 2])
            assert summary[key].median == pytest.approx(mid)
            assert summary[key].count == n
            assert summary[key].iqr >= 0


class TestCsv:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(
        st.sampled_from(["p", "n"]), st.floats(0, 1), st.sampled_from(harness.CONFIGURATIONS),
        st.integers(0, 2**32), st.floats(allow_nan=True, allow_infinity=False),
        st.floats(allow_nan=True), st.integers(0, 500),
        st.one_of(st.none(), st.floats(0, 1e6)), st.sampled_from(["ok", "failed: boom, bad"]),
    ), max_size=10))
    def test_roundtrip(self, data):
        rows = []
        for axis, val, cfg, seed, acc, objv, iters, wall, status in data:
            value = int(val * 1000) if axis == "n" else val
            rows.append(SweepRow(axis, value, cfg, seed, acc, objv, iters, wall, status))
        res = SweepResult(rows)
        assert SweepResult.from_csv(res.to_csv()) == res

    def test_bad_header(self):
        with pytest.raises(ValueError):
            SweepResult.from_csv("a,b\n1,2\n")


class TestConfigFile:
    def test_parse(self, tmp_path):
        path = tmp_path / "sweep.cfg"
        path.write_text(
            "# comment\n"
            "gen.p=0.2\ngen.n0=50\nsolver.beta_f=3.0\nsolver.max_iters=20\n"
            "solver.use_label=false\nsolver.r=none\nspectral.kmeans_restarts=4\n"
            "sweep.axis=omega\nsweep.values=0.04, 1, 5\nsweep.configurations=GFL,F\n"
            "sweep.seeds=0,1\nsweep.output=out.csv\nsweep.workers=2\n"
        )
        spec = harness.load_sweep_spec(path)
        assert spec.gen.p == 0.2 and spec.gen.n0 == 50
        assert spec.solver.weights.beta_f == 3.0 and spec.solver.max_iters == 20
        assert spec.solver.use_label is False and spec.solver.r is None
        assert spec.spectral.kmeans_restarts == 4
        assert spec.values == (0.04, 1.0, 5.0)
        assert spec.configurations == ("GFL", "F")
        assert spec.seeds == (0, 1) and spec.workers == 2 and spec.output_path == "out.csv"

    @pytest.mark.parametrize("line", ["gen.bogus=1", "solver.bogus=1", "other=3", "sweep.nothing=1"])
    def test_unknown_keys(self, tmp_path, line):
        path = tmp_path / "bad.cfg"
        path.write_text(f"sweep.axis=p\nsweep.values=0.1\n{line}\n")
        with pytest.raises(ParameterError):
            harness.load_sweep_spec(path)

    def test_missing_axis(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("sweep.values=0.1\n")
        with pytest.raises(ParameterError):
            harness.load_sweep_spec(path)
