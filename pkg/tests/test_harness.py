import math
import re

import numpy as np
import pytest

from polyrl.errors import ConfigError, DataFormatError
from polyrl.harness import (
    ExperimentConfig,
    chain_stats,
    config_from_dict,
    load_config,
    run_experiment,
    seed_streams,
    svg_document,
    sweep,
)
from polyrl.harness.cli import main
from polyrl.harness.csvio import format_value, read_csv, write_csv
from polyrl.harness.render import load_trajectory
from polyrl.harness.runner import METRICS_HEADER
from polyrl.harness.sweep import mean_se

SMALL = dict(environment="nested", overrides={"max_episode_steps": 150}, episodes=3, coverage_cell=2.0)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


class TestConfig:
    def test_defaults(self):
        c = config_from_dict({})
        assert c.environment == "nested" and c.method == "polyrl"
        assert c.polyrl.theta == 0.2 and c.learner.alpha == 0.01 and c.learner.gamma == 0.99

    def test_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text(
            "environment:\n  name: puddle\n  overrides:\n    max_episode_steps: 50\n"
            "method: epsilon-greedy\nseeds: [3, 4]\nepisodes: 2\nlearner:\n  epsilon: 0.2\n"
        )
        c = load_config(p)
        assert c.method == "epsilon_greedy" and c.seeds == (3, 4)
        assert c.build_spec().puddle is not None and c.build_spec().max_episode_steps == 50

    @pytest.mark.parametrize(
        "raw",
        [
            {"episodes": 0},
            {"seeds": []},
            {"method": "softmax"},
            {"environment": "maze"},
            {"polyrl": {"theta": 3.0}},
            {"learner": {"epsilon": 2.0}},
            {"bogus": 1},
            {"environment": {"name": "nested", "overrides": {"goal_radius": -1}}},
            {"environment": "pointmass", "method": "epsilon_greedy"},
        ],
    )
    def test_invalid(self, raw):
        with pytest.raises(ConfigError):
            config_from_dict(raw)

    def test_malformed_yaml(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("episodes: [1,\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_epsilon_decay(self):
        c = config_from_dict({"learner": {"epsilon": 0.5, "epsilon_final": 0.1, "epsilon_decay_episodes": 4}})
        assert [c.learner.epsilon_at(e) for e in (0, 2, 4, 9)] == pytest.approx([0.5, 0.3, 0.1, 0.1])


class TestCsv:
    def test_format(self):
        assert format_value(0.1) == "0.1"
        assert format_value(np.float64(1 / 3)) == repr(1 / 3)
        assert format_value(True) == "1" and format_value(7) == "7" and format_value(math.nan) == "nan"

    def test_roundtrip_and_lf(self, tmp_path):
        p = tmp_path / "x.csv"
        rows = [(1, 0.1 + 0.2, "ok"), (2, -1e-300, "failed")]
        write_csv(p, ["a", "b", "c"], rows)
        raw = p.read_bytes()
        assert b"\r" not in raw
        _, back = read_csv(p)
        assert [float(r["b"]) for r in back] == [0.1 + 0.2, -1e-300]
        assert not (tmp_path / "x.csv.tmp").exists()

    def test_ragged(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b\n1\n")
        with pytest.raises(DataFormatError):
            read_csv(p)


class TestSeeding:
    def test_streams_independent_of_other_seeds(self):
        a = seed_streams(0, 3)[0].random(5)
        b = seed_streams(0, 3)[0].random(5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, seed_streams(0, 4)[0].random(5))

    def test_seed_results_do_not_depend_on_seed_list(self):
        one = run_experiment(small(seeds=(2,)))
        two = run_experiment(small(seeds=(1, 2)))
        assert one[0].metrics == two[1].metrics


class TestRunExperiment:
    @pytest.mark.parametrize("method", ["polyrl", "epsilon_greedy", "uniform"])
    def test_outputs_and_determinism(self, tmp_path, method):
        c = small(method=method, seeds=(0, 1), record_decisions=True)
        run_experiment(c, tmp_path / "a")
        run_experiment(c, tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert "metrics.csv" in names and "trajectory_seed0.csv" in names and "weights_seed1.npy" in names
        assert ("decisions_seed0.csv" in names) == (method == "polyrl")
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_metrics_schema(self, tmp_path):
        run_experiment(small(seeds=(0,)), tmp_path)
        header, rows = read_csv(tmp_path / "metrics.csv")
        assert header == METRICS_HEADER
        assert len(rows) == 3
        cov = [float(r["coverage"]) for r in rows]
        assert cov == sorted(cov) and 0 < cov[0] <= 1

    def test_trajectory_schema(self, tmp_path):
        run_experiment(small(seeds=(0,), episodes=1), tmp_path)
        header, rows = read_csv(tmp_path / "trajectory_seed0.csv")
        assert header == ["episode", "step", "x", "y", "reward", "done"]
        assert len(rows) == 151 and rows[-1]["done"] == "1"

    def test_divergence_isolated(self, tmp_path, monkeypatch):
        from polyrl import learner

        original = learner.LinearQ.td_update
        calls = {"n": 0}

        def flaky(self, *a, **kw):
            calls["n"] += 1
            if calls["n"] == 10:
                raise learner.DivergenceError("boom")
            return original(self, *a, **kw)

        monkeypatch.setattr(learner.LinearQ, "td_update", flaky)
        res = run_experiment(small(seeds=(0, 1)), tmp_path)
        assert res[0].failed and not res[1].failed
        _, rows = read_csv(tmp_path / "metrics.csv")
        assert rows[0]["status"] == "failed" and rows[-1]["status"] == "ok"

    def test_pointmass(self):
        c = ExperimentConfig(environment="pointmass", overrides={"lam": 3.0}, episodes=2, method="uniform")
        res = run_experiment(c)
        assert len(res[0].metrics) == 2 and res[0].learner is None

    def test_eval_interval(self):
        res = run_experiment(small(episodes=5, eval_interval=2, seeds=(0,)))
        assert [r[1] for r in res[0].metrics] == [1, 3, 4]


class TestSweep:
    def test_single_point_matches_run(self, tmp_path):
        c = small(seeds=(0, 1))
        rows = sweep(c, [0.2], [1e-3], [0.01], tmp_path / "sw")
        run_experiment(c, tmp_path / "run")
        sub = next(p for p in (tmp_path / "sw").iterdir() if p.is_dir())
        assert (sub / "metrics.csv").read_bytes() == (tmp_path / "run" / "metrics.csv").read_bytes()
        assert len(rows) == 1 and rows[0][9] == "ok"
        _, metric_rows = read_csv(tmp_path / "run" / "metrics.csv")
        per_seed = [np.mean([float(r["eval_return"]) for r in metric_rows if r["seed"] == s]) for s in ("0", "1")]
        assert rows[0][5] == pytest.approx(np.mean(per_seed))

    def test_grid_and_failures(self, tmp_path):
        rows = sweep(small(seeds=(0,), episodes=1), [0.2, 2.0], [0.0], [0.0004, 0.001, 0.01], tmp_path)
        assert len(rows) == 6
        assert [r[9] for r in rows[:3]] == ["ok"] * 3
        assert [r[9] for r in rows[3:]] == ["failed"] * 3  # theta = 2 is invalid but the sweep continues

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            sweep(small(), [], [0.0], [0.01])

    def test_mean_se(self):
        m, se = mean_se([1.0, 2.0, 3.0])
        assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))


class TestChainStats:
    def test_fjc_report(self, tmp_path):
        r = chain_stats("fjc", 3, 100, 1.0, None, 10_000, seed=0, max_lag=5)
        rows = {row[0]: row for row in r.summary_rows()}
        assert rows["end_to_end_sq"][1] == pytest.approx(100, rel=0.05)
        assert rows["end_to_end_sq"][3] == 100
        assert rows["gyration_sq"][1] == pytest.approx(rows["gyration_sq"][3], rel=0.05)
        corr, summary = r.write(tmp_path)
        assert corr.exists() and summary.exists()

    def test_frc_report(self):
        r = chain_stats("frc", 3, 300, 1.0, 0.2, 400, seed=1, max_lag=3)
        corr = r.corr_rows()
        assert corr[1][1] == pytest.approx(0.98007, abs=1e-3)
        assert corr[1][3] == pytest.approx(math.cos(0.2))
        names = [row[0] for row in r.summary_rows()]
        assert "expansion_ratio" in names


class TestRender:
    def test_empty_trajectory(self, tmp_path):
        from polyrl.envs import nested_chambers

        doc = svg_document(nested_chambers(), {})
        assert doc.startswith("<svg") and "<polyline" not in doc
        assert doc.count('class="wall"') == 5

    def test_three_points(self, tmp_path):
        from polyrl.envs import nested_chambers

        p = tmp_path / "t.csv"
        write_csv(p, ["episode", "step", "x", "y", "reward", "done"],
                  [(0, 0, 50.0, 50.0, 0.0, 0), (0, 1, 51.0, 50.0, 0.0, 0), (0, 2, 51.0, 51.0, 0.0, 1)])
        doc = svg_document(nested_chambers(), load_trajectory(p))
        pts = re.findall(r'<polyline[^>]*points="([^"]*)"', doc)
        assert len(pts) == 1 and len(pts[0].split()) == 3

    def test_geometry(self):
        from polyrl.envs import nested_chambers

        spec = nested_chambers()
        doc = svg_document(spec, {})
        px = 6.0
        goal = re.search(r'class="goal" cx="([\d.]+)" cy="([\d.]+)"', doc)
        assert float(goal.group(1)) == pytest.approx(85 * px)
        assert float(goal.group(2)) == pytest.approx((100 - 85) * px)
        assert 'class="start"' in doc

    def test_deterministic_with_cells(self):
        from polyrl.envs import open_chamber

        spec = open_chamber(puddle=True)
        eps = {0: [(100.0, 100.0), (150.0, 120.0)]}
        assert svg_document(spec, eps, 10) == svg_document(spec, eps, 10)
        assert 'class="puddle"' in svg_document(spec, eps) and 'class="cell"' in svg_document(spec, eps, 10)


class TestCli:
    def test_run_and_eval(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("environment:\n  name: nested\n  overrides:\n    max_episode_steps: 100\nepisodes: 2\n")
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--seed", "0", "--seed", "5", "--out", str(out), "--svg"]) == 0
        assert (out / "trajectory_seed5.svg").exists()
        assert main(["eval", "--config", str(cfg), "--weights", str(out / "weights_seed0.npy"),
                     "--seed", "0", "--episodes", "2", "--out", str(out)]) == 0
        _, rows = read_csv(out / "eval.csv")
        assert len(rows) == 2

    def test_method_flag(self, tmp_path):
        out = tmp_path / "o"
        assert main(["run", "--episodes", "1", "--method", "epsilon-greedy", "--out", str(out)]) == 0
        assert "epsilon_greedy" in (out / "config.yaml").read_text()

    def test_zero_episodes_exit_2(self, tmp_path):
        assert main(["run", "--episodes", "0", "--out", str(tmp_path)]) == 2

    def test_bad_config_exit_2(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("method: nope\n")
        assert main(["run", "--config", str(cfg)]) == 2

    def test_render_malformed_exit_3(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("episode,step,x\n0,0\n")
        assert main(["render", str(p)]) == 3
        p.write_text("episode,step,x,y,reward,done\n0,0,abc,1,0,0\n")
        assert main(["render", str(p)]) == 3

    def test_render_ok(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("episode,step,x,y,reward,done\n0,0,50,50,0,0\n")
        assert main(["render", str(p), "--out", str(tmp_path / "t.svg")]) == 0
        assert (tmp_path / "t.svg").read_text().startswith("<svg")

    def test_chain_stats(self, tmp_path):
        assert main(["chain-stats", "--model", "fjc", "--n-bonds", "20", "--chains", "50", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "chain_fjc_summary.csv").exists()
        assert main(["chain-stats", "--model", "frc", "--out", str(tmp_path)]) == 2

    def test_sweep_cli(self, tmp_path):
        assert main(["sweep", "--episodes", "1", "--theta", "0.1,0.2", "--out", str(tmp_path)]) == 0
        _, rows = read_csv(tmp_path / "sweep.csv")
        assert len(rows) == 2
