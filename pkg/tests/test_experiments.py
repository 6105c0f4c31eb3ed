import csv
import json
from pathlib import Path

import numpy as np
import pytest

from hwnroute.config import (ScenarioConfig, TechConfig, TrainConfig,
                             MobilityConfig, save_scenario)
from hwnroute.experiments import (evaluate, evaluate_schemes_on_seed,
                                  mobility_eval, sweep, train)
from hwnroute.qnet import load_checkpoint
from hwnroute import cli


def desk_config(**overrides) -> ScenarioConfig:
    base = dict(
        relay_count=8,
        flow_count=2,
        e_nei=4,
        eval_topologies=3,
        techs=[TechConfig(40e6, 1), TechConfig(400e6, 2)],
        train=TrainConfig(episodes=12, batch_size=8, replay_capacity=256),
        mobility=MobilityConfig(horizon_s=3, mobile_count=4),
        reestablish_rounds=1,
        seed=5,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


class TestTrain:
    def test_single_episode_checkpoint_loads(self, tmp_path):
        cfg = desk_config(train=TrainConfig(episodes=1, batch_size=2,
                                            replay_capacity=16))
        result = train(cfg, tmp_path)
        net = load_checkpoint(result["checkpoint"])
        assert net.n_actions == cfg.e_nei
        assert net.input_dim == 5 * cfg.e_nei

    def test_loss_csv_rows_equal_train_steps(self, tmp_path):
        cfg = desk_config()
        result = train(cfg, tmp_path)
        with open(result["loss_csv"]) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == result["train_steps"]
        assert all(float(r["loss"]) >= 0.0 for r in rows)
        steps = [int(r["step"]) for r in rows]
        assert steps == list(range(len(rows)))

    def test_resume_reproduces_continuous_run(self, tmp_path):
        cfg = desk_config(train=TrainConfig(episodes=10, batch_size=4,
                                            replay_capacity=64))
        full = train(cfg, tmp_path / "full")

        first = train(cfg, tmp_path / "half", stop_after=5)
        resumed = train(cfg, tmp_path / "resumed",
                        resume_checkpoint=first["checkpoint"])

        a = load_checkpoint(full["checkpoint"])
        b = load_checkpoint(resumed["checkpoint"])
        assert np.array_equal(a.params, b.params)

    def test_training_is_seed_deterministic(self, tmp_path):
        cfg = desk_config()
        r1 = train(cfg, tmp_path / "a")
        r2 = train(cfg, tmp_path / "b")
        n1 = load_checkpoint(r1["checkpoint"])
        n2 = load_checkpoint(r2["checkpoint"])
        assert np.array_equal(n1.params, n2.params)
        assert Path(r1["loss_csv"]).read_bytes() == Path(r2["loss_csv"]).read_bytes()


class TestEvaluate:
    def test_single_seed_emits_one_row_per_scheme(self, tmp_path):
        cfg = desk_config()
        schemes = ["widest_path", "closest_to_destination"]
        table = evaluate(cfg, checkpoint=None, n_topologies=1, out_dir=tmp_path,
                         schemes=schemes)
        assert set(table) == set(schemes)
        with open(tmp_path / "results.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert {r["scheme"] for r in rows} == set(schemes)

    def test_cdf_files_are_nondecreasing(self, tmp_path):
        cfg = desk_config()
        evaluate(cfg, checkpoint=None, n_topologies=4, out_dir=tmp_path,
                 schemes=["widest_path"])
        with open(tmp_path / "cdf_widest_path.csv") as fh:
            rows = list(csv.DictReader(fh))
        rates = [float(r["sum_rate_bps"]) for r in rows]
        cdf = [float(r["cdf"]) for r in rows]
        assert rates == sorted(rates)
        assert cdf == sorted(cdf)
        assert cdf[-1] == 1.0

    def test_mean_matches_recomputation(self, tmp_path):
        cfg = desk_config()
        table = evaluate(cfg, checkpoint=None, n_topologies=3, out_dir=tmp_path,
                         schemes=["largest_rate"])
        with open(tmp_path / "results.csv") as fh:
            rows = [float(r["sum_rate_bps"]) for r in csv.DictReader(fh)]
        assert np.mean(rows) == pytest.approx(table["largest_rate"].mean(), rel=1e-12)

    def test_schemes_share_topologies(self):
        cfg = desk_config()
        rates = evaluate_schemes_on_seed(cfg, ["widest_path", "widest_path"],
                                         0, net=None)
        # Same scheme twice on one seed: identical placement, identical rate.
        assert len(rates) == 1

    def test_requires_checkpoint_for_dqn(self):
        with pytest.raises(ValueError, match="checkpoint"):
            evaluate(desk_config(), checkpoint=None, n_topologies=1,
                     schemes=["dqn"])

    def test_parallel_matches_serial(self, tmp_path):
        cfg = desk_config()
        serial = evaluate(cfg, checkpoint=None, n_topologies=4,
                          out_dir=tmp_path / "serial", schemes=["widest_path"])
        parallel = evaluate(cfg, checkpoint=None, n_topologies=4,
                            out_dir=tmp_path / "parallel", schemes=["widest_path"],
                            threads=2)
        assert np.array_equal(serial["widest_path"], parallel["widest_path"])
        assert ((tmp_path / "serial" / "results.csv").read_bytes()
                == (tmp_path / "parallel" / "results.csv").read_bytes())

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = desk_config()
        for sub in ("x", "y"):
            evaluate(cfg, checkpoint=None, n_topologies=3,
                     out_dir=tmp_path / sub, schemes=["widest_path", "largest_rate"])
        assert ((tmp_path / "x" / "results.csv").read_bytes()
                == (tmp_path / "y" / "results.csv").read_bytes())


class TestSweep:
    def test_single_value_sweep_equals_eval_mean(self, tmp_path):
        cfg = desk_config(policy="widest_path")
        rows = sweep(cfg, "relay_count", [8], checkpoint=None, n_topologies=3,
                     out_dir=tmp_path)
        table = evaluate(cfg, checkpoint=None, n_topologies=3,
                         schemes=["widest_path"])
        assert rows[0][0] == 8
        assert rows[0][1] == pytest.approx(table["widest_path"].mean(), rel=1e-12)

    def test_sweep_csv_schema(self, tmp_path):
        cfg = desk_config(policy="largest_rate")
        sweep(cfg, "subbands", [1, 2], checkpoint=None, n_topologies=2,
              out_dir=tmp_path)
        with open(tmp_path / "sweep.csv") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        assert header == ["subbands", "mean_sum_rate_bps", "stderr_bps"]
        assert [int(r[0]) for r in rows] == [1, 2]


class TestMobilityEval:
    def test_horizon_rows_and_static_consistency(self, tmp_path):
        cfg = desk_config(policy="widest_path",
                          mobility=MobilityConfig(horizon_s=2, mobile_count=0))
        means = mobility_eval(cfg, checkpoint=None, n_seeds=2, out_dir=tmp_path,
                              schemes=["widest_path"])
        series = means["widest_path"]
        assert series.shape == (3,)
        # No mobile nodes: the series is flat.
        assert np.allclose(series, series[0], rtol=1e-12)
        with open(tmp_path / "mobility.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3

    def test_horizon_one(self, tmp_path):
        cfg = desk_config(policy="largest_rate",
                          mobility=MobilityConfig(horizon_s=1, mobile_count=4))
        means = mobility_eval(cfg, checkpoint=None, n_seeds=1, out_dir=tmp_path,
                              schemes=["largest_rate"])
        assert means["largest_rate"].shape == (2,)


class TestCli:
    def test_train_eval_sweep_mobility_commands(self, tmp_path, capsys):
        cfg = desk_config(policy="widest_path",
                          train=TrainConfig(episodes=2, batch_size=2,
                                            replay_capacity=32))
        cfg_path = tmp_path / "scenario.json"
        save_scenario(cfg, cfg_path)

        assert cli.main(["train", "--config", str(cfg_path),
                         "--out", str(tmp_path / "t")]) == 0
        assert (tmp_path / "t" / "checkpoint.qnet").exists()

        assert cli.main(["eval", "--config", str(cfg_path), "--seeds", "2",
                         "--out", str(tmp_path / "e"),
                         "--checkpoint", str(tmp_path / "t" / "checkpoint.qnet")]) == 0
        assert (tmp_path / "e" / "results.csv").exists()

        assert cli.main(["sweep", "--config", str(cfg_path), "--axis", "subbands",
                         "--values", "1,2", "--seeds", "2",
                         "--out", str(tmp_path / "s")]) == 0
        assert (tmp_path / "s" / "sweep.csv").exists()

        assert cli.main(["mobility", "--config", str(cfg_path), "--seeds", "1",
                         "--out", str(tmp_path / "m")]) == 0
        assert (tmp_path / "m" / "mobility.csv").exists()
        out = capsys.readouterr().out
        assert "checkpoint" in out and "sweep.csv" in out

    def test_out_dir_env_default(self, tmp_path, monkeypatch):
        cfg = desk_config(policy="widest_path")
        cfg_path = tmp_path / "scenario.json"
        save_scenario(cfg, cfg_path)
        monkeypatch.setenv("HWNROUTE_OUT", str(tmp_path / "from_env"))
        assert cli.main(["eval", "--config", str(cfg_path), "--seeds", "1"]) == 0
        assert (tmp_path / "from_env" / "results.csv").exists()

    def test_dqn_eval_via_cli_checkpoint(self, tmp_path):
        cfg = desk_config(schemes=["dqn", "widest_path"],
                          train=TrainConfig(episodes=3, batch_size=2,
                                            replay_capacity=32))
        cfg_path = tmp_path / "scenario.json"
        save_scenario(cfg, cfg_path)
        assert cli.main(["train", "--config", str(cfg_path),
                         "--out", str(tmp_path / "t")]) == 0
        assert cli.main(["eval", "--config", str(cfg_path), "--seeds", "1",
                         "--checkpoint", str(tmp_path / "t" / "checkpoint.qnet"),
                         "--out", str(tmp_path / "e")]) == 0
        with open(tmp_path / "e" / "results.csv") as fh:
            schemes = {r["scheme"] for r in csv.DictReader(fh)}
        assert schemes == {"dqn", "widest_path"}
