import json
import os

import numpy as np
import pytest

from cousinsq import analysis
from cousinsq.cli import main
from cousinsq.colink import make_cousins
from cousinsq.config import ConfigError, load_config, parse_config_text
from cousinsq.mdp import random_mdp

TINY_MODEL = """
[model]
kind = model1
num_tx = 1
buffer_size = 1
arrival_prob = 0.5
num_channel_states = 2
gamma = 0.9

[cousins]
orders = 1,2

[schedule]
epsilon_floor = 0.3
alpha_tau = 200

[esql]
u = 0.5
trajectory_len = 8
min_visits = 40
max_steps = 200000

[baselines]
run = simple

[run]
seeds = 0,1
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_unknown_key_cites_line(self, tmp_path):
        bad = TINY_MODEL + "\n[esql]\nbogus_key = 3\n"
        # the duplicate [esql] section merges; the bogus key carries its line
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad, "cfg.ini")
        assert "bogus_key" in str(err.value)
        assert "cfg.ini:" in str(err.value)

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(TINY_MODEL + "\n[mystery]\nx = 1\n")
        assert "mystery" in str(err.value)

    def test_duplicate_key_rejected(self):
        text = "[model]\nkind = random\nkind = random\n"
        with pytest.raises(ConfigError) as err:
            parse_config_text(text)
        assert "duplicate" in str(err.value)

    def test_bad_value_type(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(TINY_MODEL.replace("min_visits = 40", "min_visits = soon"))
        assert "min_visits" in str(err.value)

    def test_u_of_one_rejected(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text(TINY_MODEL.replace("u = 0.5", "u = 1.0"))
        assert "u must lie strictly inside" in str(err.value)

    def test_missing_model_section(self):
        with pytest.raises(ConfigError):
            parse_config_text("[run]\nseeds = 1\n")

    def test_unknown_model_kind(self):
        with pytest.raises(ConfigError):
            parse_config_text("[model]\nkind = model9\n")

    def test_json_config_equivalent(self, tmp_path):
        ini = parse_config_text(TINY_MODEL)
        as_json = json.dumps(
            {
                "model": {
                    "kind": "model1",
                    "num_tx": 1,
                    "buffer_size": 1,
                    "arrival_prob": 0.5,
                    "num_channel_states": 2,
                    "gamma": 0.9,
                },
                "cousins": {"orders": [1, 2]},
                "schedule": {"epsilon_floor": 0.3, "alpha_tau": 200},
                "esql": {
                    "u": 0.5,
                    "trajectory_len": 8,
                    "min_visits": 40,
                    "max_steps": 200000,
                },
                "baselines": {"run": ["simple"]},
                "run": {"seeds": [0, 1]},
            }
        )
        parsed = parse_config_text(as_json)
        assert parsed.config_hash() == ini.config_hash()

    def test_orders_must_lead_with_one(self):
        with pytest.raises(ConfigError):
            parse_config_text(TINY_MODEL.replace("orders = 1,2", "orders = 2,3"))


def strip_timing(doc):
    doc = dict(doc)
    doc.pop("timing", None)
    return doc


class TestCmdRun:
    def test_outputs_and_fields(self, tmp_path):
        cfg = write(tmp_path, TINY_MODEL)
        out = str(tmp_path / "out")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        summary = json.load(open(os.path.join(out, "summary.json")))
        assert "ape_esql" in summary and "ape_simple" in summary
        assert summary["config_hash"]
        for seed in (0, 1):
            assert os.path.exists(os.path.join(out, f"trace_esql_seed{seed}.csv"))
            assert os.path.exists(os.path.join(out, f"trace_simple_seed{seed}.csv"))
        oracle = json.load(open(os.path.join(out, "oracle_policy.json")))
        assert oracle["config_hash"] == summary["config_hash"]

    def test_deterministic_reruns(self, tmp_path):
        cfg = write(tmp_path, TINY_MODEL)
        outs = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert main(["run", "--config", cfg, "--out", out]) == 0
            outs.append(out)
        s1 = strip_timing(json.load(open(os.path.join(outs[0], "summary.json"))))
        s2 = strip_timing(json.load(open(os.path.join(outs[1], "summary.json"))))
        assert s1 == s2
        t1 = open(os.path.join(outs[0], "trace_esql_seed0.csv")).read()
        t2 = open(os.path.join(outs[1], "trace_esql_seed0.csv")).read()
        assert t1 == t2

    def test_single_order_matches_simple(self, tmp_path):
        cfg = write(
            tmp_path,
            TINY_MODEL.replace("orders = 1,2", "orders = 1").replace(
                "seeds = 0,1", "seeds = 3"
            ),
        )
        out = str(tmp_path / "deg")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        summary = json.load(open(os.path.join(out, "summary.json")))
        assert summary["ape_esql"] == summary["ape_simple"]

    def test_config_error_exit_code(self, tmp_path):
        cfg = write(tmp_path, TINY_MODEL.replace("u = 0.5", "u = 1.0"))
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "x")]) == 2

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, TINY_MODEL)
        out = str(tmp_path / "ov")
        assert main(["run", "--config", cfg, "--out", out, "--seeds", "7"]) == 0
        summary = json.load(open(os.path.join(out, "summary.json")))
        assert summary["seeds"] == [7]


VERIFY_MODEL = TINY_MODEL.replace("seeds = 0,1", "seeds = 0").replace(
    "min_visits = 40", "min_visits = 120"
) + """
[analysis]
bounds = true
window = 20
"""


class TestCmdVerifyBounds:
    def test_requires_dense_snapshots(self, tmp_path):
        cfg = write(tmp_path, VERIFY_MODEL)
        assert main(["verify-bounds", "--config", cfg, "--out", str(tmp_path / "vb")]) == 2

    def test_report_and_exit(self, tmp_path):
        cfg = write(tmp_path, VERIFY_MODEL + "\n[esql]\nsnapshot_cadence = 1\n")
        out = str(tmp_path / "vb")
        code = main(["verify-bounds", "--config", cfg, "--out", out])
        report = json.load(open(os.path.join(out, "bounds_report.json")))
        checks = report["checks"]
        assert checks["fusion_identity_ok"]
        assert checks["bound_ordering_ok"]
        assert checks["update_bound_ok"]
        assert "strict" in report["variance_bounds_showcase"]
        assert os.path.exists(os.path.join(out, "delta_series.csv"))
        assert os.path.exists(os.path.join(out, "variance_series.csv"))
        assert code == (0 if report["passed"] else 1)


SELECT_MODEL = """
[model]
kind = random
num_states = 12
num_actions = 2
seed = 5
gamma = 0.9
row_support = 3

[cousins]
orders = 1,2

[analysis]
bellman_orders = 2,3,4,5
bellman_k = 3
greedy_compare = true
"""


class TestCmdSelectEnvs:
    def test_ranking_matches_library(self, tmp_path):
        cfg_path = write(tmp_path, SELECT_MODEL)
        out = str(tmp_path / "sel")
        assert main(["select-envs", "--config", cfg_path, "--out", out]) == 0
        report = json.load(open(os.path.join(out, "select_envs.json")))
        cfg = load_config(cfg_path)
        from cousinsq.cli import prepare

        prepared = prepare(cfg)
        candidates = [
            c
            for c in make_cousins(prepared.source_mdp, [1, 2, 3, 4, 5])
            if c.order != 1
        ]
        expect = analysis.bellman_select(candidates, prepared.source_mdp, 3)
        assert report["ranking"] == expect
        assert "overlap" in report["greedy"]
        assert os.path.exists(os.path.join(out, "bellman.csv"))

    def test_ties_reported_for_identical_candidates(self, tmp_path):
        # an identity chain makes every cousin equal, so scores tie
        ini = SELECT_MODEL.replace("kind = random", "kind = random\ncost_low = 1\ncost_high = 1")
        text = """
[model]
kind = file
path = {path}

[analysis]
bellman_orders = 2,3
bellman_k = 1
"""
        from cousinsq.mdp import CostModel, Mdp, TransitionTensor, save_mdp

        mdp = Mdp(
            TransitionTensor(np.eye(4)[None, :, :].repeat(2, axis=0)),
            CostModel(np.linspace(0, 1, 8).reshape(4, 2)),
            0.9,
        )
        mdp_path = tmp_path / "identity.json"
        save_mdp(mdp, str(mdp_path))
        cfg_path = write(tmp_path, text.format(path=mdp_path), name="ties.ini")
        out = str(tmp_path / "ties")
        assert main(["select-envs", "--config", cfg_path, "--out", out, "--k", "1"]) == 0
        report = json.load(open(os.path.join(out, "select_envs.json")))
        assert report["ties"], "identical candidates must be reported as tied"


SWEEP_MODEL = TINY_MODEL + """
[sweep]
kind = size
field = buffer_size
values = 1,2
"""


class TestCmdSweep:
    def test_size_sweep(self, tmp_path):
        cfg = write(tmp_path, SWEEP_MODEL)
        out = str(tmp_path / "sw")
        assert main(["sweep", "--config", cfg, "--out", out]) == 0
        lines = open(os.path.join(out, "size_sweep.csv")).read().splitlines()
        assert lines[0].startswith("size_value,num_states,algorithm")
        assert len(lines) >= 5  # 2 sizes x 2 algorithms + header

    def test_aggregation_sweep(self, tmp_path):
        text = TINY_MODEL.replace("buffer_size = 1", "buffer_size = 3") + """
[sweep]
kind = aggregation
ks = 0,1
"""
        cfg = write(tmp_path, text)
        out = str(tmp_path / "agg")
        assert main(["sweep", "--config", cfg, "--out", out]) == 0
        lines = open(os.path.join(out, "aggregation_sweep.csv")).read().splitlines()
        assert lines[0].startswith("k,algorithm,cluster_count,memory_entries")
        assert len(lines) >= 5
