#!/usr/bin/env python3
"""Regenerate frontend/sample_run from small deterministic experiment configs.

The directory bundles one artifact of every kind the figure renderers
consume: multi-seed traces with a summary, bound-verification series, an
averaged-distance-correlation matrix, a Bellman ranking, and both sweep
tables. Everything is produced through the public CLI.
"""

from __future__ import annotations

import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "frontend", "sample_run")

MAIN_RUN = """
[model]
kind = model3
num_tx = 1
num_rx = 3
buffer_size = 31
tx_max_packets = 1
num_channel_states = 2
arrival_prob = 0.4
gamma = 0.95
buffer_w = 0.0
channel_w = 2.0
collision_w = 1.0
rx_load_w = 0.0
drop_penalty = 3.0
best_quality = 0.9
worst_quality = 0.3
distance_falloff = 0.6

[cousins]
orders = 1,2,3

[esql]
u = 0.5
trajectory_len = 15
min_visits = 50
max_steps = 5000
on_cap = stop

[baselines]
run = simple

[run]
seeds = 0,1,2,3
"""

BOUNDS_RUN = """
[model]
kind = model1
num_tx = 1
buffer_size = 1
arrival_prob = 0.5
num_channel_states = 2
gamma = 0.8

[cousins]
orders = 1,2,3,4,5

[schedule]
epsilon_floor = 0.3
alpha_tau = 300

[esql]
u = 0.5
trajectory_len = 10
min_visits = 400
max_steps = 400000
snapshot_cadence = 1

[baselines]
run =

[run]
seeds = 0,1,2,3

[analysis]
bounds = true
window = 20
adc = true
adc_max_pairs = 60
"""

SELECT_RUN = """
[model]
kind = random
num_states = 30
num_actions = 2
seed = 11
gamma = 0.9
row_support = 3

[cousins]
orders = 1,2

[analysis]
bellman_orders = 2,3,4,5,6,7
bellman_k = 3
"""

SIZE_SWEEP = """
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

[esql]
u = 0.5
trajectory_len = 10
min_visits = 40
max_steps = 100000

[baselines]
run = simple

[run]
seeds = 0,1

[sweep]
kind = size
field = buffer_size
values = 1,2,3
"""

AGG_SWEEP = """
[model]
kind = model1
num_tx = 1
buffer_size = 3
arrival_prob = 0.5
num_channel_states = 2
gamma = 0.9

[cousins]
orders = 1,2

[schedule]
epsilon_floor = 0.3

[esql]
u = 0.5
trajectory_len = 10
min_visits = 40
max_steps = 100000

[baselines]
run = simple

[run]
seeds = 0,1

[sweep]
kind = aggregation
ks = 0,1,2
"""


def run_cli(args: list[str]) -> None:
    from cousinsq.cli import main

    code = main(args)
    if code != 0:
        raise SystemExit(f"cli {' '.join(args)} exited with {code}")


def main() -> None:
    if os.path.exists(OUT):
        shutil.rmtree(OUT)
    os.makedirs(OUT)
    with tempfile.TemporaryDirectory() as tmp:
        def cfg(name: str, text: str) -> str:
            path = os.path.join(tmp, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
            return path

        run_cli(["run", "--config", cfg("main.ini", MAIN_RUN), "--out", OUT])

        bounds_out = os.path.join(tmp, "bounds")
        run_cli(["verify-bounds", "--config", cfg("bounds.ini", BOUNDS_RUN), "--out", bounds_out])
        for name in ("bounds_report.json", "delta_series.csv", "variance_series.csv", "adc.csv"):
            shutil.copy(os.path.join(bounds_out, name), os.path.join(OUT, name))

        select_out = os.path.join(tmp, "select")
        run_cli(["select-envs", "--config", cfg("select.ini", SELECT_RUN), "--out", select_out])
        for name in ("select_envs.json", "bellman.csv"):
            shutil.copy(os.path.join(select_out, name), os.path.join(OUT, name))

        sweep_out = os.path.join(tmp, "sweeps")
        run_cli(["sweep", "--config", cfg("size.ini", SIZE_SWEEP), "--out", sweep_out])
        shutil.copy(os.path.join(sweep_out, "size_sweep.csv"), os.path.join(OUT, "size_sweep.csv"))
        run_cli(["sweep", "--config", cfg("agg.ini", AGG_SWEEP), "--out", sweep_out])
        shutil.copy(
            os.path.join(sweep_out, "aggregation_sweep.csv"),
            os.path.join(OUT, "aggregation_sweep.csv"),
        )
    print(f"sample run written to {OUT}")


if __name__ == "__main__":
    sys.exit(main())
