"""Experiment driver: build environments, run learners over seeds, analyze.

Subcommands:
    run            per-seed trace CSVs plus a summary JSON
    verify-bounds  convergence / variance diagnostic suite with pass/fail JSON
    select-envs    Bellman-error ranking of candidate cousin orders
    sweep          size or aggregation-k sweeps, one CSV table per sweep

All outputs embed the config hash; everything except the `timing` block of
the summary is byte-deterministic for a fixed config. The COUSINSQ_LOG
environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from . import analysis
from .aggregation import build_aggregation, cost_spread, wrap_aggregated
from .colink import SyntheticEnvironment, estimate_ptt, make_cousins
from .config import ConfigError, ExperimentConfig, load_config
from .envs import EnvironmentSampler, MdpSampler, make_rng
from .esql import EnsembleConfig, run_esql
from .mdp import (
    Mdp,
    Policy,
    load_mdp,
    optimal_q,
    random_mdp,
    value_iteration,
)
from .qlearning import run_baseline
from .trace import CoverageError, ExperimentTrace
from .wireless import MODEL_CLASSES, build_model, materialize_ptt

log = logging.getLogger("cousinsq")

ORACLE_CACHE_NAME = "oracle_policy.json"
SUMMARY_NAME = "summary.json"


@dataclass
class Prepared:
    """Everything seed-independent about one experiment."""

    cfg: ExperimentConfig
    config_hash: str
    model: Any  # WirelessModel | None
    true_mdp: Mdp
    source_mdp: Mdp  # cousin construction source (true or estimated)
    cousins: list[SyntheticEnvironment]
    oracle_policy: Policy
    aggregation_map: Any  # AggregationMap | None


def _build_base(cfg: ExperimentConfig):
    """Returns (model-or-None, exact MDP)."""
    body = dict(cfg.model)
    kind = body.pop("kind")
    seed = body.pop("seed", 0)
    state_cap = body.pop("state_cap", 1_000_000)
    if kind == "random":
        num_states = body.pop("num_states", 8)
        num_actions = body.pop("num_actions", 2)
        gamma = body.pop("gamma", 0.95)
        row_support = body.pop("row_support", None)
        cost_low = body.pop("cost_low", 0.0)
        cost_high = body.pop("cost_high", 1.0)
        mdp = random_mdp(
            num_states, num_actions, gamma, make_rng(seed, 777),
            row_support=row_support, cost_low=cost_low, cost_high=cost_high,
        )
        return None, mdp
    if kind == "file":
        if "path" not in body:
            raise ConfigError("model.kind=file requires model.path")
        return None, load_mdp(body["path"])
    model_id = int(kind[-1])
    cfg_cls = MODEL_CLASSES[model_id][1]
    model = build_model(model_id, cfg_cls(**body), seed=(seed, 555), state_cap=state_cap)
    return model, materialize_ptt(model)


def prepare(cfg: ExperimentConfig) -> Prepared:
    model, true_mdp = _build_base(cfg)
    if cfg.cousins["source"] == "estimated":
        sampler = model if model is not None else MdpSampler(true_mdp)
        tensor, _ = estimate_ptt(
            sampler,
            cfg.cousins["est_min_visits"],
            make_rng(cfg.cousins["est_seed"], 888),
        )
        source_mdp = Mdp(tensor, true_mdp.costs, true_mdp.gamma)
    else:
        source_mdp = true_mdp
    cousins = make_cousins(source_mdp, cfg.cousins["orders"])
    _, oracle_policy = value_iteration(true_mdp, tol=1e-8)
    k = cfg.run["aggregation_k"]
    agg_map = None
    if k > 0:
        if model is None:
            raise ConfigError("aggregation needs a wireless model (decodable states)")
        agg_map = build_aggregation(model, k)
    return Prepared(
        cfg=cfg,
        config_hash=cfg.config_hash(),
        model=model,
        true_mdp=true_mdp,
        source_mdp=source_mdp,
        cousins=cousins,
        oracle_policy=oracle_policy,
        aggregation_map=agg_map,
    )


def _make_envs(prepared: Prepared) -> list[EnvironmentSampler]:
    """Primary env is the real system; cousins sample their own chains."""
    envs: list[EnvironmentSampler] = []
    for cousin in prepared.cousins:
        if cousin.order == 1:
            envs.append(
                prepared.model
                if prepared.model is not None
                else MdpSampler(prepared.true_mdp)
            )
        else:
            envs.append(MdpSampler(cousin.mdp))
    if prepared.aggregation_map is not None:
        envs = [wrap_aggregated(env, prepared.aggregation_map) for env in envs]
    return envs


def _ape_fn(prepared: Prepared):
    oracle = np.asarray(prepared.oracle_policy.actions)
    agg = prepared.aggregation_map
    if agg is None:
        return lambda q: float(np.mean(np.argmin(q, axis=1) != oracle))
    return lambda q: float(
        np.mean(agg.expand_policy(np.argmin(q, axis=1)) != oracle)
    )


def _final_ape(prepared: Prepared, policy_actions: np.ndarray) -> float:
    oracle = np.asarray(prepared.oracle_policy.actions)
    if prepared.aggregation_map is not None:
        policy_actions = prepared.aggregation_map.expand_policy(policy_actions)
    return float(np.mean(policy_actions != oracle))


def _esql_config(prepared: Prepared, seed: int) -> EnsembleConfig:
    cfg = prepared.cfg
    k = len(cfg.cousins["orders"])
    seeds = tuple((seed, n) for n in range(k)) + (seed,)
    return EnsembleConfig(
        orders=tuple(cfg.cousins["orders"]),
        u=cfg.esql["u"],
        trajectory_len=cfg.esql["trajectory_len"],
        min_visits=cfg.esql["min_visits"],
        schedule=cfg.learning_schedule(),
        seeds=seeds,
        max_steps=cfg.esql["max_steps"],
        on_cap=cfg.esql["on_cap"],
        weight_every=cfg.esql["weight_every"],
        snapshot_cadence=cfg.esql["snapshot_cadence"],
        ape_cadence=cfg.esql["ape_cadence"],
    )


def run_seed(prepared: Prepared, seed: int, out_dir: str | None) -> dict:
    """Run every enabled algorithm for one seed; returns the summary rows."""
    cfg = prepared.cfg
    results: dict[str, Any] = {"seed": seed, "algorithms": {}, "timing": {}}
    ape_fn = _ape_fn(prepared)

    if cfg.esql["enabled"]:
        t0 = time.perf_counter()
        res = run_esql(
            _make_envs(prepared),
            _esql_config(prepared, seed),
            ape_fn=ape_fn,
            config_hash=prepared.config_hash,
        )
        elapsed = time.perf_counter() - t0
        results["algorithms"]["esql"] = {
            "final_ape": _final_ape(prepared, np.asarray(res.policy.actions)),
            "steps": res.trace.num_steps,
            "final_weights": [float(w) for w in res.final_weights],
        }
        results["timing"]["esql"] = elapsed
        results["_esql_trace"] = res.trace
        if out_dir:
            res.trace.to_csv(os.path.join(out_dir, f"trace_esql_seed{seed}.csv"))

    for variant in cfg.baselines["run"]:
        envs = _make_envs(prepared)
        t0 = time.perf_counter()
        res = run_baseline(
            variant,
            envs[0],
            cfg.learning_schedule(),
            cfg.esql["trajectory_len"],
            cfg.esql["min_visits"],
            seeds=((seed, 0), seed),
            max_steps=cfg.esql["max_steps"],
            on_cap=cfg.esql["on_cap"],
            ensemble_size=cfg.baselines["ensemble_size"],
            ape_fn=ape_fn,
            ape_cadence=cfg.esql["ape_cadence"],
        )
        elapsed = time.perf_counter() - t0
        results["algorithms"][variant] = {
            "final_ape": _final_ape(prepared, np.asarray(res.policy.actions)),
            "steps": res.trace.num_steps,
        }
        results["timing"][variant] = elapsed
        if out_dir:
            res.trace.to_csv(os.path.join(out_dir, f"trace_{variant}_seed{seed}.csv"))
    return results


def _seed_worker(args: tuple) -> dict:
    prepared, seed, out_dir = args
    result = run_seed(prepared, seed, out_dir)
    result.pop("_esql_trace", None)  # traces stay on disk for worker runs
    return result


def _run_seeds(prepared: Prepared, seeds: Sequence[int], out_dir: str | None, threads: int):
    if threads <= 1 or len(seeds) <= 1:
        return [run_seed(prepared, seed, out_dir) for seed in seeds]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_seed_worker, [(prepared, s, out_dir) for s in seeds]))


def _aggregate_summary(prepared: Prepared, per_seed: list[dict]) -> dict:
    cfg = prepared.cfg
    algorithms: dict[str, Any] = {}
    names = sorted({name for row in per_seed for name in row["algorithms"]})
    for name in names:
        apes = {str(row["seed"]): row["algorithms"][name]["final_ape"] for row in per_seed}
        entry: dict[str, Any] = {
            "final_ape": apes,
            "final_ape_mean": float(np.mean(list(apes.values()))),
            "steps": {
                str(row["seed"]): row["algorithms"][name]["steps"] for row in per_seed
            },
        }
        if name == "esql":
            entry["orders"] = list(cfg.cousins["orders"])
            entry["final_weights"] = {
                str(row["seed"]): row["algorithms"][name]["final_weights"]
                for row in per_seed
            }
        algorithms[name] = entry
    summary = {
        "config_hash": prepared.config_hash,
        "model": {
            "kind": cfg.model["kind"],
            "num_states": prepared.true_mdp.num_states,
            "num_actions": prepared.true_mdp.num_actions,
            "gamma": prepared.true_mdp.gamma,
        },
        "seeds": list(cfg.run["seeds"]),
        "algorithms": algorithms,
        "timing": {
            name: {str(row["seed"]): row["timing"].get(name) for row in per_seed}
            for name in names
        },
    }
    if prepared.aggregation_map is not None:
        agg = prepared.aggregation_map
        summary["aggregation"] = {
            "k": agg.k,
            "cluster_count": agg.cluster_count,
            "memory_entries": agg.cluster_count * prepared.true_mdp.num_actions,
            "reduction_factor": agg.memory_reduction_factor,
            "cost_spread": cost_spread(agg, prepared.true_mdp.costs.expected_costs),
        }
    if "esql" in algorithms:
        summary["ape_esql"] = algorithms["esql"]["final_ape_mean"]
    for variant in cfg.baselines["run"]:
        summary[f"ape_{variant}"] = algorithms[variant]["final_ape_mean"]
    return summary


def _write_json(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(cfg: ExperimentConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    prepared = prepare(cfg)
    oracle_doc = {
        "config_hash": prepared.config_hash,
        "actions": [int(a) for a in prepared.oracle_policy.actions],
    }
    _write_json(oracle_doc, os.path.join(out_dir, ORACLE_CACHE_NAME))
    per_seed = _run_seeds(prepared, cfg.run["seeds"], out_dir, cfg.run["threads"])
    for row in per_seed:
        row.pop("_esql_trace", None)
    summary = _aggregate_summary(prepared, per_seed)
    _write_json(summary, os.path.join(out_dir, SUMMARY_NAME))
    log.info("run complete: %s", os.path.join(out_dir, SUMMARY_NAME))
    return 0


# -- verify-bounds ------------------------------------------------------------


def _bounds_report(prepared: Prepared, traces: list[ExperimentTrace], out_dir: str) -> dict:
    cfg = prepared.cfg
    u = cfg.esql["u"]
    window = cfg.analysis["window"]
    tail_fraction = cfg.analysis["tail_fraction"]
    beta_fraction = cfg.analysis["beta_fraction"]
    q_star = optimal_q(prepared.true_mdp, tol=1e-9)
    s_count = prepared.true_mdp.num_states
    a_count = prepared.true_mdp.num_actions

    identity_worst = 0.0
    gap_tail_worst = 0.0
    prop2_failures = []
    passage_failures = []
    variance_checked = 0
    variance_passed = 0
    phi_all: list[float] = []
    showcase = None

    for trace in traces:
        identity_worst = max(identity_worst, analysis.fusion_identity_residual(trace, u))
        gaps = analysis.mean_gap_series(trace)
        tail = max(1, int(len(gaps) * tail_fraction))
        gap_tail_worst = max(gap_tail_worst, float(gaps[-tail:].mean()))
        t_star = trace.num_steps - window - 1
        for s in range(s_count):
            for a in range(a_count):
                bound = analysis.update_magnitude_bound(trace, s, a, tail_fraction)
                if not bound.holds:
                    prop2_failures.append((s, a))
                if bound.theta_sum > 0:
                    beta = beta_fraction * bound.theta_sum
                    predicted = analysis.iterations_to_update_threshold(
                        beta, u, bound.theta_sum
                    )
                    reached = analysis.first_passage(trace, s, a, beta)
                    if reached is None or reached > predicted:
                        passage_failures.append((s, a))
                if t_star >= 2 * window:
                    err = analysis.fused_error_series(trace, q_star, s, a)
                    _, var = analysis.windowed_moments(err, t_star, window)
                    stats = analysis.error_distribution_diagnostics(
                        trace, q_star, s, a, t=t_star, window=window
                    )
                    lam = max(st.lam for st in stats)
                    bounds = analysis.variance_bounds(u, lam)
                    variance_checked += 1
                    if var <= min(bounds.strict, bounds.modest, bounds.none) + 1e-12:
                        variance_passed += 1
        counts = trace.final_visit_counts
        pair = np.unravel_index(np.argmax(counts), counts.shape)
        if showcase is None:
            showcase = (trace, int(pair[0]), int(pair[1]))
        phi = analysis.contraction_ratio_check(trace, int(pair[0]), int(pair[1]))
        phi_all.extend(phi.phi_per_env.tolist())

    ordering_ok = True
    for u_grid in np.linspace(0.05, 0.95, 10):
        for lam_grid in np.linspace(0.1, 5.0, 10):
            b = analysis.variance_bounds(float(u_grid), float(lam_grid))
            if not (b.strict <= b.modest <= b.none):
                ordering_ok = False

    pass_fraction = variance_passed / variance_checked if variance_checked else 1.0
    checks = {
        "fusion_identity_max_residual": identity_worst,
        "fusion_identity_ok": identity_worst <= 1e-10,
        "mean_gap_tail": gap_tail_worst,
        "mean_gap_ok": gap_tail_worst < 1e-3,
        "update_bound_failures": prop2_failures,
        "update_bound_ok": not prop2_failures,
        "first_passage_failures": passage_failures,
        "first_passage_ok": not passage_failures,
        "variance_pass_fraction": pass_fraction,
        "variance_ok": pass_fraction >= cfg.analysis["min_pass_fraction"],
        "bound_ordering_ok": ordering_ok,
        "contraction_ratios": phi_all,
    }
    report = {
        "config_hash": prepared.config_hash,
        "u": u,
        "window": window,
        "checks": checks,
        "passed": all(
            checks[key]
            for key in (
                "fusion_identity_ok",
                "mean_gap_ok",
                "update_bound_ok",
                "first_passage_ok",
                "variance_ok",
                "bound_ordering_ok",
            )
        ),
    }

    # series exports for the plotting component
    trace, s_show, a_show = showcase
    deltas = np.abs(trace.delta_series(s_show, a_show))
    theta_sum = analysis.update_magnitude_bound(trace, s_show, a_show).theta_sum
    gaps = analysis.mean_gap_series(trace)
    with open(os.path.join(out_dir, "delta_series.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,abs_delta,bound,mean_gap\n")
        for t in range(len(deltas)):
            gap = gaps[t - 1] if 0 < t <= len(gaps) else ""
            fh.write(f"{t},{deltas[t]:.17g},{theta_sum:.17g},{gap}\n")
    err = analysis.fused_error_series(trace, q_star, s_show, a_show)
    stats = analysis.error_distribution_diagnostics(
        trace, q_star, s_show, a_show,
        t=trace.num_steps - window - 1, window=window,
    )
    lam = max(st.lam for st in stats)
    b = analysis.variance_bounds(u, lam)
    report["variance_bounds_showcase"] = {
        "lambda": lam,
        "strict": b.strict,
        "modest": b.modest,
        "none": b.none,
    }
    with open(os.path.join(out_dir, "variance_series.csv"), "w", encoding="utf-8") as fh:
        fh.write("t,windowed_variance,strict,modest,none\n")
        for t in range(2 * window, trace.num_steps - window - 1, max(1, window // 2)):
            _, var = analysis.windowed_moments(err, t, window)
            fh.write(f"{t},{var:.17g},{b.strict:.17g},{b.modest:.17g},{b.none:.17g}\n")
    report["showcase_pair"] = [s_show, a_show]

    if cfg.analysis["adc"] and len(traces) >= 4:
        lo = trace.num_steps // 2
        matrix = analysis.adc_matrix(
            traces,
            q_star,
            s_show,
            a_show,
            env_indices=list(range(len(cfg.cousins["orders"]))),
            time_range=(lo, trace.num_steps),
            max_pairs=cfg.analysis["adc_max_pairs"],
            rng=make_rng(0, 424242),
        )
        orders = cfg.cousins["orders"]
        with open(os.path.join(out_dir, "adc.csv"), "w", encoding="utf-8") as fh:
            fh.write("order," + ",".join(str(o) for o in orders) + "\n")
            for i, o in enumerate(orders):
                fh.write(f"{o}," + ",".join(f"{x:.17g}" for x in matrix[i]) + "\n")
        report["adc_mean_offdiag"] = float(
            (matrix.sum() - np.trace(matrix)) / max(matrix.size - len(orders), 1)
        )
    return report


def cmd_verify_bounds(cfg: ExperimentConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    if cfg.esql["snapshot_cadence"] != 1:
        raise ConfigError("verify-bounds requires esql.snapshot_cadence = 1")
    prepared = prepare(cfg)
    traces = []
    for seed in cfg.run["seeds"]:
        res = run_esql(
            _make_envs(prepared),
            _esql_config(prepared, seed),
            ape_fn=_ape_fn(prepared),
            config_hash=prepared.config_hash,
        )
        res.trace.to_csv(os.path.join(out_dir, f"trace_esql_seed{seed}.csv"))
        traces.append(res.trace)
    report = _bounds_report(prepared, traces, out_dir)
    _write_json(report, os.path.join(out_dir, "bounds_report.json"))
    return 0 if report["passed"] else 1


# -- select-envs ----------------------------------------------------------------


def cmd_select_envs(cfg: ExperimentConfig, out_dir: str, k: int | None = None) -> int:
    os.makedirs(out_dir, exist_ok=True)
    prepared = prepare(cfg)
    k = k if k is not None else cfg.analysis["bellman_k"]
    candidate_orders = [o for o in cfg.analysis["bellman_orders"] if o != 1]
    candidates = [
        c
        for c in make_cousins(prepared.source_mdp, [1] + candidate_orders)
        if c.order != 1
    ]
    t0 = time.perf_counter()
    errors = analysis.bellman_errors(candidates, prepared.source_mdp)
    ranking = analysis.bellman_select(candidates, prepared.source_mdp, k)
    bellman_elapsed = time.perf_counter() - t0

    by_norm: dict[float, list[int]] = {}
    for order, norm in errors:
        by_norm.setdefault(round(norm, 12), []).append(order)
    ties = [orders for orders in by_norm.values() if len(orders) > 1]

    report: dict[str, Any] = {
        "config_hash": prepared.config_hash,
        "k": k,
        "ranking": ranking,
        "errors": {str(order): norm for order, norm in errors},
        "ties": ties,
        "timing": {"bellman_seconds": bellman_elapsed},
    }
    greedy_rank = None
    if cfg.analysis["greedy_compare"]:
        t0 = time.perf_counter()
        greedy_rank = analysis.greedy_ape_ranking(candidates, prepared.true_mdp, k)
        greedy_elapsed = time.perf_counter() - t0
        overlap = len(set(ranking) & set(greedy_rank)) / k
        report["greedy"] = {
            "ranking": greedy_rank,
            "overlap": overlap,
            "greedy_seconds": greedy_elapsed,
            "bellman_faster": bellman_elapsed < greedy_elapsed,
        }
    with open(os.path.join(out_dir, "bellman.csv"), "w", encoding="utf-8") as fh:
        fh.write("order,bellman_error\n")
        for order, norm in sorted(errors):
            fh.write(f"{order},{norm:.17g}\n")
    _write_json(report, os.path.join(out_dir, "select_envs.json"))
    return 0


# -- sweep ------------------------------------------------------------------


def cmd_sweep(cfg: ExperimentConfig, out_dir: str) -> int:
    os.makedirs(out_dir, exist_ok=True)
    kind = cfg.sweep["kind"]
    if kind == "size":
        return _sweep_size(cfg, out_dir)
    return _sweep_aggregation(cfg, out_dir)


def _sweep_size(cfg: ExperimentConfig, out_dir: str) -> int:
    field_name = cfg.sweep["field"]
    values = cfg.sweep["values"]
    if not values:
        raise ConfigError("sweep.values must not be empty for a size sweep")
    rows = []
    for value in values:
        model_body = dict(cfg.model)
        model_body[field_name] = value
        sub = dataclasses.replace(cfg, model=model_body)
        prepared = prepare(sub)
        per_seed = _run_seeds(prepared, sub.run["seeds"], None, sub.run["threads"])
        names = sorted({n for row in per_seed for n in row["algorithms"]})
        for name in names:
            apes = [row["algorithms"][name]["final_ape"] for row in per_seed]
            times = [row["timing"][name] for row in per_seed]
            rows.append(
                (
                    value,
                    prepared.true_mdp.num_states,
                    name,
                    float(np.mean(apes)),
                    float(np.std(apes)),
                    float(np.mean(times)),
                )
            )
    with open(os.path.join(out_dir, "size_sweep.csv"), "w", encoding="utf-8") as fh:
        fh.write("size_value,num_states,algorithm,ape_mean,ape_std,runtime_s_mean\n")
        for row in rows:
            fh.write(
                f"{row[0]},{row[1]},{row[2]},{row[3]:.17g},{row[4]:.17g},{row[5]:.17g}\n"
            )
    return 0


def _sweep_aggregation(cfg: ExperimentConfig, out_dir: str) -> int:
    ks = cfg.sweep["ks"]
    if not ks:
        raise ConfigError("sweep.ks must not be empty for an aggregation sweep")
    rows = []
    for k in ks:
        run_body = dict(cfg.run)
        run_body["aggregation_k"] = k
        sub = dataclasses.replace(cfg, run=run_body)
        prepared = prepare(sub)
        per_seed = _run_seeds(prepared, sub.run["seeds"], None, sub.run["threads"])
        names = sorted({n for row in per_seed for n in row["algorithms"]})
        agg = prepared.aggregation_map
        clusters = agg.cluster_count if agg else prepared.true_mdp.num_states
        spread = (
            cost_spread(agg, prepared.true_mdp.costs.expected_costs) if agg else 0.0
        )
        for name in names:
            apes = [row["algorithms"][name]["final_ape"] for row in per_seed]
            times = [row["timing"][name] for row in per_seed]
            rows.append(
                (
                    k,
                    name,
                    clusters,
                    clusters * prepared.true_mdp.num_actions,
                    prepared.true_mdp.num_states / clusters,
                    float(np.mean(apes)),
                    float(np.std(apes)),
                    float(np.mean(times)),
                    spread,
                )
            )
    with open(os.path.join(out_dir, "aggregation_sweep.csv"), "w", encoding="utf-8") as fh:
        fh.write(
            "k,algorithm,cluster_count,memory_entries,reduction_factor,"
            "ape_mean,ape_std,runtime_s_mean,cost_spread\n"
        )
        for row in rows:
            fh.write(
                f"{row[0]},{row[1]},{row[2]},{row[3]},{row[4]:.17g},"
                f"{row[5]:.17g},{row[6]:.17g},{row[7]:.17g},{row[8]:.17g}\n"
            )
    return 0


# -- entry point ----------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cousinsq",
        description="Ensemble Q-learning experiments over co-link synthetic environments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "verify-bounds", "select-envs", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="seed-level workers")
        p.add_argument("--seeds", default=None, help="comma list overriding run.seeds")
        if name == "select-envs":
            p.add_argument("--k", type=int, default=None, help="orders to select")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("COUSINSQ_LOG", "WARNING").upper())
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides: dict[str, Any] = {}
        if args.seeds is not None:
            overrides["seeds"] = tuple(int(s) for s in args.seeds.split(","))
        if args.threads is not None:
            overrides["threads"] = args.threads
        if overrides:
            cfg = dataclasses.replace(cfg, run={**cfg.run, **overrides})
        out_dir = args.out if args.out is not None else cfg.run["out"]
        if args.command == "run":
            return cmd_run(cfg, out_dir)
        if args.command == "verify-bounds":
            return cmd_verify_bounds(cfg, out_dir)
        if args.command == "select-envs":
            return cmd_select_envs(cfg, out_dir, args.k)
        return cmd_sweep(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CoverageError as exc:
        print(f"coverage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
