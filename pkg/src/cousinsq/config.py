"""Experiment configuration: sectioned key=value files (JSON accepted too).

The text format is deliberately small: `[section]` headers, `key = value`
lines, `#`/`;` comments. Every key is schema-checked before any work runs;
unknown sections or keys are rejected with the offending line number.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

from .qlearning import BASELINE_VARIANTS, LearningSchedule
from .wireless import Model1Config, Model2Config, Model3Config, Model4Config


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.path = path


def _parse_sectioned_text(text: str, path: str | None) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigError("empty section name", lineno, path)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got '{line}'", lineno, path)
        if current is None:
            raise ConfigError("key outside any [section]", lineno, path)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in sections[current]:
            raise ConfigError(f"duplicate key '{key}'", lineno, path)
        sections[current][key] = (value.strip(), lineno)
    return sections


def _sections_from_json(text: str, path: str | None) -> dict[str, dict[str, tuple[str, int]]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, path) from exc
    if not isinstance(doc, dict):
        raise ConfigError("top-level JSON value must be an object", None, path)
    out: dict[str, dict[str, tuple[str, int]]] = {}
    for section, body in doc.items():
        if not isinstance(body, dict):
            raise ConfigError(f"section '{section}' must be an object", None, path)
        out[section] = {}
        for key, value in body.items():
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, (list, tuple)):
                rendered = ",".join(str(v) for v in value)
            else:
                rendered = str(value)
            out[section][key] = (rendered, -1)
    return out


# -- typed coercers -----------------------------------------------------------


def _int(raw: str) -> int:
    return int(raw)


def _float(raw: str) -> float:
    return float(raw)


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{raw}'")


def _str(raw: str) -> str:
    return raw


def _int_list(raw: str) -> tuple[int, ...]:
    if not raw:
        return ()
    return tuple(int(part.strip()) for part in raw.split(","))


def _float_list(raw: str) -> tuple[float, ...]:
    if not raw:
        return ()
    return tuple(float(part.strip()) for part in raw.split(","))


def _str_list(raw: str) -> tuple[str, ...]:
    if not raw:
        return ()
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _point_list(raw: str) -> tuple[tuple[int, int], ...]:
    """Grid points like '1:1;0:2'."""
    out = []
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        x, _, y = part.partition(":")
        out.append((int(x), int(y)))
    return tuple(out)


_MODEL_FIELD_TYPES = {
    float: _float,
    int: _int,
    str: _str,
}

_MODEL_CONFIGS = {
    "model1": Model1Config,
    "model2": Model2Config,
    "model3": Model3Config,
    "model4": Model4Config,
}

# keys of [model] that are not dataclass fields of the wireless configs
_MODEL_EXTRA_KEYS = {
    "kind": _str,
    "seed": _int,
    "path": _str,
    "num_states": _int,
    "num_actions": _int,
    "row_support": _int,
    "cost_low": _float,
    "cost_high": _float,
    "gamma": _float,
    "state_cap": _int,
}

_SPECIAL_MODEL_FIELDS = {
    "arrival_prob": _float,
    "tx_positions": _float_list,
    "rx_positions": _point_list,
    "tx_speeds": _int_list,
}

_SCHEMA: dict[str, dict[str, Any]] = {
    "cousins": {
        "orders": _int_list,
        "source": _str,
        "est_min_visits": _int,
        "est_seed": _int,
    },
    "schedule": {
        "alpha_tau": _float,
        "alpha_constant": _float,
        "epsilon_decay": _float,
        "epsilon_floor": _float,
        "epsilon_mode": _str,
    },
    "esql": {
        "enabled": _bool,
        "u": _float,
        "trajectory_len": _int,
        "min_visits": _int,
        "max_steps": _int,
        "on_cap": _str,
        "weight_every": _int,
        "snapshot_cadence": _int,
        "ape_cadence": _int,
    },
    "baselines": {
        "run": _str_list,
        "ensemble_size": _int,
    },
    "run": {
        "seeds": _int_list,
        "out": _str,
        "threads": _int,
        "aggregation_k": _int,
    },
    "analysis": {
        "bounds": _bool,
        "window": _int,
        "tail_fraction": _float,
        "beta_fraction": _float,
        "min_pass_fraction": _float,
        "adc": _bool,
        "adc_max_pairs": _int,
        "bellman_orders": _int_list,
        "bellman_k": _int,
        "greedy_compare": _bool,
    },
    "sweep": {
        "kind": _str,
        "field": _str,
        "values": _int_list,
        "ks": _int_list,
    },
}

_DEFAULTS: dict[str, dict[str, Any]] = {
    "cousins": {
        "orders": (1, 2, 3),
        "source": "true",
        "est_min_visits": 1000,
        "est_seed": 12345,
    },
    "schedule": {
        "alpha_tau": 1000.0,
        "alpha_constant": None,
        "epsilon_decay": 0.99,
        "epsilon_floor": 0.01,
        "epsilon_mode": "floor",
    },
    "esql": {
        "enabled": True,
        "u": 0.5,
        "trajectory_len": 15,
        "min_visits": 50,
        "max_steps": 10_000_000,
        "on_cap": "error",
        "weight_every": 1,
        "snapshot_cadence": 0,
        "ape_cadence": 1,
    },
    "baselines": {"run": ("simple",), "ensemble_size": 2},
    "run": {"seeds": (0, 1), "out": "runs/out", "threads": 1, "aggregation_k": 0},
    "analysis": {
        "bounds": False,
        "window": 20,
        "tail_fraction": 0.1,
        "beta_fraction": 0.5,
        "min_pass_fraction": 0.95,
        "adc": False,
        "adc_max_pairs": 100,
        "bellman_orders": (2, 3, 4, 5),
        "bellman_k": 3,
        "greedy_compare": False,
    },
    "sweep": {"kind": "size", "field": "buffer_size", "values": (), "ks": ()},
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict[str, Any]
    cousins: dict[str, Any]
    schedule: dict[str, Any]
    esql: dict[str, Any]
    baselines: dict[str, Any]
    run: dict[str, Any]
    analysis: dict[str, Any]
    sweep: dict[str, Any]

    def config_hash(self) -> str:
        canonical = json.dumps(dataclasses.asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def learning_schedule(self) -> LearningSchedule:
        sched = self.schedule
        return LearningSchedule(
            alpha_tau=sched["alpha_tau"],
            alpha_constant=sched["alpha_constant"],
            epsilon_decay=sched["epsilon_decay"],
            epsilon_floor=sched["epsilon_floor"],
            epsilon_floor_mode=sched["epsilon_mode"] == "floor",
        )


def _coerce(section: str, key: str, raw: str, line: int, path: str | None, coercer) -> Any:
    try:
        return coercer(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            f"bad value for {section}.{key}: {exc}", None if line < 0 else line, path
        ) from exc


def _model_section(body: dict[str, tuple[str, int]], path: str | None) -> dict[str, Any]:
    if "kind" not in body:
        raise ConfigError("[model] section needs a 'kind' key", None, path)
    kind_raw, kind_line = body["kind"]
    kind = kind_raw.strip()
    known = dict(_MODEL_EXTRA_KEYS)
    model_cls = None
    if kind in _MODEL_CONFIGS:
        model_cls = _MODEL_CONFIGS[kind]
        for f in dataclasses.fields(model_cls):
            if f.name in _SPECIAL_MODEL_FIELDS:
                known[f.name] = _SPECIAL_MODEL_FIELDS[f.name]
            elif f.type in ("float", "int", "str"):
                known[f.name] = {"float": _float, "int": _int, "str": _str}[f.type]
            else:
                known.setdefault(f.name, _float)
    elif kind not in ("random", "file"):
        raise ConfigError(
            f"unknown model kind '{kind}' (model1..model4, random, file)",
            None if kind_line < 0 else kind_line,
            path,
        )
    out: dict[str, Any] = {"kind": kind}
    for key, (raw, line) in body.items():
        if key == "kind":
            continue
        if key not in known:
            raise ConfigError(
                f"unknown key '{key}' in [model] for kind '{kind}'",
                None if line < 0 else line,
                path,
            )
        out[key] = _coerce("model", key, raw, line, path, known[key])
    return out


def parse_config_text(text: str, path: str | None = None) -> ExperimentConfig:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        sections = _sections_from_json(text, path)
    else:
        sections = _parse_sectioned_text(text, path)
    if "model" not in sections:
        raise ConfigError("missing required [model] section", None, path)

    resolved: dict[str, dict[str, Any]] = {}
    for name, body in sections.items():
        if name == "model":
            continue
        if name not in _SCHEMA:
            first_line = min((line for _, line in body.values()), default=None)
            raise ConfigError(
                f"unknown section [{name}]",
                None if first_line in (None, -1) else first_line,
                path,
            )
        resolved[name] = dict(_DEFAULTS[name])
        for key, (raw, line) in body.items():
            if key not in _SCHEMA[name]:
                raise ConfigError(
                    f"unknown key '{key}' in [{name}]",
                    None if line < 0 else line,
                    path,
                )
            resolved[name][key] = _coerce(name, key, raw, line, path, _SCHEMA[name][key])
    for name in _SCHEMA:
        resolved.setdefault(name, dict(_DEFAULTS[name]))

    cfg = ExperimentConfig(
        model=_model_section(sections["model"], path),
        cousins=resolved["cousins"],
        schedule=resolved["schedule"],
        esql=resolved["esql"],
        baselines=resolved["baselines"],
        run=resolved["run"],
        analysis=resolved["analysis"],
        sweep=resolved["sweep"],
    )
    _validate_semantics(cfg, path)
    return cfg


def _validate_semantics(cfg: ExperimentConfig, path: str | None) -> None:
    esql = cfg.esql
    if not (0.0 < esql["u"] < 1.0):
        raise ConfigError(f"esql.u must lie strictly inside (0, 1), got {esql['u']}", None, path)
    orders = cfg.cousins["orders"]
    if not orders or orders[0] != 1 or len(set(orders)) != len(orders):
        raise ConfigError("cousins.orders must be distinct and start with 1", None, path)
    if cfg.cousins["source"] not in ("true", "estimated"):
        raise ConfigError("cousins.source must be 'true' or 'estimated'", None, path)
    if cfg.esql["on_cap"] not in ("error", "stop"):
        raise ConfigError("esql.on_cap must be 'error' or 'stop'", None, path)
    if cfg.schedule["epsilon_mode"] not in ("floor", "paper_min"):
        raise ConfigError("schedule.epsilon_mode must be 'floor' or 'paper_min'", None, path)
    for variant in cfg.baselines["run"]:
        if variant not in BASELINE_VARIANTS:
            raise ConfigError(
                f"unknown baseline '{variant}' (choose from {BASELINE_VARIANTS})",
                None,
                path,
            )
    if not cfg.run["seeds"]:
        raise ConfigError("run.seeds must not be empty", None, path)
    if cfg.run["aggregation_k"] < 0:
        raise ConfigError("run.aggregation_k must be >= 0", None, path)
    if cfg.sweep["kind"] not in ("size", "aggregation"):
        raise ConfigError("sweep.kind must be 'size' or 'aggregation'", None, path)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), path)
