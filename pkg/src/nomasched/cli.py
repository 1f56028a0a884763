"""Command-line frontend: config files, subcommands, text and CSV outputs.

Configs are YAML mappings with a versioned ``schema`` key, or finite-support
instance files in the oracle text format; flags override file values, and a
YAML config can point at an instance file through its ``instance`` key.

Exit codes: 0 all requested outputs produced, 1 usage, 2 missing file,
3 invalid config value (message names the key path), 4 infeasible demands,
5 exact-computation resource cap exceeded, 6 unresolved measure tie.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .adapt import (
    ALGORITHM2,
    RM_EQUALITY,
    AdaptationResult,
    check_complementary_slackness,
    run_adaptation,
)
from .channel import ChannelParams, RateModel, load_staircase
from .core import (
    InfeasibleDemandsError,
    ResourceLimitError,
    TemporalDemands,
    TieError,
    VirtualUserFamily,
    as_fraction,
    enumerate_virtual_users,
    parse_virtual_user,
)
from .feasibility import (
    check_feasibility_box,
    check_feasibility_equality,
    compute_region,
    violated_box_inequality,
    wrr_pattern_from_certificate,
)
from .oracle import (
    FiniteSupportInstance,
    exact_tbs_evaluate,
    format_solution,
    lp_optimal_stationary,
    parse_instance,
)
from .scheduler import (
    PerturbationConfig,
    RrStrategy,
    TbsStrategy,
    WrrStrategy,
    run_strategy,
)
from .sim import (
    RR,
    TBS,
    WRR,
    ArmResult,
    MobilityConfig,
    ScenarioConfig,
    ScenarioResult,
    ensure_feasible,
    run_scenario,
    scenario_adaptation,
    write_scenario_outputs,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISSING_FILE = 2
EXIT_INVALID = 3
EXIT_INFEASIBLE = 4
EXIT_RESOURCE = 5
EXIT_TIE = 6

SCHEMA_VERSION = 1
SWEEP_SCALES = (1, 2, 4, 8, 16)
SWEEP_DEFAULT_SLOTS = 1_000_000

_TOP_KEYS = {
    "schema",
    "users",
    "nmax",
    "slots",
    "seed",
    "mode",
    "demands",
    "thresholds",
    "wrr_pattern",
    "step_size",
    "sampling_h",
    "perturb_l",
    "benchmarks",
    "instance",
    "channel",
    "rate_model",
    "mobility",
    "shadowing_per_slot",
}
# Sections that only make sense when values come from a channel, not a table.
_CHANNEL_ONLY_KEYS = ("channel", "mobility", "rate_model", "shadowing_per_slot")


class ConfigError(Exception):
    """Invalid configuration value, addressed by its key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class MissingFileError(Exception):
    def __init__(self, path):
        self.path = Path(path)
        super().__init__(str(path))


# ---------------------------------------------------------------------------
# Typed value coercion (every failure names its key path)
# ---------------------------------------------------------------------------

def _as_int(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    try:
        out = int(value)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if minimum is not None and out < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {out}")
    return out


def _as_float(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {value!r}") from None


def _as_bool(value, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(key, f"expected true or false, got {value!r}")
    return value


def _as_str(value, key: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a string, got {value!r}")
    return value


def _fraction_list(raw, key: str, length: int | None = None) -> tuple:
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(key, f"expected a list, got {raw!r}")
    if length is not None and len(raw) != length:
        raise ConfigError(key, f"expected {length} entries, got {len(raw)}")
    out = []
    for i, v in enumerate(raw):
        try:
            out.append(as_fraction(v))
        except (ValueError, TypeError, ZeroDivisionError):
            raise ConfigError(f"{key}[{i}]", f"not a rational number: {v!r}") from None
    return tuple(out)


def _check_keys(mapping: dict, allowed, path: str) -> None:
    for key in mapping:
        full = f"{path}.{key}" if path else str(key)
        if key not in allowed:
            raise ConfigError(full, "unknown key")


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LoadedConfig:
    """A parsed config file: a scenario-shaped mapping, and the instance it
    names (or is), when the run is table-driven rather than channel-driven."""

    data: dict
    instance: FiniteSupportInstance | None
    base_dir: Path


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError):
        raise MissingFileError(path) from None


def _load_instance_file(path: Path) -> FiniteSupportInstance:
    text = _read_text(path)
    try:
        return parse_instance(text)
    except ValueError as e:
        raise ConfigError("instance", f"{path}: {e}") from None


def _mapping_config(data: dict, base_dir: Path) -> LoadedConfig:
    _check_keys(data, _TOP_KEYS, "")
    if "schema" not in data:
        raise ConfigError("schema", "required versioned key (expected 1)")
    if data["schema"] != SCHEMA_VERSION:
        raise ConfigError("schema", f"unsupported version {data['schema']!r}")
    instance = None
    if "instance" in data:
        raw = _as_str(data["instance"], "instance")
        ipath = Path(raw)
        if not ipath.is_absolute():
            ipath = base_dir / ipath
        instance = _load_instance_file(ipath)
        data = dict(data)
        data["instance"] = str(ipath)
    return LoadedConfig(data, instance, base_dir)


def load_config(path_str: str) -> LoadedConfig:
    """Classify and parse a config file.

    Files ending in .yaml/.yml must be scenario mappings; anything else is
    tried as YAML first and as an instance file when that yields no mapping.
    """
    path = Path(path_str)
    text = _read_text(path)
    yaml_error = None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        data = None
        yaml_error = e
    if isinstance(data, dict):
        return _mapping_config(data, path.parent)
    if path.suffix in (".yaml", ".yml"):
        detail = str(yaml_error) if yaml_error else "top level must be a mapping"
        raise ConfigError("schema", f"{path}: {detail}")
    try:
        instance = parse_instance(text)
    except ValueError as e:
        raise ConfigError(str(path), f"neither a config mapping nor an instance file ({e})")
    return LoadedConfig({}, instance, path.parent)


# ---------------------------------------------------------------------------
# Section builders
# ---------------------------------------------------------------------------

def _build_channel(raw, path: str) -> ChannelParams:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping of channel parameters")
    names = {f.name for f in dataclasses.fields(ChannelParams)}
    _check_keys(raw, names, path)
    kw = {}
    for key, value in raw.items():
        full = f"{path}.{key}"
        if key == "fading":
            kw[key] = _as_bool(value, full)
        elif key == "tx_power_dbm" and value is None:
            kw[key] = None
        else:
            kw[key] = _as_float(value, full)
    try:
        return ChannelParams(**kw)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _build_mobility(raw, path: str) -> MobilityConfig:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping of mobility parameters")
    names = {f.name for f in dataclasses.fields(MobilityConfig)}
    _check_keys(raw, names, path)
    kw = {}
    for key, value in raw.items():
        full = f"{path}.{key}"
        kw[key] = _as_str(value, full) if key == "kind" else _as_float(value, full)
    try:
        return MobilityConfig(**kw)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _build_rate_model(raw, path: str, base_dir: Path) -> RateModel:
    if isinstance(raw, str):
        if raw in ("shannon", "truncated"):
            return RateModel(kind=raw)
        if raw.startswith("staircase:"):
            table = Path(raw.split(":", 1)[1])
            if not table.is_absolute():
                # Anchor at the config; fall back to the working directory so
                # the flag form works from a shell as well.
                anchored = base_dir / table
                table = anchored if anchored.exists() or not table.exists() else table
            try:
                return load_staircase(table)
            except FileNotFoundError:
                raise MissingFileError(table) from None
            except ValueError as e:
                raise ConfigError(path, str(e)) from None
        raise ConfigError(path, f"expected shannon|truncated|staircase:<path>, got {raw!r}")
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a kind string or a mapping")
    _check_keys(raw, {"kind", "gamma_max", "table", "thresholds", "rates"}, path)
    kind = _as_str(raw.get("kind", "truncated"), f"{path}.kind")
    if "table" in raw:
        if kind != "staircase":
            raise ConfigError(f"{path}.table", "only staircase models take a table")
        return _build_rate_model(f"staircase:{_as_str(raw['table'], f'{path}.table')}", path, base_dir)
    kw = {"kind": kind}
    if "gamma_max" in raw:
        kw["gamma_max"] = _as_float(raw["gamma_max"], f"{path}.gamma_max")
    if "thresholds" in raw or "rates" in raw:
        kw["thresholds"] = tuple(
            _as_float(v, f"{path}.thresholds[{i}]")
            for i, v in enumerate(raw.get("thresholds", ()))
        )
        kw["rates"] = tuple(
            _as_float(v, f"{path}.rates[{i}]") for i, v in enumerate(raw.get("rates", ()))
        )
    try:
        return RateModel(**kw)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _build_demands(raw, users: int, path: str) -> TemporalDemands:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a mapping with lower/upper or equality")
    _check_keys(raw, {"lower", "upper", "equality"}, path)
    try:
        if "equality" in raw:
            if "lower" in raw or "upper" in raw:
                raise ConfigError(path, "equality excludes lower/upper")
            return TemporalDemands.equality(
                _fraction_list(raw["equality"], f"{path}.equality", users)
            )
        lower = _fraction_list(raw.get("lower", (0,) * users), f"{path}.lower", users)
        if "upper" not in raw:
            return TemporalDemands.from_lower(lower)
        upper = _fraction_list(raw["upper"], f"{path}.upper", users)
        return TemporalDemands(lower, upper)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None


def _build_wrr_pattern(raw, family: VirtualUserFamily, path: str) -> tuple:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(path, "expected a nonempty list of virtual-user labels")
    out = []
    for i, entry in enumerate(raw):
        full = f"{path}[{i}]"
        if isinstance(entry, str):
            try:
                out.append(family.index_of(parse_virtual_user(entry)))
            except (ValueError, KeyError):
                raise ConfigError(full, f"no virtual user {entry!r} in the family") from None
        else:
            j = _as_int(entry, full)
            if not 0 <= j < family.m:
                raise ConfigError(full, f"family index out of range [0, {family.m})")
            out.append(j)
    return tuple(out)


# ---------------------------------------------------------------------------
# Scenario assembly (file values merged with flag overrides)
# ---------------------------------------------------------------------------

def build_scenario(loaded: LoadedConfig, overrides: dict):
    """Merge file and flags into a validated ScenarioConfig.

    Returns (config, present, instance) where present is the set of keys the
    caller explicitly provided (to tell them apart from dataclass defaults).
    """
    merged = {k: v for k, v in loaded.data.items() if k not in ("schema", "instance")}
    merged.update(overrides)
    instance = loaded.instance
    present = set(merged)

    if instance is not None:
        for key in _CHANNEL_ONLY_KEYS:
            if key in merged:
                raise ConfigError(key, "not available with a finite-support instance")
        if merged.get("benchmarks"):
            raise ConfigError("benchmarks", "channel scenarios only")
        users = instance.family.n
        if "users" in merged and _as_int(merged["users"], "users", 1) != users:
            raise ConfigError("users", f"instance file has {users} users")
        n_max = instance.family.n_max or max(len(vu) for vu in instance.family.members)
        if "nmax" in merged and _as_int(merged["nmax"], "nmax", 1) != n_max:
            raise ConfigError("nmax", f"instance file has n_max={n_max}")
    else:
        if "users" not in merged:
            raise ConfigError("users", "required (set it in the config or pass --users)")
        users = _as_int(merged["users"], "users", 1)
        n_max = _as_int(merged.get("nmax", 2), "nmax", 1)

    try:
        family = enumerate_virtual_users(users, n_max)
    except ValueError as e:
        raise ConfigError("nmax", str(e)) from None

    kw = {"users": users, "n_max": n_max}
    if "demands" in merged:
        kw["demands"] = _build_demands(merged["demands"], users, "demands")
    elif instance is not None and instance.demands is not None:
        kw["demands"] = instance.demands
    else:
        kw["demands"] = TemporalDemands.from_lower((0,) * users)
    if "slots" in merged:
        kw["slots"] = _as_int(merged["slots"], "slots", 1)
    if "seed" in merged:
        kw["seed"] = _as_int(merged["seed"], "seed", 0)
    if "mode" in merged:
        kw["mode"] = _as_str(merged["mode"], "mode")
    if "thresholds" in merged:
        kw["thresholds"] = _fraction_list(merged["thresholds"], "thresholds", users)
    elif instance is not None and instance.thresholds is not None:
        kw["thresholds"] = instance.thresholds
    if "wrr_pattern" in merged:
        kw["wrr_pattern"] = _build_wrr_pattern(merged["wrr_pattern"], family, "wrr_pattern")
    if "step_size" in merged:
        kw["step_size"] = _as_float(merged["step_size"], "step_size")
    if "sampling_h" in merged:
        kw["sampling_h"] = _as_float(merged["sampling_h"], "sampling_h")
    if "perturb_l" in merged and merged["perturb_l"] is not None:
        kw["perturb_l"] = _as_int(merged["perturb_l"], "perturb_l", 1)
    if "benchmarks" in merged:
        raw = merged["benchmarks"]
        if not isinstance(raw, (list, tuple)):
            raise ConfigError("benchmarks", f"expected a list, got {raw!r}")
        kw["benchmarks"] = tuple(
            _as_str(b, f"benchmarks[{i}]") for i, b in enumerate(raw)
        )
    if "channel" in merged:
        kw["channel"] = _build_channel(merged["channel"], "channel")
    if "rate_model" in merged:
        kw["rate_model"] = _build_rate_model(merged["rate_model"], "rate_model", loaded.base_dir)
    if "mobility" in merged:
        kw["mobility"] = _build_mobility(merged["mobility"], "mobility")
    if "shadowing_per_slot" in merged:
        kw["shadowing_per_slot"] = _as_bool(merged["shadowing_per_slot"], "shadowing_per_slot")

    try:
        config = ScenarioConfig(**kw)
    except ValueError as e:
        raise ConfigError("scenario", str(e)) from None
    return config, present, instance


def _dump_rate_model(model: RateModel) -> dict:
    out = {"kind": model.kind}
    if model.kind == "truncated":
        out["gamma_max"] = model.gamma_max
    elif model.kind == "staircase":
        out["thresholds"] = [float(v) for v in model.thresholds]
        out["rates"] = [float(v) for v in model.rates]
    return out


def scenario_to_mapping(config: ScenarioConfig, instance_path: str | None = None) -> dict:
    """Effective config as a plain mapping; re-parsing it rebuilds config."""
    family = enumerate_virtual_users(config.users, config.n_max)
    out = {
        "schema": SCHEMA_VERSION,
        "users": config.users,
        "nmax": config.n_max,
        "slots": config.slots,
        "seed": config.seed,
        "mode": config.mode,
        "demands": {
            "lower": [str(x) for x in config.demands.lower],
            "upper": [str(x) for x in config.demands.upper],
        },
        "step_size": config.step_size,
        "sampling_h": config.sampling_h,
    }
    if config.thresholds is not None:
        out["thresholds"] = [str(as_fraction(x)) for x in config.thresholds]
    if config.wrr_pattern is not None:
        out["wrr_pattern"] = [family.members[j].label() for j in config.wrr_pattern]
    if config.perturb_l is not None:
        out["perturb_l"] = config.perturb_l
    if config.benchmarks:
        out["benchmarks"] = list(config.benchmarks)
    if instance_path is not None:
        out["instance"] = instance_path
    else:
        out["channel"] = {
            f.name: getattr(config.channel, f.name)
            for f in dataclasses.fields(ChannelParams)
        }
        out["rate_model"] = _dump_rate_model(config.rate_model)
        out["mobility"] = {
            f.name: getattr(config.mobility, f.name)
            for f in dataclasses.fields(MobilityConfig)
        }
        out["shadowing_per_slot"] = config.shadowing_per_slot
    return out


def _dump_effective_config(config, instance_path, out_dir: Path) -> Path:
    path = out_dir / "effective_config.yaml"
    mapping = scenario_to_mapping(config, instance_path)
    path.write_text(yaml.safe_dump(mapping, sort_keys=False), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Instance-backed runs (finite-support source instead of a channel)
# ---------------------------------------------------------------------------

def _instance_adaptation(
    config: ScenarioConfig,
    instance: FiniteSupportInstance,
    record_values: bool = False,
) -> AdaptationResult:
    ensure_feasible(instance.family, config.demands)
    perturbation = (
        PerturbationConfig(config.perturb_l) if config.perturb_l is not None else None
    )
    return run_adaptation(
        instance,
        config.demands,
        config.mode,
        config.slots,
        np.random.default_rng(np.random.SeedSequence(config.seed)),
        s=config.step_size,
        sampling_h=config.sampling_h,
        perturbation=perturbation,
        record_values=record_values,
    )


def _run_instance_scenario(
    config: ScenarioConfig,
    instance: FiniteSupportInstance,
    record_decisions: bool,
    record_values: bool,
) -> ScenarioResult:
    family = instance.family
    ensure_feasible(family, config.demands)
    if config.mode in (RM_EQUALITY, ALGORITHM2):
        result = _instance_adaptation(config, instance, record_values)
        arm = ArmResult(
            "primary",
            family,
            result.trace,
            thresholds=result.thresholds,
            share_residual=result.share_residual,
            converged=result.converged,
        )
        return ScenarioResult(config, np.zeros((0, 2)), {"primary": arm})

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    perturbation = (
        PerturbationConfig(config.perturb_l) if config.perturb_l is not None else None
    )
    if config.mode == TBS:
        thresholds = (
            config.thresholds if config.thresholds is not None else (0,) * family.n
        )
        tie = instance.tie_rule
        strategy = TbsStrategy(thresholds, tie) if tie is not None else TbsStrategy(thresholds)
    elif config.mode == WRR:
        pattern = config.wrr_pattern
        if pattern is None:
            if not config.demands.is_equality:
                raise ConfigError(
                    "wrr_pattern", "required unless the demands are equalities"
                )
            cert = check_feasibility_equality(family, config.demands.lower)
            if cert is None:
                raise InfeasibleDemandsError(
                    "equality demands admit no stationary schedule"
                )
            pattern = wrr_pattern_from_certificate(cert)
        strategy = WrrStrategy(tuple(pattern))
    else:
        strategy = RrStrategy()
    trace = run_strategy(
        instance,
        strategy,
        config.demands,
        config.slots,
        rng,
        perturbation=perturbation,
        sampling_h=config.sampling_h,
        record_decisions=record_decisions,
        record_values=record_values,
    )
    thresholds = None
    if config.mode == TBS:
        thresholds = np.array([float(v) for v in strategy.thresholds])
        trace.final_thresholds = thresholds
        trace.threshold_series = np.tile(thresholds, (len(trace.sample_slots), 1))
    arm = ArmResult("primary", family, trace, thresholds=thresholds)
    return ScenarioResult(config, np.zeros((0, 2)), {"primary": arm})


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def _out_dir(args) -> Path | None:
    if args.output is None:
        return None
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _effective_instance_path(loaded: LoadedConfig, instance, args) -> str | None:
    """Instance path to record in the effective config dump.

    A bare instance config has no ``instance`` key; the config path itself is
    the instance file, and the dump must keep the run table-driven."""
    if instance is None:
        return None
    raw = loaded.data.get("instance")
    return raw if raw is not None else str(Path(args.config).resolve())


def _arm_line(arm: ArmResult) -> str:
    parts = [arm.name, f"utility {arm.trace.utility:.6f}"]
    parts.append("shares " + " ".join(f"{x:.6f}" for x in arm.trace.shares))
    if arm.share_residual is not None:
        parts.append(f"residual {arm.share_residual:.6f}")
    if arm.converged is not None:
        parts.append(f"converged {str(arm.converged).lower()}")
    return " ".join(parts)


def cmd_simulate(loaded: LoadedConfig, overrides: dict, args) -> int:
    config, _, instance = build_scenario(loaded, overrides)
    out = _out_dir(args)
    record = out is not None
    if instance is None:
        result = run_scenario(config, record_decisions=record, record_values=record)
    else:
        result = _run_instance_scenario(config, instance, record, record)
    for arm in result.arms.values():
        print(_arm_line(arm))
    if out is not None:
        _dump_effective_config(config, _effective_instance_path(loaded, instance, args), out)
        write_scenario_outputs(result, out)
    return EXIT_OK


def cmd_adapt(loaded: LoadedConfig, overrides: dict, args) -> int:
    config, present, instance = build_scenario(loaded, overrides)
    if config.mode not in (RM_EQUALITY, ALGORITHM2):
        raise ConfigError("mode", f"{config.mode!r} is not an adaptation mode")
    if instance is None:
        result = scenario_adaptation(config)
    else:
        result = _instance_adaptation(config, instance)
    print(f"mode {config.mode} slots {config.slots} seed {config.seed}")
    print("thresholds " + " ".join(f"{x:.6f}" for x in result.thresholds))
    print("shares " + " ".join(f"{x:.6f}" for x in result.trace.shares))
    print(f"utility {result.trace.utility:.6f}")
    print(f"residual {result.share_residual:.6f}")
    print(f"converged {str(result.converged).lower()}")
    report = check_complementary_slackness(
        result.thresholds, result.trace.shares, config.demands
    )
    print(report.to_text())
    out = _out_dir(args)
    if out is not None:
        _dump_effective_config(config, _effective_instance_path(loaded, instance, args), out)
        result.history.write_csv(out / "adapt_history.csv")
    return EXIT_OK


def _sweep_task(payload) -> tuple:
    config, instance = payload
    if instance is None:
        result = scenario_adaptation(config)
    else:
        result = _instance_adaptation(config, instance)
    return (
        config.perturb_l,
        config.slots,
        result.trace.utility,
        result.share_residual,
        result.converged,
    )


def cmd_perturb_sweep(loaded: LoadedConfig, overrides: dict, args) -> int:
    config, present, instance = build_scenario(loaded, overrides)
    if "mode" in present and config.mode != ALGORITHM2:
        raise ConfigError("mode", "perturb-sweep always runs algorithm2")
    config = replace(config, mode=ALGORITHM2)
    if "slots" not in present:
        config = replace(config, slots=SWEEP_DEFAULT_SLOTS)
    scales = (config.perturb_l,) if config.perturb_l is not None else SWEEP_SCALES
    payloads = [(replace(config, perturb_l=l), instance) for l in scales]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, payloads))
    else:
        rows = [_sweep_task(p) for p in payloads]
    print("l slots utility residual converged")
    for l, slots, utility, residual, converged in rows:
        print(f"{l} {slots} {utility:.6f} {residual:.6f} {str(converged).lower()}")
    out = _out_dir(args)
    if out is not None:
        _dump_effective_config(config, _effective_instance_path(loaded, instance, args), out)
        with open(out / "sweep.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["l", "slots", "utility", "residual", "converged"])
            for l, slots, utility, residual, converged in rows:
                writer.writerow([l, slots, repr(utility), repr(residual), converged])
    return EXIT_OK


def _resolve_family(loaded: LoadedConfig, overrides: dict):
    """(family, demands-or-None) for the polyhedral subcommands."""
    merged = {k: v for k, v in loaded.data.items() if k not in ("schema", "instance")}
    merged.update(overrides)
    if loaded.instance is not None:
        family = loaded.instance.family
        if family.n_max is None:
            family = VirtualUserFamily(
                family.n, family.members, max(len(vu) for vu in family.members)
            )
    else:
        if "users" not in merged:
            raise ConfigError("users", "required (set it in the config or pass --users)")
        users = _as_int(merged["users"], "users", 1)
        n_max = _as_int(merged.get("nmax", 2), "nmax", 1)
        try:
            family = enumerate_virtual_users(users, n_max)
        except ValueError as e:
            raise ConfigError("nmax", str(e)) from None
    demands = None
    if "demands" in merged:
        demands = _build_demands(merged["demands"], family.n, "demands")
    elif loaded.instance is not None:
        demands = loaded.instance.demands
    return family, demands


def _write_text_output(out: Path | None, name: str, text: str) -> None:
    if out is not None:
        (out / name).write_text(text, encoding="utf-8")


def cmd_feasibility(loaded: LoadedConfig, overrides: dict, args) -> int:
    family, demands = _resolve_family(loaded, overrides)
    if demands is None:
        raise ConfigError("demands", "required for a feasibility check")
    witness = check_feasibility_box(family, demands)
    if witness is not None:
        shares, cert = witness
        lines = [
            "feasible",
            "shares " + " ".join(str(x) for x in shares),
            cert.to_text().rstrip(),
        ]
    else:
        detail = "no stationary schedule satisfies the demand box"
        try:
            violated = violated_box_inequality(compute_region(family), demands)
            if violated is not None:
                detail = f"violates {violated.render()}"
        except ResourceLimitError:
            detail += " (region too large to cite an inequality)"
        lines = [f"infeasible: {detail}"]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    _write_text_output(_out_dir(args), "feasibility.txt", text)
    return EXIT_OK


def cmd_region(loaded: LoadedConfig, overrides: dict, args) -> int:
    family, _ = _resolve_family(loaded, overrides)
    region = compute_region(family)
    lines = [f"n {family.n} nmax {family.n_max} inequalities {len(region.inequalities)}"]
    lines += [iq.render() for iq in region.inequalities]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    _write_text_output(_out_dir(args), "region.txt", text)
    return EXIT_OK


def cmd_oracle(loaded: LoadedConfig, overrides: dict, args) -> int:
    instance = loaded.instance
    if instance is None:
        raise ConfigError("instance", "oracle needs a finite-support instance file")
    merged = {k: v for k, v in loaded.data.items() if k not in ("schema", "instance")}
    merged.update(overrides)
    demands = instance.demands
    if "demands" in merged:
        demands = _build_demands(merged["demands"], instance.family.n, "demands")
    thresholds = instance.thresholds
    if "thresholds" in merged:
        thresholds = _fraction_list(merged["thresholds"], "thresholds", instance.family.n)
    if demands is None and thresholds is None:
        raise ConfigError(
            "instance", "nothing to evaluate: no demands and no thresholds"
        )
    lines = []
    if demands is not None:
        solution = lp_optimal_stationary(instance, demands)
        lines.append(format_solution(solution, instance.family).rstrip())
    if thresholds is not None:
        shares, utility = exact_tbs_evaluate(instance, thresholds)
        lines.append("tbs lambda " + " ".join(str(x) for x in thresholds))
        lines.append("tbs shares " + " ".join(str(a) for a in shares))
        lines.append(f"tbs utility {utility}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    _write_text_output(_out_dir(args), "oracle.txt", text)
    return EXIT_OK


HANDLERS = {
    "simulate": cmd_simulate,
    "adapt": cmd_adapt,
    "feasibility": cmd_feasibility,
    "region": cmd_region,
    "oracle": cmd_oracle,
    "perturb-sweep": cmd_perturb_sweep,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse maps its own errors to exit 2; usage problems are exit 1 here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"usage error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="config file")
    common.add_argument("--seed", metavar="INT", help="override the RNG seed")
    common.add_argument("--slots", metavar="INT", help="override the slot count")
    common.add_argument("--users", metavar="INT", help="override the user count")
    common.add_argument("--nmax", metavar="INT", help="override the activation cap")
    common.add_argument("--output", metavar="DIR", help="directory for CSV/text outputs")
    common.add_argument("--jobs", metavar="INT", default="1", help="parallel worker cap")
    common.add_argument(
        "--rate-model",
        dest="rate_model",
        metavar="KIND",
        help="shannon|truncated|staircase:<path>",
    )
    common.add_argument("--perturb-l", dest="perturb_l", metavar="INT", help="perturbation scale")
    common.add_argument("--step-size", dest="step_size", metavar="FLOAT", help="adaptation step")
    common.add_argument(
        "--sampling-h", dest="sampling_h", metavar="FLOAT", help="snapshot fraction"
    )

    parser = _Parser(
        prog="nomasched",
        description="Temporally fair threshold scheduling: simulator, adaptation, and exact oracles.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    helps = {
        "simulate": "run a scenario (plus benchmark arms) and export traces",
        "adapt": "run threshold adaptation and report the limit point",
        "feasibility": "check temporal demands against the feasible region",
        "region": "compute the feasible-share region inequalities",
        "oracle": "exact stationary evaluation of a finite-support instance",
        "perturb-sweep": "algorithm2 across perturbation scales l",
    }
    for name, handler in HANDLERS.items():
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _flag_overrides(args) -> dict:
    out = {}
    if args.seed is not None:
        out["seed"] = _as_int(args.seed, "seed", 0)
    if args.slots is not None:
        out["slots"] = _as_int(args.slots, "slots", 1)
    if args.users is not None:
        out["users"] = _as_int(args.users, "users", 1)
    if args.nmax is not None:
        out["nmax"] = _as_int(args.nmax, "nmax", 1)
    if args.perturb_l is not None:
        out["perturb_l"] = _as_int(args.perturb_l, "perturb_l", 1)
    if args.step_size is not None:
        out["step_size"] = _as_float(args.step_size, "step_size")
    if args.sampling_h is not None:
        out["sampling_h"] = _as_float(args.sampling_h, "sampling_h")
    if args.rate_model is not None:
        out["rate_model"] = args.rate_model
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.jobs = _as_int(args.jobs, "jobs", 1)
        overrides = _flag_overrides(args)
        loaded = load_config(args.config)
        return HANDLERS[args.subcommand](loaded, overrides, args)
    except MissingFileError as e:
        print(f"missing file: {e.path}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleDemandsError as e:
        print(f"infeasible demands: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceLimitError as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except TieError as e:
        print(f"unresolved tie: {e}", file=sys.stderr)
        return EXIT_TIE
    except ValueError as e:
        # Library-level validation that slipped past the typed builders.
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
