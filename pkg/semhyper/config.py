# Copyright 2026 The semhyper authors
# Licensed under the MIT license

import logging
from dataclasses import fields, MISSING
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Type

import tomlkit
from tomlkit.exceptions import TOMLKitError
from trailrunner import project_root

from .types import (
    AcceptRule,
    ChannelSet,
    ConceptSet,
    ConfigError,
    GenerateSpec,
    ProjectConfig,
    Scenario,
    Scheme,
    SolverSettings,
    TaskSpec,
    UpdateMode,
)

LOG = logging.getLogger(__name__)

ARRAY_TABLES: Dict[str, Type[Any]] = {
    "concepts": ConceptSet,
    "tasks": TaskSpec,
    "channels": ChannelSet,
}
ENUM_FIELDS: Dict[str, Type[Enum]] = {
    "accept_rule": AcceptRule,
    "update_mode": UpdateMode,
}
NESTED_FIELDS = {"concepts", "tasks", "channels", "solver"}


def _scalar_fields() -> List[str]:
    return [f.name for f in fields(Scenario) if f.name not in NESTED_FIELDS]


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    """
    Convert a scenario to plain nested tables, the layout of scenario files.
    """
    table: Dict[str, Any] = {}
    for name in _scalar_fields():
        value = getattr(scenario, name)
        table[name] = value.value if isinstance(value, Enum) else value

    solver = scenario.solver
    data: Dict[str, Any] = {
        "scenario": table,
        "solver": {f.name: getattr(solver, f.name) for f in fields(solver)},
    }
    for key in ARRAY_TABLES:
        group = getattr(scenario, key)
        data[key] = {f.name: getattr(group, f.name).tolist() for f in fields(group)}
    return data


def _coerce(name: str, value: Any, kind: Any) -> Any:
    if name in ENUM_FIELDS:
        try:
            return ENUM_FIELDS[name](value)
        except ValueError:
            raise ConfigError(f"{name}: invalid value {value!r}") from None
    if kind is int or kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    return float(value)


def _table(data: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    table = data.get(key, {})
    if not isinstance(table, Mapping):
        raise ConfigError(f"[{key}] must be a table")
    return table


def _check_keys(key: str, table: Mapping[str, Any], known: Sequence[str]) -> None:
    unknown = sorted(set(table) - set(known))
    if unknown:
        raise ConfigError(f"[{key}] unknown keys: {unknown!r}")


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    """
    Build a scenario from nested tables. Unknown tables or keys are rejected.
    """
    _check_keys("root", data, ["scenario", "solver", *ARRAY_TABLES])

    kwargs: Dict[str, Any] = {}
    table = _table(data, "scenario")
    scalar_fields = [f for f in fields(Scenario) if f.name not in NESTED_FIELDS]
    _check_keys("scenario", table, [f.name for f in scalar_fields])
    for f in scalar_fields:
        if f.name in table:
            kwargs[f.name] = _coerce(f.name, table[f.name], f.type)
        elif f.default is MISSING:
            raise ConfigError(f"[scenario] missing key: {f.name}")

    table = _table(data, "solver")
    solver_fields = [f for f in fields(SolverSettings) if f.name in table]
    _check_keys("solver", table, [f.name for f in fields(SolverSettings)])
    kwargs["solver"] = SolverSettings(
        **{f.name: _coerce(f.name, table[f.name], f.type) for f in solver_fields}
    )

    for key, cls in ARRAY_TABLES.items():
        table = _table(data, key)
        names = [f.name for f in fields(cls)]
        _check_keys(key, table, names)
        missing = [name for name in names if name not in table]
        if missing:
            raise ConfigError(f"[{key}] missing keys: {missing!r}")
        try:
            kwargs[key] = cls(**{name: table[name] for name in names})
        except (TypeError, ValueError) as e:
            raise ConfigError(f"[{key}] {e}") from e

    return Scenario(**kwargs)


def dump_scenario(scenario: Scenario) -> str:
    return tomlkit.dumps(scenario_to_dict(scenario))


def load_scenario(path: Path) -> Scenario:
    """
    Read a scenario file, raising :exc:`ConfigError` on any problem.
    """
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror or e}") from e
    try:
        data = tomlkit.loads(text).unwrap()
    except TOMLKitError as e:
        raise ConfigError(f"{path}: {e}") from e
    try:
        return scenario_from_dict(data)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e


def save_scenario(scenario: Scenario, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_scenario(scenario))


def parse_shape(value: str) -> Tuple[int, int, int]:
    """
    Parse ``KxJxD`` into transmitter, receiver and concept counts.
    """
    parts = value.lower().split("x")
    try:
        counts = tuple(int(part) for part in parts)
    except ValueError:
        raise ConfigError(f"invalid shape {value!r}, expected KxJxD") from None
    if len(counts) != 3:
        raise ConfigError(f"invalid shape {value!r}, expected KxJxD")
    return counts[0], counts[1], counts[2]


def parse_generate(value: str) -> GenerateSpec:
    """
    Parse ``SEED,KxJxD,DECAY``.
    """
    parts = [part.strip() for part in value.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"invalid generator {value!r}, expected SEED,KxJxD,DECAY")
    try:
        seed = int(parts[0])
        decay = float(parts[2])
    except ValueError:
        raise ConfigError(f"invalid generator {value!r}") from None
    return GenerateSpec(seed=seed, shape=parse_shape(parts[1]), decay=decay)


def parse_schemes(value: str) -> List[Scheme]:
    try:
        return [Scheme(name.strip()) for name in value.split(",") if name.strip()]
    except ValueError as e:
        raise ConfigError(str(e)) from None


def parse_seeds(value: str) -> List[int]:
    try:
        return [int(seed) for seed in value.split(",") if seed.strip()]
    except ValueError:
        raise ConfigError(f"invalid seed list {value!r}") from None


@lru_cache
def load_config(
    path: Optional[Path] = None, root: Optional[Path] = None
) -> ProjectConfig:
    """
    Read experiment defaults from ``[tool.semhyper]`` in the project's pyproject.toml.
    """
    path = path or Path.cwd()
    if root is None:
        root = project_root(path)
    config_path = root / "pyproject.toml"
    if config_path.is_file():
        pyproject = tomlkit.loads(config_path.read_text()).unwrap()
        config = pyproject.get("tool", {}).get("semhyper", {})
        if not isinstance(config, dict):
            LOG.warning("%s: tool.semhyper is not a mapping, ignoring", config_path)
            config = {}

        defaults = ProjectConfig()

        config_schemes = config.pop("schemes", [s.value for s in defaults.schemes])
        if isinstance(config_schemes, list) and all(
            isinstance(x, str) for x in config_schemes
        ):
            try:
                schemes = [Scheme(x) for x in config_schemes]
            except ValueError as e:
                raise ConfigError(f"{config_path}: {e}") from None
        else:
            raise ConfigError(f"{config_path}: schemes must be a list of strings")

        rounds = config.pop("rounds", defaults.rounds)
        if isinstance(rounds, bool) or not isinstance(rounds, int):
            raise ConfigError(f"{config_path}: rounds must be an integer")

        seeds = config.pop("seeds", defaults.seeds)
        if not isinstance(seeds, list) or not all(
            isinstance(x, int) and not isinstance(x, bool) for x in seeds
        ):
            raise ConfigError(f"{config_path}: seeds must be a list of integers")

        out = config.pop("out", str(defaults.out))
        if not isinstance(out, str):
            raise ConfigError(f"{config_path}: out must be a string")

        sweeps = config.pop("sweeps", defaults.sweeps)
        if not isinstance(sweeps, list) or not all(isinstance(x, str) for x in sweeps):
            raise ConfigError(f"{config_path}: sweeps must be a list of strings")

        if config:
            LOG.warning("%s: unknown values ignored: %r", config_path, sorted(config))

        return ProjectConfig(
            project_root=root,
            pyproject_path=config_path,
            schemes=schemes,
            rounds=rounds,
            seeds=list(seeds),
            out=Path(out),
            sweeps=list(sweeps),
        )

    return ProjectConfig()
