"""TOML problem and sweep files.

A problem file holds the parameters (under [parameters] or at top level)
and optional [mesh] and [dg] tables. A sweep file holds [base]
parameters, a [grid] of lists expanded as a Cartesian product in key
order, and [run] solver settings. Relative paths that do not exist are
looked up in MPET_LAB_CONFIG_DIR (default "configs").
"""

from __future__ import annotations

import itertools
import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path

from mpet_lab.domain.parameters import (
    PER_NETWORK,
    SCALARS,
    MpetParameters,
    ParameterError,
)
from mpet_lab.fem.dg import DgConfig, DgConfigError

CONFIG_DIR_ENV = "MPET_LAB_CONFIG_DIR"
DEFAULT_CONFIG_DIR = "configs"
PARAMETER_KEYS = frozenset({"n", "beta_tilde", *PER_NETWORK, *SCALARS})
MESH_KEYS = frozenset({"nx", "ny"})
DG_KEYS = frozenset({"penalty", "quadrature_degree"})
RUN_KEYS = frozenset(
    {
        "tol",
        "max_iter",
        "seed",
        "dense",
        "max_dofs",
        "max_kappa_spread",
        "max_iterations",
        "max_iteration_spread",
    }
)
DEFAULT_MESH = 4


class ConfigError(ValueError):
    """Missing, unreadable or malformed configuration file."""


def config_dir() -> Path:
    return Path(os.environ.get(CONFIG_DIR_ENV, DEFAULT_CONFIG_DIR))


def resolve_config_path(path: Path | str) -> Path:
    """The path itself, else the same relative path or bare file name
    under the config directory."""
    path = Path(path)
    candidates = [path]
    if not path.is_absolute():
        candidates += [config_dir() / path, config_dir() / path.name]
    for candidate in candidates:
        if candidate.is_file():
            return candidate
    raise ConfigError(f"config file not found: {path} (searched {config_dir()})")


def read_toml(path: Path | str) -> tuple[Path, dict]:
    resolved = resolve_config_path(path)
    try:
        with resolved.open("rb") as handle:
            return resolved, tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{resolved}: invalid TOML: {exc}") from exc


def _check_keys(table: dict, allowed: frozenset[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def parse_parameters(table: dict, where: str) -> MpetParameters:
    _check_keys(table, PARAMETER_KEYS, where)
    values = dict(table)
    try:
        n = int(values.pop("n", 1))
        return MpetParameters.create(n, **values)
    except ParameterError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad parameter value: {exc}") from exc


def _mesh_size(table: dict, where: str) -> tuple[int, int]:
    _check_keys(table, MESH_KEYS, f"{where} [mesh]")
    nx = table.get("nx", DEFAULT_MESH)
    ny = table.get("ny", nx)
    if not (isinstance(nx, int) and isinstance(ny, int)):
        raise ConfigError(f"{where} [mesh]: nx and ny must be integers")
    return nx, ny


def _dg_config(table: dict, where: str) -> DgConfig:
    _check_keys(table, DG_KEYS, f"{where} [dg]")
    try:
        return DgConfig(**table)
    except DgConfigError as exc:
        raise ConfigError(f"{where} [dg]: {exc}") from exc


@dataclass(frozen=True)
class ProblemConfig:
    params: MpetParameters
    nx: int = DEFAULT_MESH
    ny: int = DEFAULT_MESH
    dg: DgConfig = field(default_factory=DgConfig)


def load_problem(path: Path | str) -> ProblemConfig:
    resolved, data = read_toml(path)
    where = str(resolved)
    known_tables = {"parameters", "mesh", "dg"}
    if "parameters" in data:
        _check_keys(data, frozenset(known_tables), where)
        table = data["parameters"]
    else:
        table = {k: v for k, v in data.items() if k not in known_tables}
    nx, ny = _mesh_size(data.get("mesh", {}), where)
    return ProblemConfig(
        params=parse_parameters(table, where),
        nx=nx,
        ny=ny,
        dg=_dg_config(data.get("dg", {}), where),
    )


@dataclass(frozen=True)
class SweepPoint:
    index: int
    values: dict
    """Merged base and grid values of this point, plus nx."""

    @property
    def nx(self) -> int:
        return int(self.values["nx"])

    def parameters(self) -> MpetParameters:
        """Raises ParameterError for an inadmissible point; keys were
        checked when the file was loaded."""
        table = {k: v for k, v in self.values.items() if k != "nx"}
        n = int(table.pop("n", 1))
        return MpetParameters.create(n, **table)


@dataclass(frozen=True)
class SweepConfig:
    base: dict
    grid: dict[str, list]
    nx: int = DEFAULT_MESH
    dg: DgConfig = field(default_factory=DgConfig)
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0
    dense: bool = True
    max_dofs: int = 4000
    max_kappa_spread: float = 10.0
    max_iterations: int = 80
    max_iteration_spread: float = 2.0

    def points(self) -> list[SweepPoint]:
        keys = list(self.grid)
        points = []
        product = itertools.product(*(self.grid[key] for key in keys))
        for index, combination in enumerate(product):
            values = {"nx": self.nx, **self.base}
            values.update(zip(keys, combination, strict=True))
            points.append(SweepPoint(index, values))
        return points


def load_sweep(path: Path | str) -> SweepConfig:
    resolved, data = read_toml(path)
    where = str(resolved)
    _check_keys(data, frozenset({"base", "grid", "run", "mesh", "dg"}), where)
    base = dict(data.get("base", {}))
    _check_keys(base, PARAMETER_KEYS, f"{where} [base]")
    grid = dict(data.get("grid", {}))
    _check_keys(grid, PARAMETER_KEYS | {"nx"}, f"{where} [grid]")
    for key, values in grid.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"{where} [grid]: {key} must be a non-empty list")
    run = dict(data.get("run", {}))
    _check_keys(run, RUN_KEYS, f"{where} [run]")
    nx, _ = _mesh_size(data.get("mesh", {}), where)

    config = SweepConfig(
        base=base,
        grid=grid,
        nx=nx,
        dg=_dg_config(data.get("dg", {}), where),
        tol=float(run.get("tol", 1e-8)),
        max_iter=int(run.get("max_iter", 500)),
        seed=int(run.get("seed", 0)),
        dense=bool(run.get("dense", True)),
        max_dofs=int(run.get("max_dofs", 4000)),
        max_kappa_spread=float(run.get("max_kappa_spread", 10.0)),
        max_iterations=int(run.get("max_iterations", 80)),
        max_iteration_spread=float(run.get("max_iteration_spread", 2.0)),
    )
    if not 0.0 < config.tol < 1.0:
        raise ConfigError(f"{where} [run]: tol must lie in (0, 1)")
    if config.max_kappa_spread < 1.0 or config.max_iteration_spread < 1.0:
        raise ConfigError(f"{where} [run]: spread budgets must be >= 1")
    if config.max_iterations < 1:
        raise ConfigError(f"{where} [run]: max_iterations must be >= 1")
    return config
