"""
Run, sweep, corrector-check and inequality configurations.

Every configuration is a frozen dataclass validated on construction. Files are JSON
or TOML, chosen by suffix, with keys mirroring the field names.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, TypeVar

from tomlkit import dumps, loads
from tomlkit.exceptions import TOMLKitError

from kato.mesh.geometry import Domain, Grid, build_grid
from kato.theory.euler import EulerSolution, catalog_entry
from kato.util.exceptions import ConfigError
from kato.util.fs import run_directory, write_atomic

ConfigType = TypeVar("ConfigType", bound="_FileConfig")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _whole_intervals(horizon: float, interval: float) -> bool:
    count = horizon / interval
    return round(count) >= 1 and abs(count - round(count)) <= 1e-9 * max(1.0, count)


@dataclass(frozen=True)
class GridSpec:
    """
    Attributes:
        nx (int): Cells along the periodic direction.
        ny (int): Cells between the walls.
        stretch (float): tanh clustering parameter, 0 for a uniform grid.
        length_x (float): Period.
        length_y (float): Wall separation.
    """

    nx: int = 16
    ny: int = 128
    stretch: float = 0.0
    length_x: float = 1.0
    length_y: float = 1.0

    def __post_init__(self) -> None:
        _require(int(self.nx) == self.nx and self.nx >= 4, f"nx must be an integer >= 4, got {self.nx}")
        _require(int(self.ny) == self.ny and self.ny >= 4, f"ny must be an integer >= 4, got {self.ny}")
        _require(self.stretch >= 0, f"stretch must be non-negative, got {self.stretch}")
        _require(self.length_x > 0 and self.length_y > 0, "channel lengths must be positive")

    @property
    def domain(self) -> Domain:
        return Domain(length_x=self.length_x, length_y=self.length_y)

    def build(self) -> Grid:
        return build_grid(self.domain, int(self.nx), int(self.ny), self.stretch)

    def dictify(self) -> dict:
        return {
            "nx": int(self.nx),
            "ny": int(self.ny),
            "stretch": float(self.stretch),
            "length_x": float(self.length_x),
            "length_y": float(self.length_y),
        }


@dataclass(frozen=True)
class ScenarioSpec:
    """
    Euler catalog entry whose fields at t = 0 are also the viscous initial data.

    Attributes:
        entry (str): Catalog name.
        params (dict): Keyword parameters of the entry.
    """

    entry: str = "steady_shear"
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", dict(self.params))
        catalog_entry(self.entry, self.params)

    def build(self, domain: Domain) -> EulerSolution:
        return catalog_entry(self.entry, self.params, domain)

    def dictify(self) -> dict:
        return {"entry": self.entry, "params": dict(self.params)}


def _sub_config(value: Any, cls: type) -> Any:
    if isinstance(value, cls):
        return value
    if not isinstance(value, dict):
        raise ConfigError(f"{cls.__name__} must be a table, got {type(value).__name__}")
    try:
        return cls(**value)
    except TypeError as err:
        raise ConfigError(f"invalid {cls.__name__}: {err}") from err


class _FileConfig:
    """Shared JSON/TOML persistence of the configuration dataclasses."""

    _nested: dict[str, type] = {}

    def dictify(self) -> dict:
        data = {}
        for entry in fields(self):
            value = getattr(self, entry.name)
            if hasattr(value, "dictify"):
                value = value.dictify()
            elif isinstance(value, tuple):
                value = list(value)
            data[entry.name] = value
        return data

    @classmethod
    def from_dict(cls: type[ConfigType], data: dict) -> ConfigType:
        data = dict(data)
        for name, sub in cls._nested.items():
            if name in data:
                data[name] = _sub_config(data[name], sub)
        try:
            return cls(**data)
        except TypeError as err:
            raise ConfigError(f"invalid {cls.__name__}: {err}") from err

    def dumps(self, fmt: str = "toml") -> str:
        if fmt == "json":
            return json.dumps(self.dictify(), indent=2, sort_keys=True) + "\n"
        if fmt == "toml":
            return dumps(self.dictify())
        raise ConfigError(f"unknown configuration format {fmt!r}")

    @classmethod
    def loads(cls: type[ConfigType], data: str, fmt: str = "toml") -> ConfigType:
        try:
            if fmt == "json":
                parsed = json.loads(data)
            elif fmt == "toml":
                parsed = loads(data).unwrap()
            else:
                raise ConfigError(f"unknown configuration format {fmt!r}")
        except (json.JSONDecodeError, TOMLKitError) as err:
            raise ConfigError(f"cannot parse {cls.__name__}: {err}") from err
        if not isinstance(parsed, dict):
            raise ConfigError(f"{cls.__name__} must be a table")
        return cls.from_dict(parsed)

    def dump(self, path: Path) -> Path:
        path = Path(path)
        return write_atomic(path, self.dumps(_format_of(path)))

    @classmethod
    def load(cls: type[ConfigType], path: Path) -> ConfigType:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigError(f"cannot read configuration {path}: {err}") from err
        return cls.loads(text, _format_of(path))


def _format_of(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".json":
        return "json"
    if suffix == ".toml":
        return "toml"
    raise ConfigError(f"configuration {path} must end in .json or .toml")


def _check_run_numbers(config) -> None:
    _require(config.horizon > 0, f"horizon must be positive, got {config.horizon}")
    _require(0 < config.cfl <= 1, f"cfl must lie in (0, 1], got {config.cfl}")
    _require(config.poisson_tol > 0, f"poisson_tol must be positive, got {config.poisson_tol}")
    _require(config.dt_max > 0, f"dt_max must be positive, got {config.dt_max}")
    _require(config.output_interval > 0, f"output_interval must be positive, got {config.output_interval}")
    _require(
        _whole_intervals(config.horizon, config.output_interval),
        f"horizon {config.horizon} is not a whole number of output intervals {config.output_interval}",
    )
    _require(int(config.seed) == config.seed, f"seed must be an integer, got {config.seed}")


@dataclass(frozen=True)
class RunConfig(_FileConfig):
    """
    One viscous run.

    Attributes:
        scenario (ScenarioSpec): Euler entry and initial data.
        nu (float): Viscosity, also the Kato layer thickness.
        grid (GridSpec): Grid parameters.
        horizon (float): Final time T'.
        cfl (float): Advective CFL number of the time step.
        poisson_tol (float): Relative residual of the pressure solve.
        output_dir (str): Directory of the run's outputs.
        output_interval (float): Time between diagnostic samples.
        seed (int): Seed of the random family measuring the Hardy constant.
        dt_max (float): Time step cap.
        write_snapshots (bool): Whether to write a `.flow` file at every sample.
    """

    scenario: ScenarioSpec
    nu: float
    grid: GridSpec = field(default_factory=GridSpec)
    horizon: float = 1.0
    cfl: float = 0.5
    poisson_tol: float = 1e-10
    output_dir: str = "results"
    output_interval: float = 0.1
    seed: int = 0
    dt_max: float = 0.01
    write_snapshots: bool = True

    _nested = {"scenario": ScenarioSpec, "grid": GridSpec}

    def __post_init__(self) -> None:
        _require(isinstance(self.scenario, ScenarioSpec), "scenario must be a ScenarioSpec")
        _require(isinstance(self.grid, GridSpec), "grid must be a GridSpec")
        _require(self.nu > 0 and math.isfinite(self.nu), f"nu must be positive, got {self.nu}")
        _check_run_numbers(self)


@dataclass(frozen=True)
class SweepConfig(_FileConfig):
    """The fields of RunConfig with the single nu replaced by a list; each run writes below output_dir."""

    scenario: ScenarioSpec
    nus: tuple[float, ...]
    grid: GridSpec = field(default_factory=GridSpec)
    horizon: float = 1.0
    cfl: float = 0.5
    poisson_tol: float = 1e-10
    output_dir: str = "results"
    output_interval: float = 0.1
    seed: int = 0
    dt_max: float = 0.01
    write_snapshots: bool = False

    _nested = {"scenario": ScenarioSpec, "grid": GridSpec}

    def __post_init__(self) -> None:
        object.__setattr__(self, "nus", tuple(float(nu) for nu in self.nus))
        _require(len(self.nus) >= 3, f"a sweep needs at least 3 viscosities, got {len(self.nus)}")
        _require(all(nu > 0 for nu in self.nus), "viscosities must be positive")
        _require(len(set(self.nus)) == len(self.nus), "viscosities must be distinct")
        _check_run_numbers(self)

    def run_configs(self) -> list[RunConfig]:
        """One RunConfig per viscosity, largest nu first."""
        shared = {entry.name: getattr(self, entry.name) for entry in fields(self) if entry.name != "nus"}
        configs = []
        for nu in sorted(self.nus, reverse=True):
            output_dir = str(run_directory(Path(self.output_dir), nu))
            configs.append(RunConfig(**{**shared, "nu": nu, "output_dir": output_dir}))
        return configs


@dataclass(frozen=True)
class CorrectorCheckConfig(_FileConfig):
    """
    Attributes:
        scenario (ScenarioSpec): Entry whose corrector is measured.
        nus (tuple[float, ...]): Layer thicknesses, at least four.
        grid (GridSpec): Grid used for every thickness.
        t (float): Evaluation time.
        tolerance (float): Allowed distance of a fitted exponent from its bound.
        output_dir (str): Where the norms table and summary go.
    """

    scenario: ScenarioSpec
    nus: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    grid: GridSpec = field(default_factory=lambda: GridSpec(nx=16, ny=512, stretch=2.0))
    t: float = 0.0
    tolerance: float = 0.1
    output_dir: str = "results"

    _nested = {"scenario": ScenarioSpec, "grid": GridSpec}

    def __post_init__(self) -> None:
        object.__setattr__(self, "nus", tuple(float(nu) for nu in self.nus))
        _require(len(self.nus) >= 4, f"corrector check needs at least 4 thicknesses, got {len(self.nus)}")
        _require(all(nu > 0 for nu in self.nus), "thicknesses must be positive")
        _require(self.t >= 0, f"t must be non-negative, got {self.t}")
        _require(self.tolerance > 0, f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class InequalityConfig(_FileConfig):
    """
    Attributes:
        grid (GridSpec): Grid used for every thickness.
        eps_list (tuple[float, ...]): Layer thicknesses, at least four spanning a decade.
        alphas (tuple[float, ...]): Powers of the distance family.
        modes (tuple[int, ...]): Wall-normal modes of the sine family.
        seed (int): Seed of the random family.
        count (int): Members of the random family.
        output_dir (str): Where the ratio table and summary go.
    """

    grid: GridSpec = field(default_factory=lambda: GridSpec(nx=8, ny=4096))
    eps_list: tuple[float, ...] = (0.005, 0.01, 0.02, 0.05)
    alphas: tuple[float, ...] = (1.0, 1.5, 2.0)
    modes: tuple[int, ...] = (1, 2, 3)
    seed: int = 0
    count: int = 4
    output_dir: str = "results"

    _nested = {"grid": GridSpec}

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps_list", tuple(float(eps) for eps in self.eps_list))
        object.__setattr__(self, "alphas", tuple(float(alpha) for alpha in self.alphas))
        object.__setattr__(self, "modes", tuple(int(mode) for mode in self.modes))
        _require(len(self.eps_list) >= 4, f"need at least 4 thicknesses, got {len(self.eps_list)}")
        _require(all(eps > 0 for eps in self.eps_list), "thicknesses must be positive")
        _require(
            max(self.eps_list) >= 10.0 * min(self.eps_list) * (1.0 - 1e-12),
            "thicknesses must span at least one decade",
        )
        _require(all(alpha >= 0.5 for alpha in self.alphas), "distance powers must be at least 1/2")
        _require(all(mode >= 1 for mode in self.modes), "sine modes must be positive")
        _require(self.count >= 1, f"count must be positive, got {self.count}")


def with_output_dir(config: ConfigType, output_dir: Path | str) -> ConfigType:
    return replace(config, output_dir=str(output_dir))
