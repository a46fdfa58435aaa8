"""Run configuration for the solver driver.

A config file is a YAML (or JSON) mapping whose keys mirror the field names
of :class:`RunConfig` and its nested dataclasses. Unknown keys are errors.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import yaml

from .hessolve import NewtonConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    n: int = 2
    N: int = 16


@dataclass(frozen=True)
class ProblemConfig:
    kind: str = "manufactured"
    k: int = 2
    alpha: float = 0.1
    mu: float = 1.0
    nu: float = 0.1
    variant: str = "continuum"
    eps: float = 1.0
    p_amp: float = 0.2
    a_amp: float = 0.2
    q_slope: float = 0.0


@dataclass(frozen=True)
class InitialGuess:
    kind: str = "zero"  # zero | u_star
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "u_star"):
            raise ConfigError(f"initial.kind must be 'zero' or 'u_star', got {self.kind!r}")


@dataclass(frozen=True)
class MonitorConfig:
    N: float = 2.0
    Lambda: float | None = None


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    initial: InitialGuess = field(default_factory=InitialGuess)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    continuity_steps: int = 0

    def as_dict(self) -> dict:
        return asdict(self)

    def problem_params(self) -> dict:
        p = asdict(self.problem)
        p["seed"] = self.seed
        return p


_NESTED = {"grid": GridConfig, "problem": ProblemConfig, "newton": NewtonConfig,
           "initial": InitialGuess, "monitor": MonitorConfig}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    names = {f.name for f in fields(cls)}
    extra = set(data) - names
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")
    kw = {}
    for key, val in data.items():
        if cls is RunConfig and key in _NESTED:
            kw[key] = _build(_NESTED[key], val, key)
        else:
            kw[key] = val
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def run_config_from_dict(data: dict | None) -> RunConfig:
    return _build(RunConfig, data or {}, "config")


def load_run_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return run_config_from_dict(data)
