"""Experiment configuration: YAML-backed dataclass tree with strict keys.

Unknown keys are rejected with their dotted path, numeric tolerances are
validated, and a config round-trips through dump/load unchanged, so runs
are reproducible from the artifact directory alone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from math import pi

import yaml

from .errors import ConfigError
from .flow import IntegratorOptions


@dataclass
class ModelConfig:
    name: str = "euclidean"
    params: dict = field(default_factory=dict)


@dataclass
class TraceConfig:
    n_energy_rays: int = 1000
    n_h0_rays: int = 50
    h0_x0: float = 1e-3
    h0_decay_x0: tuple = (1e-3, 3.16e-3, 1e-2, 3.16e-2, 1e-1)
    short_s_values: tuple = (1e-3, 1e-2, 1e-1, 0.3)
    short_y0: float = 0.3
    short_eta0: float = 1.0
    exit_x0_min: float = 1e-3
    exit_x0_max: float = 1e-1
    exit_n_points: int = 7
    n_table1_rays: int = 5


@dataclass
class TransformConfig:
    n_exact_rays: int = 100
    n_gauge_rays: int = 10
    n_transport_states: int = 100
    transport_delta: float = 5e-4
    rate_x0: tuple = (0.01, 0.0178, 0.0316, 0.0562, 0.1)
    rate_orders: tuple = (1, 2, 3)
    rate_y0: float = 0.3


@dataclass
class ProbeConfig:
    s_values: tuple = (1e-3, 3e-3, 1e-2, 3e-2)
    y0: float = 0.3
    eta0: float = 1.0
    dy_coefficient: float = 0.7
    orders: tuple = (1, 2)


@dataclass
class JacobiConfig:
    n_grad_states: int = 20
    grad_fd_step: float = 1e-4
    bounds_x0: tuple = (1e-1, 1e-2, 1e-3)
    bounds_thetas: tuple = (0.7 * pi, pi, 1.3 * pi)
    bounds_y0: float = 0.3
    n_exit_states: int = 3


@dataclass
class PestovConfig:
    eps: float = 0.2
    x_top: float = 1.0
    base_resolution: int = 64
    coarse_resolution: int = 32


@dataclass
class ExperimentConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)
    trace: TraceConfig = field(default_factory=TraceConfig)
    transform: TransformConfig = field(default_factory=TransformConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    jacobi: JacobiConfig = field(default_factory=JacobiConfig)
    pestov: PestovConfig = field(default_factory=PestovConfig)
    out: str = "artifacts"
    seed: int = 20260824


_POSITIVE = {
    ("integrator", "rel_tol"), ("integrator", "abs_tol"), ("integrator", "t_max"),
    ("trace", "h0_x0"), ("transform", "transport_delta"),
    ("jacobi", "grad_fd_step"), ("pestov", "eps"), ("pestov", "x_top"),
}


def _coerce(current, value, where: str):
    """Type-check a scalar or sequence value against the default's type."""
    if isinstance(current, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"expected a mapping at '{where}'")
        return value
    if isinstance(current, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"expected a list at '{where}'")
        return tuple(value)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected a boolean at '{where}'")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number at '{where}'")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number at '{where}'")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"expected a string at '{where}'")
        return value
    return value


def _fill_frozen(current, data, path: str):
    """Rebuild a frozen dataclass with updates, preserving its validation."""
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping at '{path}', "
                          f"got {type(data).__name__}")
    known = {f.name for f in fields(current)}
    updates = {}
    for key, value in data.items():
        where = f"{path}.{key}"
        if key not in known:
            raise ConfigError(f"unknown config key '{where}'")
        updates[key] = _coerce(getattr(current, key), value, where)
    try:
        return replace(current, **updates)
    except ValueError as exc:
        raise ConfigError(f"invalid value under '{path}': {exc}") from exc


def _fill(obj, data, path: str):
    """Recursively apply a mapping onto a dataclass, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"expected a mapping at '{path or '<root>'}', "
                          f"got {type(data).__name__}")
    known = {f.name: f for f in fields(obj)}
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown config key '{where}'")
        current = getattr(obj, key)
        if is_dataclass(current) and not isinstance(current, type):
            if key == "params":  # free-form model parameters
                setattr(obj, key, value)
            elif type(current).__dataclass_params__.frozen:
                setattr(obj, key, _fill_frozen(current, value, where))
            else:
                _fill(current, value, where)
        else:
            setattr(obj, key, _coerce(current, value, where))
    return obj


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    for section, name in _POSITIVE:
        value = getattr(getattr(cfg, section), name)
        if not value > 0.0:
            raise ConfigError(f"'{section}.{name}' must be positive, got {value}")
    if cfg.integrator.exit_root_tol <= 0.0:
        raise ConfigError("'integrator.exit_root_tol' must be positive")
    if not 0.0 < cfg.pestov.eps < cfg.pestov.x_top:
        raise ConfigError("'pestov.eps' must lie in (0, pestov.x_top)")
    for section in ("trace", "transform", "probe", "jacobi", "pestov"):
        sub = getattr(cfg, section)
        for f in fields(sub):
            v = getattr(sub, f.name)
            if f.name.startswith("n_") and (not isinstance(v, int) or v < 1):
                raise ConfigError(f"'{section}.{f.name}' must be at least 1")
    for name in ("base_resolution", "coarse_resolution"):
        if getattr(cfg.pestov, name) < 4:
            raise ConfigError(f"'pestov.{name}' must be at least 4")
    if cfg.seed < 0:
        raise ConfigError("'seed' must be a non-negative integer")
    return cfg


def config_from_mapping(data: dict | None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if data:
        _fill(cfg, data, "")
    return _validate(cfg)


def load_config(path: str | None) -> ExperimentConfig:
    """Defaults when path is None, otherwise strict YAML parsing."""
    if path is None:
        return _validate(ExperimentConfig())
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
    if data is None:
        data = {}
    return config_from_mapping(data)


def dump_config(cfg: ExperimentConfig) -> str:
    """YAML text that load_config parses back to an equal config."""
    data = asdict(cfg)
    for section in data.values():
        if isinstance(section, dict):
            for key, value in section.items():
                if isinstance(value, tuple):
                    section[key] = list(value)
    return yaml.safe_dump(data, sort_keys=True)
