"""
Run Configuration Models

Pydantic models for everything a run needs: integrator settings, initial
data, sector, wave grid and the top-level RunConfig read from JSON files.
Validation failures are converted to ConfigError naming the offending field.
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .states import (
    PeakonState,
    Sector,
    geometric_state,
    random_state,
    sector_from_tag,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


# ==========================================================================
# COMPONENT MODELS
# ==========================================================================

class IntegratorConfig(BaseModel):
    """Adaptive integrator settings."""
    rel_tol: float = Field(1e-10, gt=0, lt=1, description="Relative tolerance")
    abs_tol: float = Field(1e-12, gt=0, description="Absolute tolerance")
    first_step: Optional[float] = Field(None, gt=0, description="Initial step (solver chooses when unset)")
    max_step: Optional[float] = Field(None, gt=0, description="Maximum step (unbounded when unset)")
    t_end: float = Field(10.0, gt=0, description="Final time")
    output_stride: int = Field(1, ge=1, description="Record every k-th accepted step")
    dense_output: bool = Field(False, description="Keep the solver interpolant for state_at")
    collision_tol: float = Field(1e-10, gt=0, description="Minimum allowed gap between positions")
    max_steps: int = Field(2_000_000, ge=1, description="Hard limit on accepted steps")


class GridSpec(BaseModel):
    """Uniform x-grid for wave profiles."""
    x_min: float = Field(..., description="Left end of the window")
    x_max: float = Field(..., description="Right end of the window")
    count: int = Field(1001, ge=2, le=10_000_000, description="Number of samples")

    @model_validator(mode="after")
    def _check_window(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.count)


class SectorSpec(BaseModel):
    """Sector tag and optional 1-based permutation."""
    tag: Literal["S_minus", "S_plus", "S_minus_perm", "S_plus_perm"] = "S_minus"
    permutation: Optional[List[int]] = Field(None, description="(pi(1), ..., pi(n))")

    @field_validator("permutation")
    @classmethod
    def _check_bijection(cls, value):
        if value is not None and sorted(value) != list(range(1, len(value) + 1)):
            raise ValueError(f"{value} is not a permutation of 1..{len(value)}")
        return value

    @model_validator(mode="after")
    def _check_tag(self):
        if self.tag.endswith("_perm") and self.permutation is None:
            raise ValueError(f"sector '{self.tag}' requires a permutation")
        return self

    def build(self) -> Sector:
        return sector_from_tag(self.tag, self.permutation)


class InitialData(BaseModel):
    """Exactly one initial-data source: explicit arrays or a generator."""
    q: Optional[List[float]] = None
    p: Optional[List[float]] = None
    generator: Optional[Literal["geometric", "random"]] = None
    C: float = Field(1.0, gt=0, description="Geometric profile scale")
    r: float = Field(0.5, gt=0, lt=1, description="Geometric profile ratio")
    d: float = Field(1.0, gt=0, description="Uniform gap")
    q0: float = Field(0.0, description="Anchor of the first canonical position")
    gap_range: Tuple[float, float] = (0.5, 2.0)
    p_range: Tuple[float, float] = (0.5, 2.0)

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.q is not None or self.p is not None
        if explicit and self.generator is not None:
            raise ValueError("give either explicit q/p or a generator, not both")
        if not explicit and self.generator is None:
            raise ValueError("no initial data: give q and p or a generator")
        if explicit and (self.q is None or self.p is None):
            raise ValueError("explicit initial data needs both q and p")
        return self


# ==========================================================================
# RUN CONFIG
# ==========================================================================

class RunConfig(BaseModel):
    """Top-level run description, serialized as JSON."""
    schema_version: Literal[1] = SCHEMA_VERSION
    command: Optional[str] = None
    n: int = Field(..., ge=1, le=4096, description="Truncation size")
    sector: SectorSpec = Field(default_factory=SectorSpec)
    initial: InitialData
    flow_sign: Optional[Literal["plus", "minus"]] = None
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    solver: Literal["ode", "factorization", "both"] = "ode"
    dt_max: float = Field(0.5, gt=0, description="Factorization substep")
    seed: Optional[int] = Field(None, ge=0)
    output_dir: str = "results"
    grid: Optional[GridSpec] = None
    times: Optional[List[float]] = None
    threshold: float = Field(1e-3, gt=0, description="Convergence threshold for momenta and slopes")
    t_cap: float = Field(400.0, gt=0, description="Cap for t_end auto-extension")
    auto_extend: bool = False

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.initial.q is not None and len(self.initial.q) != self.n:
            raise ValueError(f"initial.q: has {len(self.initial.q)} entries, n={self.n}")
        if self.initial.p is not None and len(self.initial.p) != self.n:
            raise ValueError(f"initial.p: has {len(self.initial.p)} entries, n={self.n}")
        if self.sector.permutation is not None and len(self.sector.permutation) != self.n:
            raise ValueError(f"sector.permutation: has {len(self.sector.permutation)} entries, n={self.n}")
        if self.initial.generator is not None and self.seed is None:
            raise ValueError("seed: mandatory when an initial-data generator is used")
        expected = "plus" if self.sector.tag.startswith("S_plus") else "minus"
        if self.flow_sign is not None and self.flow_sign != expected:
            raise ValueError(f"flow_sign: '{self.flow_sign}' does not match sector {self.sector.tag}")
        return self

    @property
    def t_end(self) -> float:
        return self.integrator.t_end


def _message(error: ValidationError) -> str:
    msg = error.errors()[0].get("msg", "invalid value")
    return msg[len("Value error, "):] if msg.startswith("Value error, ") else msg


def _error_field(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = ".".join(str(part) for part in first.get("loc", ()))
    if loc:
        return loc
    # model-level checks prefix their message with the field path
    head, sep, _ = _message(error).partition(":")
    return head if sep and " " not in head else "config"


def config_error(error: ValidationError) -> ConfigError:
    """Convert a pydantic ValidationError into ConfigError."""
    field = _error_field(error)
    message = _message(error)
    if not message.startswith(f"{field}:"):
        message = f"{field}: {message}"
    return ConfigError(message, field=field)


def load_config(path) -> RunConfig:
    """Parse and validate a JSON config file.

    Raises:
        ConfigError: If the file is missing or fails validation
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", field="config")
    try:
        return RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise config_error(e)


def _deep_update(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_update(merged[key], value)
        else:
            merged[key] = value
    return merged


def build_config(base: Optional[Dict[str, Any]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Validate a config dict with nested overrides applied on top.

    Raises:
        ConfigError: On validation failure
    """
    data = _deep_update(base or {}, overrides or {})
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise config_error(e)


def apply_overrides(cfg: RunConfig, overrides: Dict[str, Any]) -> RunConfig:
    """Return cfg with CLI overrides merged in and revalidated."""
    return build_config(cfg.model_dump(mode="json"), overrides)


def build_state(cfg: RunConfig) -> PeakonState:
    """Initial PeakonState described by a run config."""
    sector = cfg.sector.build()
    init = cfg.initial
    if init.generator == "geometric":
        return geometric_state(cfg.n, C=init.C, r=init.r, d=init.d, sector=sector, q0=init.q0)
    if init.generator == "random":
        rng = np.random.default_rng(cfg.seed)
        return random_state(cfg.n, rng, sector=sector, gap_range=init.gap_range, p_range=init.p_range)
    return PeakonState(init.q, init.p, sector)


def config_echo(cfg: RunConfig) -> Dict[str, Any]:
    """JSON-safe echo of the config for manifests."""
    return cfg.model_dump(mode="json")


# ==========================================================================
# ENVIRONMENT
# ==========================================================================

class RuntimeSettings(BaseModel):
    """Process-level settings read from the environment."""
    workers: int = Field(..., ge=1)
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "RuntimeSettings":
        default_workers = min(os.cpu_count() or 1, 8)
        raw = os.getenv("PEAKON_WORKERS")
        try:
            workers = int(raw) if raw else default_workers
        except ValueError:
            raise ConfigError(f"PEAKON_WORKERS must be an integer, got '{raw}'", field="PEAKON_WORKERS")
        level = os.getenv("PEAKON_LOG_LEVEL", "INFO").upper()
        try:
            return cls(workers=workers, log_level=level)
        except ValidationError as e:
            raise config_error(e)


def max_step_or_inf(cfg: IntegratorConfig) -> float:
    return cfg.max_step if cfg.max_step is not None else math.inf
