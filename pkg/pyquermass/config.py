# Licensed to the Apache Software Foundation (ASF) under one or more
# contributor license agreements.  See the NOTICE file distributed with
# this work for additional information regarding copyright ownership.
# The ASF licenses this file to You under the Apache License, Version 2.0
# (the "License"); you may not use this file except in compliance with
# the License.  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Run configuration models."""

import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

__all__ = [
    "WORKERS_ENV",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "ScenarioSpec",
    "RunConfig",
    "VerifyConfig",
    "PointwiseConfig",
    "ProfileConfig",
    "load_config",
    "build_config",
    "resolve_workers",
]

WORKERS_ENV = "PYQUERMASS_WORKERS"

OutputFormat = Literal["json", "csv"]


class Tolerances(BaseModel):
    """Numerical tolerances shared by the geometry modules."""

    model_config = ConfigDict(frozen=True)

    analytic: float = Field(1e-10, gt=0)
    """Agreement expected from quantities built on analytic derivatives."""

    finite_difference: float = Field(1e-5, gt=0)
    """Agreement expected from quantities built on finite-difference derivatives."""

    orthonormality: float = Field(1e-8, gt=0)
    """Maximum deviation of a frame's Gram matrix from the identity."""

    symmetry: float = Field(1e-12, gt=0)
    """Maximum asymmetry of metric components, relative to their size."""

    condition_number: float = Field(1e12, gt=1)
    """Largest metric condition number before a point is considered degenerate."""

    grad_floor: float = Field(1e-8, ge=0)
    """Smallest admissible gradient norm of a scalar field."""


DEFAULT_TOLERANCES = Tolerances()


class ScenarioSpec(BaseModel):
    """A catalog scenario name with its parameters.

    Example:
        >>> ScenarioSpec.from_string("euclid_shell:n=3,a=0.5,b=1").params
        {'n': 3, 'a': 0.5, 'b': 1}

    """

    name: str
    params: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_string(cls, text: str) -> "ScenarioSpec":
        """Parse the command line form ``name:key=value,key=value``.

        Values are read as ints when possible, then floats, then comma free strings.

        Raises :class:`pyquermass.exceptions.ConfigError` on malformed parameters.
        """
        name, _, rest = text.partition(":")
        params: Dict[str, Any] = {}
        for item in filter(None, rest.split(",")):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ConfigError(f"Invalid scenario parameter {item!r} in {text!r}, expected key=value")
            params[key.strip()] = _parse_scalar(value.strip())
        return cls(name=name.strip(), params=params)

    def label(self) -> str:
        """Stable human readable label, used to sort report rows."""
        args = ",".join(f"{key}={self.params[key]}" for key in sorted(self.params))
        return f"{self.name}({args})"


def _parse_scalar(value: str) -> Any:
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


class RunConfig(BaseModel):
    """Settings shared by every command."""

    scenarios: List[ScenarioSpec] = Field(default_factory=list)
    r: Optional[List[int]] = None
    seed: int = 0
    out: Optional[Path] = None
    format: OutputFormat = "json"
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("r")
    @classmethod
    def _check_r(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and any(r < 0 for r in value):
            raise ValueError(f"r values must be non-negative, got {value}")
        return value


class VerifyConfig(RunConfig):
    """Configuration of the integral comparison run (``pyquermass verify``)."""

    grid: Optional[List[int]] = None
    t_nodes: int = Field(32, ge=2)
    levels: Tuple[float, float] = (0.0, 1.0)
    tol: float = Field(1e-4, gt=0)
    abs_tol: float = Field(1e-9, gt=0)
    near_zero: float = Field(1e-6, ge=0)

    @field_validator("grid")
    @classmethod
    def _check_grid(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and (not value or any(m < 2 for m in value)):
            raise ValueError(f"grid node counts must be at least 2, got {value}")
        return value

    @model_validator(mode="after")
    def _check_levels(self) -> "VerifyConfig":
        t0, t1 = self.levels
        if not 0.0 <= t0 < t1 <= 1.0:
            raise ValueError(f"levels must satisfy 0 <= t0 < t1 <= 1, got {self.levels}")
        return self


class PointwiseConfig(RunConfig):
    """Configuration of the pointwise exterior-derivative check (``pyquermass pointwise``)."""

    points: int = Field(100, ge=1)
    h: Optional[float] = Field(None, gt=0)
    tol: Optional[float] = Field(None, gt=0)
    richardson: bool = False


class ProfileConfig(RunConfig):
    """Configuration of the level profile table (``pyquermass profile``)."""

    grid: Optional[List[int]] = None
    t_values: List[float] = Field(default_factory=lambda: [i / 8 for i in range(9)])
    format: OutputFormat = "csv"

    @field_validator("t_values")
    @classmethod
    def _check_t_values(cls, value: List[float]) -> List[float]:
        if any(not 0.0 <= t <= 1.0 for t in value):
            raise ValueError(f"t values must lie in [0, 1], got {value}")
        return value


ConfigT = TypeVar("ConfigT", bound=BaseModel)


def load_config(path: Path, model: Type[ConfigT], **overrides: Any) -> ConfigT:
    """Read a JSON config file and apply command line overrides.

    :param path: The JSON document to read
    :param model: The config model to validate against
    :param overrides: Values taking precedence over the file, ``None`` values are ignored

    Raises :class:`pyquermass.exceptions.ConfigError` on unreadable or invalid files.
    """
    try:
        data = model.model_validate_json(path.read_text()).model_dump()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"Invalid config file {path}: {e}") from e
    return build_config(model, {**data, **{k: v for k, v in overrides.items() if v is not None}})


def build_config(model: Type[ConfigT], data: Dict[str, Any]) -> ConfigT:
    """Validate ``data`` against ``model``, turning validation failures into :class:`ConfigError`."""
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e}") from e


def resolve_workers(requested: Optional[int]) -> int:
    """Worker count from the config, else from ``PYQUERMASS_WORKERS``, else 1."""
    if requested is not None:
        return requested
    env = os.environ.get(WORKERS_ENV)
    if not env:
        return 1
    try:
        workers = int(env)
    except ValueError as e:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {env!r}") from e
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {env!r}")
    logger.debug("Using %d workers from %s", workers, WORKERS_ENV)
    return workers
