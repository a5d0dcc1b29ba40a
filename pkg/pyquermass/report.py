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

"""Report rows and their JSON and CSV serializations."""

import csv
import io
import logging
import os
from pathlib import Path
from typing import Any, ClassVar, Dict, Generic, List, Optional, Sequence, Tuple, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

__all__ = [
    "compare",
    "Row",
    "Report",
    "VerifyRow",
    "PointwiseRow",
    "ProfileRow",
    "VerificationReport",
    "PointwiseReport",
    "ProfileReport",
    "ensure_writable",
]


def compare(lhs: float, rhs: float, tol: float, abs_tol: float, near_zero: float) -> Tuple[float, float, bool]:
    """Absolute error, relative error and pass flag of two values.

    Rows whose larger side is below ``near_zero`` are judged by the absolute error against
    ``abs_tol``, all others by the relative error against ``tol``.

    Example:
        >>> compare(1.0, 1.0 + 1e-6, 1e-4, 1e-9, 1e-6)[2], compare(1e-12, 0.0, 1e-4, 1e-9, 1e-6)[2]
        (True, True)

    """
    abs_error = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    rel_error = abs_error / scale if scale > 0 else 0.0
    passed = abs_error <= abs_tol if scale < near_zero else rel_error <= tol
    return abs_error, rel_error, passed


class Row(BaseModel):
    """Fields shared by every report row; ``error`` holds the message of a failed computation."""

    model_config = ConfigDict(frozen=True)

    scenario: str
    r: int
    passed: bool
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    @property
    def sort_key(self) -> Tuple[Any, ...]:
        return self.scenario, self.r


class VerifyRow(Row):
    """Both sides of the comparison formula for one scenario and order ``r``."""

    lhs: Optional[float] = None
    rhs: Optional[float] = None
    lhs_exact: Optional[float] = None
    abs_error: Optional[float] = None
    rel_error: Optional[float] = None
    lhs_error_estimate: Optional[float] = None
    rhs_error_estimate: Optional[float] = None
    grid: List[int] = Field(default_factory=list)
    t_nodes: int = 0
    levels: Tuple[float, float] = (0.0, 1.0)
    convergence_order: Optional[float] = None

    @classmethod
    def failed(
        cls,
        scenario: str,
        r: int,
        grid: Sequence[int],
        t_nodes: int,
        levels: Tuple[float, float],
        error: str,
        wall_time: float = 0.0,
    ) -> "VerifyRow":
        return cls(
            scenario=scenario,
            r=r,
            grid=list(grid),
            t_nodes=t_nodes,
            levels=levels,
            passed=False,
            error=error,
            wall_time=wall_time,
        )


class PointwiseRow(Row):
    """Largest deviation of the finite-difference :math:`d\\Phi_r` from its closed form.

    ``slope`` is the observed order under halving ``h``, ``None`` at the rounding floor, and
    ``expected_slope`` the order of the difference scheme; ``constant`` is
    ``max_residual / h**expected_slope``.
    """

    points: int
    h: float
    max_residual: Optional[float] = None
    max_residual_half: Optional[float] = None
    slope: Optional[float] = None
    expected_slope: float = 2.0
    constant: Optional[float] = None
    max_correction_b: Optional[float] = None

    @classmethod
    def failed(
        cls, scenario: str, r: int, points: int, h: float, error: str, wall_time: float = 0.0
    ) -> "PointwiseRow":
        return cls(scenario=scenario, r=r, points=points, h=h, passed=False, error=error, wall_time=wall_time)


class ProfileRow(Row):
    """:math:`\\mathcal{M}_r(\\Gamma_t)` at one level, next to its closed form if known."""

    t: float
    value: Optional[float] = None
    estimated_error: Optional[float] = None
    closed_form: Optional[float] = None
    passed: bool = True

    @classmethod
    def failed(cls, scenario: str, r: int, t: float, error: str) -> "ProfileRow":
        return cls(scenario=scenario, r=r, t=t, passed=False, error=error)

    @property
    def sort_key(self) -> Tuple[Any, ...]:
        return self.scenario, self.r, self.t


RowT = TypeVar("RowT", bound=Row)
ReportT = TypeVar("ReportT", bound="Report[Any]")


class Report(BaseModel, Generic[RowT]):
    """Rows of one command with the configuration that produced them."""

    command: ClassVar[str] = ""
    row_type: ClassVar[Type[Row]] = Row

    config: Dict[str, Any] = Field(default_factory=dict)
    rows: List[RowT] = Field(default_factory=list)

    @classmethod
    def assemble(cls: Type[ReportT], rows: Sequence[Any], config: Optional[Dict[str, Any]] = None) -> ReportT:
        """Build a report with rows in a stable order, by scenario label, ``r`` and level."""
        ordered = sorted(rows, key=lambda row: row.sort_key)
        return cls(config=config or {}, rows=ordered)

    @property
    def passed(self) -> bool:
        """Whether every row passed; an empty report passes."""
        return all(row.passed for row in self.rows)

    def to_csv(self) -> str:
        """One line per row with the row fields as columns, ``error`` last; lists are space separated."""
        fields = [name for name in self.row_type.model_fields if name != "error"] + ["error"]
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            data = row.model_dump()
            writer.writerow({key: _csv_value(data[key]) for key in fields})
        return buffer.getvalue()

    def to_json(self) -> str:
        """The report with its configuration as an indented JSON document."""
        return self.model_dump_json(indent=2)

    def render(self, output_format: str) -> str:
        """The report as ``json`` or ``csv`` text.

        Raises :class:`pyquermass.exceptions.ConfigError` for other formats.
        """
        if output_format == "json":
            return self.to_json()
        if output_format == "csv":
            return self.to_csv()
        raise ConfigError(f"Unknown report format {output_format!r}, expected 'json' or 'csv'")

    def write(self, path: Path, output_format: str = "json") -> None:
        """Write the report to ``path``.

        Raises :class:`pyquermass.exceptions.ConfigError` if the path cannot be written.
        """
        text = self.render(output_format)
        try:
            path.write_text(text)
        except OSError as e:
            raise ConfigError(f"Cannot write report to {path}: {e}") from e
        logger.info("Wrote %s report with %d rows to %s", self.command, len(self.rows), path)


def ensure_writable(path: Path) -> None:
    """Check that a report file can be created at ``path``.

    Raises :class:`pyquermass.exceptions.ConfigError` if ``path`` is a directory, its parent
    directory does not exist, or either is not writable.
    """
    if path.is_dir():
        raise ConfigError(f"Cannot write report to {path}: it is a directory")
    if not path.parent.is_dir():
        raise ConfigError(f"Cannot write report to {path}: no directory {path.parent}")
    if not os.access(path if path.exists() else path.parent, os.W_OK):
        raise ConfigError(f"Cannot write report to {path}: permission denied")


def _csv_value(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (list, tuple)):
        return " ".join(str(v) for v in value)
    return value


class VerificationReport(Report[VerifyRow]):
    """Rows of ``pyquermass verify`` with the configuration that produced them."""

    command: ClassVar[str] = "verify"
    row_type: ClassVar[Type[Row]] = VerifyRow


class PointwiseReport(Report[PointwiseRow]):
    """Rows of ``pyquermass pointwise``."""

    command: ClassVar[str] = "pointwise"
    row_type: ClassVar[Type[Row]] = PointwiseRow


class ProfileReport(Report[ProfileRow]):
    """Rows of ``pyquermass profile``, plot ready."""

    command: ClassVar[str] = "profile"
    row_type: ClassVar[Type[Row]] = ProfileRow

