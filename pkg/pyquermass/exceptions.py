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

"""Exceptions raised by pyquermass."""

__all__ = [
    "QuermassError",
    "DegenerateMetricError",
    "StepSizeError",
    "FrameError",
    "CriticalPointError",
    "NumericalError",
    "ParametrizationError",
    "UnknownScenarioError",
    "ConfigError",
]


class QuermassError(Exception):
    """Base class of every error raised by pyquermass."""


class DegenerateMetricError(QuermassError):
    """The metric is not symmetric, not positive definite or too badly conditioned at a point."""


class StepSizeError(QuermassError, ValueError):
    """A finite-difference step is too small, or the point is too close to the chart boundary."""


class FrameError(QuermassError, ValueError):
    """A frame is not orthonormal, or a form received the wrong number of vectors."""


class CriticalPointError(QuermassError):
    """The gradient of the scalar field is below the configured floor."""


class NumericalError(QuermassError):
    """An eigensolver failed or an intermediate value is not finite."""


class ParametrizationError(QuermassError):
    """A level-surface parametrization is degenerate or could not be solved for."""


class UnknownScenarioError(QuermassError, KeyError):
    """The requested scenario is not in the catalog."""

    def __str__(self) -> str:
        # KeyError quotes its argument, keep the message readable
        return str(self.args[0]) if self.args else ""


class ConfigError(QuermassError, ValueError):
    """A run configuration is invalid (grids, r values, tolerances or output paths)."""
