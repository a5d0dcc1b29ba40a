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

"""Mypy Types needed for pyquermass."""

from typing import Callable, Sequence

import numpy as np
import numpy.typing as npt

__all__ = ["Array", "Point", "Vector", "ArrayMap", "ScalarMap", "VectorTuple"]

Array = npt.NDArray[np.float64]
"""A float array of any shape."""

Point = Array
"""Coordinates of a point in a chart, shape ``(n,)``."""

Vector = Array
"""Coordinate components of a tangent vector, shape ``(n,)``.

Tangent vectors are always given by their components in the coordinate basis
:math:`\\partial_1, \\dots, \\partial_n` of the chart they live in.
"""

ArrayMap = Callable[[Point], Array]
"""A map from a chart point to an array, e.g. metric components or their derivatives."""

ScalarMap = Callable[[Point], float]
"""A map from a chart point to a number, e.g. a quadrature integrand."""

VectorTuple = Sequence[Vector]
"""An ordered tuple of tangent vectors at one point, the argument of an alternating form."""
