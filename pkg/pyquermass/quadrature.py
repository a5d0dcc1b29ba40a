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

"""Surface integrals over level sets and volume integrals over the region they foliate.

Volume integrals use the coarea decomposition

.. math::

    \\int_{\\{t_0 \\le u \\le t_1\\}} f \\, d\\mathrm{vol}
    = \\int_{t_0}^{t_1} \\int_{\\Gamma_t} \\frac{f}{|\\nabla u|} \\, dA \\, dt,

so the only meshes ever built are products of one dimensional rules on the parameter
boxes of level sets.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Callable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ParametrizationError
from .metric import MetricChart
from .types import Array, Point, ScalarMap

if TYPE_CHECKING:
    from .levelset import ScalarField

logger = logging.getLogger(__name__)

__all__ = [
    "LevelSurfacePatch",
    "QuadratureResult",
    "ConvergenceEstimate",
    "gauss_legendre",
    "periodic_trapezoid",
    "surface_integral",
    "volume_integral",
    "refine_and_estimate",
]


def gauss_legendre(m: int, a: float, b: float) -> Tuple[Array, Array]:
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    nodes, weights = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return a + half * (nodes + 1.0), half * weights


def periodic_trapezoid(m: int, a: float, b: float) -> Tuple[Array, Array]:
    """Trapezoidal rule for a periodic direction of period ``b - a``."""
    return a + (b - a) * np.arange(m) / m, np.full(m, (b - a) / m)


@dataclass(frozen=True)
class LevelSurfacePatch:
    """Parametrization of the level set :math:`\\Gamma_t = u^{-1}(t)` by a box.

    :param t: The level
    :param chart: Chart the level set lives in
    :param field: The scalar field ``u``
    :param param: Map from a parameter point ``s`` to a chart point with ``u = t``
    :param jacobian: ``(n, n-1)`` matrix of derivatives of ``param`` at ``s``
    :param lower: Lower corner of the parameter box
    :param upper: Upper corner of the parameter box
    :param periodic: Per parameter axis, whether it is periodic (trapezoidal rule) or not (Gauss-Legendre)
    :param grid: Per parameter axis node counts
    """

    t: float
    chart: MetricChart
    field: "ScalarField"
    param: Callable[[Array], Point]
    jacobian: Callable[[Array], Array]
    lower: Array
    upper: Array
    periodic: Tuple[bool, ...]
    grid: Tuple[int, ...]

    def with_grid(self, grid: Sequence[int]) -> "LevelSurfacePatch":
        """The same level set with another grid.

        Raises :class:`pyquermass.exceptions.ParametrizationError` if the number of axes differs.
        """
        if len(grid) != len(self.grid):
            raise ParametrizationError(f"Patch needs {len(self.grid)} grid sizes, got {list(grid)}")
        return replace(self, grid=tuple(int(m) for m in grid))

    def nodes(self, grid: Optional[Sequence[int]] = None) -> Tuple[Array, Array]:
        """Product-rule parameter nodes ``(N, n-1)`` and weights ``(N,)``."""
        grid = self.grid if grid is None else tuple(grid)
        rules = [
            (periodic_trapezoid if periodic else gauss_legendre)(m, a, b)
            for m, a, b, periodic in zip(grid, self.lower, self.upper, self.periodic)
        ]
        points = np.array(list(itertools.product(*(nodes for nodes, _ in rules))))
        weights = np.array([math.prod(w) for w in itertools.product(*(weights for _, weights in rules))])
        return points, weights

    def area_element(self, s: Array) -> Tuple[Point, float]:
        """Chart point and :math:`\\sqrt{\\det(J^T g J)}` at parameter ``s``.

        Raises :class:`pyquermass.exceptions.ParametrizationError` if the pullback metric is degenerate.
        """
        x = np.asarray(self.param(s), dtype=float)
        J = np.asarray(self.jacobian(s), dtype=float)
        det = float(np.linalg.det(J.T @ self.chart.metric(x) @ J))
        if not det > 0:
            raise ParametrizationError(
                f"Degenerate pullback metric at level {self.t:g}, parameter {np.asarray(s).tolist()}"
            )
        return x, math.sqrt(det)

    def validate(self, tol: float = 1e-10) -> None:
        """Check ``u(param(s)) = t`` and a non-degenerate pullback metric at every node.

        Raises :class:`pyquermass.exceptions.ParametrizationError` on the first violation.
        """
        for s in self.nodes()[0]:
            x, _ = self.area_element(s)
            if abs(self.field.value(x) - self.t) > tol:
                raise ParametrizationError(
                    f"Patch point {x.tolist()} has u = {self.field.value(x):.15g}, expected level {self.t:g}"
                )


@dataclass(frozen=True)
class QuadratureResult:
    """An integral value with an error estimate.

    ``estimated_error`` is the difference to the same rule on a grid halved per axis, or
    ``0.0`` when estimation was skipped; ``nodes_used`` counts all integrand evaluations.
    """

    value: float
    estimated_error: float
    nodes_used: int


@dataclass(frozen=True)
class ConvergenceEstimate:
    """Empirical convergence order from a grid doubling study.

    ``order`` is ``None`` when the errors reached the noise floor and the order is undefined.
    """

    order: Optional[float]
    values: Tuple[float, ...]
    errors: Tuple[float, ...]

    @property
    def flagged(self) -> bool:
        return self.order is None


def _integrate(patch: LevelSurfacePatch, grid: Sequence[int], integrand: ScalarMap) -> Tuple[float, int]:
    points, weights = patch.nodes(grid)
    terms = np.empty(len(weights))
    for p, (s, w) in enumerate(zip(points, weights)):
        x, dA = patch.area_element(s)
        terms[p] = w * dA * integrand(x)
    # np.sum adds the node terms pairwise, in node order
    return float(np.sum(terms)), len(weights)


def _halved(grid: Sequence[int]) -> List[int]:
    return [max(2, m // 2) for m in grid]


def surface_integral(patch: LevelSurfacePatch, integrand: ScalarMap, estimate_error: bool = True) -> QuadratureResult:
    """Integrate a function over a level set with a product rule.

    :param patch: Parametrization of the level set with its grid
    :param integrand: Function of the chart point
    :param estimate_error: Also integrate on the grid halved per axis and report the difference

    Raises :class:`pyquermass.exceptions.ParametrizationError` on a degenerate parametrization.
    """
    value, used = _integrate(patch, patch.grid, integrand)
    error = 0.0
    if estimate_error:
        coarse, coarse_used = _integrate(patch, _halved(patch.grid), integrand)
        error, used = abs(value - coarse), used + coarse_used
    logger.debug("Surface integral at t=%g on grid %s: %.15g (+- %.3g)", patch.t, patch.grid, value, error)
    return QuadratureResult(value, error, used)


def volume_integral(
    field: "ScalarField",
    chart: MetricChart,
    integrand: ScalarMap,
    t_nodes: int,
    patch_factory: Callable[[float], LevelSurfacePatch],
    levels: Tuple[float, float] = (0.0, 1.0),
    estimate_error: bool = True,
    weight: Optional[ScalarMap] = None,
) -> QuadratureResult:
    """Integrate over :math:`\\{t_0 \\le u \\le t_1\\}` through the coarea decomposition.

    The outer integral over the level is a Gauss-Legendre rule with ``t_nodes`` nodes, the
    inner one a :func:`surface_integral` of ``integrand / |∇u|`` on ``patch_factory(t)``.
    The error estimate repeats both rules at half resolution, half the outer nodes on level
    grids halved per axis.

    :param field: The scalar field ``u``
    :param chart: The chart it lives in
    :param integrand: Function of the chart point
    :param t_nodes: Number of outer nodes
    :param patch_factory: Level set parametrization for each level
    :param levels: The levels ``(t0, t1)`` bounding the region
    :param estimate_error: Also integrate at half resolution and report the difference
    :param weight: The coarea factor :math:`1/|\\nabla u|` at a point, computed from ``field`` when omitted

    Raises :class:`pyquermass.exceptions.ParametrizationError` on degenerate level sets.
    """
    if weight is None:

        def weighted(x: Point) -> float:
            return integrand(x) / field.gradient_norm(chart, x)

    else:

        def weighted(x: Point) -> float:
            return integrand(x) * weight(x)

    def outer(m: int, coarse: bool) -> Tuple[float, int]:
        ts, ws = gauss_legendre(m, *levels)
        terms, used = np.empty(m), 0
        for p, (t, w) in enumerate(zip(ts, ws)):
            patch = patch_factory(float(t))
            if coarse:
                patch = patch.with_grid(_halved(patch.grid))
            inner = surface_integral(patch, weighted, estimate_error=False)
            terms[p], used = w * inner.value, used + inner.nodes_used
        return float(np.sum(terms)), used

    value, used = outer(t_nodes, False)
    error = 0.0
    if estimate_error:
        coarse, coarse_used = outer(max(1, t_nodes // 2), True)
        error, used = abs(value - coarse), used + coarse_used
    logger.debug("Volume integral over levels %s with %d t-nodes: %.15g (+- %.3g)", levels, t_nodes, value, error)
    return QuadratureResult(value, error, used)


def refine_and_estimate(
    compute: Callable[[int], float], m: int, exact: Optional[float] = None, noise_floor: float = 1e-12
) -> ConvergenceEstimate:
    """Empirical order of convergence under grid doubling.

    With a known ``exact`` value the errors of ``compute(m)`` and ``compute(2m)`` give
    :math:`p = \\log_2(e_m / e_{2m})`. Otherwise three runs ``m, 2m, 4m`` are compared
    Richardson-style through successive differences.

    :param compute: The quantity as a function of the grid parameter
    :param m: The coarsest grid parameter
    :param exact: The exact value, when known
    :param noise_floor: Errors below this (relative to the values) leave the order undefined
    """
    if exact is not None:
        values: Tuple[float, ...] = (compute(m), compute(2 * m))
        errors: Tuple[float, ...] = tuple(abs(v - exact) for v in values)
    else:
        values = (compute(m), compute(2 * m), compute(4 * m))
        errors = (abs(values[0] - values[1]), abs(values[1] - values[2]))

    floor = noise_floor * max(1.0, *(abs(v) for v in values))
    if min(errors) <= floor:
        logger.warning("Convergence order undefined: errors %s at noise floor %.3g", errors, floor)
        return ConvergenceEstimate(None, values, errors)
    return ConvergenceEstimate(math.log2(errors[0] / errors[1]), values, errors)
