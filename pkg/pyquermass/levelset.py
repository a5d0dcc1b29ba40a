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

"""Principal frames of the level sets of a scalar field, and their mean curvatures."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

from .exceptions import CriticalPointError, NumericalError
from .metric import MetricChart, central_difference, christoffel
from .quadrature import LevelSurfacePatch, QuadratureResult, surface_integral
from .types import Array, ArrayMap, Point, ScalarMap, Vector

logger = logging.getLogger(__name__)

__all__ = [
    "ScalarField",
    "PrincipalFrame",
    "covariant_hessian",
    "principal_frame",
    "sigma_r",
    "sigma_r_newton",
    "total_mean_curvature",
]


@dataclass(frozen=True)
class ScalarField:
    """The function ``u`` whose level sets are studied, with its coordinate derivatives.

    :param u: Values, expected in ``[0, 1]`` on the region of interest
    :param du: Optional analytic coordinate gradient ``∂_i u``
    :param d2u: Optional analytic coordinate Hessian ``∂_i ∂_j u``
    :param grad_scale: Typical size of ``|∇u|``, scales the critical-point floor
    """

    u: ScalarMap
    du: Optional[ArrayMap] = None
    d2u: Optional[ArrayMap] = None
    grad_scale: float = 1.0

    def value(self, x: Point) -> float:
        return float(self.u(np.asarray(x, dtype=float)))

    def gradient(self, x: Point, step: float) -> Array:
        """Coordinate gradient, by central differences with ``step`` when not analytic."""
        x = np.asarray(x, dtype=float)
        if self.du is not None:
            return np.asarray(self.du(x), dtype=float)
        return central_difference(lambda y: np.array(self.u(y)), x, step)

    def hessian(self, x: Point, step: float, tol: float = 1e-10) -> Array:
        """Coordinate Hessian ``∂_i ∂_j u``.

        Raises :class:`pyquermass.exceptions.NumericalError` if an analytic Hessian is not
        symmetric within ``tol`` (relative to its size).
        """
        x = np.asarray(x, dtype=float)
        if self.d2u is None:
            H = central_difference(lambda y: self.gradient(y, step), x, step)
            return 0.5 * (H + H.T)
        H = np.asarray(self.d2u(x), dtype=float)
        if np.max(np.abs(H - H.T)) > tol * max(1.0, float(np.max(np.abs(H)))):
            raise NumericalError(f"Analytic Hessian is not symmetric at {x.tolist()}")
        return H

    def gradient_norm(self, chart: MetricChart, x: Point) -> float:
        """:math:`|\\nabla u|` at ``x`` with respect to the chart's metric."""
        du = self.gradient(x, chart.step)
        return float(np.sqrt(du @ chart.inverse(x) @ du))


@dataclass(frozen=True)
class PrincipalFrame:
    """The principal frame of the level set of ``u`` through ``x``.

    Columns ``e[:, 0] .. e[:, n-2]`` are principal directions with curvatures ``kappa``
    (ascending), ``e[:, n-1]`` is the unit normal :math:`\\nabla u / |\\nabla u|`. The
    frame is orthonormal and positively oriented. ``coframe`` holds the dual 1-forms
    :math:`\\theta^i` as rows, ``grad_norm_tangential[i]`` is :math:`\\nabla_{e_i}|\\nabla u|`.
    """

    x: Point
    e: Array
    coframe: Array
    kappa: Array
    grad_norm: float
    grad_norm_tangential: Array

    @property
    def dim(self) -> int:
        return int(self.e.shape[0])

    @property
    def normal(self) -> Vector:
        return self.e[:, -1]

    @property
    def vectors(self) -> List[Vector]:
        """The frame vectors ``e_1 .. e_n`` in order."""
        return [self.e[:, i] for i in range(self.dim)]

    @property
    def tangential(self) -> List[Vector]:
        """The principal directions ``e_1 .. e_{n-1}``."""
        return self.vectors[:-1]

    def components(self, vectors: Sequence[Vector]) -> Array:
        """Frame components :math:`\\theta^i(v_m)` of the given vectors, as columns."""
        return self.coframe @ np.column_stack(vectors)


def covariant_hessian(field: ScalarField, chart: MetricChart, x: Point) -> Array:
    """Coordinate matrix of :math:`\\mathrm{Hess}\\,u(X, Y) = \\langle \\nabla_X \\nabla u, Y\\rangle`.

    Computed as :math:`\\partial_i\\partial_j u - \\Gamma^k_{ij}\\partial_k u`; the result is a
    symmetric bilinear form, ``v @ H @ w``.
    """
    x = np.asarray(x, dtype=float)
    du = field.gradient(x, chart.step)
    return field.hessian(x, chart.step, chart.tolerances.analytic) - np.einsum("kij,k->ij", christoffel(chart, x), du)


def principal_frame(field: ScalarField, chart: MetricChart, x: Point) -> PrincipalFrame:
    """Build the principal frame of the level set of ``u`` through ``x``.

    The shape operator :math:`S = \\mathrm{Hess}\\,u / |\\nabla u|` restricted to the tangent
    space of the level set is diagonalised in a metric-orthonormal basis of that space;
    if the assembled frame is negatively oriented the first principal direction is negated.
    Repeated curvatures get whatever eigenbasis the eigensolver returns.

    :param field: The scalar field ``u``
    :param chart: The chart ``x`` lives in
    :param x: A point of the chart

    Raises :class:`pyquermass.exceptions.CriticalPointError` if :math:`|\\nabla u|` is below the
    floor, or :class:`pyquermass.exceptions.NumericalError` if the eigensolver fails.
    """
    x = np.asarray(x, dtype=float)
    g = chart.metric(x)
    du = field.gradient(x, chart.step)
    grad = np.linalg.solve(g, du)
    norm = float(np.sqrt(du @ grad))
    floor = chart.tolerances.grad_floor * field.grad_scale
    if not norm >= floor:
        raise CriticalPointError(f"|grad u| = {norm:g} below floor {floor:g} at {x.tolist()}")
    normal = grad / norm

    try:
        L = np.linalg.cholesky(g)
        # metric-orthonormal basis of the normal's complement, via the whitened normal
        tangent = np.linalg.solve(L.T, null_space((L.T @ normal)[None, :]))
        H = covariant_hessian(field, chart, x)
        kappa, rotation = np.linalg.eigh(tangent.T @ H @ tangent / norm)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Could not diagonalise the shape operator at {x.tolist()}: {e}") from e

    frame = np.column_stack([tangent @ rotation, normal])
    if np.linalg.det(frame) * np.sqrt(np.linalg.det(g)) < 0:
        frame[:, 0] = -frame[:, 0]
    if not (np.all(np.isfinite(frame)) and np.all(np.isfinite(kappa))):
        raise NumericalError(f"Non-finite principal frame at {x.tolist()}")

    logger.debug("Principal frame at %s: kappa=%s |grad u|=%g", x, kappa, norm)
    return PrincipalFrame(
        x=x,
        e=frame,
        coframe=frame.T @ g,
        kappa=kappa,
        grad_norm=norm,
        grad_norm_tangential=frame[:, :-1].T @ H @ normal,
    )


def sigma_r(kappa: Sequence[float], r: int) -> float:
    """The ``r``-th elementary symmetric function of ``kappa``.

    By convention :math:`\\sigma_0 = 1` and :math:`\\sigma_r = 0` once ``r`` exceeds the
    number of values.

    Example:
        >>> sigma_r((2, 3), 1), sigma_r((2, 3), 0), sigma_r((2, 3), 5), sigma_r((1, 1, 1), 2)
        (5.0, 1.0, 0.0, 3.0)

    Raises :class:`ValueError` for negative ``r``.
    """
    if r < 0:
        raise ValueError(f"sigma_r needs r >= 0, got {r}")
    values = [float(k) for k in kappa]
    if r > len(values):
        return 0.0
    partial = np.zeros(r + 1)
    partial[0] = 1.0
    for value in values:
        for j in range(r, 0, -1):
            partial[j] += value * partial[j - 1]
    return float(partial[r])


def sigma_r_newton(kappa: Sequence[float], r: int) -> float:
    """:func:`sigma_r` through Newton's identities on power sums, used as a cross-check."""
    if r < 0:
        raise ValueError(f"sigma_r needs r >= 0, got {r}")
    values = np.asarray(kappa, dtype=float)
    if r > values.size:
        return 0.0
    power_sums = [float(np.sum(values**p)) for p in range(r + 1)]
    elementary = [1.0]
    for m in range(1, r + 1):
        elementary.append(sum((-1) ** (i - 1) * elementary[m - i] * power_sums[i] for i in range(1, m + 1)) / m)
    return elementary[r]


def total_mean_curvature(
    patch: LevelSurfacePatch,
    r: int,
    estimate_error: bool = True,
    frame_at: Optional[Callable[[Point], PrincipalFrame]] = None,
) -> QuadratureResult:
    """:math:`\\mathcal{M}_r(\\Gamma_t) = \\int_{\\Gamma_t} \\sigma_r(\\kappa)`, the total ``r``-th mean curvature.

    :param patch: Parametrization of the level set
    :param r: Order of the symmetric function
    :param estimate_error: Also integrate on a halved grid to estimate the error
    :param frame_at: Source of principal frames, e.g. a cache; :func:`principal_frame` when omitted

    Raises :class:`pyquermass.exceptions.ParametrizationError` on degenerate patches.
    """

    def integrand(x: Point) -> float:
        frame = principal_frame(patch.field, patch.chart, x) if frame_at is None else frame_at(x)
        return sigma_r(frame.kappa, r)

    result = surface_integral(patch, integrand, estimate_error=estimate_error)
    logger.debug("M_%d at t=%g: %.12g", r, patch.t, result.value)
    return result
