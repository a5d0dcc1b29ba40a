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

"""Metric, Levi-Civita connection and curvature of a single coordinate chart.

Curvature follows the sign convention

.. math::

    R(X, Y)Z = \\nabla_Y \\nabla_X Z - \\nabla_X \\nabla_Y Z + \\nabla_{[X, Y]} Z,

the negative of the more common :math:`\\nabla_X\\nabla_Y - \\nabla_Y\\nabla_X` convention, so
that the sectional curvature is :math:`K(x, y) = \\langle R(X, Y)X, Y\\rangle` and the unit
sphere has :math:`K = +1`.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .exceptions import DegenerateMetricError, FrameError, StepSizeError
from .types import Array, ArrayMap, Point, Vector

logger = logging.getLogger(__name__)

__all__ = [
    "MetricChart",
    "FrameCurvature",
    "central_difference",
    "christoffel",
    "christoffel_derivative",
    "riemann_coord",
    "frame_curvature",
    "check_orthonormal",
    "orthonormalize",
    "inner",
]

STEP_FACTOR = 1e-4
"""Default finite-difference step as a fraction of the chart diameter."""

SECOND_STEP_FACTOR = 10.0
"""Outer step of nested second differences, relative to the inner step."""

FRAME_CONTRACTION = ["einsum_path", (0, 1), (0, 3), (0, 2), (0, 1)]
"""Fixed pairwise order for moving a rank-4 tensor into a frame, one index at a time.

Each step contracts the running intermediate, which einsum appends last, with the next frame matrix.
"""


def central_difference(f: ArrayMap, x: Point, step: float) -> Array:
    """Central differences of ``f`` in every coordinate direction.

    Returns an array whose leading axis is the differentiation direction, so that
    ``result[k] ≈ ∂_k f(x)`` with error :math:`O(h^2)`.

    Raises :class:`pyquermass.exceptions.StepSizeError` when the step vanishes at the scale of ``x``.
    """
    x = np.asarray(x, dtype=float)
    scale = max(1.0, float(np.max(np.abs(x))))
    if not step > 0 or scale + step == scale:
        raise StepSizeError(f"Finite-difference step {step!r} underflows at point {x.tolist()}")

    columns = []
    for k in range(x.shape[0]):
        offset = np.zeros_like(x)
        offset[k] = step
        columns.append((np.asarray(f(x + offset)) - np.asarray(f(x - offset))) / (2.0 * step))
    return np.stack(columns)


@dataclass(frozen=True)
class MetricChart:
    """Coordinate description of a Riemannian manifold covered by one chart.

    :param dim: The manifold dimension ``n >= 2``
    :param lower: Lower corner of the coordinate box
    :param upper: Upper corner of the coordinate box
    :param g: Metric components, a map from a point to a symmetric ``(n, n)`` matrix
    :param dg: Optional analytic first derivatives, ``dg(x)[k, i, j] = ∂_k g_ij``
    :param d2g: Optional analytic second derivatives, ``d2g(x)[l, k, i, j] = ∂_l ∂_k g_ij``
    :param name: Label used in log messages
    """

    dim: int
    lower: Array
    upper: Array
    g: ArrayMap
    dg: Optional[ArrayMap] = None
    d2g: Optional[ArrayMap] = None
    name: str = "chart"
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError(f"Chart dimension must be at least 2, got {self.dim}")
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
            raise ValueError(f"Chart box corners must have shape ({self.dim},)")
        if np.any(self.upper <= self.lower):
            raise ValueError(f"Empty chart box {self.lower.tolist()} .. {self.upper.tolist()}")
        if self.dg is None or self.d2g is None:
            logger.debug("Chart %s falls back to finite-difference metric derivatives", self.name)

    @property
    def diameter(self) -> float:
        """Euclidean diameter of the coordinate box."""
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def step(self) -> float:
        """Default finite-difference step, ``1e-4`` times the diameter."""
        return STEP_FACTOR * self.diameter

    @property
    def analytic(self) -> bool:
        """Whether both metric derivatives are supplied analytically."""
        return self.dg is not None and self.d2g is not None

    @property
    def tolerance(self) -> float:
        """Agreement expected from curvature quantities of this chart."""
        return self.tolerances.analytic if self.analytic else self.tolerances.finite_difference

    def contains(self, x: Point, margin: float = 0.0) -> bool:
        """Whether ``x`` lies in the coordinate box shrunk by ``margin``."""
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower + margin) and np.all(x <= self.upper - margin))

    def metric(self, x: Point) -> Array:
        """Validated metric components at ``x``.

        Raises :class:`pyquermass.exceptions.DegenerateMetricError` if the matrix is not
        symmetric, not positive definite, or worse conditioned than the tolerance allows.
        """
        g = np.asarray(self.g(np.asarray(x, dtype=float)), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise DegenerateMetricError(f"Metric of {self.name} has shape {g.shape}, expected {(self.dim, self.dim)}")
        if not np.all(np.isfinite(g)):
            raise DegenerateMetricError(f"Metric of {self.name} is not finite at {np.asarray(x).tolist()}")
        scale = max(1.0, float(np.max(np.abs(g))))
        if np.max(np.abs(g - g.T)) > self.tolerances.symmetry * scale:
            raise DegenerateMetricError(f"Metric of {self.name} is not symmetric at {np.asarray(x).tolist()}")
        eigenvalues = np.linalg.eigvalsh(g)
        if eigenvalues[0] <= 0:
            raise DegenerateMetricError(
                f"Metric of {self.name} is not positive definite at {np.asarray(x).tolist()}: "
                f"smallest eigenvalue {eigenvalues[0]:g}"
            )
        if eigenvalues[-1] / eigenvalues[0] > self.tolerances.condition_number:
            raise DegenerateMetricError(
                f"Metric of {self.name} is singular at {np.asarray(x).tolist()}: "
                f"condition number {eigenvalues[-1] / eigenvalues[0]:g}"
            )
        return g

    def inverse(self, x: Point) -> Array:
        """Inverse metric :math:`g^{ij}` at ``x``."""
        return np.linalg.inv(self.metric(x))

    def metric_derivative(self, x: Point) -> Array:
        """First derivatives ``[k, i, j] = ∂_k g_ij``, analytic when available."""
        x = np.asarray(x, dtype=float)
        if self.dg is not None:
            return np.asarray(self.dg(x), dtype=float)
        return central_difference(self.g, x, self.step)

    def metric_second_derivative(self, x: Point) -> Array:
        """Second derivatives ``[l, k, i, j] = ∂_l ∂_k g_ij``, analytic when available.

        Without analytic second derivatives these are central differences of the first
        derivatives, with an outer step ten times the inner one.
        """
        x = np.asarray(x, dtype=float)
        if self.d2g is not None:
            return np.asarray(self.d2g(x), dtype=float)
        return central_difference(self.metric_derivative, x, SECOND_STEP_FACTOR * self.step)


@dataclass(frozen=True)
class FrameCurvature:
    """Riemann tensor components in an orthonormal frame.

    ``R[l, k, i, j]`` is :math:`\\langle R(e_l, e_k)e_i, e_j\\rangle` and
    ``K[i, j] = R[i, j, i, j]`` the sectional curvature of the plane spanned by
    :math:`e_i, e_j` (zero on the diagonal).
    """

    R: Array
    K: Array

    @classmethod
    def from_tensor(cls, R: Array) -> "FrameCurvature":
        """Wrap frame components, reading the sectional curvatures off the diagonal pairs."""
        n = R.shape[0]
        K = np.array([[R[i, j, i, j] for j in range(n)] for i in range(n)])
        return cls(R=R, K=K)

    @property
    def dim(self) -> int:
        return int(self.R.shape[0])

    def symmetry_residuals(self) -> Dict[str, float]:
        """Largest violation of each algebraic curvature symmetry.

        Keys are ``first_pair`` (:math:`R_{ijkl} + R_{jikl}`), ``second_pair``
        (:math:`R_{ijkl} + R_{ijlk}`), ``pair_exchange`` (:math:`R_{ijkl} - R_{klij}`)
        and ``bianchi`` (:math:`R_{ijkl} + R_{jkil} + R_{kijl}`).
        """
        R = self.R
        return {
            "first_pair": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
            "second_pair": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)))),
            "pair_exchange": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)))),
            "bianchi": float(
                np.max(np.abs(R + np.einsum("jkil->ijkl", R) + np.einsum("kijl->ijkl", R)))
            ),
        }


def christoffel(chart: MetricChart, x: Point) -> Array:
    """Christoffel symbols of the Levi-Civita connection, ``[k, i, j] = Γ^k_ij``.

    :param chart: The chart to evaluate in
    :param x: A point of the chart

    Raises :class:`pyquermass.exceptions.DegenerateMetricError` on a singular metric.
    """
    return _christoffel(chart.inverse(x), chart.metric_derivative(x))


def _lowered_christoffel(dg: Array) -> Array:
    # [l, i, j] = ∂_i g_lj + ∂_j g_li - ∂_l g_ij
    return np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg


def _christoffel(ginv: Array, dg: Array) -> Array:
    return 0.5 * np.einsum("kl,lij->kij", ginv, _lowered_christoffel(dg))


def _christoffel_derivative(ginv: Array, dg: Array, d2g: Array) -> Array:
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dlowered = np.einsum("milj->mlij", d2g) + np.einsum("mjli->mlij", d2g) - d2g
    return 0.5 * (
        np.einsum("mkl,lij->mkij", dginv, _lowered_christoffel(dg)) + np.einsum("kl,mlij->mkij", ginv, dlowered)
    )


def christoffel_derivative(chart: MetricChart, x: Point) -> Array:
    """Coordinate derivatives of the Christoffel symbols, ``[m, k, i, j] = ∂_m Γ^k_ij``."""
    return _christoffel_derivative(chart.inverse(x), chart.metric_derivative(x), chart.metric_second_derivative(x))


def riemann_coord(chart: MetricChart, x: Point) -> Array:
    """Coordinate components ``[a, b, c, d] = ⟨R(∂_a, ∂_b)∂_c, ∂_d⟩`` in this module's sign convention.

    :param chart: The chart to evaluate in
    :param x: A point of the chart

    Raises :class:`pyquermass.exceptions.DegenerateMetricError` on a singular metric or
    :class:`pyquermass.exceptions.StepSizeError` when finite-difference steps underflow.
    """
    x = np.asarray(x, dtype=float)
    g = chart.metric(x)
    ginv = np.linalg.inv(g)
    dg = chart.metric_derivative(x)
    gamma = _christoffel(ginv, dg)
    dgamma = _christoffel_derivative(ginv, dg, chart.metric_second_derivative(x))

    # usual convention: (∇_i∇_j - ∇_j∇_i) ∂_k = std[l, k, i, j] ∂_l
    std = (
        np.einsum("iljk->lkij", dgamma)
        - np.einsum("jlik->lkij", dgamma)
        + np.einsum("lim,mjk->lkij", gamma, gamma)
        - np.einsum("ljm,mik->lkij", gamma, gamma)
    )
    return -np.einsum("dl,lcab->abcd", g, std)


def inner(chart: MetricChart, x: Point, v: Vector, w: Vector) -> float:
    """Metric inner product of two tangent vectors at ``x``."""
    return float(np.asarray(v) @ chart.metric(x) @ np.asarray(w))


def check_orthonormal(chart: MetricChart, x: Point, frame: Sequence[Vector], tol: Optional[float] = None) -> Array:
    """Return the frame as the columns of an ``(n, n)`` matrix after checking orthonormality.

    Raises :class:`pyquermass.exceptions.FrameError` if the Gram matrix deviates from the
    identity by more than ``tol`` (default: the chart's orthonormality tolerance).
    """
    E = np.column_stack([np.asarray(v, dtype=float) for v in frame])
    if E.shape != (chart.dim, chart.dim):
        raise FrameError(f"Expected {chart.dim} frame vectors of length {chart.dim}, got matrix of shape {E.shape}")
    tol = chart.tolerances.orthonormality if tol is None else tol
    deviation = float(np.max(np.abs(E.T @ chart.metric(x) @ E - np.eye(chart.dim))))
    if deviation > tol:
        raise FrameError(f"Frame at {np.asarray(x).tolist()} is not orthonormal: Gram deviation {deviation:g}")
    return E


def orthonormalize(chart: MetricChart, x: Point, vectors: Sequence[Vector]) -> Array:
    """Gram-Schmidt with respect to the metric at ``x``; returns the new vectors as columns.

    Raises :class:`pyquermass.exceptions.FrameError` when the vectors are linearly dependent.
    """
    g = chart.metric(x)
    basis: list = []
    for v in vectors:
        w = np.asarray(v, dtype=float).copy()
        for b in basis:
            w -= (b @ g @ w) * b
        norm = np.sqrt(w @ g @ w)
        if norm < 1e-12:
            raise FrameError(f"Vectors at {np.asarray(x).tolist()} are linearly dependent")
        basis.append(w / norm)
    return np.column_stack(basis)


def frame_curvature(chart: MetricChart, x: Point, frame: Sequence[Vector]) -> FrameCurvature:
    """Riemann tensor and sectional curvatures in an orthonormal frame.

    :param chart: The chart to evaluate in
    :param x: A point of the chart
    :param frame: ``n`` orthonormal tangent vectors at ``x``

    Raises :class:`pyquermass.exceptions.FrameError` if the frame is not orthonormal.
    """
    E = check_orthonormal(chart, x, frame)
    R = np.einsum("abcd,ai,bj,ck,dl->ijkl", riemann_coord(chart, x), E, E, E, E, optimize=FRAME_CONTRACTION)
    return FrameCurvature.from_tensor(R)
