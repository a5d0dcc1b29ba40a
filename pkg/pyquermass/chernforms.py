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

"""Chern-type forms of a level-set foliation and the curvature corrections of their derivative.

For a principal frame :math:`e_1, \\dots, e_n` with dual forms :math:`\\theta^i` and
connection forms :math:`\\omega^i_n` the :math:`(n-1)`-form

.. math::

    \\Phi_r = \\sum \\varepsilon(i_1 \\dots i_{n-1})\\,
    \\omega^{i_1}_n \\wedge \\dots \\wedge \\omega^{i_r}_n \\wedge
    \\theta^{i_{r+1}} \\wedge \\dots \\wedge \\theta^{i_{n-1}}

sums over :math:`i_1 < \\dots < i_r` and the increasing complement. It restricts to
:math:`\\sigma_r(\\kappa)` times the volume form of the level set, and its exterior
derivative is

.. math::

    d\\Phi_r = (-1)^{n-1}(r+1)\\,\\Phi_{r+1} \\wedge \\theta^n
    + (-1)^{r-1} \\sum \\varepsilon(i)\\, \\omega^{i_1}_n \\wedge \\dots \\wedge
    \\omega^{i_{r-1}}_n \\wedge \\Omega^{i_r}_n \\wedge \\theta^{i_{r+1}} \\wedge \\dots,

with :math:`i_r` free in the second sum. Only the values of :math:`\\omega^i_n` on the
frame at the point are used:

.. math::

    \\omega^i_n(e_j) = \\kappa_i \\delta^i_j, \\qquad
    \\omega^i_n(e_n) = \\frac{\\nabla_{e_i} |\\nabla u|}{|\\nabla u|}.

Frame indices are 0-based in code; index ``n - 1`` is the normal.
"""

import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Tuple

import numpy as np

from .exceptions import FrameError
from .exterior import (
    AlternatingForm,
    FormField,
    covector,
    epsilon_move_to_slot,
    numeric_d,
    perm_sign,
    wedge,
    wedge_covectors,
    wedge_eval,
)
from .levelset import PrincipalFrame, ScalarField, principal_frame, sigma_r
from .metric import FrameCurvature, MetricChart, frame_curvature
from .types import Array, Point, VectorTuple

logger = logging.getLogger(__name__)

__all__ = [
    "SignTable",
    "PointwiseResidual",
    "principal_data",
    "connection_covectors",
    "omega_form",
    "curvature_form",
    "phi_eval",
    "phi_form",
    "phi_restricted_density",
    "dphi_formula_eval",
    "correction_A",
    "correction_B",
    "main_rhs_integrand",
    "phi_field",
    "dphi_residual",
    "cartan_normal_residual",
]


@dataclass(frozen=True)
class SignTable:
    """Every sign of the comparison formula's derivation, for dimension ``n`` and order ``r``.

    ``restriction`` is :math:`\\varepsilon(n\\,1 \\dots n-1)`, the density sign of
    :math:`\\Phi_r` against the level-set volume form. ``volume_term`` and
    ``curvature_term`` multiply the two terms of :math:`d\\Phi_r`. ``stokes`` turns
    :math:`d\\Phi_r(e_1, \\dots, e_n)` into the volume integrand. The correction signs are
    the products along the cascade, which reduce to ``-1`` for the A sum and ``+1`` for
    the B sum in every dimension.
    """

    n: int
    r: int

    @property
    def restriction(self) -> int:
        return epsilon_move_to_slot(tuple(range(1, self.n)), 0)

    @property
    def volume_term(self) -> int:
        return (-1) ** (self.n - 1)

    @property
    def curvature_term(self) -> int:
        return (-1) ** (self.r - 1)

    @property
    def stokes(self) -> int:
        return (-1) ** (self.n - 1)

    @property
    def correction_a(self) -> int:
        # moving n into slot r + 1 of the j-sequence
        return self.curvature_term * self.stokes * (-1) ** (self.n - self.r - 1)

    @property
    def correction_b(self) -> int:
        # as for A plus one swap of the last two Riemann indices
        return self.curvature_term * self.stokes * (-1) ** (self.n - self.r)


@dataclass(frozen=True)
class PointwiseResidual:
    """Finite-difference and closed-form values of :math:`d\\Phi_r` on the frame at one point."""

    x: Point
    numeric: float
    formula: float

    @property
    def residual(self) -> float:
        return abs(self.numeric - self.formula)


def principal_data(field: ScalarField, chart: MetricChart, x: Point) -> Tuple[PrincipalFrame, FrameCurvature]:
    """The principal frame at ``x`` and the curvature tensor in that frame."""
    frame = principal_frame(field, chart, x)
    return frame, frame_curvature(chart, frame.x, frame.vectors)


def connection_covectors(frame: PrincipalFrame) -> Array:
    """Coordinate components of :math:`\\omega^i_n`, one row per tangential index ``i``."""
    n = frame.dim
    ratios = frame.grad_norm_tangential / frame.grad_norm
    return frame.kappa[:, None] * frame.coframe[: n - 1] + ratios[:, None] * frame.coframe[n - 1][None, :]


def omega_form(frame: PrincipalFrame, i: int) -> AlternatingForm:
    """The 1-form :math:`\\omega^i_n` at the frame's point."""
    return covector(connection_covectors(frame)[i])


def curvature_form(frame: PrincipalFrame, curv: FrameCurvature, i: int) -> AlternatingForm:
    """The 2-form :math:`\\Omega^i_n` with :math:`\\Omega^i_n(e_l, e_k) = R_{lkin}`, extended bilinearly."""
    block = curv.R[:, :, i, frame.dim - 1]

    def evaluate(vectors: VectorTuple) -> float:
        a, b = frame.components(vectors).T
        return float(a @ block @ b)

    return AlternatingForm(2, evaluate)


def _splits(m: int, size: int) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    for first in combinations(range(m), size):
        yield first, tuple(i for i in range(m) if i not in first)


def phi_eval(frame: PrincipalFrame, r: int, vectors: VectorTuple) -> float:
    """Evaluate :math:`\\Phi_r` at the frame's point on ``n - 1`` tangent vectors.

    On the principal directions :math:`(e_1, \\dots, e_{n-1})` the value is
    :math:`\\sigma_r(\\kappa)`; :math:`\\Phi_r` vanishes for ``r >= n``.

    :param frame: Principal frame at the point
    :param r: Order, ``r >= 0``
    :param vectors: ``n - 1`` tangent vectors at the point

    Raises :class:`pyquermass.exceptions.FrameError` if the tuple does not hold ``n - 1`` vectors.
    """
    m = frame.dim - 1
    if len(vectors) != m:
        raise FrameError(f"Phi_{r} is a {m}-form, got {len(vectors)} vectors")
    if r < 0:
        raise ValueError(f"Phi_r needs r >= 0, got {r}")
    if r > m:
        return 0.0

    omega, theta = connection_covectors(frame), frame.coframe
    total = 0.0
    for upper, lower in _splits(m, r):
        rows = np.vstack([omega[list(upper)], theta[list(lower)]])
        total += perm_sign(upper + lower) * wedge_covectors(rows, vectors)
    return total


def phi_form(frame: PrincipalFrame, r: int) -> AlternatingForm:
    """:math:`\\Phi_r` at the frame's point as an :class:`AlternatingForm`."""
    return AlternatingForm(frame.dim - 1, lambda vectors: phi_eval(frame, r, vectors))


def phi_restricted_density(frame: PrincipalFrame, r: int) -> float:
    """Density of :math:`\\Phi_r` restricted to the level set against its volume form.

    The level set carries the volume form :math:`\\theta^n \\lrcorner\\, dvol_M`, which puts
    :math:`e_n` first, so the density is :math:`(-1)^{n-1}\\sigma_r(\\kappa)`.
    """
    return SignTable(frame.dim, r).restriction * sigma_r(frame.kappa, r)


def _curvature_sum(frame: PrincipalFrame, curv: FrameCurvature, r: int, vectors: VectorTuple) -> float:
    m = frame.dim - 1
    omega, theta = connection_covectors(frame), frame.coframe
    total = 0.0
    for free in range(m):
        rest = [i for i in range(m) if i != free]
        for upper in combinations(rest, r - 1):
            lower = tuple(i for i in rest if i not in upper)
            sign = perm_sign(upper + (free,) + lower)
            forms = [covector(omega[i]) for i in upper]
            forms.append(curvature_form(frame, curv, free))
            forms.extend(covector(theta[i]) for i in lower)
            total += sign * wedge(*forms)(*vectors)
    return total


def dphi_formula_eval(frame: PrincipalFrame, curv: FrameCurvature, r: int, vectors: VectorTuple) -> float:
    """Evaluate the closed form of :math:`d\\Phi_r` on ``n`` tangent vectors.

    The first term is :math:`(-1)^{n-1}(r+1)\\,\\Phi_{r+1} \\wedge \\theta^n` (absent for
    ``r = n - 1``); the curvature term needs at least one :math:`\\omega` slot and is only
    present for ``r >= 1``. Curvature 2-forms on arbitrary vectors are extended bilinearly
    from their frame values.

    :param frame: Principal frame at the point
    :param curv: Curvature tensor in that frame
    :param r: Order, ``0 <= r <= n - 1``
    :param vectors: ``n`` tangent vectors at the point

    Raises :class:`pyquermass.exceptions.FrameError` if the tuple does not hold ``n`` vectors.
    """
    n = frame.dim
    if len(vectors) != n:
        raise FrameError(f"d Phi_{r} is an {n}-form, got {len(vectors)} vectors")
    signs = SignTable(n, r)

    volume = 0.0
    if r + 1 <= n - 1:
        normal = covector(frame.coframe[n - 1])
        volume = signs.volume_term * (r + 1) * wedge_eval(phi_form(frame, r + 1), normal, vectors)

    curvature = 0.0
    if r >= 1:
        curvature = signs.curvature_term * _curvature_sum(frame, curv, r, vectors)

    logger.debug("d Phi_%d at %s: volume term %.12g, curvature term %.12g", r, frame.x, volume, curvature)
    return volume + curvature


def correction_A(frame: PrincipalFrame, curv: FrameCurvature, r: int) -> float:
    """The sum :math:`-\\sum \\kappa_{i_1} \\cdots \\kappa_{i_{r-1}} K_{i_r n}`.

    Runs over :math:`i_1 < \\dots < i_{r-1}` and a free :math:`i_r`, all distinct tangential
    indices. Empty, hence zero, for ``r < 1``.
    """
    if r < 1:
        return 0.0
    m = frame.dim - 1
    total = 0.0
    for free in range(m):
        rest = [i for i in range(m) if i != free]
        for upper in combinations(rest, r - 1):
            total += float(np.prod(frame.kappa[list(upper)])) * curv.K[free, m]
    return SignTable(frame.dim, r).correction_a * total


def correction_B(frame: PrincipalFrame, curv: FrameCurvature, r: int) -> float:
    """The sum :math:`\\frac{1}{|\\nabla u|}\\sum \\kappa_{i_1} \\cdots \\kappa_{i_{r-2}}\\,
    \\nabla_{e_{i_{r-1}}}|\\nabla u|\\, R_{i_r i_{r-1} i_r n}`.

    Runs over :math:`i_1 < \\dots < i_{r-2}` and free :math:`i_{r-1}, i_r`, all distinct
    tangential indices. Empty, hence zero, for ``r < 2``.
    """
    if r < 2:
        return 0.0
    m = frame.dim - 1
    total = 0.0
    for gradient_index in range(m):
        for free in range(m):
            if free == gradient_index:
                continue
            rest = [i for i in range(m) if i not in (gradient_index, free)]
            weight = frame.grad_norm_tangential[gradient_index] * curv.R[free, gradient_index, free, m]
            for upper in combinations(rest, r - 2):
                total += float(np.prod(frame.kappa[list(upper)])) * weight
    return SignTable(frame.dim, r).correction_b * total / frame.grad_norm


def main_rhs_integrand(frame: PrincipalFrame, curv: FrameCurvature, r: int) -> float:
    """Volume integrand :math:`(r+1)\\sigma_{r+1}(\\kappa) + A + B` of the comparison formula."""
    return (r + 1) * sigma_r(frame.kappa, r + 1) + correction_A(frame, curv, r) + correction_B(frame, curv, r)


def phi_field(field: ScalarField, chart: MetricChart, r: int) -> FormField:
    """:math:`\\Phi_r` as a coordinate form field, rebuilding the principal frame at every point."""
    return FormField.from_evaluator(
        chart.dim - 1,
        chart.dim,
        lambda x: phi_form(principal_frame(field, chart, x), r),
        chart.lower,
        chart.upper,
    )


def dphi_residual(
    field: ScalarField, chart: MetricChart, r: int, x: Point, h: float = 0.0, richardson: bool = False
) -> PointwiseResidual:
    """Compare the finite-difference exterior derivative of :math:`\\Phi_r` with :func:`dphi_formula_eval`.

    Both sides are evaluated on the principal frame at ``x``.

    :param field: The scalar field ``u``
    :param chart: The chart it lives in
    :param r: Order of the form
    :param x: Interior point, further than ``h`` from the chart boundary
    :param h: Finite-difference step, defaults to that of :func:`pyquermass.exterior.numeric_d`
    :param richardson: Use Richardson extrapolation in the finite differences

    Raises :class:`pyquermass.exceptions.StepSizeError` if ``x`` is too close to the boundary.
    """
    frame, curv = principal_data(field, chart, x)
    numeric = numeric_d(phi_field(field, chart, r), frame.x, h, richardson)(*frame.vectors)
    return PointwiseResidual(frame.x, numeric, dphi_formula_eval(frame, curv, r, frame.vectors))


def cartan_normal_residual(
    field: ScalarField, chart: MetricChart, x: Point, h: float = 0.0, richardson: bool = False
) -> float:
    """Largest deviation of :math:`d\\theta^n` from :math:`-\\sum_i \\theta^i \\wedge \\omega^i_n` on frame pairs.

    The normal structure equation only involves the connection values the principal frame
    determines, unlike those of the tangential :math:`\\theta^i`.
    """
    n = chart.dim
    frame = principal_frame(field, chart, x)
    # theta^n = du / |grad u|
    normal_field = FormField(
        1, n, lambda y: field.gradient(y, chart.step) / field.gradient_norm(chart, y), chart.lower, chart.upper
    )
    d_normal = numeric_d(normal_field, frame.x, h, richardson)
    omega = connection_covectors(frame)

    residual = 0.0
    for a, b in combinations(range(n), 2):
        va, vb = frame.e[:, a], frame.e[:, b]
        rhs = -sum(
            wedge_eval(covector(frame.coframe[i]), covector(omega[i]), (va, vb)) for i in range(n - 1)
        )
        residual = max(residual, abs(d_normal(va, vb) - rhs))
    return residual
