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

"""Permutation signs, wedge products and a finite-difference exterior derivative.

Forms are handled two ways. Pointwise they are evaluators (:class:`AlternatingForm`), which
is how frame-defined forms are naturally given. Where a form has to be differentiated it is
sampled on the coordinate basis into a :class:`FormField` of coefficients.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from itertools import combinations
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .exceptions import FrameError, StepSizeError
from .metric import STEP_FACTOR, central_difference
from .types import Array, Point, Vector, VectorTuple

logger = logging.getLogger(__name__)

__all__ = [
    "perm_sign",
    "epsilon_move_to_slot",
    "splice_top_index",
    "AlternatingForm",
    "constant_form",
    "covector",
    "wedge",
    "wedge_eval",
    "wedge_covectors",
    "FormField",
    "coordinate_form",
    "numeric_d",
    "numeric_d_field",
]


def perm_sign(indices: Sequence[int]) -> int:
    """Sign of the permutation sorting ``indices``, or 0 if a value repeats.

    Example:
        >>> perm_sign((1, 2, 3)), perm_sign((2, 1, 3)), perm_sign((1, 1, 2))
        (1, -1, 0)

    """
    values = list(indices)
    if len(set(values)) != len(values):
        return 0
    inversions = sum(1 for a, b in combinations(values, 2) if a > b)
    return -1 if inversions % 2 else 1


def splice_top_index(indices: Sequence[int], r: int) -> Tuple[int, ...]:
    """Insert ``n = len(indices) + 1`` right after slot ``r`` (``r = 0`` puts it first)."""
    values = tuple(indices)
    return values[:r] + (len(values) + 1,) + values[r:]


def epsilon_move_to_slot(indices: Sequence[int], r: int) -> int:
    """Sign of a permutation of ``1..n-1`` with ``n`` spliced in right after slot ``r``.

    Moving ``n`` from the end to position ``r + 1`` takes ``n - 1 - r`` transpositions, so the
    result is :math:`(-1)^{n-1-r}` times the sign of ``indices``.

    :param indices: A permutation of ``1..n-1``
    :param r: The slot after which ``n`` is inserted, ``0 <= r <= n-1``

    Example:
        >>> epsilon_move_to_slot((2, 1), 1)
        1

    Raises :class:`ValueError` if ``indices`` is not a permutation or ``r`` is out of range.
    """
    values = tuple(indices)
    n = len(values) + 1
    if sorted(values) != list(range(1, n)):
        raise ValueError(f"{values} is not a permutation of 1..{n - 1}")
    if not 0 <= r <= n - 1:
        raise ValueError(f"Slot {r} out of range 0..{n - 1}")
    return (-1) ** (n - 1 - r) * perm_sign(values)


@dataclass(frozen=True)
class AlternatingForm:
    """A ``degree``-form at a fixed point, given by how it evaluates on tangent vectors."""

    degree: int
    evaluate: Callable[[VectorTuple], float]

    def __call__(self, *vectors: Vector) -> float:
        if len(vectors) != self.degree:
            raise FrameError(f"A {self.degree}-form takes {self.degree} vectors, got {len(vectors)}")
        return float(self.evaluate(vectors))


def constant_form(value: float) -> AlternatingForm:
    """The 0-form (a number); wedging with it scales."""
    return AlternatingForm(0, lambda _: value)


def covector(components: Array) -> AlternatingForm:
    """The 1-form ``v -> components · v``."""
    components = np.asarray(components, dtype=float)
    return AlternatingForm(1, lambda vectors: float(components @ np.asarray(vectors[0])))


def wedge_eval(lam: AlternatingForm, phi: AlternatingForm, vectors: VectorTuple) -> float:
    """Evaluate :math:`\\lambda \\wedge \\phi` on ``k + l`` vectors by the shuffle sum.

    The sum runs over increasing positions :math:`i_1 < \\dots < i_k` for ``lam`` and the
    increasing complement for ``phi``, each term signed by the shuffle permutation. With
    this normalisation :math:`\\theta^1 \\wedge \\theta^2 (e_1, e_2) = 1`.

    :param lam: A ``k``-form
    :param phi: An ``l``-form
    :param vectors: ``k + l`` tangent vectors

    Raises :class:`pyquermass.exceptions.FrameError` if the tuple length is not ``k + l``.
    """
    k, total_degree = lam.degree, lam.degree + phi.degree
    if len(vectors) != total_degree:
        raise FrameError(f"Wedge of degree {total_degree} takes {total_degree} vectors, got {len(vectors)}")

    total = 0.0
    for first in combinations(range(total_degree), k):
        rest = tuple(i for i in range(total_degree) if i not in first)
        total += (
            perm_sign(first + rest)
            * lam(*(vectors[i] for i in first))
            * phi(*(vectors[i] for i in rest))
        )
    return total


def wedge(*forms: AlternatingForm) -> AlternatingForm:
    """The wedge product of the given forms, evaluated by nested :func:`wedge_eval`."""
    if not forms:
        return constant_form(1.0)

    def pair(lam: AlternatingForm, phi: AlternatingForm) -> AlternatingForm:
        return AlternatingForm(lam.degree + phi.degree, lambda vectors: wedge_eval(lam, phi, vectors))

    return reduce(pair, forms)


def wedge_covectors(covectors: Array, vectors: VectorTuple) -> float:
    """Evaluate a wedge of 1-forms as :math:`\\det[\\alpha_p(v_m)]`.

    :param covectors: ``(k, n)`` array, one 1-form per row
    :param vectors: ``k`` tangent vectors
    """
    covectors = np.atleast_2d(np.asarray(covectors, dtype=float))
    if covectors.shape[0] != len(vectors):
        raise FrameError(f"Wedge of {covectors.shape[0]} 1-forms takes as many vectors, got {len(vectors)}")
    if not len(vectors):
        return 1.0
    return float(np.linalg.det(covectors @ np.column_stack(vectors)))


@dataclass(frozen=True)
class FormField:
    """A ``degree``-form field given by coordinate coefficients.

    ``coefficients(x)[p]`` is the coefficient of :math:`dx^{I_p}` where ``I_p`` is the
    ``p``-th increasing multi-index in :attr:`multi_indices` (``itertools.combinations``
    order).
    """

    degree: int
    dim: int
    coefficients: Callable[[Point], Array]
    lower: Array
    upper: Array

    @property
    def multi_indices(self) -> List[Tuple[int, ...]]:
        return list(combinations(range(self.dim), self.degree))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.upper) - np.asarray(self.lower)))

    def at(self, x: Point) -> AlternatingForm:
        """The form at ``x`` as an evaluator."""
        return coordinate_form(self.degree, self.dim, np.asarray(self.coefficients(x), dtype=float))

    @classmethod
    def from_evaluator(
        cls, degree: int, dim: int, form_at: Callable[[Point], AlternatingForm], lower: Array, upper: Array
    ) -> "FormField":
        """Sample a pointwise form on coordinate basis tuples.

        :param degree: Degree of the sampled form
        :param dim: Dimension of the chart
        :param form_at: Builds the form at a point
        :param lower: Lower corner of the coordinate box
        :param upper: Upper corner of the coordinate box
        """
        basis = np.eye(dim)
        indices = list(combinations(range(dim), degree))

        def coefficients(x: Point) -> Array:
            form = form_at(np.asarray(x, dtype=float))
            return np.array([form(*(basis[i] for i in index)) for index in indices])

        return cls(degree, dim, coefficients, np.asarray(lower, dtype=float), np.asarray(upper, dtype=float))


def coordinate_form(degree: int, dim: int, coefficients: Array) -> AlternatingForm:
    """Evaluator of :math:`\\sum_I c_I\\, dx^I` at one point."""
    indices = list(combinations(range(dim), degree))

    def evaluate(vectors: VectorTuple) -> float:
        if degree == 0:
            return float(coefficients[0])
        V = np.column_stack(vectors)
        return float(sum(c * np.linalg.det(V[list(index), :]) for c, index in zip(coefficients, indices)))

    return AlternatingForm(degree, evaluate)


def _d_coefficients(field: FormField, x: Point, h: float, richardson: bool) -> Array:
    if not (np.all(x - h >= field.lower) and np.all(x + h <= field.upper)):
        raise StepSizeError(f"Point {x.tolist()} is closer than the step {h:g} to the boundary of the form's domain")

    dc = central_difference(field.coefficients, x, h)
    if richardson:
        dc = (4.0 * central_difference(field.coefficients, x, 0.5 * h) - dc) / 3.0

    source = {index: p for p, index in enumerate(field.multi_indices)}
    targets = list(combinations(range(field.dim), field.degree + 1))
    result = np.zeros(len(targets))
    for q, target in enumerate(targets):
        for a, m in enumerate(target):
            result[q] += (-1) ** a * dc[m, source[target[:a] + target[a + 1 :]]]
    return result


def numeric_d(field: FormField, x: Point, h: float = 0.0, richardson: bool = False) -> AlternatingForm:
    """Exterior derivative of a form field at ``x`` by central differences of its coefficients.

    Uses :math:`(d\\omega)_J = \\sum_a (-1)^a \\partial_{j_a} c_{J \\setminus j_a}` with error
    :math:`O(h^2)`, or :math:`O(h^4)` with Richardson extrapolation.

    :param field: The form field to differentiate
    :param x: Interior point
    :param h: Step, defaults to ``1e-4`` times the diameter of the field's domain
    :param richardson: Combine steps ``h`` and ``h/2`` to cancel the leading error term

    Raises :class:`pyquermass.exceptions.StepSizeError` if ``x`` is within ``h`` of the boundary.
    """
    x = np.asarray(x, dtype=float)
    h = h or STEP_FACTOR * field.diameter
    logger.debug("numeric_d of a %d-form at %s with step %g", field.degree, x, h)
    return coordinate_form(field.degree + 1, field.dim, _d_coefficients(field, x, h, richardson))


def numeric_d_field(field: FormField, h: float = 0.0, richardson: bool = False) -> FormField:
    """The finite-difference exterior derivative as a form field of its own."""
    h = h or STEP_FACTOR * field.diameter
    return FormField(
        field.degree + 1,
        field.dim,
        lambda x: _d_coefficients(field, np.asarray(x, dtype=float), h, richardson),
        field.lower,
        field.upper,
    )
