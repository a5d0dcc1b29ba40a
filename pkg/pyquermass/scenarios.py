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

"""Catalog of manifolds with foliating functions, and the verification pipelines run on them.

Every scenario is a single chart, a function ``u`` with ``u = 0`` on the inner and ``u = 1``
on the outer boundary of the region, and a parametrization of every level set. Polar
scenarios use the warped product metric

.. math::

    g = dr^2 + f(r)^2 \\left(d\\theta_1^2 + \\sin^2\\theta_1\\, d\\theta_2^2 + \\dots\\right)

in coordinates :math:`(r, \\theta_1, \\dots, \\theta_{n-2}, \\varphi)`, whose derivatives are
known in closed form.
"""

import logging
import math
import time
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb, gamma

from .chernforms import correction_B, dphi_residual, main_rhs_integrand, principal_data
from .config import DEFAULT_TOLERANCES, ScenarioSpec, Tolerances
from .exceptions import ConfigError, ParametrizationError, QuermassError, UnknownScenarioError
from .levelset import PrincipalFrame, ScalarField, principal_frame, total_mean_curvature
from .metric import MetricChart
from .quadrature import LevelSurfacePatch, refine_and_estimate, volume_integral
from .report import PointwiseRow, ProfileRow, VerifyRow, compare
from .types import Array, Point

logger = logging.getLogger(__name__)

__all__ = [
    "POINTWISE_STEP_FACTOR",
    "POINTWISE_NOISE_FLOOR",
    "SLOPE_WINDOW",
    "Warping",
    "NodeCache",
    "Scenario",
    "CATALOG",
    "builtin",
    "from_spec",
    "sphere_area",
    "warped_chart",
    "euclid_shell",
    "sphere_annulus",
    "hyperbolic_annulus",
    "ellipsoid_flat",
    "warped_tilted",
    "verify_main_identity",
    "verify_pointwise",
    "level_profile",
]

POINTWISE_STEP_FACTOR = 1e-3
"""Default step of the pointwise suite as a fraction of the chart diameter."""

POINTWISE_NOISE_FLOOR = 1e-9
"""Pointwise residuals below this are rounding dominated and pass without a measurable slope."""

SLOPE_WINDOW = 0.3
"""Largest admissible deviation of the observed finite-difference order from the expected one."""

POLE_MARGIN = 0.3
"""Distance of sampled points from coordinate poles and angular seams."""

ClosedForm = Callable[[int, float], Optional[float]]


def sphere_area(n: int) -> float:
    """Volume of the unit sphere :math:`S^{n-1} \\subset \\mathbb{R}^n`.

    Example:
        >>> round(sphere_area(3) / math.pi, 12), round(sphere_area(4) / math.pi**2, 12)
        (4.0, 2.0)

    """
    return float(2 * math.pi ** (n / 2) / gamma(n / 2))


@dataclass(frozen=True)
class Warping:
    """The warping function ``f`` of a warped product with its first two derivatives."""

    name: str
    f: Callable[[float], float]
    df: Callable[[float], float]
    d2f: Callable[[float], float]

    def radial_curvature(self, r: float) -> float:
        """Sectional curvature of planes containing :math:`\\partial_r`, :math:`-f''/f`."""
        return -self.d2f(r) / self.f(r)

    def tangential_curvature(self, r: float) -> float:
        """Sectional curvature of planes tangent to the spheres, :math:`(1 - f'^2)/f^2`."""
        return (1.0 - self.df(r) ** 2) / self.f(r) ** 2


FLAT = Warping("flat", lambda r: r, lambda r: 1.0, lambda r: 0.0)
ROUND = Warping("round", math.sin, math.cos, lambda r: -math.sin(r))
HYPERBOLIC = Warping("hyperbolic", math.sinh, math.cosh, math.sinh)
TILTED = Warping(
    "tilted", lambda r: r + 0.1 * math.sin(r), lambda r: 1.0 + 0.1 * math.cos(r), lambda r: -0.1 * math.sin(r)
)


def warped_chart(
    n: int, warping: Warping, r_min: float, r_max: float, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> MetricChart:
    """Polar chart of :math:`dr^2 + f(r)^2 g_{S^{n-1}}` on ``r_min <= r <= r_max`` with analytic derivatives.

    Each diagonal entry is :math:`h_i = f^2 \\prod_{1 \\le k < i} \\sin^2 x_k` for ``i >= 1``, so its
    logarithmic derivatives are :math:`2f'/f` in ``r`` and :math:`2\\cot x_k` in the angles
    before it.
    """

    def diagonal(x: Point) -> Array:
        h = np.ones(n)
        h[1:] = warping.f(x[0]) ** 2
        for i in range(2, n):
            h[i] = h[i - 1] * math.sin(x[i - 1]) ** 2
        return h

    def log_derivatives(x: Point) -> Tuple[Array, Array]:
        # L[k, i] = ∂_k log h_i, dL[k, i] = ∂_k ∂_k log h_i
        L, dL = np.zeros((n, n)), np.zeros((n, n))
        f, df, d2f = warping.f(x[0]), warping.df(x[0]), warping.d2f(x[0])
        L[0, 1:] = 2.0 * df / f
        dL[0, 1:] = 2.0 * (d2f * f - df**2) / f**2
        for k in range(1, n - 1):
            L[k, k + 1 :] = 2.0 / math.tan(x[k])
            dL[k, k + 1 :] = -2.0 / math.sin(x[k]) ** 2
        return L, dL

    def g(x: Point) -> Array:
        return np.diag(diagonal(x))

    def dg(x: Point) -> Array:
        h = diagonal(x)
        L, _ = log_derivatives(x)
        result = np.zeros((n, n, n))
        for i in range(n):
            result[:, i, i] = h[i] * L[:, i]
        return result

    def d2g(x: Point) -> Array:
        h = diagonal(x)
        L, dL = log_derivatives(x)
        result = np.zeros((n, n, n, n))
        for i in range(n):
            result[:, :, i, i] = h[i] * (np.outer(L[:, i], L[:, i]) + np.diag(dL[:, i]))
        return result

    lower = np.array([r_min] + [0.0] * (n - 2) + [0.0])
    upper = np.array([r_max] + [math.pi] * (n - 2) + [2.0 * math.pi])
    return MetricChart(n, lower, upper, g, dg, d2g, name=f"{warping.name}_polar_{n}", tolerances=tolerances)


def _key(x: Point) -> bytes:
    return np.asarray(x, dtype=float).tobytes()


class NodeCache:
    """Per-point geometry of one scenario, shared by the rows of every order ``r``.

    Level-set nodes keep their principal frame. Volume nodes keep the coarea factor
    :math:`1/|\\nabla u|` and :func:`pyquermass.chernforms.main_rhs_integrand` for every
    ``0 <= r < n``; the integrand vanishes for larger ``r``. Entries are keyed by the exact
    chart point, so only passes that revisit the same nodes share work.
    """

    def __init__(self, field: ScalarField, chart: MetricChart) -> None:
        self.field = field
        self.chart = chart
        self._frames: Dict[bytes, PrincipalFrame] = {}
        self._volume: Dict[bytes, Array] = {}

    def __len__(self) -> int:
        return len(self._frames) + len(self._volume)

    def frame(self, x: Point) -> PrincipalFrame:
        """The principal frame at ``x``."""
        key = _key(x)
        frame = self._frames.get(key)
        if frame is None:
            frame = self._frames[key] = principal_frame(self.field, self.chart, x)
        return frame

    def _volume_terms(self, x: Point) -> Array:
        key = _key(x)
        terms = self._volume.get(key)
        if terms is None:
            frame, curv = principal_data(self.field, self.chart, x)
            orders = [main_rhs_integrand(frame, curv, r) for r in range(self.chart.dim)]
            terms = self._volume[key] = np.array([1.0 / frame.grad_norm] + orders)
        return terms

    def coarea_weight(self, x: Point) -> float:
        """:math:`1/|\\nabla u|` at ``x``."""
        return float(self._volume_terms(x)[0])

    def rhs_integrand(self, x: Point, r: int) -> float:
        """:func:`pyquermass.chernforms.main_rhs_integrand` of order ``r`` at ``x``."""
        if r >= self.chart.dim:
            return 0.0
        return float(self._volume_terms(x)[r + 1])

    def clear(self) -> None:
        self._frames.clear()
        self._volume.clear()


@dataclass(frozen=True)
class Scenario:
    """A manifold, a foliating function and the parametrizations of its level sets.

    :param name: Catalog name
    :param params: Parameters the scenario was built with
    :param chart: The chart covering the region
    :param field: The function ``u``, ``0`` on the inner and ``1`` on the outer boundary
    :param patch_factory: Level set parametrization for a level ``t`` and a grid
    :param grid: Default quadrature grid of the level sets
    :param sampler: Draws interior points away from coordinate singularities
    :param closed_form: Exact :math:`\\mathcal{M}_r(\\Gamma_t)` where known, else ``None``
    :param description: One line summary
    :param symmetric: Rotationally symmetric with a radial ``u``, so the B correction vanishes
    """

    name: str
    params: Dict[str, Any]
    chart: MetricChart
    field: ScalarField
    patch_factory: Callable[[float, Tuple[int, ...]], LevelSurfacePatch]
    grid: Tuple[int, ...]
    sampler: Callable[[np.random.Generator, int], Array]
    closed_form: Optional[ClosedForm] = None
    description: str = ""
    symmetric: bool = False

    @property
    def dim(self) -> int:
        return self.chart.dim

    @property
    def label(self) -> str:
        return ScenarioSpec(name=self.name, params=self.params).label()

    @cached_property
    def cache(self) -> NodeCache:
        """Frames and integrands computed so far, reused by later rows on this scenario."""
        return NodeCache(self.field, self.chart)

    def patch(self, t: float, grid: Optional[Sequence[int]] = None) -> LevelSurfacePatch:
        """Parametrization of the level set ``u = t`` on ``grid``, the scenario default when omitted."""
        return self.patch_factory(t, self.grid if grid is None else tuple(grid))

    def sample_points(self, rng: np.random.Generator, count: int) -> Array:
        """``count`` interior chart points with ``0 <= u <= 1``, as rows."""
        return self.sampler(rng, count)

    def exact(self, r: int, t: float) -> Optional[float]:
        """Closed form :math:`\\mathcal{M}_r(\\Gamma_t)`, ``None`` where the scenario has none."""
        return None if self.closed_form is None else self.closed_form(r, t)


def _default_grid(n: int) -> Tuple[int, ...]:
    if n == 2:
        return (32,)
    polar = 16 if n == 3 else 8
    return (polar,) * (n - 2) + (2 * polar,)


def _angular_box(n: int) -> Tuple[Array, Array, Tuple[bool, ...]]:
    lower = np.zeros(n - 1)
    upper = np.array([math.pi] * (n - 2) + [2.0 * math.pi])
    return lower, upper, (False,) * (n - 2) + (True,)


def _angular_sample(rng: np.random.Generator, count: int, n: int) -> Array:
    lower, upper, _ = _angular_box(n)
    return rng.uniform(lower + POLE_MARGIN, upper - POLE_MARGIN, size=(count, n - 1))


def _radial(
    name: str, params: Dict[str, Any], n: int, warping: Warping, rho0: float, rho1: float, r_max: float
) -> Scenario:
    if n < 2:
        raise ConfigError(f"{name} needs n >= 2, got {n}")
    if not 0 < rho0 < rho1 < r_max:
        raise ConfigError(f"{name} needs 0 < rho0 < rho1 < {r_max:g}, got rho0={rho0}, rho1={rho1}")
    width = rho1 - rho0
    margin = 0.1 * width
    chart = warped_chart(n, warping, max(0.5 * rho0, rho0 - margin), min(rho1 + margin, 0.5 * (rho1 + r_max)))

    gradient = np.zeros(n)
    gradient[0] = 1.0 / width
    field = ScalarField(
        u=lambda x: (x[0] - rho0) / width,
        du=lambda x: gradient,
        d2u=lambda x: np.zeros((n, n)),
        grad_scale=1.0 / width,
    )
    lower, upper, periodic = _angular_box(n)

    def patch_factory(t: float, grid: Tuple[int, ...]) -> LevelSurfacePatch:
        radius = rho0 + t * width
        embed = np.vstack([np.zeros((1, n - 1)), np.eye(n - 1)])
        return LevelSurfacePatch(
            t=t,
            chart=chart,
            field=field,
            param=lambda s: np.concatenate([[radius], s]),
            jacobian=lambda s: embed,
            lower=lower,
            upper=upper,
            periodic=periodic,
            grid=grid,
        )

    def closed_form(r: int, t: float) -> Optional[float]:
        # every level set is a geodesic sphere with kappa_i = f'/f
        radius = rho0 + t * width
        f, df = warping.f(radius), warping.df(radius)
        return float(comb(n - 1, r, exact=True)) * (df / f) ** r * f ** (n - 1) * sphere_area(n)

    def sampler(rng: np.random.Generator, count: int) -> Array:
        return np.column_stack([rng.uniform(rho0, rho1, size=count), _angular_sample(rng, count, n)])

    return Scenario(
        name=name,
        params=params,
        chart=chart,
        field=field,
        patch_factory=patch_factory,
        grid=_default_grid(n),
        sampler=sampler,
        closed_form=closed_form,
        description=f"geodesic spheres {rho0:g} <= r <= {rho1:g} of the {warping.name} warped product, n={n}",
        symmetric=True,
    )


def euclid_shell(n: int = 3, a: float = 0.5, b: float = 1.0) -> Scenario:
    """Flat space, ``u = (|x| - a) / (b - a)`` on the shell ``a <= |x| <= b``."""
    return _radial("euclid_shell", {"n": n, "a": a, "b": b}, n, FLAT, a, b, math.inf)


def sphere_annulus(n: int = 4, rho0: float = 0.5, rho1: float = 1.0) -> Scenario:
    """Unit round sphere, ``u`` affine in the geodesic distance to a point; :math:`\\kappa = \\cot\\rho`."""
    return _radial("sphere_annulus", {"n": n, "rho0": rho0, "rho1": rho1}, n, ROUND, rho0, rho1, math.pi)


def hyperbolic_annulus(n: int = 3, rho0: float = 0.5, rho1: float = 1.0) -> Scenario:
    """Hyperbolic space of curvature ``-1``, ``u`` affine in geodesic distance; :math:`\\kappa = \\coth\\rho`."""
    return _radial("hyperbolic_annulus", {"n": n, "rho0": rho0, "rho1": rho1}, n, HYPERBOLIC, rho0, rho1, math.inf)


def ellipsoid_flat(
    n: int = 3, a: float = 0.5, b: float = 1.0, axes: Sequence[float] = (1.0, 0.8, 0.6)
) -> Scenario:
    """Flat :math:`\\mathbb{R}^3` foliated by homothetic ellipsoids.

    ``u = (q - a) / (b - a)`` with :math:`q = \\sqrt{\\sum_i x_i^2 / A_i^2}`, so the level sets
    have non-constant principal curvatures while every curvature correction vanishes.
    """
    if n != 3:
        raise ConfigError(f"ellipsoid_flat is only defined for n=3, got n={n}")
    A = np.asarray(axes, dtype=float)
    if A.shape != (3,) or np.any(A <= 0):
        raise ConfigError(f"ellipsoid_flat needs three positive axes, got {list(axes)}")
    if not 0 < a < b:
        raise ConfigError(f"ellipsoid_flat needs 0 < a < b, got a={a}, b={b}")
    width = b - a
    A2 = A**2

    def q(x: Point) -> float:
        return float(np.sqrt(np.sum(x**2 / A2)))

    def du(x: Point) -> Array:
        return x / (A2 * q(x) * width)

    def d2u(x: Point) -> Array:
        scaled = x / A2
        return (np.diag(1.0 / A2) / q(x) - np.outer(scaled, scaled) / q(x) ** 3) / width

    chart = MetricChart(
        3,
        -1.1 * b * A,
        1.1 * b * A,
        lambda x: np.eye(3),
        lambda x: np.zeros((3, 3, 3)),
        lambda x: np.zeros((3, 3, 3, 3)),
        name="euclidean_3",
    )
    field = ScalarField(u=lambda x: (q(x) - a) / width, du=du, d2u=d2u, grad_scale=1.0 / (width * float(np.max(A))))

    def direction(s: Array) -> Array:
        theta, phi = s
        return A * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])

    def patch_factory(t: float, grid: Tuple[int, ...]) -> LevelSurfacePatch:
        radius = a + t * width

        def jacobian(s: Array) -> Array:
            theta, phi = s
            return radius * A[:, None] * np.array(
                [
                    [math.cos(theta) * math.cos(phi), -math.sin(theta) * math.sin(phi)],
                    [math.cos(theta) * math.sin(phi), math.sin(theta) * math.cos(phi)],
                    [-math.sin(theta), 0.0],
                ]
            )

        return LevelSurfacePatch(
            t=t,
            chart=chart,
            field=field,
            param=lambda s: radius * direction(s),
            jacobian=jacobian,
            lower=np.array([0.0, 0.0]),
            upper=np.array([math.pi, 2.0 * math.pi]),
            periodic=(False, True),
            grid=grid,
        )

    def closed_form(r: int, t: float) -> Optional[float]:
        # Gauss-Bonnet for a topological sphere
        return 4.0 * math.pi if r == 2 else None

    def sampler(rng: np.random.Generator, count: int) -> Array:
        radii = rng.uniform(a, b, size=count)
        return np.array([rho * direction(s) for rho, s in zip(radii, _angular_sample(rng, count, 3))])

    return Scenario(
        name="ellipsoid_flat",
        params={"n": n, "a": a, "b": b, "axes": list(map(float, A))},
        chart=chart,
        field=field,
        patch_factory=patch_factory,
        grid=(16, 32),
        sampler=sampler,
        closed_form=closed_form,
        description=f"homothetic ellipsoids with axes {A.tolist()} between scales {a:g} and {b:g} in flat space",
    )


def warped_tilted(n: int = 4, rho0: float = 0.3, rho1: float = 1.3, eps: float = 0.05) -> Scenario:
    """Warped product with :math:`f = r + 0.1\\sin r` and a tilted foliating function.

    .. math::

        u = \\frac{r - \\rho_0}{L} + \\varepsilon \\cos\\theta_1 \\sin\\left(\\pi \\frac{r - \\rho_0}{L}\\right),
        \\qquad L = \\rho_1 - \\rho_0,

    which is ``0`` at :math:`r = \\rho_0` and ``1`` at :math:`r = \\rho_1` for every angle. Since
    :math:`\\partial_r u \\ge (1 - \\varepsilon\\pi)/L`, ``u`` has no critical points when
    :math:`\\varepsilon\\pi < 1`, and the level sets are graphs over the angles. The normal
    derivative of :math:`|\\nabla u|` does not vanish along them, which feeds the B correction.
    """
    if n < 3:
        raise ConfigError(f"warped_tilted needs n >= 3, got {n}")
    if not 0 < rho0 < rho1:
        raise ConfigError(f"warped_tilted needs 0 < rho0 < rho1, got rho0={rho0}, rho1={rho1}")
    if not 0 <= eps * math.pi < 1:
        raise ConfigError(f"warped_tilted needs 0 <= eps < 1/pi, got eps={eps}")
    width = rho1 - rho0
    margin = 0.1 * width
    chart = warped_chart(n, TILTED, max(0.5 * rho0, rho0 - margin), rho1 + margin)
    k = math.pi / width

    def u(x: Point) -> float:
        s = (x[0] - rho0) / width
        return s + eps * math.cos(x[1]) * math.sin(math.pi * s)

    def du(x: Point) -> Array:
        phase = k * (x[0] - rho0)
        result = np.zeros(n)
        result[0] = 1.0 / width + eps * math.cos(x[1]) * k * math.cos(phase)
        result[1] = -eps * math.sin(x[1]) * math.sin(phase)
        return result

    def d2u(x: Point) -> Array:
        phase = k * (x[0] - rho0)
        result = np.zeros((n, n))
        result[0, 0] = -eps * math.cos(x[1]) * k**2 * math.sin(phase)
        result[0, 1] = result[1, 0] = -eps * math.sin(x[1]) * k * math.cos(phase)
        result[1, 1] = -eps * math.cos(x[1]) * math.sin(phase)
        return result

    field = ScalarField(u=u, du=du, d2u=d2u, grad_scale=(1.0 - eps * math.pi) / width)
    lower, upper, periodic = _angular_box(n)

    def radius(t: float, s: Array) -> float:
        def residual(r: float) -> float:
            return u(np.concatenate([[r], s])) - t

        try:
            return float(brentq(residual, chart.lower[0], chart.upper[0], xtol=1e-15, rtol=4 * np.finfo(float).eps))
        except ValueError as e:
            raise ParametrizationError(
                f"No level {t:g} point of warped_tilted at angles {np.asarray(s).tolist()}"
            ) from e

    def patch_factory(t: float, grid: Tuple[int, ...]) -> LevelSurfacePatch:
        def param(s: Array) -> Point:
            return np.concatenate([[radius(t, s)], s])

        def jacobian(s: Array) -> Array:
            gradient = du(param(s))
            # implicit function theorem, ∂r/∂s_j = -∂_j u / ∂_r u
            return np.vstack([-gradient[1:][None, :] / gradient[0], np.eye(n - 1)])

        return LevelSurfacePatch(
            t=t,
            chart=chart,
            field=field,
            param=param,
            jacobian=jacobian,
            lower=lower,
            upper=upper,
            periodic=periodic,
            grid=grid,
        )

    def sampler(rng: np.random.Generator, count: int) -> Array:
        angles = _angular_sample(rng, count, n)
        levels = rng.uniform(0.0, 1.0, size=count)
        return np.array([np.concatenate([[radius(t, s)], s]) for t, s in zip(levels, angles)])

    return Scenario(
        name="warped_tilted",
        params={"n": n, "rho0": rho0, "rho1": rho1, "eps": eps},
        chart=chart,
        field=field,
        patch_factory=patch_factory,
        grid=(16,) + (8,) * (n - 3) + (8,),
        sampler=sampler,
        description=f"tilted levels of u between r={rho0:g} and r={rho1:g} in dr^2 + (r + 0.1 sin r)^2 g_S, n={n}",
    )


CATALOG: Dict[str, Callable[..., Scenario]] = {
    "euclid_shell": euclid_shell,
    "sphere_annulus": sphere_annulus,
    "hyperbolic_annulus": hyperbolic_annulus,
    "ellipsoid_flat": ellipsoid_flat,
    "warped_tilted": warped_tilted,
}


def builtin(name: str, **params: Any) -> Scenario:
    """Build a catalog scenario.

    :param name: One of :data:`CATALOG`
    :param params: Scenario parameters, e.g. ``n``, ``rho0``, ``rho1``

    Raises :class:`pyquermass.exceptions.UnknownScenarioError` for names outside the catalog
    and :class:`pyquermass.exceptions.ConfigError` for invalid parameters.
    """
    try:
        factory = CATALOG[name]
    except KeyError:
        raise UnknownScenarioError(f"Unknown scenario {name!r}, expected one of {sorted(CATALOG)}") from None
    try:
        scenario = factory(**params)
    except TypeError as e:
        raise ConfigError(f"Invalid parameters {params} for scenario {name!r}: {e}") from e
    logger.debug("Built scenario %s: %s", scenario.label, scenario.description)
    return scenario


def from_spec(spec: ScenarioSpec) -> Scenario:
    """:func:`builtin` for a parsed ``name:key=value`` specification."""
    return builtin(spec.name, **spec.params)


def _scaled(grid: Sequence[int], factor: float) -> List[int]:
    return [max(2, int(round(m * factor))) for m in grid]


def _lhs_order(difference: Callable[[float], float], lhs: float, exact: Optional[float]) -> Optional[float]:
    # grid parameter m runs the requested grid scaled by m / 2 against a closed form, by m / 4 otherwise
    if exact is not None:
        return refine_and_estimate(lambda m: lhs if m == 2 else difference(0.5 * m), 1, exact=exact).order
    return refine_and_estimate(lambda m: lhs if m == 4 else difference(0.25 * m), 1).order


def verify_main_identity(
    scenario: Scenario,
    r: int,
    grid: Optional[Sequence[int]] = None,
    t_nodes: int = 32,
    levels: Tuple[float, float] = (0.0, 1.0),
    tol: float = 1e-4,
    abs_tol: float = 1e-9,
    near_zero: float = 1e-6,
) -> VerifyRow:
    """Compute both sides of the comparison formula between two level sets.

    The left side :math:`\\mathcal{M}_r(\\Gamma_{t_1}) - \\mathcal{M}_r(\\Gamma_{t_0})` comes from
    surface quadrature, the right side from the coarea volume integral of
    :func:`pyquermass.chernforms.main_rhs_integrand`. The convergence order is that of the
    left side: against its closed form between half resolution and the requested one, or
    from three grids, a quarter, half and all of the requested one, when there is no closed
    form. Frames and integrands go through :attr:`Scenario.cache`, so rows of other orders
    on the same scenario object reuse them.

    :param scenario: The scenario
    :param r: Order of the mean curvature
    :param grid: Level set grid, defaults to the scenario's
    :param t_nodes: Nodes of the outer coarea rule
    :param levels: The levels ``(t0, t1)``
    :param tol: Relative tolerance
    :param abs_tol: Absolute tolerance for near-zero rows
    :param near_zero: Scale below which a row counts as near zero

    Failures inside the computation are recorded in the row instead of raised.
    """
    started = time.perf_counter()
    grid = list(scenario.grid if grid is None else grid)
    t0, t1 = levels
    cache = scenario.cache
    exact_inner, exact_outer = scenario.exact(r, t0), scenario.exact(r, t1)
    lhs_exact = None if exact_inner is None or exact_outer is None else exact_outer - exact_inner

    def difference(factor: float, estimate_error: bool = False) -> Tuple[float, float]:
        level_grid = _scaled(grid, factor)
        inner = total_mean_curvature(scenario.patch(t0, level_grid), r, estimate_error, cache.frame)
        outer = total_mean_curvature(scenario.patch(t1, level_grid), r, estimate_error, cache.frame)
        return outer.value - inner.value, inner.estimated_error + outer.estimated_error

    try:
        lhs, lhs_error = difference(1.0, True)
        rhs = volume_integral(
            scenario.field,
            scenario.chart,
            lambda x: cache.rhs_integrand(x, r),
            t_nodes,
            lambda t: scenario.patch(t, grid),
            levels,
            weight=cache.coarea_weight,
        )
        order = _lhs_order(lambda factor: difference(factor)[0], lhs, lhs_exact)
    except QuermassError as e:
        logger.exception("Verification of %s with r=%d failed", scenario.label, r)
        return VerifyRow.failed(scenario.label, r, grid, t_nodes, levels, str(e), time.perf_counter() - started)

    abs_error, rel_error, passed = compare(lhs, rhs.value, tol, abs_tol, near_zero)
    row = VerifyRow(
        scenario=scenario.label,
        r=r,
        lhs=lhs,
        rhs=rhs.value,
        lhs_exact=lhs_exact,
        abs_error=abs_error,
        rel_error=rel_error,
        lhs_error_estimate=lhs_error,
        rhs_error_estimate=rhs.estimated_error,
        grid=grid,
        t_nodes=t_nodes,
        levels=levels,
        convergence_order=order,
        passed=passed,
        wall_time=time.perf_counter() - started,
    )
    logger.info("%s r=%d: lhs=%.12g rhs=%.12g rel=%.3g %s", row.scenario, r, lhs, rhs.value, rel_error, row.status)
    return row


def verify_pointwise(
    scenario: Scenario,
    r: int,
    points: int = 100,
    h: Optional[float] = None,
    tol: Optional[float] = None,
    richardson: bool = False,
    seed: int = 0,
) -> PointwiseRow:
    """Compare :math:`d\\Phi_r` by finite differences with its closed form at random interior points.

    Residuals are taken with steps ``h`` and ``h/2``; their ratio gives the slope of the
    finite-difference error, expected to be ``2``, or ``4`` with Richardson extrapolation.
    A row passes when the slope is within :data:`SLOPE_WINDOW` of that, or when the largest
    residual is below :data:`POINTWISE_NOISE_FLOOR` and no slope can be measured. The
    largest :math:`|B|` correction met is reported as well.

    :param scenario: The scenario
    :param r: Order of the form
    :param points: Number of random points
    :param h: Step, defaults to :data:`POINTWISE_STEP_FACTOR` times the chart diameter
    :param tol: Optional cap on the constant ``max_residual / h**p`` for the expected order ``p``
    :param richardson: Use Richardson extrapolation in the finite differences
    :param seed: Seed of the point sampler

    Failures inside the computation are recorded in the row instead of raised.
    """
    started = time.perf_counter()
    h = POINTWISE_STEP_FACTOR * scenario.chart.diameter if h is None else h
    expected = 4.0 if richardson else 2.0
    sample = scenario.sample_points(np.random.default_rng(seed), points)

    def max_residual(m: int) -> float:
        return max(
            dphi_residual(scenario.field, scenario.chart, r, x, h / m, richardson).residual for x in sample
        )

    try:
        estimate = refine_and_estimate(max_residual, 1, exact=0.0, noise_floor=1e-11)
        largest_b = max(
            abs(correction_B(*principal_data(scenario.field, scenario.chart, x), r)) for x in sample
        )
    except QuermassError as e:
        logger.exception("Pointwise check of %s with r=%d failed", scenario.label, r)
        return PointwiseRow.failed(scenario.label, r, points, h, str(e), time.perf_counter() - started)

    residual, residual_half = estimate.values
    constant = residual / h**expected
    converging = estimate.order is not None and abs(estimate.order - expected) <= SLOPE_WINDOW
    passed = (converging or residual <= POINTWISE_NOISE_FLOOR) and (tol is None or constant <= tol)
    row = PointwiseRow(
        scenario=scenario.label,
        r=r,
        points=points,
        h=h,
        max_residual=residual,
        max_residual_half=residual_half,
        slope=estimate.order,
        expected_slope=expected,
        constant=constant,
        max_correction_b=largest_b,
        passed=passed,
        wall_time=time.perf_counter() - started,
    )
    logger.info("%s r=%d: max residual %.3g, slope %s %s", row.scenario, r, residual, row.slope, row.status)
    return row


def level_profile(
    scenario: Scenario, r: int, t_values: Sequence[float], grid: Optional[Sequence[int]] = None
) -> List[ProfileRow]:
    """:math:`\\mathcal{M}_r(\\Gamma_t)` along the foliation, next to the closed form where one exists.

    A level whose computation fails gives a failed row, the other levels are still computed.
    """
    rows = []
    for t in t_values:
        try:
            result = total_mean_curvature(scenario.patch(t, grid), r, frame_at=scenario.cache.frame)
        except QuermassError as e:
            logger.exception("Profile of %s with r=%d failed at t=%g", scenario.label, r, t)
            rows.append(ProfileRow.failed(scenario.label, r, t, str(e)))
            continue
        rows.append(
            ProfileRow(
                scenario=scenario.label,
                r=r,
                t=t,
                value=result.value,
                estimated_error=result.estimated_error,
                closed_form=scenario.exact(r, t),
            )
        )
    return rows
