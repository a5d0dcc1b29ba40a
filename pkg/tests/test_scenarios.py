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
import math
import unittest
from unittest import mock

import numpy as np

from pyquermass.chernforms import correction_B, principal_data
from pyquermass.config import ScenarioSpec
from pyquermass.exceptions import ConfigError, ParametrizationError, UnknownScenarioError
from pyquermass.levelset import total_mean_curvature
from pyquermass.scenarios import (
    CATALOG,
    POINTWISE_NOISE_FLOOR,
    builtin,
    from_spec,
    level_profile,
    verify_main_identity,
    verify_pointwise,
)


class TestCatalog(unittest.TestCase):
    def test_unknown_name(self):
        with self.assertRaises(UnknownScenarioError):
            builtin("torus")

        with self.assertRaises(KeyError):
            builtin("torus")

    def test_invalid_parameters(self):
        for name, params in [
            ("euclid_shell", {"radius": 2.0}),
            ("euclid_shell", {"a": 1.0, "b": 0.5}),
            ("sphere_annulus", {"rho1": 4.0}),
            ("ellipsoid_flat", {"n": 4}),
            ("ellipsoid_flat", {"axes": (1.0, -1.0, 1.0)}),
            ("warped_tilted", {"eps": 0.5}),
            ("warped_tilted", {"n": 2}),
        ]:
            with self.subTest(name=name, params=params):
                with self.assertRaises(ConfigError):
                    builtin(name, **params)

    def test_label_and_spec(self):
        scenario = from_spec(ScenarioSpec.from_string("euclid_shell:n=3,a=0.5,b=1"))

        self.assertEqual(scenario.label, "euclid_shell(a=0.5,b=1,n=3)")
        self.assertEqual(scenario.dim, 3)

    def test_every_scenario_is_consistent(self):
        rng = np.random.default_rng(0)
        for name in CATALOG:
            scenario = builtin(name)
            with self.subTest(name=name):
                scenario.patch(0.5, [4] * (scenario.dim - 1)).validate()
                for x in scenario.sample_points(rng, 10):
                    self.assertTrue(scenario.chart.contains(x))
                    self.assertGreaterEqual(scenario.field.value(x), -1e-12)
                    self.assertLessEqual(scenario.field.value(x), 1.0 + 1e-12)

    def test_boundary_levels(self):
        for name in CATALOG:
            scenario = builtin(name)
            with self.subTest(name=name):
                scenario.patch(0.0, [4] * (scenario.dim - 1)).validate()
                scenario.patch(1.0, [4] * (scenario.dim - 1)).validate()


class TestClosedForms(unittest.TestCase):
    def assert_matches(self, scenario, r, t, grid):
        value = total_mean_curvature(scenario.patch(t, grid), r, estimate_error=False).value
        self.assertAlmostEqual(value / scenario.exact(r, t), 1.0, places=8)

    def test_geodesic_spheres(self):
        self.assert_matches(builtin("sphere_annulus", n=4), 1, 0.3, (8, 8, 16))
        self.assert_matches(builtin("hyperbolic_annulus", n=3), 2, 0.6, (12, 16))
        self.assert_matches(builtin("euclid_shell", n=2), 1, 0.5, (16,))

    def test_known_values(self):
        self.assertAlmostEqual(builtin("euclid_shell").exact(1, 0.5), 6 * math.pi)
        sphere = builtin("sphere_annulus", n=3)
        self.assertAlmostEqual(sphere.exact(1, 1.0), 8 * math.pi * math.sin(1.0) * math.cos(1.0))
        self.assertAlmostEqual(builtin("ellipsoid_flat").exact(2, 0.3), 4 * math.pi)
        self.assertIsNone(builtin("ellipsoid_flat").exact(1, 0.3))
        self.assertIsNone(builtin("warped_tilted").exact(0, 0.5))
        self.assertFalse(builtin("warped_tilted").symmetric)


class TestVerifyMainIdentity(unittest.TestCase):
    def test_euclidean_shell(self):
        scenario = builtin("euclid_shell", n=3, a=0.5, b=1.0)

        for r, expected in [(0, 3 * math.pi), (1, 4 * math.pi), (2, 0.0)]:
            with self.subTest(r=r):
                row = verify_main_identity(scenario, r, grid=(8, 16), t_nodes=8)
                self.assertTrue(row.passed, row)
                self.assertIsNone(row.error)
                self.assertAlmostEqual(row.lhs, expected, places=8)
                self.assertAlmostEqual(row.rhs, expected, places=8)
                self.assertAlmostEqual(row.lhs_exact, expected, places=10)

    def test_nested_levels(self):
        scenario = builtin("euclid_shell", n=3, a=0.5, b=1.0)

        row = verify_main_identity(scenario, 1, grid=(8, 16), t_nodes=8, levels=(0.25, 0.75))

        self.assertTrue(row.passed)
        self.assertAlmostEqual(row.lhs, 2 * math.pi, places=8)
        self.assertEqual(row.levels, (0.25, 0.75))

    def test_round_sphere_with_curvature_correction(self):
        row = verify_main_identity(builtin("sphere_annulus", n=3), 1, grid=(8, 16), t_nodes=8)

        self.assertTrue(row.passed, row)
        self.assertLess(row.rel_error, 1e-8)

    def test_tilted_foliation(self):
        row = verify_main_identity(builtin("warped_tilted", n=3), 2, grid=(12, 8), t_nodes=8)

        self.assertTrue(row.passed, row)
        self.assertIsNone(row.lhs_exact)

    def test_positively_curved_annulus(self):
        scenario = builtin("sphere_annulus", n=4, rho0=0.5, rho1=1.0)

        for r in range(4):
            with self.subTest(r=r):
                row = verify_main_identity(scenario, r, grid=(8, 8, 16), t_nodes=8)
                self.assertTrue(row.passed, row)
                self.assertLessEqual(row.rel_error, 1e-4)

    def test_negatively_curved_annulus(self):
        scenario = builtin("hyperbolic_annulus", n=3, rho0=0.5, rho1=1.0)

        for r in range(3):
            with self.subTest(r=r):
                row = verify_main_identity(scenario, r, grid=(12, 16), t_nodes=8)
                self.assertTrue(row.passed, row)
                self.assertLessEqual(row.rel_error, 1e-4)

    def test_tilted_foliation_exercises_b_correction(self):
        scenario = builtin("warped_tilted", n=4)

        row = verify_main_identity(scenario, 2, grid=(16, 8, 8), t_nodes=8, tol=1e-3)

        self.assertTrue(row.passed, row)
        self.assertLessEqual(row.rel_error, 1e-3)
        sample = scenario.sample_points(np.random.default_rng(0), 20)
        largest_b = max(abs(correction_B(*principal_data(scenario.field, scenario.chart, x), 2)) for x in sample)
        self.assertGreater(largest_b, 1e-3)

    def test_convergence_order_against_closed_form(self):
        row = verify_main_identity(builtin("sphere_annulus", n=4), 0, grid=(4, 4, 8), t_nodes=4)

        self.assertIsNotNone(row.lhs_exact)
        self.assertIsNotNone(row.convergence_order, row)
        self.assertGreater(row.convergence_order, 0.0)

    def test_convergence_order_without_closed_form(self):
        row = verify_main_identity(builtin("ellipsoid_flat"), 1, grid=(8, 16), t_nodes=8)

        self.assertIsNone(row.lhs_exact)
        self.assertIsNotNone(row.convergence_order, row)

    def test_rows_share_node_cache(self):
        scenario = builtin("euclid_shell", n=3)

        verify_main_identity(scenario, 0, grid=(4, 8), t_nodes=4)
        cached = len(scenario.cache)
        verify_main_identity(scenario, 1, grid=(4, 8), t_nodes=4)

        self.assertGreater(cached, 0)
        self.assertEqual(len(scenario.cache), cached)

    def test_failure_is_recorded(self):
        scenario = builtin("euclid_shell")

        with mock.patch("pyquermass.scenarios.total_mean_curvature", side_effect=ParametrizationError("boom")):
            with self.assertLogs("pyquermass.scenarios", level="ERROR"):
                row = verify_main_identity(scenario, 1, grid=(4, 8), t_nodes=4)

        self.assertFalse(row.passed)
        self.assertEqual(row.error, "boom")
        self.assertIsNone(row.lhs)
        self.assertEqual(row.grid, [4, 8])


class TestVerifyPointwise(unittest.TestCase):
    def assert_converging(self, row):
        if row.max_residual > POINTWISE_NOISE_FLOOR:
            self.assertIsNotNone(row.slope, row)
            self.assertGreaterEqual(row.slope, 1.7, row)
            self.assertLessEqual(row.slope, 2.3, row)

    def test_round_sphere(self):
        row = verify_pointwise(builtin("sphere_annulus", n=3), 1, points=3, h=1e-3)

        self.assertTrue(row.passed, row)
        self.assertLessEqual(row.max_residual, 1e-4)
        self.assertAlmostEqual(row.max_correction_b, 0.0, places=10)
        self.assertAlmostEqual(row.constant, row.max_residual / 1e-6)
        self.assert_converging(row)

    def test_every_scenario_and_order(self):
        for name in CATALOG:
            scenario = builtin(name)
            for r in range(scenario.dim):
                with self.subTest(name=name, r=r):
                    row = verify_pointwise(scenario, r, points=3)
                    self.assertIsNone(row.error)
                    self.assertTrue(row.passed, row)
                    self.assert_converging(row)

    def test_tol_caps_the_constant(self):
        row = verify_pointwise(builtin("sphere_annulus", n=3), 1, points=3, h=1e-3, tol=1e-12)

        self.assertGreater(row.max_residual, 0.0)
        self.assertFalse(row.passed)

    def test_residual_scaling_with_step(self):
        row = verify_pointwise(builtin("warped_tilted", n=3), 1, points=3, h=1e-2)

        self.assertEqual(row.expected_slope, 2.0)
        self.assertAlmostEqual(row.constant, row.max_residual / 1e-4)
        self.assertTrue(row.passed, row)

    def test_default_step(self):
        scenario = builtin("euclid_shell", n=3)

        row = verify_pointwise(scenario, 0, points=2, richardson=True)

        self.assertAlmostEqual(row.h, 1e-3 * scenario.chart.diameter)
        self.assertEqual(row.points, 2)


class TestLevelProfile(unittest.TestCase):
    def test_gauss_bonnet_constancy(self):
        rows = level_profile(builtin("euclid_shell", n=3), 2, [0.0, 0.5, 1.0], grid=(8, 16))

        self.assertEqual([row.t for row in rows], [0.0, 0.5, 1.0])
        for row in rows:
            self.assertAlmostEqual(row.value, 4 * math.pi, places=8)
            self.assertAlmostEqual(row.closed_form, 4 * math.pi)
            self.assertTrue(row.passed)

    def test_failed_level_is_recorded(self):
        scenario = builtin("euclid_shell", n=3)
        calls = []

        def flaky(patch, r, **kwargs):
            calls.append(patch.t)
            if patch.t == 0.5:
                raise ParametrizationError("degenerate patch")
            return total_mean_curvature(patch, r, **kwargs)

        with mock.patch("pyquermass.scenarios.total_mean_curvature", side_effect=flaky):
            with self.assertLogs("pyquermass.scenarios", level="ERROR"):
                rows = level_profile(scenario, 2, [0.0, 0.5, 1.0], grid=(8, 16))

        self.assertEqual(calls, [0.0, 0.5, 1.0])
        self.assertEqual([row.passed for row in rows], [True, False, True])
        self.assertEqual(rows[1].error, "degenerate patch")
        self.assertIsNone(rows[1].value)
        self.assertAlmostEqual(rows[2].value, 4 * math.pi, places=8)
