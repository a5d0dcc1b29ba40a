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
import dataclasses
import math
import unittest

import numpy as np

from pyquermass.chernforms import (
    SignTable,
    cartan_normal_residual,
    correction_A,
    correction_B,
    curvature_form,
    dphi_formula_eval,
    dphi_residual,
    main_rhs_integrand,
    omega_form,
    phi_eval,
    phi_restricted_density,
    principal_data,
)
from pyquermass.exceptions import FrameError
from pyquermass.levelset import PrincipalFrame, principal_frame, sigma_r
from pyquermass.metric import christoffel
from pyquermass.scenarios import builtin

from .oracles import corrections_by_enumeration, random_rotation, synthetic_curvature, synthetic_frame


def umbilic_frame(n, kappa=1.0):
    return PrincipalFrame(
        x=np.zeros(n),
        e=np.eye(n),
        coframe=np.eye(n),
        kappa=np.full(n - 1, kappa),
        grad_norm=1.0,
        grad_norm_tangential=np.zeros(n - 1),
    )


class TestSignTable(unittest.TestCase):
    def test_correction_signs_are_dimension_free(self):
        for n in range(2, 7):
            for r in range(n):
                with self.subTest(n=n, r=r):
                    signs = SignTable(n, r)
                    self.assertEqual(signs.correction_a, -1)
                    self.assertEqual(signs.correction_b, 1)

    def test_restriction(self):
        self.assertEqual(SignTable(3, 1).restriction, 1)
        self.assertEqual(SignTable(4, 1).restriction, -1)


class TestPhi(unittest.TestCase):
    def test_principal_directions(self):
        frame = umbilic_frame(3)

        self.assertAlmostEqual(phi_eval(frame, 1, tuple(frame.tangential)), 2.0)
        self.assertAlmostEqual(phi_eval(frame, 1, (frame.e[:, 1], frame.e[:, 0])), -2.0)

    def test_sigma_r_on_synthetic_frames(self):
        rng = np.random.default_rng(11)
        for n in (3, 4, 5):
            frame = synthetic_frame(rng, n)
            for r in range(n + 1):
                with self.subTest(n=n, r=r):
                    self.assertAlmostEqual(phi_eval(frame, r, tuple(frame.tangential)), sigma_r(frame.kappa, r))

    def test_rotation_invariance(self):
        rng = np.random.default_rng(12)
        frame = synthetic_frame(rng, 4)
        Q = random_rotation(rng, 3)
        rotated = tuple(np.concatenate([Q[:, a], [0.0]]) for a in range(3))

        self.assertAlmostEqual(phi_eval(frame, 2, rotated), sigma_r(frame.kappa, 2))

    def test_repeated_curvature_basis_is_irrelevant(self):
        scenario = builtin("sphere_annulus", n=4)
        rng = np.random.default_rng(16)
        frame = principal_frame(scenario.field, scenario.chart, scenario.sample_points(rng, 1)[0])
        np.testing.assert_allclose(frame.kappa, frame.kappa[0], rtol=1e-10)

        Q = random_rotation(rng, 3)
        e = frame.e.copy()
        e[:, :-1] = frame.e[:, :-1] @ Q
        rotated = dataclasses.replace(
            frame,
            e=e,
            coframe=e.T @ scenario.chart.metric(frame.x),
            grad_norm_tangential=Q.T @ frame.grad_norm_tangential,
        )
        vectors = tuple(rng.normal(size=(3, 4)))

        for r in range(4):
            with self.subTest(r=r):
                expected = phi_eval(frame, r, vectors)
                self.assertAlmostEqual(phi_eval(rotated, r, vectors), expected, delta=1e-8 * max(1.0, abs(expected)))

    def test_orientation_flip_negates(self):
        rng = np.random.default_rng(13)
        frame = synthetic_frame(rng, 4)
        e1, e2, e3 = frame.tangential

        self.assertAlmostEqual(phi_eval(frame, 1, (e2, e1, e3)), -phi_eval(frame, 1, (e1, e2, e3)))

    def test_invalid_arguments(self):
        frame = umbilic_frame(4)

        with self.assertRaises(FrameError):
            phi_eval(frame, 1, tuple(frame.vectors))

        with self.assertRaises(ValueError):
            phi_eval(frame, -1, tuple(frame.tangential))

    def test_restricted_density(self):
        self.assertAlmostEqual(phi_restricted_density(umbilic_frame(3), 1), 2.0)
        self.assertAlmostEqual(phi_restricted_density(umbilic_frame(4), 2), -3.0)


class TestConnectionAndCurvatureForms(unittest.TestCase):
    def test_omega_values(self):
        rng = np.random.default_rng(14)
        frame = synthetic_frame(rng, 4)
        omega = omega_form(frame, 1)

        np.testing.assert_allclose(
            [omega(v) for v in frame.vectors],
            [0.0, frame.kappa[1], 0.0, frame.grad_norm_tangential[1] / frame.grad_norm],
            atol=1e-14,
        )

    def test_omega_is_covariant_derivative_of_normal(self):
        scenario = builtin("warped_tilted", n=4)
        field, chart = scenario.field, scenario.chart
        x = scenario.sample_points(np.random.default_rng(17), 1)[0]
        frame = principal_frame(field, chart, x)
        h = 1e-5

        def normal(y):
            du = field.gradient(y, chart.step)
            grad = np.linalg.solve(chart.metric(y), du)
            return grad / np.sqrt(du @ grad)

        g = chart.metric(x)
        for j, v in enumerate(frame.vectors):
            derivative = (normal(x + h * v) - normal(x - h * v)) / (2 * h)
            covariant = derivative + np.einsum("kij,i,j->k", christoffel(chart, x), v, frame.normal)
            for i in range(3):
                with self.subTest(i=i, j=j):
                    self.assertAlmostEqual(omega_form(frame, i)(v), frame.e[:, i] @ g @ covariant, delta=1e-6)
                    if j < 3:
                        self.assertAlmostEqual(omega_form(frame, i)(v), frame.kappa[i] if i == j else 0.0, places=10)

    def test_curvature_form_values(self):
        rng = np.random.default_rng(15)
        frame = synthetic_frame(rng, 4)
        curv = synthetic_curvature(rng, 4)
        form = curvature_form(frame, curv, 2)

        self.assertAlmostEqual(form(frame.e[:, 0], frame.e[:, 3]), curv.R[0, 3, 2, 3])
        self.assertAlmostEqual(form(frame.e[:, 3], frame.e[:, 0]), -curv.R[0, 3, 2, 3])


class TestDPhi(unittest.TestCase):
    def test_frame_value_is_volume_integrand(self):
        rng = np.random.default_rng(16)
        for n in (2, 3, 4, 5):
            frame = synthetic_frame(rng, n)
            curv = synthetic_curvature(rng, n)
            for r in range(n):
                with self.subTest(n=n, r=r):
                    value = (-1) ** (n - 1) * dphi_formula_eval(frame, curv, r, tuple(frame.vectors))
                    self.assertAlmostEqual(value, main_rhs_integrand(frame, curv, r), places=10)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(17)
        frame = synthetic_frame(rng, 4)
        curv = synthetic_curvature(rng, 4)
        Q = random_rotation(rng, 4)

        rotated = dphi_formula_eval(frame, curv, 2, tuple(Q[:, a] for a in range(4)))

        self.assertAlmostEqual(rotated, dphi_formula_eval(frame, curv, 2, tuple(frame.vectors)), places=10)

    def test_wrong_vector_count(self):
        rng = np.random.default_rng(18)
        frame = synthetic_frame(rng, 3)

        with self.assertRaises(FrameError):
            dphi_formula_eval(frame, synthetic_curvature(rng, 3), 1, tuple(frame.tangential))


class TestCorrections(unittest.TestCase):
    def test_against_enumeration(self):
        rng = np.random.default_rng(19)
        for seed in range(50):
            frame = synthetic_frame(rng, 4)
            curv = synthetic_curvature(rng, 4)
            for r in (1, 2, 3):
                with self.subTest(seed=seed, r=r):
                    a, b = corrections_by_enumeration(frame, curv, r)
                    self.assertAlmostEqual(correction_A(frame, curv, r), a, places=10)
                    self.assertAlmostEqual(correction_B(frame, curv, r), b, places=10)

    def test_against_enumeration_in_five_dimensions(self):
        rng = np.random.default_rng(20)
        for seed in range(5):
            frame = synthetic_frame(rng, 5)
            curv = synthetic_curvature(rng, 5)
            for r in range(1, 5):
                with self.subTest(seed=seed, r=r):
                    a, b = corrections_by_enumeration(frame, curv, r)
                    self.assertAlmostEqual(correction_A(frame, curv, r), a, places=10)
                    self.assertAlmostEqual(correction_B(frame, curv, r), b, places=10)

    def test_empty_sums(self):
        rng = np.random.default_rng(21)
        frame = synthetic_frame(rng, 4)
        curv = synthetic_curvature(rng, 4)

        self.assertEqual(correction_A(frame, curv, 0), 0.0)
        self.assertEqual(correction_B(frame, curv, 1), 0.0)

    def test_round_sphere(self):
        scenario = builtin("sphere_annulus", n=4)
        frame, curv = principal_data(scenario.field, scenario.chart, np.array([0.7, 1.0, 1.3, 2.0]))

        self.assertAlmostEqual(correction_A(frame, curv, 1), -3.0, places=8)
        self.assertAlmostEqual(correction_A(frame, curv, 2), -6.0 / math.tan(0.7), places=8)
        self.assertAlmostEqual(correction_B(frame, curv, 2), 0.0, places=10)

    def test_b_vanishes_on_radial_foliations(self):
        rng = np.random.default_rng(22)
        for name in ("euclid_shell", "sphere_annulus", "hyperbolic_annulus"):
            scenario = builtin(name, n=4)
            self.assertTrue(scenario.symmetric)
            for x in scenario.sample_points(rng, 5):
                frame, curv = principal_data(scenario.field, scenario.chart, x)
                with self.subTest(name=name, x=x.tolist()):
                    self.assertAlmostEqual(correction_B(frame, curv, 3), 0.0, places=10)

    def test_b_is_active_on_tilted_foliation(self):
        scenario = builtin("warped_tilted", n=4)
        points = scenario.sample_points(np.random.default_rng(23), 20)

        largest = max(abs(correction_B(*principal_data(scenario.field, scenario.chart, x), 2)) for x in points)

        self.assertGreater(largest, 1e-3)


class TestFiniteDifferenceChecks(unittest.TestCase):
    def test_dphi_on_round_sphere(self):
        scenario = builtin("sphere_annulus", n=3)
        x = scenario.sample_points(np.random.default_rng(24), 1)[0]

        result = dphi_residual(scenario.field, scenario.chart, 1, x, richardson=True)

        self.assertLess(result.residual, 1e-6 * max(1.0, abs(result.formula)))

    def test_dphi_on_tilted_foliation(self):
        scenario = builtin("warped_tilted")
        x = scenario.sample_points(np.random.default_rng(25), 1)[0]

        for r in (1, 2):
            with self.subTest(r=r):
                result = dphi_residual(scenario.field, scenario.chart, r, x, richardson=True)
                self.assertLess(result.residual, 1e-6 * max(1.0, abs(result.formula)))

    def test_cartan_normal_equation(self):
        scenario = builtin("warped_tilted")
        x = scenario.sample_points(np.random.default_rng(26), 1)[0]

        self.assertLess(cartan_normal_residual(scenario.field, scenario.chart, x, richardson=True), 1e-6)
