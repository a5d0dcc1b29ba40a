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


"""Total mean curvatures of level hypersurfaces and the comparison formula relating them."""

__version__ = "0.1.0"


from .chernforms import correction_A, correction_B, dphi_formula_eval, main_rhs_integrand, phi_eval
from .levelset import PrincipalFrame, ScalarField, principal_frame, sigma_r, total_mean_curvature
from .metric import FrameCurvature, MetricChart, frame_curvature
from .scenarios import Scenario, builtin, level_profile, verify_main_identity, verify_pointwise

__all__ = [
    "MetricChart",
    "FrameCurvature",
    "frame_curvature",
    "ScalarField",
    "PrincipalFrame",
    "principal_frame",
    "sigma_r",
    "total_mean_curvature",
    "phi_eval",
    "dphi_formula_eval",
    "correction_A",
    "correction_B",
    "main_rhs_integrand",
    "Scenario",
    "builtin",
    "verify_main_identity",
    "verify_pointwise",
    "level_profile",
]
