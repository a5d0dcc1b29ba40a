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

"""Command line driver: ``pyquermass verify``, ``pyquermass pointwise`` and ``pyquermass profile``.

Exit codes are 0 when every row passes, 1 when a verification fails and 2 for usage or
configuration errors.
"""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type, TypeVar

from . import __version__
from .config import (
    PointwiseConfig,
    ProfileConfig,
    RunConfig,
    ScenarioSpec,
    VerifyConfig,
    build_config,
    load_config,
    resolve_workers,
)
from .exceptions import ConfigError, UnknownScenarioError
from .report import (
    PointwiseReport,
    PointwiseRow,
    ProfileReport,
    ProfileRow,
    Report,
    VerificationReport,
    VerifyRow,
    ensure_writable,
)
from .scenarios import Scenario, from_spec, level_profile, verify_main_identity, verify_pointwise

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser", "run_verify", "run_pointwise", "run_profile"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

ConfigT = TypeVar("ConfigT", bound=RunConfig)
Task = Tuple[ScenarioSpec, int]


def _scenario_of(spec: ScenarioSpec) -> Scenario:
    return _build(spec.name, json.dumps(spec.params, sort_keys=True))


@lru_cache(maxsize=None)
def _build(name: str, params: str) -> Scenario:
    # one instance per process; rows of a scenario share its node cache
    return from_spec(ScenarioSpec(name=name, params=json.loads(params)))


def _tasks(specs: Sequence[ScenarioSpec], r_values: Optional[Sequence[int]]) -> List[Task]:
    # every scenario is built here, before any row runs
    tasks = []
    for spec in specs:
        scenario = _scenario_of(spec)
        tasks.extend((spec, r) for r in (range(scenario.dim) if r_values is None else r_values))
    return tasks


def _run(worker: Callable[..., Any], tasks: List[Task], workers: int, **options: Any) -> List[Any]:
    if workers == 1 or len(tasks) < 2:
        return [worker(spec, r, **options) for spec, r in tasks]
    logger.info("Running %d rows on %d worker processes", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, spec, r, **options) for spec, r in tasks]
        return [future.result() for future in futures]


def _verify_row(spec: ScenarioSpec, r: int, **options: Any) -> VerifyRow:
    return verify_main_identity(_scenario_of(spec), r, **options)


def _pointwise_row(spec: ScenarioSpec, r: int, **options: Any) -> PointwiseRow:
    return verify_pointwise(_scenario_of(spec), r, **options)


def _profile_rows(spec: ScenarioSpec, r: int, **options: Any) -> List[ProfileRow]:
    return level_profile(_scenario_of(spec), r, **options)


def run_verify(config: VerifyConfig) -> VerificationReport:
    """Run :func:`pyquermass.scenarios.verify_main_identity` for every scenario and ``r``.

    :param config: The run configuration

    Raises :class:`pyquermass.exceptions.UnknownScenarioError` or
    :class:`pyquermass.exceptions.ConfigError` before any row runs if a scenario is invalid.
    """
    rows = _run(
        _verify_row,
        _tasks(config.scenarios, config.r),
        resolve_workers(config.workers),
        grid=config.grid,
        t_nodes=config.t_nodes,
        levels=config.levels,
        tol=config.tol,
        abs_tol=config.abs_tol,
        near_zero=config.near_zero,
    )
    return VerificationReport.assemble(rows, config.model_dump(mode="json"))


def run_pointwise(config: PointwiseConfig) -> PointwiseReport:
    """Run :func:`pyquermass.scenarios.verify_pointwise` for every scenario and ``r``."""
    rows = _run(
        _pointwise_row,
        _tasks(config.scenarios, config.r),
        resolve_workers(config.workers),
        points=config.points,
        h=config.h,
        tol=config.tol,
        richardson=config.richardson,
        seed=config.seed,
    )
    return PointwiseReport.assemble(rows, config.model_dump(mode="json"))


def run_profile(config: ProfileConfig) -> ProfileReport:
    """Tabulate :math:`\\mathcal{M}_r(\\Gamma_t)` along the foliation of every scenario."""
    groups = _run(
        _profile_rows,
        _tasks(config.scenarios, config.r),
        resolve_workers(config.workers),
        t_values=config.t_values,
        grid=config.grid,
    )
    return ProfileReport.assemble([row for group in groups for row in group], config.model_dump(mode="json"))


def _scenario(text: str) -> ScenarioSpec:
    try:
        return ScenarioSpec.from_string(text)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scenario",
        dest="scenarios",
        action="append",
        type=_scenario,
        metavar="NAME[:KEY=VALUE,...]",
        help="Catalog scenario with parameters, e.g. euclid_shell:n=3,a=0.5,b=1 (repeatable)",
    )
    parser.add_argument("--r", type=int, nargs="+", help="Orders to check (default: 0..n-1 per scenario)")
    parser.add_argument("--seed", type=int, help="Random seed (default: 0)")
    parser.add_argument("--out", type=Path, help="Report file (default: standard output)")
    parser.add_argument("--format", choices=["json", "csv"], help="Report format")
    parser.add_argument("--workers", type=int, help="Worker processes (default: $PYQUERMASS_WORKERS or 1)")
    parser.add_argument("--config", type=Path, help="JSON config file; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pyquermass", description="Check comparison formulas for total mean curvatures of level sets."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="Compare both sides of the integral formula")
    _common(verify)
    verify.add_argument("--grid", type=int, nargs="+", help="Level set quadrature grid (default: per scenario)")
    verify.add_argument("--t-nodes", dest="t_nodes", type=int, help="Nodes of the coarea rule (default: 32)")
    verify.add_argument("--levels", type=float, nargs=2, metavar=("T0", "T1"), help="Bounding levels (default: 0 1)")
    verify.add_argument("--tol", type=float, help="Relative tolerance (default: 1e-4)")
    verify.add_argument("--abs-tol", dest="abs_tol", type=float, help="Absolute tolerance of near-zero rows")

    pointwise = commands.add_parser("pointwise", help="Compare d Phi_r by finite differences with its closed form")
    _common(pointwise)
    pointwise.add_argument("--points", type=int, help="Random interior points per row (default: 100)")
    pointwise.add_argument("--h", type=float, help="Finite-difference step (default: 1e-3 times the chart diameter)")
    pointwise.add_argument("--tol", type=float, help="Optional cap on max_residual / h**p")
    pointwise.add_argument("--richardson", action="store_true", default=None, help="Richardson extrapolation")

    profile = commands.add_parser("profile", help="Tabulate M_r along the foliation")
    _common(profile)
    profile.add_argument("--grid", type=int, nargs="+", help="Level set quadrature grid (default: per scenario)")
    profile.add_argument("--t", dest="t_values", type=float, nargs="+", help="Levels (default: 0, 1/8, ..., 1)")
    return parser


COMMANDS: Dict[str, Tuple[Type[RunConfig], Callable[[Any], Report[Any]]]] = {
    "verify": (VerifyConfig, run_verify),
    "pointwise": (PointwiseConfig, run_pointwise),
    "profile": (ProfileConfig, run_profile),
}


def _load(args: argparse.Namespace, model: Type[ConfigT]) -> ConfigT:
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key in model.model_fields and value is not None
    }
    if args.config is not None:
        return load_config(args.config, model, **overrides)
    return build_config(model, overrides)


def _table(report: Report[Any]) -> str:
    lines = []
    for row in report.rows:
        data = row.model_dump()
        if "lhs" in data:
            detail = f"lhs={data['lhs']} rhs={data['rhs']} rel={data['rel_error']} order={data['convergence_order']}"
        elif "max_residual" in data:
            detail = f"residual={data['max_residual']} slope={data['slope']} |B|max={data['max_correction_b']}"
        else:
            detail = f"t={data['t']} M_r={data['value']} closed_form={data['closed_form']}"
        error = f" ({data['error']})" if data["error"] else ""
        lines.append(f"{row.status} {data['scenario']} r={data['r']} {detail}{error}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``pyquermass`` console script; returns the exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    model, run = COMMANDS[args.command]

    try:
        config = _load(args, model)
        if config.out is not None:
            ensure_writable(config.out)
        report = run(config)
        if config.out is None:
            print(report.render(config.format))
        else:
            report.write(config.out, config.format)
            print(_table(report))
    except (ConfigError, UnknownScenarioError) as e:
        print(f"pyquermass: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
