"""Command-line interface: `mpet-lab <command>`.

Results go to stdout (or --out); logs go to stderr. Exit codes: 0 on
success, 1 when a verification fails, 2 on usage or configuration
errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from mpet_lab.assembly.operator import assemble_operator
from mpet_lab.assembly.rhs import LOAD_PRESETS, LoadError, preset_loads
from mpet_lab.domain.lemmas import LemmaViolation, run_lemma_suite
from mpet_lab.domain.mesh import MeshError, build_structured_mesh
from mpet_lab.domain.parameters import (
    ParameterError,
    SingularWeightsError,
    build_norm_weights,
    derive_coefficients,
)
from mpet_lab.fem.dg import CoercivityError, DgConfig
from mpet_lab.fem.spaces import SpaceKind
from mpet_lab.ledger.jsonl import JsonlRunLedger
from mpet_lab.ledger.memory import InMemoryRunLedger
from mpet_lab.ledger.port import RunLedger
from mpet_lab.sinks.csv_tables import (
    CONSTANTS_COLUMNS,
    CONVERGENCE_COLUMNS,
    SWEEP_COLUMNS,
    TRAJECTORY_COLUMNS,
    render_csv,
)
from mpet_lab.sinks.matrix_market import export_system
from mpet_lab.sinks.mesh_dump import write_mesh
from mpet_lab.solver.deflation import SolverBreakdownError
from mpet_lab.sources.config import ConfigError, load_problem, load_sweep
from mpet_lab.timestep.stepper import (
    SolveMethod,
    StepError,
    run,
    run_convergence,
)
from mpet_lab.verify.constants import measure_fem_constants
from mpet_lab.verify.support import new_run_id
from mpet_lab.verify.sweep import sweep

logger = logging.getLogger(__name__)

ORDER_BAND = 0.2


class VerificationFailed(Exception):
    """A check the command was asked to make did not hold."""


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpet-lab",
        description="Multiple-network poroelasticity: discretization and "
        "stability experiments.",
    )
    parser.add_argument(
        "--quiet", action="store_true", help="Only log warnings and errors"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def problem_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument(
            "--params", required=True, help="Problem TOML (parameters, mesh, dg)"
        )
        sub.add_argument("--nx", type=int, help="Override the mesh size")
        return sub

    def add_out(sub: argparse.ArgumentParser, help_text: str) -> None:
        sub.add_argument("--out", type=Path, help=help_text)

    def add_ledger(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--ledger", type=Path, help="Append run events (JSON lines)")

    def add_time_options(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--loads", choices=LOAD_PRESETS, default="pulse")
        sub.add_argument(
            "--method",
            choices=[m.value for m in SolveMethod],
            default=SolveMethod.MINRES.value,
        )
        sub.add_argument("--tol", type=float, default=1e-8)
        sub.add_argument(
            "--velocity-space",
            choices=[SpaceKind.RT0.value, SpaceKind.BDM1.value],
            default=SpaceKind.RT0.value,
        )

    problem_parser("derive", "Print derived coefficients and network weights")

    lemmas = subparsers.add_parser("lemmas", help="Randomized closed-form checks")
    lemmas.add_argument("--draws", type=int, default=1000)
    lemmas.add_argument("--seed", type=int, default=0)
    lemmas.add_argument("--max-networks", type=int, default=8)

    assemble = problem_parser("assemble", "Export A, W, B_uv, B_p (Matrix Market)")
    assemble.add_argument("--out", type=Path, required=True, help="Output directory")
    assemble.add_argument(
        "--velocity-space",
        choices=[SpaceKind.RT0.value, SpaceKind.BDM1.value],
        default=SpaceKind.RT0.value,
    )
    assemble.add_argument(
        "--mesh-dump", action="store_true", help="Also write mesh.txt"
    )

    solve = problem_parser("solve", "One time step from rest")
    add_time_options(solve)
    add_out(solve, "Trajectory CSV (default stdout)")

    trajectory = problem_parser("run", "March over [0, T]")
    add_time_options(trajectory)
    trajectory.add_argument("--steps", type=int, help="Number of steps (default T/tau)")
    add_out(trajectory, "Trajectory CSV (default stdout)")
    add_ledger(trajectory)

    sweep_parser = subparsers.add_parser("sweep", help="Robustness sweep table")
    sweep_parser.add_argument("--config", required=True, help="Sweep TOML")
    sweep_parser.add_argument("--jobs", type=int, default=1)
    sweep_parser.add_argument(
        "--sanity",
        action="store_true",
        help="Replace A by the norm matrix (kappa = 1, one iteration)",
    )
    add_out(sweep_parser, "Sweep CSV (default stdout)")
    add_ledger(sweep_parser)

    constants = subparsers.add_parser("constants", help="Measured FEM constants")
    constants.add_argument("--sizes", type=int, nargs="+", default=[2, 4, 8])
    constants.add_argument("--penalty", type=float, default=10.0)
    add_out(constants, "Constants CSV (default stdout)")

    converge = problem_parser("converge-time", "Temporal self-convergence")
    converge.add_argument(
        "--taus", type=float, nargs="+", default=[0.05, 0.025, 0.0125]
    )
    converge.add_argument("--loads", choices=LOAD_PRESETS, default="pulse")
    converge.add_argument(
        "--velocity-space",
        choices=[SpaceKind.RT0.value, SpaceKind.BDM1.value],
        default=SpaceKind.BDM1.value,
    )
    converge.add_argument(
        "--expect-order", type=float, help="Fail unless the rate is within 0.2"
    )
    add_out(converge, "Convergence CSV (default stdout)")
    return parser


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info("wrote %s", out)


def _problem(args: argparse.Namespace):
    problem = load_problem(args.params)
    nx = args.nx or problem.nx
    ny = args.nx or problem.ny
    return problem, build_structured_mesh(nx, ny)


def _ledger(args: argparse.Namespace, kind: str) -> RunLedger:
    run_id = new_run_id(kind)
    if getattr(args, "ledger", None) is None:
        return InMemoryRunLedger(run_id)
    return JsonlRunLedger(args.ledger, run_id)


def _matrix(values: np.ndarray) -> str:
    return json.dumps([[float(v) for v in row] for row in values])


def handle_derive_command(args: argparse.Namespace) -> None:
    params = load_problem(args.params).params
    derived = derive_coefficients(params)
    weights = build_norm_weights(params, derived)
    lines = []
    for i in range(params.n):
        k = i + 1
        lines += [
            f"alpha_{k} = {float(derived.alpha[i])!r}",
            f"gamma_{k} = {float(derived.gamma[i])!r}",
            f"gamma_v_{k} = {float(derived.gamma_v[i])!r}",
        ]
    lines += [
        f"gamma_u = {float(derived.gamma_u)!r}",
        f"gamma_max = {float(derived.gamma_max)!r}",
        f"beta = {_matrix(derived.beta)}",
        f"Lambda_1 = {_matrix(weights.lambda1)}",
        f"Lambda_2 = {_matrix(weights.lambda2)}",
        f"Lambda_3 = {_matrix(weights.lambda3)}",
        f"Lambda = {_matrix(weights.lam)}",
        f"Lambda_uv = {_matrix(weights.lambda_uv)}",
        f"condition = {weights.condition!r}",
    ]
    print("\n".join(lines))


def handle_lemmas_command(args: argparse.Namespace) -> None:
    results = run_lemma_suite(args.draws, args.seed, args.max_networks)
    for name, result in results.items():
        print(f"{name}: {result.passed}/{result.total} passed")
        for failure in result.failures[:5]:
            logger.error("%s", failure)
    if not all(result.ok for result in results.values()):
        raise VerificationFailed("closed-form checks failed")


def handle_assemble_command(args: argparse.Namespace) -> None:
    problem, mesh = _problem(args)
    system = assemble_operator(
        mesh, problem.params, problem.dg, velocity_space=args.velocity_space
    )
    written = export_system(system, args.out)
    if args.mesh_dump:
        written.append(write_mesh(mesh, args.out / "mesh.txt"))
    for path in written:
        print(path)


def _trajectory(
    args: argparse.Namespace, n_steps: int | None, ledger: RunLedger | None = None
):
    problem, mesh = _problem(args)
    system = assemble_operator(
        mesh, problem.params, problem.dg, velocity_space=args.velocity_space
    )
    loads = preset_loads(args.loads, problem.params.n)
    return run(
        system, loads, None, n_steps, method=args.method, tol=args.tol, ledger=ledger
    )


def handle_solve_command(args: argparse.Namespace) -> None:
    trajectory = _trajectory(args, 1)
    _emit(render_csv(TRAJECTORY_COLUMNS, trajectory.rows), args.out)


def handle_run_command(args: argparse.Namespace) -> None:
    ledger = _ledger(args, "trajectory")
    trajectory = _trajectory(args, args.steps, ledger)
    _emit(render_csv(TRAJECTORY_COLUMNS, trajectory.rows), args.out)


def handle_sweep_command(args: argparse.Namespace) -> None:
    config = load_sweep(args.config)
    ledger = _ledger(args, "sweep")
    result = sweep(config, jobs=args.jobs, ledger=ledger, sanity=args.sanity)
    _emit(render_csv(SWEEP_COLUMNS, result.rows), args.out)
    spread = result.kappa_spread()
    if spread is not None:
        logger.info("kappa spread over the sweep: %.4g", spread)
    problems = result.failed_checks(config)
    if problems:
        raise VerificationFailed(
            f"{len(problems)} sweep acceptance check(s) failed: " + "; ".join(problems)
        )


def handle_constants_command(args: argparse.Namespace) -> None:
    reports = measure_fem_constants(args.sizes, DgConfig(penalty=args.penalty))
    rows = []
    for report in reports:
        row = {name: getattr(report, name, None) for name in CONSTANTS_COLUMNS}
        row["h"] = 1.0 / report.nx
        rows.append(row)
    _emit(render_csv(CONSTANTS_COLUMNS, rows), args.out)
    if not all(report.positive_where_claimed() for report in reports):
        raise VerificationFailed("a measured constant is not positive")


def handle_converge_time_command(args: argparse.Namespace) -> None:
    problem, mesh = _problem(args)
    loads = preset_loads(args.loads, problem.params.n)
    result = run_convergence(
        mesh,
        problem.params,
        loads,
        None,
        args.taus,
        problem.dg,
        velocity_space=args.velocity_space,
    )
    _emit(render_csv(CONVERGENCE_COLUMNS, result.rows), args.out)
    if args.expect_order is None:
        return
    order = result.order
    if order is None or abs(order - args.expect_order) > ORDER_BAND:
        raise VerificationFailed(
            f"observed order {order} is not within {ORDER_BAND} of "
            f"{args.expect_order}"
        )


COMMANDS = {
    "derive": handle_derive_command,
    "lemmas": handle_lemmas_command,
    "assemble": handle_assemble_command,
    "solve": handle_solve_command,
    "run": handle_run_command,
    "sweep": handle_sweep_command,
    "constants": handle_constants_command,
    "converge-time": handle_converge_time_command,
}

USAGE_ERRORS = (
    ConfigError,
    LoadError,
    MeshError,
    ParameterError,
    SingularWeightsError,
    CoercivityError,
)
FAILURES = (VerificationFailed, LemmaViolation, StepError, SolverBreakdownError)


def main(argv: list[str] | None = None) -> int:
    args = create_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except USAGE_ERRORS as error:
        logger.error("%s", error)
        return 2
    except FAILURES as error:
        logger.error("%s", error)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
