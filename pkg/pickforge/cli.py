"""
The `pickforge` command line: check, solve and verify problem files.

Problem files are JSON objects {"kind": ..., "problem": {...}, "tolerances": {...}, "seed": ...} with kind one of
nevanlinna-pick, aip, hs-interpolation or boundary. `solve --param` takes central, random or the path of a parameter
file. Exit codes: 0 success, 1 failed verification, 2 input error, 3 infeasible problem, 4 numerical failure.
"""

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Literal, Optional, Sequence, TypeVar, Union

import numpy as np
from dotenv import find_dotenv, load_dotenv
from pydantic import ValidationError

from pickforge.boundary import BoundaryProblem, cj_check, to_hs_problem, verify_boundary_solution
from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig, resolve_seed
from pickforge.errors import DegeneratePickMatrix, FormattedPickForgeError, InfeasibleProblem, InputError
from pickforge.errors import NumericalFailure, ProblemFileError, VerificationFailure
from pickforge.hs_interp import HSProblemData, HSSolution, KernelCombination, check_admissible, hs_solvable
from pickforge.hs_interp import kernel_gram, parametrize_solutions, solve_min_norm, verify_hs_solution
from pickforge.models import Immutable, VerificationReport, encode_matrix
from pickforge.parametrize import build_theta_explicit, lft, require_strict, zero_param
from pickforge.pick import InterpolationData, build_pick, check_solvable, verify_interpolant
from pickforge.realizations import Realization, random_disk_points, random_schur
from pickforge.redheffer import build_colligation, redheffer_apply, sigma

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

ProblemKind = Literal["nevanlinna-pick", "aip", "hs-interpolation", "boundary"]
ParamSource = Union[Literal["central", "random"], Path]
Decoded = TypeVar("Decoded")

RANDOM_PARAM_STATES = 2
RANDOM_KERNEL_POINTS = 2
RANDOM_KERNEL_RADIUS = 0.5
CSV_HEADER = ("z_re", "z_im", "min_eig")


class ProblemFile(Immutable):
    """
    A problem file: the problem payload of its kind, an optional tolerance block and an optional seed.
    """

    kind: ProblemKind
    problem: dict[str, Any]
    tolerances: Optional[dict[str, Any]] = None
    seed: Optional[int] = None


def _read_json(path: Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ProblemFileError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_problem(path: Path) -> ProblemFile:
    """
    Parse and validate a problem file.
    """
    payload = _read_json(path)
    if not isinstance(payload, dict):
        raise ProblemFileError(f"{path}: a problem file must contain a JSON object")
    return _decode(path, lambda fields: ProblemFile(**fields), payload)


def _decode(source: Any, decoder: Callable[[Any], Decoded], payload: Any) -> Decoded:
    """
    Run a decoder on a JSON payload; malformed payloads become a ProblemFileError naming the source.
    """
    try:
        return decoder(payload)
    except np.linalg.LinAlgError:
        raise
    except (ValidationError, KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"{source}: malformed payload", original_error=exc) from exc


def load_parameter(path: Path) -> dict[str, Any]:
    """
    Read the JSON object of a parameter file given to `solve --param`.
    """
    payload = _read_json(path)
    if not isinstance(payload, dict):
        raise ProblemFileError(f"{path}: a parameter file must contain a JSON object")
    return payload


def _tolerances(problem_file: ProblemFile, args: argparse.Namespace) -> ToleranceConfig:
    cfg = DEFAULT_TOLERANCES.merged(**(problem_file.tolerances or {}))
    return cfg.merged(
        residual_tol=args.tol,
        grid_boundary_points=args.grid,
        grid_interior_points=args.grid,
        truncation_tol=args.truncation,
    )


def _report_checks(report: VerificationReport) -> dict[str, Any]:
    return {
        "subject": report.subject,
        "passed": report.passed,
        "checks": [check.as_dict() for check in report.checks],
    }


def _write_csv(path: Path, report: VerificationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for sample in report.samples:
            writer.writerow(["%.17g" % sample.z_re, "%.17g" % sample.z_im, "%.17g" % sample.min_eig])


def _require_verified(report: VerificationReport) -> None:
    if not report.passed:
        failed = ", ".join(check.name for check in report.failed_checks())
        raise VerificationFailure(f"the computed solution failed its own verification ({failed})", report=report)


# nevanlinna-pick and aip


def _interpolation_data(problem_file: ProblemFile) -> InterpolationData:
    return _decode("problem", InterpolationData.from_json_dict, problem_file.problem)


def _check_interpolation(problem_file: ProblemFile, cfg: ToleranceConfig) -> tuple[dict[str, Any], bool]:
    data = _interpolation_data(problem_file)
    pick = build_pick(data, "stein", cfg)
    certificate = check_solvable(pick.P, cfg)
    report = {
        "pick_matrix": encode_matrix(pick.P),
        "stein_residual": pick.stein_residual,
        "certificate": certificate.as_dict(),
        "solvable": certificate.is_psd,
    }
    return report, certificate.is_psd


def _parameter_realization(path: Path) -> Realization:
    return _decode(path, Realization.from_json_dict, load_parameter(path))


def _solve_interpolation(
    problem_file: ProblemFile, param_source: ParamSource, cfg: ToleranceConfig, seed: int
) -> tuple[dict[str, Any], VerificationReport]:
    data = _interpolation_data(problem_file)
    pick_matrix = build_pick(data, "stein", cfg).P
    certificate = check_solvable(pick_matrix, cfg)
    if not certificate:
        raise InfeasibleProblem(
            f"the Pick matrix is not positive semidefinite (min eigenvalue {certificate.min_eigenvalue:.3e})",
            certificate=certificate,
        )

    param: Optional[Realization] = None
    try:
        require_strict(pick_matrix)
        strict = True
    except DegeneratePickMatrix:
        strict = False

    if strict:
        route = "lft"
        theta = build_theta_explicit(data, pick_matrix, cfg=cfg)
        if param_source == "central":
            param = zero_param(data.q, data.p)
        elif param_source == "random":
            param = random_schur(RANDOM_PARAM_STATES, data.q, data.p, seed)
        else:
            param = _parameter_realization(param_source)
        solution = lft(theta, param, cfg)
        unique = False
    else:
        route = "redheffer"
        sig = sigma(build_colligation(data, pick_matrix, cfg))
        unique = sig.trivial_defect
        if unique or param_source == "central":
            param = None
        elif param_source == "random":
            param = random_schur(RANDOM_PARAM_STATES, *sig.parameter_shape, seed)
        else:
            param = _parameter_realization(param_source)
        solution = redheffer_apply(sig, param, cfg)

    verification = verify_interpolant(data, solution, cfg, seed, pick_matrix)
    _require_verified(verification)
    report = {
        "route": route,
        "unique": unique,
        "certificate": certificate.as_dict(),
        "parameter": None if param is None else param.to_json_dict(),
        "solution": solution.to_json_dict(),
        "verification": _report_checks(verification),
    }
    return report, verification


# hs-interpolation and boundary


def _hs_problem(problem_file: ProblemFile, cfg: ToleranceConfig) -> tuple[HSProblemData, Optional[BoundaryProblem]]:
    if problem_file.kind == "boundary":
        boundary = _decode("problem", BoundaryProblem.from_json_dict, problem_file.problem)
        return to_hs_problem(boundary, cfg), boundary
    prob = _decode("problem", lambda payload: HSProblemData.from_json_dict(payload, cfg), problem_file.problem)
    admissibility = check_admissible(prob, cfg)
    if not admissibility.passed:
        failed = ", ".join(check.name for check in admissibility.failed_checks())
        raise InputError(f"the H(S) problem is not admissible ({failed})", report=admissibility)
    return prob, None


def _check_hs(problem_file: ProblemFile, cfg: ToleranceConfig) -> tuple[dict[str, Any], bool]:
    report: dict[str, Any] = {}
    if problem_file.kind == "boundary":
        boundary = _decode("problem", BoundaryProblem.from_json_dict, problem_file.problem)
        cj = cj_check(boundary.S, boundary.point, boundary.n, boundary.weight, cfg)
        report["caratheodory_julia"] = {
            "holds": cj.holds,
            "limit": None if cj.limit is None else encode_matrix(cj.limit),
        }
        if not cj.holds:
            report["solvable"] = False
            return report, False
    prob, _ = _hs_problem(problem_file, cfg)
    certificate = hs_solvable(prob.P, prob.y, cfg)
    report.update(
        {
            "pick_matrix": encode_matrix(prob.P),
            "certificate": certificate.as_dict(),
            "solvable": certificate.is_psd,
        }
    )
    return report, certificate.is_psd


def _random_kernel_combination(sol: HSSolution, seed: int, cfg: ToleranceConfig) -> KernelCombination:
    """
    A kernel combination at two random points scaled to half the norm budget.
    """
    if sol.unique or sol.carrier is None:
        return KernelCombination()
    rng = np.random.default_rng(seed)
    points = random_disk_points(rng, RANDOM_KERNEL_POINTS, RANDOM_KERNEL_RADIUS)
    dim = sol.kernel_dim
    coefficients = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in points]
    h = KernelCombination.from_values(points, coefficients)
    norm = float(np.sqrt(max(0.0, np.real(kernel_gram(h, h, sol.parameter, dim, cfg)))))
    if norm <= cfg.psd_tol:
        return KernelCombination()
    factor = 0.5 * sol.norm_budget / norm
    return KernelCombination.from_values(points, [factor * coefficient for coefficient in coefficients])


def _solve_hs(
    problem_file: ProblemFile, param_source: ParamSource, cfg: ToleranceConfig, seed: int
) -> tuple[dict[str, Any], VerificationReport]:
    prob, boundary = _hs_problem(problem_file, cfg)
    sol = solve_min_norm(prob, cfg)
    if param_source == "central":
        h = KernelCombination()
    elif param_source == "random":
        h = _random_kernel_combination(sol, seed, cfg)
    else:
        h = _decode(param_source, KernelCombination.from_json_dict, load_parameter(param_source))
    solution = parametrize_solutions(prob, h, cfg, sol)

    if boundary is not None:
        verification = verify_boundary_solution(boundary, solution, cfg, seed, prob)
    else:
        verification = verify_hs_solution(prob, solution, cfg, seed)
    _require_verified(verification)
    report = {
        "route": sol.route,
        "unique": sol.unique,
        "central_norm": sol.central_norm,
        "norm_budget": sol.norm_budget,
        "range_chain_trivial": sol.range_chain_trivial,
        "parameter": None if h.empty else h.as_dict(),
        "solution": solution.to_json_dict(),
        "verification": _report_checks(verification),
    }
    return report, verification


# commands


def _candidate(path: Path) -> Realization:
    payload = _read_json(path)
    if isinstance(payload, dict) and "solution" in payload:
        payload = payload["solution"]
    if not isinstance(payload, dict):
        raise ProblemFileError(f"{path}: a candidate must be a realization object")
    return _decode(path, Realization.from_json_dict, payload)


def run_check(problem_file: ProblemFile, cfg: ToleranceConfig) -> tuple[dict[str, Any], int]:
    """
    Build the Pick object of the problem and report its solvability certificate.
    """
    if problem_file.kind in ("nevanlinna-pick", "aip"):
        report, solvable = _check_interpolation(problem_file, cfg)
    else:
        report, solvable = _check_hs(problem_file, cfg)
    return report, EXIT_OK if solvable else EXIT_INFEASIBLE


def run_solve(
    problem_file: ProblemFile, param_source: ParamSource, cfg: ToleranceConfig, seed: int
) -> tuple[dict[str, Any], VerificationReport]:
    """
    Solve the problem with the requested parameter; the solution is verified before it is reported.
    """
    if problem_file.kind in ("nevanlinna-pick", "aip"):
        return _solve_interpolation(problem_file, param_source, cfg, seed)
    return _solve_hs(problem_file, param_source, cfg, seed)


def run_verify(
    problem_file: ProblemFile, candidate: Realization, cfg: ToleranceConfig, seed: int
) -> VerificationReport:
    """
    Run the verifier of the problem kind on a candidate solution.
    """
    if problem_file.kind in ("nevanlinna-pick", "aip"):
        return verify_interpolant(_interpolation_data(problem_file), candidate, cfg, seed)
    prob, boundary = _hs_problem(problem_file, cfg)
    if boundary is not None:
        return verify_boundary_solution(boundary, candidate, cfg, seed, prob)
    return verify_hs_solution(prob, candidate, cfg, seed)


def _execute(args: argparse.Namespace) -> tuple[dict[str, Any], int]:
    problem_file = load_problem(args.problem)
    cfg = _tolerances(problem_file, args)
    seed = resolve_seed(args.seed, problem_file.seed)
    logger.debug("%s %s (kind %s, seed %d)", args.command, args.problem, problem_file.kind, seed)
    report: dict[str, Any] = {"command": args.command, "kind": problem_file.kind, "seed": seed}

    if args.command == "check":
        body, exit_code = run_check(problem_file, cfg)
        report.update(body)
        return report, exit_code

    if args.command == "solve":
        body, verification = run_solve(problem_file, args.param, cfg, seed)
        report.update(body)
        report["param_source"] = str(args.param)
    else:
        verification = run_verify(problem_file, _candidate(args.candidate), cfg, seed)
        report["verification"] = _report_checks(verification)
    if args.csv is not None:
        _write_csv(args.csv, verification)
    return report, EXIT_OK if verification.passed else EXIT_VERIFICATION_FAILED


def _error_report(args: argparse.Namespace, exc: Exception, exit_code: int) -> dict[str, Any]:
    message = exc.render() if isinstance(exc, FormattedPickForgeError) else f"{type(exc).__name__}: {exc}"
    report: dict[str, Any] = {
        "command": args.command,
        "error": {"type": type(exc).__name__, "message": message, "exit_code": exit_code},
    }
    metadata = getattr(exc, "metadata", {})
    for key in ("certificate", "report"):
        value = metadata.get(key)
        if isinstance(value, VerificationReport):
            report[key] = _report_checks(value)
        elif isinstance(value, Immutable):
            report[key] = value.as_dict()
    return report


def _emit(report: dict[str, Any], output: Optional[Path]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="\n")


def _param_source(value: str) -> ParamSource:
    return value if value in ("central", "random") else Path(value)


def build_parser() -> argparse.ArgumentParser:
    """
    The argument parser of the `pickforge` command.
    """
    parser = argparse.ArgumentParser(prog="pickforge", description="Norm-constrained Schur-class interpolation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level on stderr.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", type=Path, help="Path to the problem file (JSON).")
    common.add_argument("--tol", type=float, default=None, help="Residual tolerance (overrides the problem file).")
    common.add_argument("--grid", type=int, default=None, help="Number of sampling points on the circle and inside.")
    common.add_argument("--truncation", type=float, default=None, help="Truncation tolerance of power series.")
    common.add_argument("--seed", type=int, default=None, help="Random seed (falls back to PICKFORGE_SEED).")
    common.add_argument("--output", type=Path, default=None, help="Write the report here instead of stdout.")
    common.add_argument("--timing", action="store_true", help="Add wall-clock timing to the report.")

    subparsers.add_parser("check", parents=[common], help="Report whether the problem is solvable.")
    solve = subparsers.add_parser("solve", parents=[common], help="Compute and verify a solution.")
    solve.add_argument(
        "--param",
        type=_param_source,
        default="central",
        metavar="{central,random,PATH}",
        help="Free parameter: the central choice, a seeded random one or a parameter file.",
    )
    solve.add_argument("--csv", type=Path, default=None, help="Write sampled kernel eigenvalues as CSV.")
    verify = subparsers.add_parser("verify", parents=[common], help="Verify a candidate solution.")
    verify.add_argument("candidate", type=Path, help="Path to the candidate realization (JSON).")
    verify.add_argument("--csv", type=Path, default=None, help="Write sampled kernel eigenvalues as CSV.")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the `pickforge` command.
    """
    load_dotenv(find_dotenv(usecwd=True))
    args = build_parser().parse_args(argv)
    if not hasattr(args, "csv"):
        args.csv = None
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    started = time.perf_counter()
    try:
        report, exit_code = _execute(args)
    except (InputError, ValidationError) as exc:
        report, exit_code = _error_report(args, exc, EXIT_INPUT), EXIT_INPUT
    except InfeasibleProblem as exc:
        report, exit_code = _error_report(args, exc, EXIT_INFEASIBLE), EXIT_INFEASIBLE
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        report, exit_code = _error_report(args, exc, EXIT_NUMERICAL), EXIT_NUMERICAL

    if exit_code >= EXIT_INPUT:
        print(report["error"]["message"] if "error" in report else "problem is infeasible", file=sys.stderr)
    if args.timing:
        report["timing"] = {"seconds": time.perf_counter() - started}
    _emit(report, args.output)
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
