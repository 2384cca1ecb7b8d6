"""Command-line entry point.

    galerkin-adversary solve     --config CFG --rhs NAME|@WITNESS --out REPORT
    galerkin-adversary adversary --config CFG --out WITNESS [--report REPORT]
    galerkin-adversary sweep     --config CFG --n 2,4,8,16 --out TABLE.csv

Exit codes: 0 success, 1 certificate check failed, 2 singular Galerkin
system, 3 independence failure, 4 no witness, 5 sweep rows errored,
64 config error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import errors
from .adversary import (
    construct_witness,
    extend_trial_system,
    solution_error_bound,
    sweep,
    verify_witness,
    worst_case_residual,
)
from .function_space import GridFunction, l2_norm
from .functionals import apply_all
from .galerkin import build_solution, coefficients_solve, orthogonality_defect, residual_norm
from .scenario import ScenarioConfig, dump_json, load_witness, num, nums, resolve_representer, witness_document

log = logging.getLogger("galerkin_adversary")

EXIT_OK = 0
EXIT_CERTIFICATE = 1
EXIT_SINGULAR = 2
EXIT_INDEPENDENCE = 3
EXIT_NO_WITNESS = 4
EXIT_SWEEP_PARTIAL = 5
EXIT_CONFIG = 64

CSV_COLUMNS = ("n", "t", "det", "cond", "norm", "orth_defect", "residual", "sup_residual", "wall_ms", "error")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, errors.ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, errors.SingularSystemError):
        return EXIT_SINGULAR
    if isinstance(exc, errors.IndependenceLossError):
        return EXIT_INDEPENDENCE
    if isinstance(exc, errors.NoWitnessError):
        return EXIT_NO_WITNESS
    if isinstance(exc, (errors.InvalidCountError, errors.InvalidRangeError, errors.IncompatibleSpacesError)):
        return EXIT_CONFIG
    return EXIT_CERTIFICATE


def _system_summary(system) -> dict | None:
    if system is None:
        return None
    return {
        "det": num(system.det),
        "condition": num(system.condition_estimate) if np.isfinite(system.condition_estimate) else None,
        "correct": system.correct,
    }


def _timing(start: float, enabled: bool) -> dict | None:
    return {"wall_ms": round(1e3 * (time.perf_counter() - start), 3)} if enabled else None


def run_solve(config_path, rhs_name: str, out_path, timing: bool = True) -> int:
    """Solve ``L u = f`` with the configured method and write a report."""
    start = time.perf_counter()
    scenario = ScenarioConfig.load(config_path)
    method = scenario.method()
    report: dict = {"command": "solve", "scenario": scenario.raw, "rhs": rhs_name}
    try:
        images = extend_trial_system(method)
        report["galerkin"] = _system_summary(method.galerkin_system(images))
        resolved = method.resolve(images)
        stored = None
        if rhs_name.startswith("@"):
            doc = load_witness(rhs_name[1:])
            if len(doc["samples"]) != images.grid.size:
                raise errors.ConfigError("witness samples do not match the configured grid")
            f = GridFunction(images.grid, doc["samples"])
            stored = doc["certificate"]["residual"]
        else:
            f = resolve_representer(rhs_name, images)

        if resolved.coupled:
            coeffs = coefficients_solve(resolved.system, f)
            source = "galerkin"
        else:
            coeffs = apply_all(resolved.coeffs, f)
            source = "coefficient_functionals"
        sol = build_solution(method.op, images.psi[: method.n], coeffs, images.grid, images.x_grid)
        residual = residual_norm(f, sol)
        report.update(
            coefficient_source=source,
            coefficients=nums(coeffs),
            rhs_norm=num(l2_norm(f)),
            residual_norm=num(residual),
            orthogonality_defect=num(orthogonality_defect(f, sol, resolved.tests)),
        )
        if stored is not None:
            report["stored_residual"] = stored
            report["replay_gap"] = num(abs(residual - stored))
        code = EXIT_OK
    except errors.GalerkinError as exc:
        code = exit_code_for(exc)
        report["error"] = {"code": errors.error_code(exc), "message": str(exc)}
    report["exit_code"] = code
    report["timing"] = _timing(start, timing)
    dump_json(report, out_path)
    return code


def run_adversary(config_path, out_path, report_path=None, timing: bool = True) -> int:
    """Construct and certify an adversarial right-hand side."""
    start = time.perf_counter()
    scenario = ScenarioConfig.load(config_path)
    method = scenario.method()
    tol = scenario.tolerances
    report_path = Path(report_path) if report_path else Path(str(out_path) + ".report.json")
    report: dict = {"command": "adversary", "scenario": scenario.raw, "n": method.n, "t": method.t}
    system = None
    try:
        images = extend_trial_system(method)
        system = method.galerkin_system(images)
        resolved = method.resolve(images)
        if resolved.coupled and not system.correct:
            raise errors.SingularSystemError(f"Galerkin matrix is degenerate (det = {system.det:.3g})")
        witness = construct_witness(method, images, resolved)
        cert = verify_witness(witness, method, images, tol)
        worst = worst_case_residual(method, images, resolved)
        checks = {c.name: {"value": num(c.value), "limit": c.limit, "passed": c.passed} for c in cert.checks}
        dump_json(witness_document(scenario, images, witness, checks), out_path)
        report["witness"] = {
            "path": str(out_path),
            "norm": num(witness.norm),
            "orthogonality_defect": num(witness.orthogonality_defect),
            "residual": num(witness.residual),
            "epsilon_floor": num(witness.epsilon_floor),
        }
        report["worst_case"] = {
            "sup_residual": num(worst.sup_residual),
            "constraint_defect": num(worst.constraint_defect),
            "feasible_dimension": worst.feasible_dimension,
        }
        try:
            bound = solution_error_bound(method, images, witness)
            report["solution_error"] = {
                "error": num(bound.error),
                "operator_norm": num(bound.operator_norm),
                "lower_bound": num(bound.bound),
                "holds": bound.holds,
            }
        except errors.SingularGramError as exc:
            report["solution_error"] = {"error": None, "message": str(exc)}
        verdict = {c.name: c.passed for c in cert.checks[:3]}
        verdict["passed"] = all(verdict.values())
        report["verdict"] = verdict
        code = EXIT_OK if verdict["passed"] else EXIT_CERTIFICATE
    except errors.GalerkinError as exc:
        code = exit_code_for(exc)
        report["error"] = {"code": errors.error_code(exc), "message": str(exc)}
        if isinstance(exc, errors.CannotExtendError):
            report["error"]["achieved_rank"] = exc.achieved_rank
    report["galerkin"] = _system_summary(system)
    report["exit_code"] = code
    report["timing"] = _timing(start, timing)
    dump_json(report, report_path)
    return code


def parse_n_list(text: str) -> list[tuple[int, int | None]]:
    """``"2,4,8:16"`` -> ``[(2, None), (4, None), (8, 16)]``; ``n:t`` overrides T."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        n_text, _, t_text = item.partition(":")
        try:
            n = int(n_text)
            t = int(t_text) if t_text else None
        except ValueError:
            raise errors.ConfigError(f"bad --n entry {item!r}") from None
        if n < 2:
            raise errors.ConfigError(f"N must be >= 2, got {n}")
        out.append((n, t))
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    return repr(num(value))


def run_sweep(config_path, n_list, out_csv, timing: bool = True, max_workers=None) -> int:
    """One CSV row per N; see ``CSV_COLUMNS`` for the fixed header."""
    scenario = ScenarioConfig.load(config_path)
    if isinstance(n_list, str):
        n_list = parse_n_list(n_list)
    tol = scenario.tolerances
    configs = []
    for n, t in n_list:
        try:
            configs.append(scenario.with_n(n, t).method(label=f"N={n}"))
        except errors.InvalidCountError as exc:
            raise errors.ConfigError(str(exc)) from exc
    entries = sweep(configs, tol, max_workers=max_workers)

    failed = False
    errored = False
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for e in entries:
            sys_ = e.system
            det = sys_.det if sys_ is not None else None
            cond = sys_.condition_estimate if sys_ is not None and np.isfinite(sys_.condition_estimate) else None
            w = e.witness
            row = [
                e.n,
                e.t,
                _cell(det),
                _cell(cond),
                _cell(w.norm if w else None),
                _cell(w.orthogonality_defect if w else None),
                _cell(w.residual if w else None),
                _cell(e.worst.sup_residual if e.worst else None),
                f"{e.wall_ms:.3f}" if timing else "",
                e.error or "",
            ]
            writer.writerow(row)
            if e.error:
                errored = True
                log.warning("N=%d: %s", e.n, e.message)
            elif w.residual < 1.0 - tol.residual_tol:
                failed = True
    if errored:
        return EXIT_SWEEP_PARTIAL
    return EXIT_CERTIFICATE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="galerkin-adversary",
        description="Galerkin solves and certified adversarial right-hand sides.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser.add_argument(
        "--no-timing",
        action="store_true",
        help="omit wall-clock fields so outputs are byte-reproducible",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve L u = f for a catalog or witness right-hand side")
    p.add_argument("--config", required=True)
    p.add_argument("--rhs", required=True, help="catalog name (image:1, trig:3, bump:0.5) or @witness.json")
    p.add_argument("--out", required=True)

    p = sub.add_parser("adversary", help="construct and certify an adversarial right-hand side")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="witness file")
    p.add_argument("--report", help="report file (default: <out>.report.json)")

    p = sub.add_parser("sweep", help="certify a range of N and write a CSV table")
    p.add_argument("--config", required=True)
    p.add_argument("--n", default="2,4,8,16", help="comma list of N, optionally N:T")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    timing = not args.no_timing
    try:
        if args.command == "solve":
            code = run_solve(args.config, args.rhs, args.out, timing)
        elif args.command == "adversary":
            code = run_adversary(args.config, args.out, args.report, timing)
        else:
            code = run_sweep(args.config, args.n, args.out, timing)
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    log.info("%s finished with exit code %d", args.command, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
