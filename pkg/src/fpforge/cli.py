"""Command-line surface: compile / solve / verify / report / selftest.

Exit codes: 0 pass or converged, 1 usage or parse errors, 2 verification
failure, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields, replace

from . import io as fio
from .circuit import Box, FormatError, from_text, to_text
from .pipeline import compile_instance, run_instance, verify_solution
from .solver import SolverConfig, multistart
from .compilers import Compiled

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2
EXIT_NOT_CONVERGED = 3


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    p.add_argument("--anderson", type=int, default=None, dest="anderson_memory")
    p.add_argument("--config", type=str, default=None, help="JSON file with solver settings")


def _solver_config(args) -> SolverConfig:
    cfg = SolverConfig()
    if args.config:
        with open(args.config) as f:
            loaded = json.load(f)
        names = {f.name for f in fields(SolverConfig)}
        unknown = set(loaded) - names
        if unknown:
            raise fio.SchemaError("config", f"unknown solver settings {sorted(unknown)}")
        cfg = replace(cfg, **loaded)
    overrides = {
        name: getattr(args, name)
        for name in ("tol", "alpha", "restarts", "seed", "max_iters", "anderson_memory")
        if getattr(args, name, None) is not None
    }
    return replace(cfg, **overrides)


def _load_instance(path: str) -> tuple[fio.InstanceFile, bytes]:
    with open(path, "rb") as f:
        data = f.read()
    return fio.parse_instance(data), data


def _cmd_compile(args) -> int:
    instance, _ = _load_instance(args.instance)
    compiled = compile_instance(instance)
    text = to_text(compiled.circuit, compiled.box)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
        print(f"wrote {args.output}: {len(compiled.circuit.nodes)} nodes, "
              f"{compiled.circuit.input_arity} inputs")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _summarize(report_dict: dict) -> str:
    fp = report_dict["fixed_point"]
    lines = [
        f"converged: {fp['converged']}  residual: {fp['residual']:.3e}  "
        f"iterations: {fp['iterations']}  restart: {fp['restart_index']}"
    ]
    point = fp["point"]
    shown = ", ".join(f"{v:.6g}" for v in point[:12])
    suffix = ", ..." if len(point) > 12 else ""
    lines.append(f"point[{len(point)}]: [{shown}{suffix}]")
    ver = report_dict.get("verification")
    if ver is not None:
        worst = max(ver["violations"].values(), default=0.0)
        lines.append(f"verification: {'PASS' if ver['passed'] else 'FAIL'} "
                     f"(worst violation {worst:.3e})")
        for note in ver.get("notes", []):
            lines.append(f"  note: {note}")
    lines.append(f"wall time: {report_dict['timing_s']:.2f}s")
    return "\n".join(lines)


def _cmd_solve(args) -> int:
    config = _solver_config(args)
    if args.circuit:
        with open(args.circuit) as f:
            circ, box = from_text(f.read())
        if box is None:
            print("error: circuit file has no BOX line", file=sys.stderr)
            return EXIT_USAGE
        if args.grid:
            return _grid_mode(circ, box, config)
        report = multistart(circ, box, config)
        print(
            f"converged: {report.converged}  residual: {report.residual:.3e}  "
            f"iterations: {report.iterations}"
        )
        print("point:", " ".join(f"{v:.12g}" for v in report.point))
        return EXIT_OK if report.converged else EXIT_NOT_CONVERGED
    instance, data = _load_instance(args.instance)
    if args.grid:
        compiled = compile_instance(instance)
        return _grid_mode(compiled.circuit, compiled.box, config)
    run, report, verification, _ = run_instance(instance, config, instance_bytes=data)
    if args.output:
        with open(args.output, "wb") as f:
            f.write(run.to_json())
    print(_summarize(json.loads(run.to_json())))
    if not report.converged:
        return EXIT_NOT_CONVERGED
    if verification is not None and not verification.passed:
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def _grid_mode(circ, box: Box, config: SolverConfig) -> int:
    from .solver import DimensionTooLarge, grid_fixed_points

    try:
        points = grid_fixed_points(circ, box, config=config)
    except DimensionTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{len(points)} candidate fixed points")
    for p in points:
        print("  " + " ".join(f"{v:.12g}" for v in p))
    return EXIT_OK if points else EXIT_NOT_CONVERGED


def _cmd_verify(args) -> int:
    instance, _ = _load_instance(args.instance)
    with open(args.point) as f:
        point = fio.parse_point_file(f.read())
    compiled = compile_instance(instance)
    primary_dim = max(stop for _, stop in compiled.layout.values())
    if len(point) < primary_dim:
        print(
            f"error: point file has {len(point)} coordinates, need {primary_dim}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    result = verify_solution(instance, compiled, point, eps=args.eps)
    if result is None:
        print("no verifier for this instance kind", file=sys.stderr)
        return EXIT_USAGE
    worst = max(result.violations.values(), default=0.0)
    print(f"verification: {'PASS' if result.passed else 'FAIL'} (worst violation {worst:.3e})")
    for name, value in sorted(result.violations.items()):
        print(f"  {name}: {value:.3e}")
    for note in result.notes:
        print(f"  note: {note}")
    return EXIT_OK if result.passed else EXIT_VERIFY_FAILED


def _cmd_report(args) -> int:
    with open(args.report, "rb") as f:
        run = fio.RunReport.from_json(f.read())
    print(f"instance digest: {run.instance_digest}")
    cfg = ", ".join(f"{k}={v}" for k, v in sorted(run.config.items()))
    print(f"solver config: {cfg}")
    print(
        _summarize(
            {
                "fixed_point": run.fixed_point,
                "verification": run.verification,
                "timing_s": run.timing_s,
            }
        )
    )
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import acceptance

    selection = None
    if args.criteria:
        selection = [int(t) for t in args.criteria.split(",")]
    results = acceptance.run_all(selection)
    ok = all(r.passed for r in results)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fpforge",
        description="Compile equilibrium problems to fixed-point circuits, solve, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="lower an instance to a circuit file")
    p.add_argument("instance")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(fn=_cmd_compile)

    p = sub.add_parser("solve", help="find a fixed point and verify it")
    p.add_argument("instance", nargs="?", default=None)
    p.add_argument("--circuit", default=None, help="solve a standalone circuit file")
    p.add_argument("--grid", action="store_true", help="exhaustive oracle (dim <= 3)")
    p.add_argument("-o", "--output", default=None, help="write the RunReport JSON here")
    _add_solver_flags(p)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("verify", help="check a point file against an instance")
    p.add_argument("instance")
    p.add_argument("point")
    p.add_argument("--eps", type=float, default=None)
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="summarize a RunReport JSON file")
    p.add_argument("report")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("selftest", help="run the acceptance criteria")
    p.add_argument("--criteria", default=None, help="comma-separated subset, e.g. 1,4,9")
    p.set_defaults(fn=_cmd_selftest)

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    if args.command == "solve" and not args.instance and not args.circuit:
        print("error: solve needs an instance or --circuit", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (fio.ParseError, fio.SchemaError, FormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
