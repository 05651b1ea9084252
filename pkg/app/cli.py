"""bootdiff command line: JSON reports on stdout, logs and errors on stderr."""

import argparse
import hashlib
import json
import logging
import sys
import time
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import pydantic

from app.config import toolkit
from app.core.exceptions import (
    BootdiffException,
    ConfigurationError,
    IndeterminateResultError,
)
from app.core.logging import setup_logging
from app.services import dynamics, family as family_service, montecarlo, reduction
from app.services.difficulty import DifficultyService, load_certificate
from app.services.stability import stability_profile
from schemas.difficulty import DifficultyResult, DifficultyStatus, SearchBudget
from schemas.dynamics import Rectangle, Torus
from schemas.geometry import Direction, LatticePoint
from schemas.report import CommandReport

logger = logging.getLogger(__name__)


def _pair(text: str) -> tuple[int, int]:
    try:
        x, y = text.split(",")
        return int(x), int(y)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y but got {text!r}") from None


def _dims(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH but got {text!r}") from None


# options that change how a command runs, not what it computes
_RUN_OPTIONS = ("handler", "verbose", "threads")


def _digest(args: argparse.Namespace, files: Sequence[str]) -> str:
    h = hashlib.sha256()
    options = {k: v for k, v in sorted(vars(args).items()) if k not in _RUN_OPTIONS}
    h.update(json.dumps(options, sort_keys=True, default=str).encode())
    for name in files:
        h.update(Path(name).read_bytes())
    return h.hexdigest()


def _budget(args: argparse.Namespace, diameter: int) -> SearchBudget:
    overrides = {
        "max_k": args.max_k,
        "gap_cap": args.gap_cap,
        "height_bound": args.height_cap,
        "step_budget": args.step_budget,
        "window_half_width": args.window,
        "replay_rounds": args.replay_rounds,
    }
    try:
        if args.paper_bounds:
            return SearchBudget.paper_bounds(
                diameter, **{k: v for k, v in overrides.items() if v is not None}
            )
        return SearchBudget.from_settings(**overrides)
    except pydantic.ValidationError as e:
        reasons = [
            f"{'.'.join(map(str, err['loc'])) or 'budget'}: {err['msg']}"
            for err in e.errors()
        ]
        raise ConfigurationError(
            f"Invalid search budget: {'; '.join(reasons)}", details={"reasons": reasons}
        ) from None


def _check_threads(args: argparse.Namespace) -> None:
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 0:
        raise ConfigurationError(
            "--threads must be 0 (all cores) or a positive count",
            details={"threads": threads},
        )


def _difficulty_summary(result: DifficultyResult) -> dict[str, Any]:
    summary = result.model_dump(mode="json", exclude={"components"})
    summary["display"] = f"{result.display_value()} ({result.status.value})"
    summary["directions"] = [
        {
            "direction": str(c.direction.as_tuple()) if c.direction else None,
            "value": c.display_value(),
            "lower_bound": c.lower_bound,
            "status": c.status.value,
        }
        for c in result.components
    ]
    return summary


def cmd_classify(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.load_family(args.family)
    return {"classification": stability_profile(fam).classification.label}, "ok"


def cmd_stable(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    profile = stability_profile(family_service.load_family(args.family))
    return {
        "classification": profile.classification.label,
        "stable": str(profile.stable),
        "unstable": str(profile.unstable),
        "isolated": [list(d.as_tuple()) for d in profile.isolated],
        "profile": profile.model_dump(mode="json"),
    }, "ok"


def cmd_difficulty(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.load_family(args.family)
    service = DifficultyService(fam, _budget(args, fam.diameter), args.threads)
    if args.direction:
        result = service.direction(Direction(px=args.direction[0], py=args.direction[1]))
    else:
        result = service.overall()
    if args.certificate:
        service.certify(result, args.certificate)
    return _difficulty_summary(result), result.status.value


def cmd_simulate(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.load_family(args.family)
    seeds = [LatticePoint.of(x, y) for x, y in args.seed_sites]
    if args.half_plane:
        u = Direction(px=args.half_plane[0], py=args.half_plane[1])
        outcome = dynamics.half_plane_closure(fam, u, seeds, _budget(args, fam.diameter))
        state = outcome.state
        result: dict[str, Any] = {
            "status": outcome.status.value,
            "certificate": outcome.certificate.model_dump(mode="json")
            if outcome.certificate
            else None,
        }
        status = outcome.status.value
    else:
        if args.torus:
            region: Rectangle | Torus = Torus(n=args.torus)
        else:
            w, h = args.grid
            region = Rectangle(x0=0, x1=w - 1, y0=0, y1=h - 1)
        state = dynamics.closure_finite(fam, region, seeds)
        result, status = {}, "ok"
    result.update(
        {
            "generation": state.generation,
            "infected_count": len(state.infected),
            "infected": [list(z.as_tuple()) for z in state.infected],
        }
    )
    if args.dump:
        result["bitmap"] = dynamics.render_bitmap(state)
    return result, status


def cmd_pc(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.load_family(args.family)
    estimate = montecarlo.estimate_pc(
        fam, args.n, trials=args.trials, tolerance=args.tol, seed=args.seed
    )
    if args.csv:
        Path(args.csv).write_text(montecarlo.curve_to_csv(estimate), encoding="utf-8")
    return estimate.model_dump(mode="json"), "ok"


def cmd_reduce(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    inst = reduction.load_set_cover(args.instance)
    fam = reduction.reduce(inst)
    family_service.save_family(fam, args.output)
    result: dict[str, Any] = {
        "report": reduction.reduction_report(inst, fam).model_dump(mode="json")
    }
    status = "ok"
    if args.verify:
        check = reduction.verify_cover_witness(
            inst, reduction.optimal_cover(inst), _budget(args, fam.diameter), fam
        )
        result["verification"] = check.model_dump(mode="json", exclude={"witness"})
        status = "verified" if check.verified else DifficultyStatus.INDETERMINATE.value
    return result, status


def cmd_gen(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.parse_family_spec(args.name)
    family_service.save_family(fam, args.output)
    return {"family": args.name, **family_service.metrics(fam).model_dump()}, "ok"


def cmd_verify_cert(args: argparse.Namespace) -> tuple[dict[str, Any], str]:
    fam = family_service.load_family(args.family)
    cert = load_certificate(args.certificate)
    service = DifficultyService(fam, _budget(args, fam.diameter))
    ok, outcome = service.check_certificate(cert)
    return {
        "verified": ok,
        "direction": list(cert.direction.as_tuple()),
        "witness_size": len(cert.witness),
        "closure_status": outcome.status.value,
    }, "verified" if ok else "rejected"


_BUDGET_FLAGS = (
    "max_k",
    "gap_cap",
    "height_cap",
    "step_budget",
    "window",
    "replay_rounds",
    "paper_bounds",
)


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-k", type=int, help="Largest seed size to search")
    p.add_argument("--gap-cap", type=int, help="Cap on candidate gap doubling")
    p.add_argument("--height-cap", type=int, help="Cap on the height sweep")
    p.add_argument("--step-budget", type=int, help="Rounds per closure")
    p.add_argument("--window", type=int, help="Largest strip half-width")
    p.add_argument("--replay-rounds", type=int, help="Rounds to replay a repetition")
    p.add_argument(
        "--paper-bounds", action="store_true", help="Use worst-case radii (tiny D only)"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bootdiff",
        description="Stability, difficulty and critical probability of bootstrap "
        "percolation update families.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker processes for the difficulty search (0 = all cores)",
    )
    parser.add_argument(
        "--require-exact",
        action="store_true",
        help="Exit with 3 when a difficulty is not certified exact",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="Supercritical, critical or subcritical")
    p.add_argument("family")
    p.set_defaults(handler=cmd_classify, files=["family"])

    p = sub.add_parser("stable", help="Stable set and isolated stable directions")
    p.add_argument("family")
    p.set_defaults(handler=cmd_stable, files=["family"])

    p = sub.add_parser("difficulty", help="alpha of the family or of one direction")
    p.add_argument("family")
    p.add_argument("--direction", type=_pair, help="px,py")
    p.add_argument("--certificate", help="Write the witness certificate here")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_difficulty, files=["family"])

    p = sub.add_parser("simulate", help="Closure of a seed set")
    p.add_argument("family")
    where = p.add_mutually_exclusive_group(required=True)
    where.add_argument("--grid", type=_dims, help="WxH rectangle at the origin")
    where.add_argument("--torus", type=int, help="N x N torus")
    where.add_argument("--half-plane", type=_pair, help="u as px,py")
    p.add_argument("--seed-sites", type=_pair, nargs="*", default=[], metavar="X,Y")
    p.add_argument("--dump", action="store_true", help="Include a bitmap dump")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_simulate, files=["family"])

    p = sub.add_parser("pc", help="Bisection estimate of p_c(n) on the torus")
    p.add_argument("family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", help="Write the probe curve as CSV")
    p.set_defaults(handler=cmd_pc, files=["family"])

    p = sub.add_parser("reduce", help="Family from a Set Cover instance")
    p.add_argument("instance")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--verify", action="store_true", help="Simulate the cover witness")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_reduce, files=["instance"])

    p = sub.add_parser("gen", help="Write a built-in family")
    p.add_argument("name", help="NAME or NAME:k")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(handler=cmd_gen, files=[])

    p = sub.add_parser("verify-cert", help="Re-check a witness certificate")
    p.add_argument("family")
    p.add_argument("certificate")
    _add_budget_flags(p)
    p.set_defaults(handler=cmd_verify_cert, files=["family", "certificate"])
    return parser


def run(argv: Sequence[str] | None = None) -> tuple[int, CommandReport | None]:
    """Execute one command; returns the exit code and the report, if any."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(toolkit.settings, "DEBUG" if args.verbose else None)

    handler: Callable[[argparse.Namespace], tuple[dict[str, Any], str]] = args.handler
    started = time.perf_counter()
    try:
        _check_threads(args)
        digest = _digest(args, [getattr(args, f) for f in args.files])
        result, status = handler(args)
    except BootdiffException as e:
        logger.error(f"{args.command} failed: {e.message}")
        print(json.dumps(e.to_dict(), default=str), file=sys.stderr)
        return e.exit_code, None
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        error = {"error_code": "IO_ERROR", "message": str(e), "details": {}}
        print(json.dumps(error), file=sys.stderr)
        return 2, None

    report = CommandReport(
        command=args.command,
        inputs_digest=digest,
        status=status,
        result=result,
        budget={k: getattr(args, k) for k in _BUDGET_FLAGS if hasattr(args, k)} or None,
        wall_time_s=round(time.perf_counter() - started, 3),
    )
    print(report.model_dump_json(indent=2))

    inexact = status in (
        DifficultyStatus.UPPER_BOUND_ONLY.value,
        DifficultyStatus.INDETERMINATE.value,
    )
    if args.require_exact and inexact:
        error = IndeterminateResultError(
            f"{args.command} result is {status}, exact required",
            details={"status": status},
        )
        logger.error(error.message)
        print(json.dumps(error.to_dict()), file=sys.stderr)
        return error.exit_code, report
    return 0, report


def main() -> None:
    code, _ = run()
    sys.exit(code)


if __name__ == "__main__":
    main()
