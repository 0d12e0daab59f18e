"""
Command-line front-end.

    python -m src game play --N 3 --backend dense
    python -m src completeness --c 0.5 --N 1 --m 2
    python -m src table exchange --N 1..1000000 --log-steps 7
    python -m src run manifest.json

Exit codes: 0 on success, 2 for invalid parameters, 3 when an internal
consistency check (bound or formula) fails.
"""
import argparse
import sys
from typing import Any, Dict, List, Optional

from pydantic import BaseModel

from .config import settings
from .errors import BoundViolation
from .managers.experiment_manager import (
    EXIT_ASSERTION,
    EXIT_INVALID,
    EXIT_OK,
    ExperimentManager,
    load_manifest,
    run_experiment,
)
from .managers.table_builder import TABLE_KINDS, build_table
from .utils.logger import logger
from .utils.serialization import render_csv, render_json, write_text


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=settings.SEED)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (stdout when omitted)")
    common.add_argument(
        "--dump-state", "--dump-strategy", dest="dump_state", action="store_true",
        help="include states, strategy matrices and Gram matrices in JSON output",
    )
    common.add_argument("--workers", type=int, default=settings.WORKERS)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="exchange-lab", description="Coherent state exchange laboratory")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("exchange", parents=[common], help="run one state exchange")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=float, default=0.0, help="overlap magnitude |<phi|psi>|")
    p.add_argument("--theta", type=float, default=0.0, help="phase of <phi|psi>")
    p.add_argument("--direction", choices=("forward", "backward"), default="forward")
    p.add_argument("--backend", choices=("dense", "gram"), default="dense")
    p.add_argument("--method", choices=("direct", "intermediate"), default="direct")

    game_parser = commands.add_parser("game", help="cooperative game experiments")
    game_commands = game_parser.add_subparsers(dest="game_command", required=True)
    p = game_commands.add_parser("play", parents=[common], help="win probability of the prescribed strategy")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--backend", choices=("dense", "gram"), default="gram")
    p = game_commands.add_parser("bound", parents=[common], help="dimension-dependent upper bound")
    p.add_argument("--d", type=int, required=True)
    p = game_commands.add_parser("optimize", parents=[common], help="see-saw search at fixed d")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--y-dim", type=int, default=None)
    p.add_argument("--warm-start", choices=("idle", "marking", "prescribed"), default=None)
    p.add_argument("--warm-start-N", type=int, default=1)
    p = game_commands.add_parser("chain-check", parents=[common], help="fidelity chain on random unitaries")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--draws", type=int, default=100)

    p = commands.add_parser("completeness", parents=[common], help="extra-round acceptance")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--p", type=float, default=None, help="acceptance of the original system (default c)")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--backend", choices=("dense", "gram"), default="dense")
    p.add_argument("--sweep-points", type=int, default=0)

    p = commands.add_parser("embezzle", parents=[common], help="universal embezzling family")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--target", choices=("random", "zero", "bell"), default="random")
    p.add_argument("--backend", choices=("dense", "gram"), default="gram")

    p = commands.add_parser("table", parents=[common], help="CSV table over a parameter range")
    p.add_argument("kind", choices=TABLE_KINDS)
    p.add_argument("--N", default="1..4")
    p.add_argument("--a", default="0")
    p.add_argument("--c", default="0.5")
    p.add_argument("--m", default="2")
    p.add_argument("--d", default="1..2")
    p.add_argument("--log-steps", type=int, default=0)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--backend", choices=("dense", "gram"), default="dense")

    p = commands.add_parser("run", help="execute an experiment manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="base directory for relative outputs")
    p.add_argument("--workers", type=int, default=None)
    return parser


def _experiment(args: argparse.Namespace) -> tuple:
    if args.command == "exchange":
        keys = ("N", "a", "theta", "direction", "backend", "method")
        return "exchange", {key: getattr(args, key) for key in keys}
    if args.command == "completeness":
        params = {key: getattr(args, key) for key in ("c", "N", "m", "s", "backend", "sweep_points")}
        if args.p is not None:
            params["p"] = args.p
        return "completeness", params
    if args.command == "embezzle":
        keys = ("m", "dims", "N", "epsilon", "target", "backend")
        return "embezzle", {key: getattr(args, key) for key in keys}
    sub = args.game_command
    if sub == "play":
        return "game-play", {"N": args.N, "backend": args.backend}
    if sub == "bound":
        return "game-bound", {"d": args.d}
    if sub == "chain-check":
        return "game-chain-check", {"d": args.d, "draws": args.draws}
    params = {
        "d": args.d,
        "restarts": args.restarts,
        "max_iters": args.max_iters,
        "tol": args.tol,
        "y_dim": args.y_dim,
        "warm_start": args.warm_start,
        "warm_start_N": args.warm_start_N,
        "workers": args.workers,
    }
    return "game-optimize", params


def _scalar_fields(report: BaseModel) -> Dict[str, Any]:
    return {
        key: value
        for key, value in report.model_dump().items()
        if isinstance(value, (int, float, str, bool))
    }


def render_report(report: BaseModel, fmt: str) -> str:
    if fmt == "csv":
        fields = _scalar_fields(report)
        return render_csv(list(fields), [list(fields.values())])
    return render_json(report)


def _emit(text: str, out: Optional[str]):
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _table_spec(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "kind": args.kind,
        "N": args.N,
        "a": args.a,
        "c": args.c,
        "m": args.m,
        "d": args.d,
        "log_steps": args.log_steps,
        "restarts": args.restarts,
        "seed": args.seed,
        "backend": args.backend,
    }


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    label = args.command if args.command != "game" else f"game {args.game_command}"
    try:
        if args.command == "run":
            manager = ExperimentManager(load_manifest(args.manifest), base_dir=args.out, workers=args.workers)
            return manager.run()
        if args.command == "table":
            _emit(build_table(_table_spec(args), args.workers), args.out)
            return EXIT_OK
        kind, params = _experiment(args)
        report = run_experiment(kind, params, args.seed, args.dump_state)
        _emit(render_report(report, args.format), args.out)
        return EXIT_OK
    except BoundViolation as e:
        logger.error(f"{label}: assertion failed: {e}")
        return EXIT_ASSERTION
    except (ValueError, OSError) as e:
        logger.error(f"{label}: invalid parameters: {e}")
        return EXIT_INVALID
