"""Command-line entry point for secret-sharing rate computations and simulations."""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import config
from commands import bounds, diagnostics, simulate
from commands.reporting import CommandOutput, envelope, resolve_output, write_csv, write_json
from commands.run_config import COMMANDS, PATHS, RunConfig
from exceptions import ConvergenceError, ValidationError
from protocol.hashing import HashKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_FAILURE = 1

HANDLERS: Dict[str, Callable[[RunConfig], CommandOutput]] = {
    "rate-oneshot": bounds.rate_oneshot,
    "rate-converse": bounds.rate_converse,
    "rate-second-order": bounds.rate_second_order,
    "rate-asymptotic": bounds.rate_asymptotic,
    "capacity": bounds.capacity,
    "simulate": simulate.simulate,
    "entropy": diagnostics.entropy,
    "lhl-check": diagnostics.lhl_check,
}


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from e


def _float_list(text: str) -> List[float]:
    try:
        values = json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"expected a JSON list of numbers, got '{text}'") from e
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
        raise argparse.ArgumentTypeError(f"expected a JSON list of numbers, got '{text}'")
    return [float(v) for v in values]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cq-secret-sharing",
        description="Secret-sharing rate bounds and code simulations for cq broadcast channels.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--channel", required=True, help="Channel JSON file")
    parser.add_argument("--access", help="Access-structure JSON file (default: minimal_authorized in the channel file)")
    parser.add_argument("--eps1", type=float, default=1e-3)
    parser.add_argument("--eps2", type=float, default=1e-3)
    parser.add_argument("--delta", type=float, default=10.0)
    parser.add_argument("--eta", type=float, help="Hypothesis-testing split (default eps1/2)")
    parser.add_argument("--n", type=int, default=1, help="Blocklength (second order) or product-extension copies")
    parser.add_argument("--trials", type=int, default=config.MONTE_CARLO_TRIALS)
    parser.add_argument("--seed", type=int, help="Random seed; mandatory for simulate")
    parser.add_argument("--out", help="Report path; bare names go to the reports directory")
    parser.add_argument("--sweep", help="Axis sweep, e.g. n=100,1000,10000 or eps1=0.01,0.05")
    parser.add_argument("--input-dist", type=_float_list, help="Input distribution as a JSON list")
    parser.add_argument("--optimize", action="store_true", help="Maximize over the input distribution")
    parser.add_argument("--secret-size", type=int, default=2, help="Secret alphabet of the converse search")
    parser.add_argument("--grid-step", type=float, default=0.1, help="Simplex grid step of the converse search")
    parser.add_argument("--subset", type=_int_list, help="Users D, e.g. 1,3 (default: all users)")
    parser.add_argument("--r", type=int, help="Hash output bits for lhl-check")
    parser.add_argument("--eps", type=float, help="Smoothing radius (entropy, lhl-check) or converse error")
    parser.add_argument("--u-bits", type=int, help="Override the designed hash output width")
    parser.add_argument("--m", type=int, help="Override the syndrome length")
    parser.add_argument("--path", choices=PATHS, default="general", help="Rate expression for rate-oneshot")
    parser.add_argument("--hash-kind", choices=[k.value for k in HashKind], default=HashKind.FULL_RANDOM_MATRIX.value)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        channel=args.channel,
        access=args.access,
        eps1=args.eps1,
        eps2=args.eps2,
        delta=args.delta,
        eta=args.eta,
        n=args.n,
        seed=args.seed,
        out=args.out,
        trials=args.trials,
        sweep=args.sweep,
        input_dist=tuple(args.input_dist) if args.input_dist is not None else None,
        optimize=args.optimize,
        secret_size=args.secret_size,
        grid_step=args.grid_step,
        subset=tuple(args.subset) if args.subset is not None else None,
        r=args.r,
        eps=args.eps,
        u_bits=args.u_bits,
        m=args.m,
        path=args.path,
        hash_kind=args.hash_kind,
    )


def run(cfg: RunConfig) -> List[Path]:
    """Execute one command and write its report files."""
    handler = bounds.sweep if cfg.sweep else HANDLERS[cfg.command]
    output = handler(cfg)
    json_path = resolve_output(cfg.out, f"{cfg.command}.json")
    written = [write_json(json_path, envelope(cfg.command, cfg.as_dict(), output.result))]
    if output.csv_header is not None:
        written.append(write_csv(json_path.with_suffix(".csv"), output.csv_header, output.csv_rows))
    return written


def setup_logging() -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.LOG_TO_FILE:
        handlers.append(logging.FileHandler(config.LOGS_DIR / "cli.log"))
    logging.basicConfig(
        level=config.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        handlers=handlers,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        for path in run(cfg):
            print(path)
    except ValidationError as e:
        logger.error(f"Validation error: {e}")
        return EXIT_VALIDATION
    except ConvergenceError as e:
        logger.error(f"Numerical iteration did not converge: {e} (bracket {e.bracket})", exc_info=True)
        return EXIT_CONVERGENCE
    except Exception as e:
        logger.error(f"Command failed: {e}", exc_info=True)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
