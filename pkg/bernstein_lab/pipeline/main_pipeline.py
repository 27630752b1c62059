"""Command-line entry point of the Bernstein diffusion lab.

One subcommand per task, each writing a CSV table to stdout (or ``--out``):

    roots:    radial Neumann eigenvalues of the disk
              columns n, mu, sqrt_mu, residual
    density:  u, v, rho and both drifts on a grid at chosen times
              columns t, x, u, v, rho, b_star, b
    simulate: sample paths of the Bernstein diffusion
              columns path_id, t, z
    fk:       Feynman-Kac estimates of u and v with their spectral targets
              columns which, x, t, estimate, std_error, target, z_score
    verify:   the verification suite
              columns name, kind, metric, threshold, passed

Stdout carries data only; logs and progress bars go to stderr. Output is
canonically ordered, so identical arguments and config bytes produce
identical bytes for any ``--threads`` value.

Exit codes:
    0 on success, 2 on usage errors (unknown subcommand or flag, bad value),
    1 on runtime failures and on failed verification checks.

Example:
    Verify Example 1 and simulate a few backward paths:
        $ bernstein-lab verify --model configs/example1.cfg --seed 7
        $ bernstein-lab simulate --model configs/example1.cfg --paths 10 --steps 100 \\
              --seed 1 --direction backward > paths.csv

Note:
    ``BERNSTEIN_LAB_THREADS`` is the fallback for ``--threads`` and
    ``BERNSTEIN_LAB_LOG_LEVEL`` sets the console log level.
"""

import argparse
from pathlib import Path
import sys
import time
from typing import Callable, Sequence

import pandas as pd

from .. import __version__
from ..config import default_threads, logger, set_console_level
from ..core.bernstein_model import BernsteinModel
from ..core.feynman_kac import estimate_occupation, estimate_u, estimate_v
from ..core.sde_engine import Scheme, SimConfig, simulate_ensemble
from ..core.special_functions import MAX_ROOTS, neumann_eigenvalues
from ..core.spectral_core import Direction
from ..core.verify_harness import CHECK_GROUPS, HarnessConfig, run_all
from ..errors import BernsteinLabError
from ..utils.logger import log_config, log_pipeline_stage, setup_logger
from .exports import density_frame, fk_frame, roots_frame, verify_frame, write_frame
from .model_config import build_model, load_config, print_config_summary

SCHEMES = {"euler": Scheme.EULER, "exact": Scheme.EXACT}


def _int_at_least(minimum: int) -> Callable[[str], int]:
    """argparse type accepting integers >= ``minimum``."""
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"expected an integer >= {minimum}, got {value}")
        return value
    return parse


_positive_int = _int_at_least(1)
_step_count = _int_at_least(2)


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {value}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the five subcommands."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="Worker processes (default: BERNSTEIN_LAB_THREADS or core count)")
    common.add_argument("--out", type=Path, default=None,
                        help="Write the table to this file instead of stdout")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level on stderr")
    common.add_argument("--log-dir", type=Path, default=None,
                        help="Write a per-run log file into this directory")

    with_model = argparse.ArgumentParser(add_help=False)
    with_model.add_argument("--model", type=Path, required=True,
                            help="Model config (key=value, or YAML for .yaml/.yml)")

    parser = argparse.ArgumentParser(
        prog="bernstein-lab",
        description="Bernstein diffusions on the interval and the disk",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    roots = sub.add_parser("roots", parents=[common], help="Radial Neumann eigenvalues")
    roots.add_argument("--count", type=_positive_int, default=10,
                       help=f"Number of eigenvalues, at most {MAX_ROOTS}")

    density = sub.add_parser("density", parents=[common, with_model],
                             help="u, v, rho and drifts on a grid")
    density.add_argument("--times", type=_float_list, default=None,
                         help="Comma-separated times (default: 0, T/4, T/2, 3T/4, T)")
    density.add_argument("--grid", type=_positive_int, default=101, help="Grid points in [0, 1]")
    density.add_argument("--format", choices=["csv", "parquet"], default="csv")

    simulate = sub.add_parser("simulate", parents=[common, with_model], help="Sample paths")
    simulate.add_argument("--paths", type=_positive_int, default=1000)
    simulate.add_argument("--steps", type=_step_count, default=400)
    simulate.add_argument("--seed", type=_seed, default=0)
    simulate.add_argument("--scheme", choices=sorted(SCHEMES), default="euler")
    simulate.add_argument("--direction", choices=[d.value for d in Direction],
                          default=Direction.FORWARD.value)
    simulate.add_argument("--record-every", type=_positive_int, default=1,
                          help="Keep every k-th step (the last step is always kept)")
    simulate.add_argument("--format", choices=["csv", "parquet"], default="csv")

    fk = sub.add_parser("fk", parents=[common, with_model], help="Feynman-Kac estimates")
    fk.add_argument("--x", type=float, required=True)
    fk.add_argument("--t", type=float, required=True)
    fk.add_argument("--paths", type=_positive_int, default=10_000)
    fk.add_argument("--steps", type=_step_count, default=400)
    fk.add_argument("--seed", type=_seed, default=0)
    fk.add_argument("--which", choices=["u", "v", "both", "rho"], default="both")

    verify = sub.add_parser("verify", parents=[common, with_model], help="Verification suite")
    verify.add_argument("--seed", type=_seed, default=0)
    verify.add_argument("--strict", action="store_true",
                        help="Rerun failed statistical checks once with 4x paths")
    verify.add_argument("--only", type=lambda s: [o.strip() for o in s.split(",") if o.strip()],
                        default=None, help="Comma-separated groups or dotted check names")
    verify.add_argument("--paths", type=_int_at_least(100), default=None,
                        help="Paths of the distribution tests (default 100000)")
    return parser


def _load_model(path: Path) -> BernsteinModel:
    config = load_config(path)
    logger.success(f"Configuration loaded and validated: {path}")
    model = build_model(config)
    print_config_summary(config, model)
    return model


def run_roots(args: argparse.Namespace, threads: int) -> tuple[pd.DataFrame, int]:
    log_pipeline_stage("Neumann eigenvalues")
    return roots_frame(neumann_eigenvalues(args.count)), 0


def run_density(args: argparse.Namespace, threads: int) -> tuple[pd.DataFrame, int]:
    model = _load_model(args.model)
    times = args.times
    if times is None:
        times = [model.horizon * k / 4 for k in range(5)]
    log_pipeline_stage("Occupation density and drifts")
    return density_frame(model, times, args.grid), 0


def run_simulate(args: argparse.Namespace, threads: int) -> tuple[pd.DataFrame, int]:
    model = _load_model(args.model)
    config = SimConfig(steps=args.steps, paths=args.paths, seed=args.seed,
                       scheme=SCHEMES[args.scheme], threads=threads)
    log_config(config.model_dump(mode="json"), "Simulation")
    log_pipeline_stage("Path simulation")
    ensemble = simulate_ensemble(model, config, Direction(args.direction),
                                 record_every=args.record_every, threads=threads)
    return ensemble.to_frame(), 0


def run_fk(args: argparse.Namespace, threads: int) -> tuple[pd.DataFrame, int]:
    model = _load_model(args.model)
    config = SimConfig(steps=args.steps, paths=args.paths, seed=args.seed, threads=threads)
    log_pipeline_stage("Feynman-Kac estimation")
    rows = []
    if args.which in ("u", "both"):
        rows.append(("u", args.x, args.t, estimate_u(model, args.x, args.t, config, threads)))
    if args.which in ("v", "both"):
        rows.append(("v", args.x, args.t, estimate_v(model, args.x, args.t, config, threads)))
    if args.which == "rho":
        rows.append(("rho", args.x, args.t,
                     estimate_occupation(model, args.x, args.t, config, threads)))
    return fk_frame(rows), 0


def run_verify(args: argparse.Namespace, threads: int) -> tuple[pd.DataFrame, int]:
    model = _load_model(args.model)
    update = {} if args.paths is None else {"paths": args.paths}
    config = HarnessConfig(seed=args.seed, strict=args.strict, threads=threads, **update)
    log_config(config.model_dump(mode="json"), "Verification")
    log_pipeline_stage("Verification suite")
    results, status = run_all(model, config, args.only)
    return verify_frame(results), status


COMMANDS: dict[str, Callable[[argparse.Namespace, int], tuple[pd.DataFrame, int]]] = {
    "roots": run_roots,
    "density": run_density,
    "simulate": run_simulate,
    "fk": run_fk,
    "verify": run_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, run the subcommand and write its table.

    Args:
        argv: Arguments without the program name (default: ``sys.argv[1:]``)

    Returns:
        Exit status: 0 success, 1 runtime or verification failure, 2 usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.command == "verify" and args.only:
        unknown = [o for o in args.only if o.split(".")[0] not in CHECK_GROUPS]
        if unknown:
            parser.print_usage(sys.stderr)
            logger.error(f"Unknown checks {unknown}; groups are {', '.join(CHECK_GROUPS)}")
            return 2
    if getattr(args, "format", "csv") == "parquet" and args.out is None:
        parser.print_usage(sys.stderr)
        logger.error("--format parquet needs --out <file>")
        return 2

    if args.log_dir is not None:
        setup_logger(args.log_dir, level="DEBUG" if args.verbose else "INFO")
    elif args.verbose:
        set_console_level("DEBUG")

    logger.info(f"bernstein-lab {__version__}: {args.command}")
    start = time.time()
    try:
        threads = args.threads or default_threads()
        frame, status = COMMANDS[args.command](args, threads)
        write_frame(frame, args.out, getattr(args, "format", "csv"))
    except BernsteinLabError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.exception("Full traceback:")
        return 1

    elapsed = time.time() - start
    logger.success(f"{args.command} completed in {elapsed:.2f} seconds")
    return status


if __name__ == "__main__":
    sys.exit(main())
