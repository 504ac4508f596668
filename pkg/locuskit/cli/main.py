""" locuskit v0.3

Batch experiments with localization kernels from the command line:

    locuskit <task> --config path.json [--out dir] [--seed n]

Writes results.csv, metrics.json and plot.svg (when the task draws one) to
the output directory.  Exit status 0 on success, 2 when the configuration or
the inputs are invalid, 3 when the numerics fail.
"""

# Imports
import argparse
import json
import os
import signal
import sys
from time import perf_counter

from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from locuskit.cli import config
from locuskit.cli.io import write_csv, write_json, write_pgm
from locuskit.cli.svg import emit_svg
from locuskit.cli.tasks import TASKS, run_task
from locuskit.errors import ConfigValidationError, NumericFailure, ValidationFailure
from locuskit.mylog import get_logger

# Create and setup logger
logger = get_logger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
THREADS_ENV = "LOCUSKIT_THREADS"


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigValidationError as e:
        return report_error("validation", e, EXIT_VALIDATION)
    limits = thread_cap()

    try:
        with threadpool_limits(limits=limits):
            cfg = config.load_config(args.config, args.task, args.out, args.seed)
            started = perf_counter()
            outcome = run_task(cfg)
            elapsed = perf_counter() - started
            process_artifacts(cfg, outcome, elapsed)
    except (ValidationFailure, ValidationError) as e:
        return report_error("validation", e, EXIT_VALIDATION)
    except NumericFailure as e:
        return report_error("numeric", e, EXIT_NUMERIC)
    except Exception as e:
        logger.exception(f"{args.task} failed unexpectedly")
        return report_error("numeric", e, EXIT_NUMERIC)
    finally:
        logger.debug("Exiting locuskit.")
    return EXIT_OK


# Helper functions
class TaskParser(argparse.ArgumentParser):
    """Usage errors surface as ConfigValidationError instead of exiting"""

    def error(self, message):
        raise ConfigValidationError(f"{self.prog}: {message}")


def sigterm_handler(_signo, _stack_frame):
    logger.info("SIGTERM received.")
    sys.exit(0)


def build_parser():
    parser = TaskParser(
        prog="locuskit",
        description="Localization-kernel experiments",
    )
    sub = parser.add_subparsers(dest="task", required=True, metavar="task")
    for name, task in TASKS.items():
        cmd = sub.add_parser(
            name,
            help=(task.run.__doc__ or name).strip().splitlines()[0],
            epilog=config.describe(task.params),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        cmd.add_argument("--config", required=True, help="JSON run configuration")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="64-bit run seed")
    return parser


def thread_cap():
    """Thread limit from LOCUSKIT_THREADS; None leaves the pools alone"""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"{THREADS_ENV}={raw!r} is not an integer, ignoring it")
        return None
    if value < 1:
        logger.warning(f"{THREADS_ENV} must be >= 1, got {value}; ignoring it")
        return None
    return value


def process_artifacts(cfg, outcome, elapsed):
    """Writes every artifact of a finished task into cfg.output_dir"""
    out = cfg.output_dir
    write_csv(os.path.join(out, "results.csv"), outcome.header, outcome.rows)
    metrics = dict(outcome.metrics)
    metrics["task"] = cfg.task
    metrics["seed"] = cfg.seed
    metrics["runtime_s"] = round(elapsed, 6)
    write_json(os.path.join(out, "metrics.json"), metrics)
    if outcome.plot is not None:
        kind, data = outcome.plot
        emit_svg(kind, data, os.path.join(out, "plot.svg"))
    for name, img in outcome.images.items():
        write_pgm(os.path.join(out, name), img)
    logger.info(f"{cfg.task} finished in {elapsed:.3f}s, artifacts in {out}")


def report_error(family, error, code):
    """One JSON line on stderr, then the exit status"""
    payload = {"error": family, "type": type(error).__name__, "message": str(error)}
    logger.debug(f"{family} failure: {error}")
    sys.stderr.write(json.dumps(payload) + "\n")
    sys.stderr.flush()
    return code


signal.signal(signal.SIGTERM, sigterm_handler)

if __name__ == "__main__":
    logger.info("Starting locuskit . . .")
    sys.exit(main())
