"""
The `weightspace` command line. Each subcommand is one stage of the pipeline; it reads the artifacts of the stages
before it, writes its own under the output directory together with a manifest, and prints one JSON record on stdout.
"""

import argparse
import json
import logging
import sys
from collections.abc import Awaitable, Callable, Sequence
from functools import partial
from pathlib import Path

import torch
import trio
from pydantic import ValidationError

from framework import __version__
from toolkit.exceptions import WeightspaceError
from toolkit.logging_tools import logging_init, parse_validation_error
from weightspace.basemodel.command import train_base_command
from weightspace.config import RunContext, load_run_config, write_resolved_config
from weightspace.datastore.command import gen_data_command
from weightspace.diffusion.command import sample_command, train_diff_command
from weightspace.fitting import Parameterization
from weightspace.fitting.command import fit_command
from weightspace.genmetrics.command import metrics_command
from weightspace.report.command import report_command
from weightspace.wsanalysis.command import AnalysisExperiment, analyze_command

LOGGER = logging.getLogger("framework.__main__")

CommandFn = Callable[[RunContext, argparse.Namespace], Awaitable[dict]]

COMMANDS: dict[str, tuple[str, CommandFn]] = {
    "gen-data": ("Generate the toy image or SDF dataset.", lambda ctx, _: gen_data_command(ctx)),
    "train-base": ("Train the modulated base field as an auto-decoder.", lambda ctx, _: train_base_command(ctx)),
    "fit": (
        "Fit one representation per instance under every configured parameterization.",
        lambda ctx, _: fit_command(ctx),
    ),
    "analyze": (
        "Weight-space structure and discriminative experiments.",
        lambda ctx, args: analyze_command(ctx, args.experiments or None),
    ),
    "train-diff": ("Train a diffusion model on fitted representations.", lambda ctx, _: train_diff_command(ctx)),
    "sample": ("Sample and decode new representations.", lambda ctx, _: sample_command(ctx)),
    "metrics": ("Score generated samples against the reference dataset.", lambda ctx, _: metrics_command(ctx)),
    "report": ("Aggregate earlier artifacts into report tables.", lambda ctx, _: report_command(ctx)),
}
PARAMETERIZED_SECTIONS = {
    "fit": "fitting",
    "analyze": "analysis",
    "train-diff": "diffusion",
    "sample": "diffusion",
    "metrics": "diffusion",
}
"""Commands taking `--param`, with the section whose parameterization list it sets."""
ACCUMULATING_COMMANDS = frozenset({"analyze"})


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration document (JSON, or TOML by suffix).")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one configuration value; the value is parsed as JSON when possible. Repeatable.",
    )
    common.add_argument("--jobs", type=int, help="Concurrent instance-level jobs (default: available CPUs).")
    common.add_argument("--output-dir", type=Path, help="Directory every artifact of the run is written below.")

    parser = argparse.ArgumentParser(
        prog="weightspace",
        description="Weight-space representation learning for neural fields. WSF_SEED overrides the configured seed.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (help_text, _) in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in PARAMETERIZED_SECTIONS:
            sub.add_argument(
                "--param",
                dest="params",
                action="append",
                default=[],
                choices=[p.value for p in Parameterization],
                help=f"Only this parameterization; sets {PARAMETERIZED_SECTIONS[name]}.parameterizations. Repeatable.",
            )
        if name == "analyze":
            sub.add_argument(
                "experiments",
                nargs="*",
                type=AnalysisExperiment,
                metavar="EXPERIMENT",
                help=f"One of {', '.join(e.value for e in AnalysisExperiment)}. Default: all.",
            )
            sub.add_argument("--lambdas", help='Interpolation weights, such as "0,0.5,1".')
    return parser


def command_overrides(args: argparse.Namespace) -> list[str]:
    """`--set` assignments followed by the ones implied by convenience flags, which therefore take precedence."""
    overrides = list(args.overrides)
    if args.jobs is not None:
        overrides.append(f"core.jobs={args.jobs}")
    if args.output_dir is not None:
        overrides.append(f"core.output_dir={json.dumps(str(args.output_dir))}")
    if getattr(args, "params", None):
        overrides.append(f"{PARAMETERIZED_SECTIONS[args.command]}.parameterizations={json.dumps(args.params)}")
    if getattr(args, "lambdas", None):
        overrides.append(f"analysis.lambdas={json.dumps(args.lambdas)}")
    return overrides


async def main(ctx: RunContext, args: argparse.Namespace) -> dict:
    _, command = COMMANDS[args.command]
    LOGGER.info("Starting `%s` in %s", args.command, ctx.layout.root)
    summary = await command(ctx, args)
    LOGGER.info("Finished `%s`", args.command)
    return summary


def _emit(record: dict) -> None:
    sys.stdout.write(json.dumps(record, sort_keys=True, default=str) + "\n")
    sys.stdout.flush()


def _error_record(command: str, error: str, message: str) -> dict:
    return {"status": "error", "command": command, "error": error, "message": message}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse, configure, run one command and print its record. Returns the process exit status."""
    args = build_parser().parse_args(argv)
    try:
        registry = load_run_config(args.config, command_overrides(args))
        ctx = RunContext(command=args.command, registry=registry, accumulate=args.command in ACCUMULATING_COMMANDS)
        core = ctx.core
        logging_init(level=core.log_level.upper(), logfile=ctx.layout.log_file(args.command))
        torch.set_num_threads(core.torch_threads)
        write_resolved_config(registry, ctx.layout.root)
        summary = trio.run(partial(main, ctx, args))
    except WeightspaceError as e:
        LOGGER.error("`%s` failed: %s", args.command, e)
        _emit(_error_record(args.command, type(e).__name__, str(e)))
        return 1
    except ValidationError as e:
        message = parse_validation_error(e)
        LOGGER.error("`%s` failed: %s", args.command, message)
        _emit(_error_record(args.command, "ConfigurationError", message))
        return 1
    except Exception as e:
        LOGGER.exception("Unexpected failure in `%s`", args.command)
        _emit(_error_record(args.command, type(e).__name__, str(e)))
        return 2
    _emit(summary)
    return 0


def cli() -> None:
    sys.exit(run())


if __name__ == "__main__":
    cli()
