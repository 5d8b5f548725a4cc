"""
Reifenberg Lab - command line entry point

Subcommands build | angles | embed | reifenberg | report, driven by a JSON
run config. Exit codes: 0 ok, 2 validation failure, 3 resource cap,
4 inconclusive-only Reifenberg results.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app import __version__
from app.core.config import settings
from app.core.errors import LabError
from app.schemas.run import RunConfig
from app.services.experiment_pipeline import COMMANDS, run_command

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.log_level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stdout,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reifenberg-lab",
        description="Warped cones, truncated-distance embeddings and Reifenberg classification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="JSON run config (defaults when omitted)")
    parser.add_argument("--seed", type=int, help="Override the config seed")
    parser.add_argument("--out", type=Path, help="Override the output directory")
    parser.add_argument("--force", action="store_true", help="Overwrite artifacts of other configs")
    return parser


def load_config(path: Optional[Path], seed: Optional[int] = None, out: Optional[Path] = None) -> RunConfig:
    """
    Parse and validate the run config, then apply command-line overrides.

    Raises:
        FileNotFoundError: if the config path does not exist
        ValidationError: if the document violates RunConfig
    """
    config = RunConfig() if path is None else RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["output_dir"] = str(out)
    if overrides:
        config = RunConfig.model_validate({**config.model_dump(), **overrides})
    return config


def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    source = str(args.config) if args.config else "<defaults>"
    try:
        config = load_config(args.config, seed=args.seed, out=args.out)
    except FileNotFoundError as e:
        logger.error(f"Config not found: {e}")
        return EXIT_VALIDATION
    except ValidationError as e:
        logger.error(f"Invalid config {source}: {e}")
        return EXIT_VALIDATION

    try:
        return run_command(args.command, config, force=args.force)
    except LabError as e:
        logger.error(f"{args.command} failed for {source}: {e}")
        return e.exit_code
    except ValueError as e:
        logger.error(f"{args.command} rejected arguments from {source}: {e}")
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
