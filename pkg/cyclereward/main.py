# cyclereward/main.py

"""
Command-line entrypoint.

This file is responsible for:
  - Configuring logging from the process settings.
  - Building the argument parser, one sub-command per command module.
  - Loading and printing the resolved run config.
  - Mapping package errors onto exit codes.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from cyclereward.cli.commands import COMMANDS
from cyclereward.cli.deps import load_config
from cyclereward.core.config import settings
from cyclereward.core.errors import (
    ConfigError,
    DatasetError,
    DivergenceError,
    MissingArtifactError,
    ShapeMismatchError,
    TapeBudgetError,
    TapeError,
)
from cyclereward.core.logging import configure_logging
from cyclereward.core.version import APP_NAME, APP_VERSION

log = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_DIVERGED = 4


# ---------------------------------------------------------------------
# 1. Argument parser
# ---------------------------------------------------------------------
# Every command takes the same three options; the config file is optional
# because every config field has a default.
# ---------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="Cycle-consistency reward fine-tuning at desk scale")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        p = sub.add_parser(module.NAME, help=module.HELP)
        p.add_argument("--config", help="JSON run config (defaults apply to missing keys)")
        p.add_argument("--seed", type=int, help="override the config's global seed")
        p.add_argument("--out", default=".", help="artifact directory (default: current directory)")
        p.set_defaults(handler=module.run)
    return parser


# ---------------------------------------------------------------------
# 2. Run one command
# ---------------------------------------------------------------------
def main(argv: Optional[Sequence[str]] = None) -> int:
    configure_logging(settings.LOG_LEVEL, settings.LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        cfg = load_config(args.config, args.seed)
        print(cfg.model_dump_json(indent=2, by_alias=True), flush=True)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        args.handler(cfg, out)
    except (ConfigError, TapeBudgetError, DatasetError, ShapeMismatchError, TapeError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except MissingArtifactError as exc:
        log.error("%s", exc)
        return EXIT_MISSING
    except DivergenceError as exc:
        log.error("diverged: %s", exc)
        return EXIT_DIVERGED
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
