"""
Point d'entrée principal de la ligne de commande fairproj.
Configure la journalisation et monte les sous-commandes.
"""

import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from fairproj import __version__
from fairproj.commands import project_check, sweep, train, verify
from fairproj.config import get_settings
from fairproj.core.exceptions import FairProjError
from fairproj.core.logger import configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="fairproj",
        description="Boosting équitable par projection KL, références et banc d'expériences",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="Plan d'expérience JSON ou TOML (sweep)")

    # Montage des sous-commandes
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (train, sweep, project_check, verify):
        command.register(subparsers, settings)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    settings = get_settings()
    configure_logging(settings)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args, settings)
    except ValidationError as exc:
        logger.error(f"Configuration invalide:\n{exc}")
    except FairProjError as exc:
        logger.error(f"{type(exc).__name__}: {exc.message}", exc_info=settings.DEBUG)
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
