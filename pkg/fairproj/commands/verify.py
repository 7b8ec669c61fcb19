# fairproj/commands/verify.py
"""Sous-commande `verify` : rejoue les contrôles de bornes sur un runlog.json stocké."""

import argparse

from fairproj.config import Settings
from fairproj.core.logger import get_logger
from fairproj.services.bounds import verify_run_log
from fairproj.services.harness import load_run_log

logger = get_logger(__name__)


def register(subparsers, settings: Settings) -> None:
    parser = subparsers.add_parser("verify", help="Vérifie les bornes d'un journal d'exécution")
    parser.add_argument("runlog", help="Chemin d'un runlog.json")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace, settings: Settings) -> int:
    report = verify_run_log(load_run_log(args.runlog), settings.FEASIBILITY_TOLERANCE)
    print(report.model_dump_json(indent=2, exclude={"theorem": {"trace"}}))
    if not report.ok:
        logger.error(
            f"Vérification en échec: borne={report.theorem.status}, "
            f"récurrence={report.recursion.violations}, transfert={report.edge_transfer_violations}, "
            f"faisabilité={report.feasibility_violations}"
        )
        return 1
    return 0
