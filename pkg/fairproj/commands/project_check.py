# fairproj/commands/project_check.py
"""
Sous-commande `project-check` : compare le solveur dual à l'oracle par
grille sur des instances aléatoires.
"""

import argparse
import json

from fairproj.config import Settings
from fairproj.schemas import ProjectionConfig, SolverMode
from fairproj.services.dataset_service import make_rng
from fairproj.services.projection_service import oracle_suite


def register(subparsers, settings: Settings) -> None:
    parser = subparsers.add_parser("project-check", help="Banc solveur dual / oracle par grille")
    parser.add_argument("--instances", type=int, default=100)
    parser.add_argument("--resolution", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--solver", choices=[s.value for s in SolverMode], default=SolverMode.SPLIT_VARIABLE.value)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace, settings: Settings) -> int:
    cfg = ProjectionConfig(
        solver=SolverMode(args.solver),
        feasibility_tolerance=settings.FEASIBILITY_TOLERANCE,
        acceptance_tolerance=settings.ACCEPTANCE_TOLERANCE,
    )
    report = oracle_suite(args.instances, args.resolution, make_rng(args.seed), cfg)
    print(json.dumps({
        "instances": len(report.cases),
        "failures": report.failures,
        "max_kl_error": report.max_kl_error,
        "max_violation": report.max_violation,
    }, indent=2))
    return 0 if report.failures == 0 else 1
