# fairproj/commands/sweep.py
"""
Sous-commande `sweep` : balayage complet (modes x ε x graines) décrit par
un fichier de plan (--config) ou par les options de la ligne de commande.
"""

import argparse

from fairproj.commands.common import (
    add_boosting_arguments,
    add_data_arguments,
    mode_choices,
    projection_config,
    require_single_source,
)
from fairproj.config import Settings
from fairproj.core.logger import get_logger
from fairproj.schemas import BoostMode, ExperimentPlan, Surrogate, load_model_file, parse_seeds
from fairproj.services.harness import ExperimentRunner

logger = get_logger(__name__)


def register(subparsers, settings: Settings) -> None:
    parser = subparsers.add_parser("sweep", help="Exécute un plan d'expérience complet")
    add_data_arguments(parser)
    add_boosting_arguments(parser, settings)
    parser.add_argument(
        "--mode",
        choices=mode_choices(),
        action="append",
        help="Mode à inclure (option répétable ; adaboost et fairproj par défaut)",
    )
    parser.add_argument("--jobs", type=int, default=settings.DEFAULT_JOBS, help="Nombre de workers")
    parser.add_argument("--name", default="experiment")
    parser.set_defaults(handler=handle)


def build_plan(args: argparse.Namespace, settings: Settings) -> ExperimentPlan:
    """Plan issu de --config si fourni, sinon des options."""
    if getattr(args, "config", None):
        return load_model_file(args.config, ExperimentPlan)
    csv, synthetic = require_single_source(args)
    modes = [BoostMode(m) for m in args.mode] if args.mode else [BoostMode.ADABOOST, BoostMode.FAIRPROJ]
    return ExperimentPlan(
        name=args.name,
        csv=csv,
        synthetic=synthetic,
        modes=modes,
        epsilons=args.epsilon or [0.25],
        surrogate=Surrogate(args.surrogate),
        rounds=args.rounds,
        seeds=parse_seeds(args.seeds),
        test_fraction=args.test_fraction,
        output_dir=args.out,
        jobs=args.jobs,
        projection=projection_config(args, settings),
    )


def handle(args: argparse.Namespace, settings: Settings) -> int:
    plan = build_plan(args, settings)
    result = ExperimentRunner(settings).run_plan(plan)
    for row in result.aggregates:
        eps = "-" if row.epsilon is None else f"{row.epsilon:g}"
        logger.info(
            f"{row.mode.value:<10} ε={eps:<6} exactitude={row.accuracy_mean} EOpp={row.eopp_gap_mean} "
            f"tours={row.rounds_mean} δ̄={row.mean_delta_mean} ({row.cells} ok, {row.failed} échecs)"
        )
    return result.exit_code
