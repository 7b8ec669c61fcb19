# fairproj/commands/train.py
"""
Sous-commande `train` : une exécution de boosting sur le découpage
d'une graine, avec écriture des courbes, du journal et du bilan.
"""

import argparse
import json
from pathlib import Path

from fairproj.commands.common import (
    add_boosting_arguments,
    add_data_arguments,
    load_source,
    mode_choices,
    projection_config,
    require_single_source,
)
from fairproj.config import Settings
from fairproj.core.logger import get_logger
from fairproj.schemas import BoostConfig, BoostMode, Surrogate, parse_seeds
from fairproj.services.boosting_service import run_boosting
from fairproj.services.bounds import summarize_run, verify_run_log
from fairproj.services.dataset_service import train_test_split
from fairproj.services.harness import emit_curves, write_json, write_run_log
from fairproj.services.metrics import evaluate

logger = get_logger(__name__)


def register(subparsers, settings: Settings) -> None:
    parser = subparsers.add_parser("train", help="Entraîne un modèle et écrit ses courbes")
    add_data_arguments(parser)
    add_boosting_arguments(parser, settings)
    parser.add_argument("--mode", choices=mode_choices(), default=BoostMode.FAIRPROJ.value)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace, settings: Settings) -> int:
    csv, synthetic = require_single_source(args)
    seed = parse_seeds(args.seeds)[0]
    epsilon = (args.epsilon or [0.25])[0]

    data = load_source(csv, synthetic, seed)
    train, test = train_test_split(data, args.test_fraction, seed)
    cfg = BoostConfig(
        rounds=args.rounds,
        epsilon=epsilon,
        surrogate=Surrogate(args.surrogate),
        mode=BoostMode(args.mode),
        projection=projection_config(args, settings),
    )
    ensemble, log = run_boosting(train, cfg)

    out_dir = Path(args.out)
    write_run_log(log, out_dir / "runlog.json")
    if log.rounds:
        emit_curves(log, out_dir / "curves.csv")

    report = evaluate(test, ensemble)
    summary = {
        "evaluation": report.model_dump(),
        "run": summarize_run(log).model_dump(mode="json"),
        "verification_ok": verify_run_log(log, settings.FEASIBILITY_TOLERANCE).ok,
    }
    write_json(summary, out_dir / "summary.json")
    logger.info(
        f"Exactitude test {report.accuracy:.4f}, EOpp {report.eopp_gap}, DP {report.dp_gap}, "
        f"{len(ensemble)} termes ({ensemble.termination.value})"
    )
    print(json.dumps(summary, indent=2))
    return 0
