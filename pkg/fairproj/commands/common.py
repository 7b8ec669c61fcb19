# fairproj/commands/common.py
"""
Arguments partagés par les sous-commandes et construction des objets
validés (source de données, configuration de projection) à partir de ceux-ci.
"""

import argparse
from typing import Optional

from fairproj.config import Settings
from fairproj.core.exceptions import ArgumentError
from fairproj.models import Dataset
from fairproj.schemas import (
    BoostMode,
    CsvSource,
    ProjectionConfig,
    SolverMode,
    Surrogate,
    SyntheticSpec,
)
from fairproj.services.dataset_service import load_csv, load_schema_config, make_synthetic_from_spec


def add_data_arguments(parser: argparse.ArgumentParser) -> None:
    source = parser.add_argument_group("données")
    source.add_argument("--data", help="Fichier CSV (UTF-8, en-tête)")
    source.add_argument("--schema", help="SchemaConfig JSON ou TOML décrivant le CSV")
    source.add_argument(
        "--synthetic",
        help="Jeu synthétique 'n=2000,imbalance=0.5,gap=0.4,noise=1.0[,proxy=0.5][,seed=7]'",
    )


def add_boosting_arguments(parser: argparse.ArgumentParser, settings: Settings) -> None:
    boosting = parser.add_argument_group("boosting")
    boosting.add_argument("--surrogate", choices=[s.value for s in Surrogate], default=Surrogate.EOPP.value)
    boosting.add_argument("--epsilon", type=float, action="append", help="Marge ε (option répétable)")
    boosting.add_argument("--rounds", type=int, default=settings.DEFAULT_ROUNDS)
    boosting.add_argument("--seeds", default=settings.DEFAULT_SEEDS, help="Graines, ex. '42..51' ou '1,2,3'")
    boosting.add_argument("--test-fraction", type=float, default=settings.DEFAULT_TEST_FRACTION)
    boosting.add_argument("--solver", choices=[s.value for s in SolverMode], default=SolverMode.SPLIT_VARIABLE.value)
    boosting.add_argument("--out", default=settings.OUTPUT_DIR, help="Répertoire de sortie")


def mode_choices():
    return [m.value for m in BoostMode]


def csv_source(args: argparse.Namespace) -> Optional[CsvSource]:
    if args.data is None and args.schema is None:
        return None
    if args.data is None or args.schema is None:
        raise ArgumentError("--data et --schema doivent être fournis ensemble")
    return CsvSource(path=args.data, schema=load_schema_config(args.schema))


def synthetic_spec(args: argparse.Namespace) -> Optional[SyntheticSpec]:
    return SyntheticSpec.parse(args.synthetic) if args.synthetic else None


def require_single_source(args: argparse.Namespace):
    csv, synthetic = csv_source(args), synthetic_spec(args)
    if (csv is None) == (synthetic is None):
        raise ArgumentError("Indiquer exactement une source: --data/--schema ou --synthetic")
    return csv, synthetic


def load_source(csv: Optional[CsvSource], synthetic: Optional[SyntheticSpec], seed: int) -> Dataset:
    if csv is not None:
        return load_csv(csv.path, csv.schema_config)
    return make_synthetic_from_spec(synthetic, seed)


def projection_config(args: argparse.Namespace, settings: Settings) -> ProjectionConfig:
    """Tolérances issues des paramètres, solveur issu de la ligne de commande."""
    return ProjectionConfig(
        solver=SolverMode(args.solver),
        feasibility_tolerance=settings.FEASIBILITY_TOLERANCE,
        acceptance_tolerance=settings.ACCEPTANCE_TOLERANCE,
    )
