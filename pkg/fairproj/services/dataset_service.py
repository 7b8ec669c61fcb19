# fairproj/services/dataset_service.py
"""
Service de chargement, d'encodage, de découpage et de génération de données
tabulaires avec attribut protégé.

Générateur pseudo-aléatoire : numpy PCG64, initialisé par la graine fournie,
pour des découpages et des jeux synthétiques reproductibles d'une plateforme
à l'autre.
"""

import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from fairproj.core.exceptions import ArgumentError, DataParseError, EmptyDatasetError, SchemaError
from fairproj.core.logger import get_logger
from fairproj.models import Dataset, DatasetSchema
from fairproj.schemas import SchemaConfig, SyntheticSpec, load_model_file

logger = get_logger(__name__)


def make_rng(seed: int) -> np.random.Generator:
    """Générateur PCG64 utilisé par toutes les opérations aléatoires du paquet."""
    return np.random.Generator(np.random.PCG64(seed))


def load_schema_config(path: str) -> SchemaConfig:
    """Lit un SchemaConfig depuis un fichier JSON ou TOML."""
    return load_model_file(path, SchemaConfig)


# ============================================================================
# CSV
# ============================================================================

def _read_frame(path: Union[str, Path]) -> pd.DataFrame:
    file_path = Path(path)
    if not file_path.is_file():
        raise SchemaError(f"Fichier CSV introuvable: {path}", {"path": str(path)})
    try:
        frame = pd.read_csv(
            file_path,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise EmptyDatasetError(f"Fichier CSV vide (pas d'en-tête): {path}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    if frame.empty:
        return frame
    return frame.apply(lambda column: column.str.strip())


def _check_columns(frame: pd.DataFrame, schema: SchemaConfig) -> None:
    required = [schema.label_column, schema.protected_column, *schema.categorical_columns, *schema.drop_columns]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise SchemaError(
            f"Colonnes absentes du fichier: {missing}",
            {"missing": missing, "available": list(frame.columns)},
        )


def _parse_numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    raw = frame[column]
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise DataParseError(row, column, raw.iloc[row])
    return values


def _one_hot(values: pd.Series, levels: List[str]) -> np.ndarray:
    # les niveaux absents de `levels` donnent une ligne entièrement nulle
    categorical = pd.Categorical(values, categories=levels)
    return pd.get_dummies(categorical, dtype=np.float64).to_numpy()


def load_csv(
    path: Union[str, Path],
    schema: SchemaConfig,
    encoding: Optional[DatasetSchema] = None,
) -> Dataset:
    """
    Charge un CSV (UTF-8, en-tête sur la première ligne) en Dataset encodé.

    Args:
        path: Chemin du fichier
        schema: Description des colonnes cible, protégée, catégorielles et ignorées
        encoding: Encodage d'un jeu d'entraînement à réutiliser (niveaux one-hot
            et colonnes numériques identiques) ; sinon déduit du fichier

    Raises:
        SchemaError: Colonne absente ou classe positive jamais observée
        DataParseError: Cellule numérique illisible (indice de ligne 0-based)
        EmptyDatasetError: Aucune ligne de données
    """
    frame = _read_frame(path)
    _check_columns(frame, schema)
    if frame.empty:
        raise EmptyDatasetError(f"Aucune ligne de données dans {path}")

    label_values = frame[schema.label_column]
    if not (label_values == schema.positive_value).any():
        raise SchemaError(
            f"La valeur positive '{schema.positive_value}' n'apparaît pas dans '{schema.label_column}'"
        )
    labels = np.where(label_values == schema.positive_value, 1, -1)
    protected = (frame[schema.protected_column] == schema.group_one_value).astype(np.int64).to_numpy()

    excluded = {schema.label_column, schema.protected_column, *schema.drop_columns}
    source_columns = [c for c in frame.columns if c not in excluded]

    if encoding is not None:
        missing = [c for c in encoding.source_columns if c not in frame.columns]
        if missing:
            raise SchemaError(f"Colonnes de l'encodage absentes du fichier: {missing}")
        source_columns = list(encoding.source_columns)
        categorical_levels = dict(encoding.categorical_levels)
    else:
        categorical_levels = {
            column: sorted(frame[column].unique().tolist())
            for column in source_columns
            if column in schema.categorical_columns
        }

    blocks: List[np.ndarray] = []
    feature_names: List[str] = []
    numeric_columns: List[str] = []
    for column in source_columns:
        if column in categorical_levels:
            levels = categorical_levels[column]
            unknown = set(frame[column].unique()) - set(levels)
            if unknown:
                logger.warning(f"Niveaux inconnus dans '{column}' encodés par un bloc nul: {sorted(unknown)}")
            blocks.append(_one_hot(frame[column], levels))
            feature_names.extend(f"{column}={level}" for level in levels)
        else:
            blocks.append(_parse_numeric(frame, column).reshape(-1, 1))
            feature_names.append(column)
            numeric_columns.append(column)

    n = len(frame)
    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    dataset_schema = DatasetSchema(
        feature_names=feature_names,
        source_columns=source_columns,
        categorical_levels=categorical_levels,
        numeric_columns=numeric_columns,
    )
    dataset = Dataset(features=features, protected=protected, labels=labels, schema=dataset_schema)
    logger.info(
        f"CSV chargé: {path} ({n} lignes, {dataset.width} variables, "
        f"groupes {dataset.group_counts.total})"
    )
    return dataset


def decode_row(schema: DatasetSchema, row) -> Dict[str, Optional[Union[str, float]]]:
    """
    Inverse l'encodage d'une ligne : niveau d'origine pour chaque bloc one-hot
    (None pour un bloc nul), valeur brute pour les colonnes numériques.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.shape != (schema.width,):
        raise ArgumentError(f"Ligne de largeur {row.shape} au lieu de {schema.width}")
    decoded: Dict[str, Optional[Union[str, float]]] = {}
    offset = 0
    for column in schema.source_columns:
        if column in schema.categorical_levels:
            levels = schema.categorical_levels[column]
            block = row[offset:offset + len(levels)]
            hot = np.flatnonzero(block == 1.0)
            decoded[column] = levels[int(hot[0])] if hot.size else None
            offset += len(levels)
        else:
            decoded[column] = float(row[offset])
            offset += 1
    return decoded


# ============================================================================
# DÉCOUPAGE
# ============================================================================

def split_indices(n: int, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Indices (entraînement, test), triés, d'un mélange PCG64 coupé en préfixe."""
    if not 0.0 < test_fraction < 1.0:
        raise ArgumentError(f"test_fraction doit appartenir à ]0, 1[ (reçu {test_fraction})")
    n_test = int(math.floor(n * test_fraction + 0.5))
    if n_test < 1 or n_test >= n:
        raise ArgumentError(
            f"Découpage vide: {n} exemples, fraction {test_fraction} -> {n_test} en test"
        )
    permutation = make_rng(seed).permutation(n)
    return np.sort(permutation[n_test:]), np.sort(permutation[:n_test])


def train_test_split(d: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Découpage déterministe (entraînement, test) pour une graine donnée."""
    train_idx, test_idx = split_indices(d.n, test_fraction, seed)
    return d.subset(train_idx), d.subset(test_idx)


# ============================================================================
# DONNÉES SYNTHÉTIQUES
# ============================================================================

SYNTHETIC_SCHEMA = DatasetSchema(
    feature_names=["x0", "x1"],
    source_columns=["x0", "x1"],
    numeric_columns=["x0", "x1"],
)


def make_synthetic(
    n: int,
    group_imbalance: float,
    base_rate_gap: float,
    noise: float,
    seed: int,
    proxy_label_weight: float = 0.5,
) -> Dataset:
    """
    Deux groupes, taux de positifs dépendant du groupe, deux variables :
    x0 = y + bruit porte l'étiquette de la même façon dans les deux groupes,
    x1 = (2a - 1) + proxy_label_weight * y + bruit/4 est aligné sur le groupe.

    Avec proxy_label_weight = 0, x1 ne porte que le groupe : un modèle qui
    l'utilise décale son seuil par groupe et l'écart de TPR vient de ce
    décalage.
    """
    if n < 4:
        raise ArgumentError(f"make_synthetic exige n >= 4 (reçu {n})")
    for name, rate in (("group_imbalance", group_imbalance), ("base_rate_gap", base_rate_gap)):
        if not 0.0 <= rate <= 1.0:
            raise ArgumentError(f"{name} doit appartenir à [0, 1] (reçu {rate})")
    if noise < 0:
        raise ArgumentError(f"noise doit être >= 0 (reçu {noise})")
    if proxy_label_weight < 0:
        raise ArgumentError(f"proxy_label_weight doit être >= 0 (reçu {proxy_label_weight})")

    rng = make_rng(seed)
    protected = (rng.random(n) < group_imbalance).astype(np.int64)
    positive_rate = np.where(
        protected == 1,
        np.clip(0.5 + base_rate_gap / 2, 0.0, 1.0),
        np.clip(0.5 - base_rate_gap / 2, 0.0, 1.0),
    )
    labels = np.where(rng.random(n) < positive_rate, 1, -1)
    x0 = labels + noise * rng.standard_normal(n)
    x1 = (2 * protected - 1) + proxy_label_weight * labels + noise * rng.standard_normal(n) / 4
    return Dataset(
        features=np.column_stack([x0, x1]),
        protected=protected,
        labels=labels,
        schema=SYNTHETIC_SCHEMA,
    )


def make_synthetic_from_spec(spec: SyntheticSpec, seed: int) -> Dataset:
    """Génère le jeu décrit par `spec` ; sa graine fixe l'emporte sur `seed`."""
    return make_synthetic(
        spec.n,
        spec.group_imbalance,
        spec.base_rate_gap,
        spec.noise,
        spec.seed if spec.seed is not None else seed,
        spec.proxy_label_weight,
    )
