# tests/helpers.py
"""Constructeurs de jeux de données et de distributions pour les tests."""

import numpy as np

from fairproj.models import Dataset, DatasetSchema, SimplexWeights


def make_dataset(features, protected, labels) -> Dataset:
    """Construit un Dataset numérique à partir de listes."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    names = [f"x{j}" for j in range(features.shape[1])]
    schema = DatasetSchema(feature_names=names, source_columns=names, numeric_columns=names)
    return Dataset(features=features, protected=protected, labels=labels, schema=schema)


def random_simplex(rng: np.random.Generator, n: int) -> SimplexWeights:
    return SimplexWeights.normalized(rng.dirichlet(np.ones(n)))
