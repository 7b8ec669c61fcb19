# tests/conftest.py
"""
Fixtures partagées par la suite de tests fairproj.
"""

from pathlib import Path

import numpy as np
import pytest

from fairproj.config import Settings
from fairproj.models import Dataset
from fairproj.schemas import BoostConfig, SchemaConfig
from fairproj.services.dataset_service import make_synthetic

from tests.helpers import make_dataset


def pytest_configure(config):
    """Déclare les marqueurs personnalisés."""
    config.addinivalue_line("markers", "slow: tests longs (balayages multi-graines)")


# ============================================================================
# FIXTURES
# ============================================================================

@pytest.fixture
def rng() -> np.random.Generator:
    """Générateur numpy à graine fixe."""
    return np.random.default_rng(20240601)


@pytest.fixture
def test_settings() -> Settings:
    """Paramètres de l'environnement de test."""
    return Settings(ENVIRONMENT="testing", LOG_LEVEL="DEBUG", DEFAULT_ROUNDS=20)


@pytest.fixture
def separable_dataset() -> Dataset:
    """Données 1-D séparables : x < 0 -> -1, x > 0 -> +1, deux groupes mélangés."""
    x = [-3.0, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 3.0]
    protected = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1]
    labels = [-1, -1, -1, -1, -1, 1, 1, 1, 1, 1]
    return make_dataset(x, protected, labels)


@pytest.fixture
def gap_dataset() -> Dataset:
    """Jeu synthétique avec écart de taux de base entre groupes."""
    return make_synthetic(n=400, group_imbalance=0.5, base_rate_gap=0.4, noise=1.0, seed=7)


@pytest.fixture
def boost_config() -> BoostConfig:
    return BoostConfig(rounds=20, epsilon=0.25)


@pytest.fixture
def adult_like_schema() -> SchemaConfig:
    return SchemaConfig(
        label_column="income",
        positive_value=">50K",
        protected_column="sex",
        group_one_value="Male",
        categorical_columns=["workclass"],
    )


@pytest.fixture
def adult_like_csv(tmp_path: Path) -> Path:
    """Quatre lignes : une catégorielle à deux niveaux et une numérique."""
    path = tmp_path / "adult_like.csv"
    path.write_text(
        "age,workclass,sex,income\n"
        "39,Private,Male,<=50K\n"
        "50,Self-emp,Female,>50K\n"
        "38,Private,Female,<=50K\n"
        "53,Self-emp,Male,>50K\n",
        encoding="utf-8",
    )
    return path
