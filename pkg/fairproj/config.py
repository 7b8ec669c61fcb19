# fairproj/config.py
"""
Gestion centralisée de la configuration et des variables d'environnement.
Utilise Pydantic BaseSettings pour la validation et le chargement des variables.
"""

import logging
from typing import Optional

from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Chargement du fichier .env si présent
load_dotenv()


class Settings(BaseSettings):
    """
    Configuration de l'application.
    Les valeurs sont chargées depuis les variables d'environnement préfixées par FAIRPROJ_.
    """

    # ============================================
    # ENVIRONMENT & GENERAL
    # ============================================
    ENVIRONMENT: str = "development"  # development, testing, production
    DEBUG: bool = False
    APP_NAME: str = "FairProj"
    APP_VERSION: str = "1.0.0"

    # ============================================
    # LOGGING
    # ============================================
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_FILE: Optional[str] = None
    LOG_FILE_MAX_SIZE: int = 10 * 1024 * 1024  # 10 MB
    LOG_FILE_BACKUP_COUNT: int = 5

    # ============================================
    # EXPÉRIENCES
    # ============================================
    OUTPUT_DIR: str = "./outputs"
    DEFAULT_ROUNDS: int = 100
    DEFAULT_TEST_FRACTION: float = 0.2
    DEFAULT_SEEDS: str = "42..51"
    DEFAULT_JOBS: int = 1

    # ============================================
    # PROJECTION
    # ============================================
    FEASIBILITY_TOLERANCE: float = 1e-6
    ACCEPTANCE_TOLERANCE: float = 1e-4

    # ============================================
    # VALIDATION
    # ============================================
    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Valide que l'environnement est autorisé."""
        allowed_envs = ["development", "testing", "production"]
        if v not in allowed_envs:
            raise ValueError(f"L'environnement doit être l'un des suivants: {allowed_envs}")
        return v

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Accepte les noms de niveaux du module logging, quelle que soit la casse."""
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Niveau de log inconnu: {v}")
        return level

    @field_validator("DEFAULT_JOBS")
    @classmethod
    def validate_jobs(cls, v: int) -> int:
        if v < 1:
            raise ValueError("DEFAULT_JOBS doit être >= 1")
        return v

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="FAIRPROJ_",
        case_sensitive=True,
        extra="ignore",
    )


# ============================================
# EXPORT DE L'INSTANCE
# ============================================
settings = Settings()


def get_settings() -> Settings:
    """Retourne l'instance des paramètres."""
    return settings
