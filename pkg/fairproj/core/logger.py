"""
fairproj/core/logger.py
Configuration centralisée de la journalisation.
"""

import logging
from logging.handlers import RotatingFileHandler
from typing import Optional

from fairproj.config import Settings, get_settings

ROOT_LOGGER_NAME = "fairproj"


def get_logger(name: str) -> logging.Logger:
    """Retourne le logger du module (hiérarchie sous 'fairproj')."""
    return logging.getLogger(name)


def configure_logging(settings: Optional[Settings] = None) -> logging.Logger:
    """
    Configure le logger racine du paquet à partir des paramètres.
    Idempotent : les handlers déjà posés par un appel précédent sont remplacés.
    """
    settings = settings or get_settings()
    root = logging.getLogger(ROOT_LOGGER_NAME)
    root.setLevel(settings.LOG_LEVEL)

    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(settings.LOG_FORMAT)

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    root.addHandler(stream_handler)

    if settings.LOG_FILE:
        file_handler = RotatingFileHandler(
            settings.LOG_FILE,
            maxBytes=settings.LOG_FILE_MAX_SIZE,
            backupCount=settings.LOG_FILE_BACKUP_COUNT,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    return root
