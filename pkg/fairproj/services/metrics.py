# fairproj/services/metrics.py
"""
Métriques d'évaluation : exactitude, écart d'égalité des chances (EOpp)
et écart de parité démographique (DP). Un écart indéfini (groupe sans
positif ou groupe vide) vaut None, jamais 0.
"""

from typing import Optional

import numpy as np

from fairproj.core.exceptions import ArgumentError
from fairproj.core.logger import get_logger
from fairproj.models import ConfusionCounts, Dataset, Ensemble, EvaluationReport, GroupConfusion
from fairproj.services.boosting_service import predict_ensemble_batch

logger = get_logger(__name__)


def confusion_from_predictions(d: Dataset, predictions: np.ndarray) -> GroupConfusion:
    """Matrices de confusion par groupe pour des prédictions +/-1 données."""
    predictions = np.asarray(predictions)
    if predictions.shape != (d.n,):
        raise ArgumentError(f"{predictions.shape[0]} prédictions pour {d.n} exemples")
    predicted_positive = predictions == 1
    actual_positive = d.labels == 1
    groups = {}
    for a in (0, 1):
        in_group = d.protected == a
        groups[a] = ConfusionCounts(
            tp=int((in_group & predicted_positive & actual_positive).sum()),
            fp=int((in_group & predicted_positive & ~actual_positive).sum()),
            tn=int((in_group & ~predicted_positive & ~actual_positive).sum()),
            fn=int((in_group & ~predicted_positive & actual_positive).sum()),
        )
    return GroupConfusion(groups=groups)


def confusion(d: Dataset, f: Ensemble) -> GroupConfusion:
    """Comptes exacts à partir de predict_ensemble sur toutes les lignes."""
    return confusion_from_predictions(d, predict_ensemble_batch(f, d.features))


def accuracy(c: GroupConfusion) -> float:
    total = c.total
    if total == 0:
        raise ArgumentError("Exactitude indéfinie sur un jeu vide")
    correct = sum(counts.tp + counts.tn for counts in c.groups.values())
    return correct / total


def eopp_gap(c: GroupConfusion) -> Optional[float]:
    """|TPR_1 - TPR_0| ; None si un groupe n'a aucun positif."""
    rates = []
    for a in (0, 1):
        counts = c.groups[a]
        if counts.positives == 0:
            logger.warning(f"Écart EOpp indéfini: aucun positif dans le groupe a={a}")
            return None
        rates.append(counts.tp / counts.positives)
    return abs(rates[1] - rates[0])


def dp_gap_from_confusion(c: GroupConfusion) -> Optional[float]:
    """|P(Ŷ=1 | A=1) - P(Ŷ=1 | A=0)| ; None si un groupe est vide."""
    rates = []
    for a in (0, 1):
        counts = c.groups[a]
        if counts.size == 0:
            logger.warning(f"Écart DP indéfini: groupe a={a} vide")
            return None
        rates.append((counts.tp + counts.fp) / counts.size)
    return abs(rates[1] - rates[0])


def dp_gap(d: Dataset, f: Ensemble) -> Optional[float]:
    return dp_gap_from_confusion(confusion(d, f))


def evaluate(d: Dataset, f: Ensemble) -> EvaluationReport:
    """Exactitude, écart EOpp et écart DP d'un ensemble sur `d`."""
    c = confusion(d, f)
    return EvaluationReport(accuracy=accuracy(c), eopp_gap=eopp_gap(c), dp_gap=dp_gap_from_confusion(c))
