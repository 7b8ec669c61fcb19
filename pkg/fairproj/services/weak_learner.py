# fairproj/services/weak_learner.py
"""
Souches de décision (arbres de profondeur 1) ajustées sur données pondérées,
erreur pondérée et avantage (edge) sous une distribution quelconque.
"""

import numpy as np

from fairproj.core.exceptions import ArgumentError
from fairproj.core.logger import get_logger
from fairproj.models import Dataset, DecisionStump, SimplexWeights, StumpFitReport

logger = get_logger(__name__)


def _check_weights(d: Dataset, p: SimplexWeights) -> None:
    if len(p) != d.n:
        raise ArgumentError(f"Distribution de longueur {len(p)} pour {d.n} exemples")


def fit_stump(d: Dataset, weights: SimplexWeights) -> StumpFitReport:
    """
    Minimiseur exact de l'erreur 0-1 pondérée sur toutes les souches
    (variable, seuil, polarité).

    Seuils candidats : un seuil sentinelle sous le minimum, puis les milieux
    entre valeurs distinctes consécutives. Pour chaque variable, un tri puis
    des sommes cumulées donnent l'erreur de chaque seuil. Égalités départagées
    par variable, puis seuil croissant, puis polarité +1.
    """
    if d.n == 0:
        raise ArgumentError("fit_stump exige au moins un exemple")
    if d.width == 0:
        raise ArgumentError("fit_stump exige au moins une variable")
    _check_weights(d, weights)

    p = weights.weights
    positive = d.labels == 1
    pos_weight = np.where(positive, p, 0.0)
    neg_weight = np.where(positive, 0.0, p)
    total = float(p.sum())
    neg_total = float(neg_weight.sum())

    best = None
    candidate_count = 0
    for feature in range(d.width):
        column = d.features[:, feature]
        order = np.argsort(column, kind="stable")
        values = column[order]

        # frontières : dernier indice de chaque valeur distincte (sauf la plus grande)
        boundaries = np.flatnonzero(values[1:] > values[:-1])
        thresholds = np.concatenate([
            [values[0] - 1.0],
            values[boundaries] + (values[boundaries + 1] - values[boundaries]) / 2,
        ])
        pos_left = np.concatenate([[0.0], np.cumsum(pos_weight[order])[boundaries]])
        neg_left = np.concatenate([[0.0], np.cumsum(neg_weight[order])[boundaries]])

        # polarité +1 : -1 à gauche du seuil, +1 à droite
        err_plus = pos_left + (neg_total - neg_left)
        err_minus = total - err_plus
        errors = np.column_stack([err_plus, err_minus]).ravel()
        candidate_count += errors.size

        index = int(np.argmin(errors))
        if best is None or errors[index] < best[0]:
            threshold_index, polarity_index = divmod(index, 2)
            best = (
                float(errors[index]),
                feature,
                float(thresholds[threshold_index]),
                1 if polarity_index == 0 else -1,
            )

    error, feature, threshold, polarity = best
    return StumpFitReport(
        stump=DecisionStump(feature=feature, threshold=threshold, polarity=polarity),
        weighted_error=min(max(error, 0.0), 1.0),
        candidate_count=candidate_count,
    )


def predict(h: DecisionStump, x) -> int:
    """polarity si x[feature] > threshold, -polarity sinon (le seuil n'est pas « supérieur »)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if h.feature >= x.size:
        raise ArgumentError(f"Variable {h.feature} hors du vecteur de taille {x.size}")
    return h.polarity if x[h.feature] > h.threshold else -h.polarity


def predict_batch(h: DecisionStump, features: np.ndarray) -> np.ndarray:
    """Prédictions +/-1 de la souche sur chaque ligne de `features`."""
    if h.feature >= features.shape[1]:
        raise ArgumentError(f"Variable {h.feature} hors de la matrice de largeur {features.shape[1]}")
    return np.where(features[:, h.feature] > h.threshold, h.polarity, -h.polarity)


def weighted_error(h: DecisionStump, d: Dataset, p: SimplexWeights) -> float:
    """Σ p_i 1[h(x_i) != y_i]."""
    _check_weights(d, p)
    mistakes = predict_batch(h, d.features) != d.labels
    return float(p.weights[mistakes].sum())


def edge(h: DecisionStump, d: Dataset, p: SimplexWeights) -> float:
    """γ(p) = ½ Σ p_i y_i h(x_i) ∈ [-½, ½]."""
    _check_weights(d, p)
    return float(0.5 * np.dot(p.weights, d.labels * predict_batch(h, d.features)))
