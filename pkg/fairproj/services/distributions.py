# fairproj/services/distributions.py
"""
Distributions sur le simplexe : poids exponentiels induits par l'ensemble,
divergences (KL, variation totale, coût de Pinsker) et variables de
contrainte d'équité (DP, EOpp, EOdds).

Logarithme naturel partout (nats).
"""

from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp, rel_entr

from fairproj.core.exceptions import ArgumentError, DivergenceInfiniteError, NumericError
from fairproj.core.logger import get_logger
from fairproj.models import ConstraintFeatures, Dataset, MarginVector, SimplexWeights
from fairproj.schemas import Surrogate

logger = get_logger(__name__)

ArrayLike = Union[MarginVector, np.ndarray]


# ============================================================================
# POIDS EXPONENTIELS
# ============================================================================

def tilted_log_weights(margins: ArrayLike, base_log_weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Log-poids non normalisés b_i - m_i (b = 0 sans inclinaison)."""
    scores = margins.scores if isinstance(margins, MarginVector) else np.asarray(margins, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise NumericError("Marge non finie dans le calcul des poids exponentiels")
    exponent = -scores
    if base_log_weights is not None:
        exponent = exponent + base_log_weights
    return exponent


def exponential_weights(
    margins: ArrayLike,
    base_log_weights: Optional[np.ndarray] = None,
) -> SimplexWeights:
    """
    q_i ∝ exp(-m_i), ou q_i ∝ v_i exp(-m_i) si des log-poids de base log(v) sont fournis.
    L'exposant est décalé de son maximum avant exponentiation.
    """
    exponent = tilted_log_weights(margins, base_log_weights)
    shifted = exponent - exponent.max()
    unnormalized = np.exp(shifted)
    total = unnormalized.sum()
    return SimplexWeights(unnormalized / total, shifted - np.log(total))


def log_total_weight(margins: ArrayLike, base_log_weights: Optional[np.ndarray] = None) -> float:
    """log Σ_i exp(b_i - m_i), forme stable de la perte exponentielle."""
    return float(logsumexp(tilted_log_weights(margins, base_log_weights)))


# ============================================================================
# DIVERGENCES
# ============================================================================

def _check_lengths(p: SimplexWeights, q: SimplexWeights) -> None:
    if len(p) != len(q):
        raise ArgumentError(f"Longueurs différentes: {len(p)} et {len(q)}")


def kl_divergence(p: SimplexWeights, q: SimplexWeights) -> float:
    """KL(p || q) = Σ p_i ln(p_i / q_i), avec 0 ln(0/.) = 0."""
    _check_lengths(p, q)
    outside_support = (p.weights > 0) & (q.weights == 0)
    if outside_support.any():
        raise DivergenceInfiniteError(
            "KL infinie: p charge un point de masse nulle sous q",
            {"indices": np.flatnonzero(outside_support).tolist()},
        )
    return max(float(rel_entr(p.weights, q.weights).sum()), 0.0)


def total_variation(p: SimplexWeights, q: SimplexWeights) -> float:
    """½ Σ |p_i - q_i|."""
    _check_lengths(p, q)
    return float(0.5 * np.abs(p.weights - q.weights).sum())


def delta_from_kl(kl: float) -> float:
    """sqrt(KL / 2), un KL légèrement négatif (arrondi) étant ramené à 0."""
    return float(np.sqrt(max(kl, 0.0) / 2.0))


def pinsker_delta(w: SimplexWeights, q: SimplexWeights) -> float:
    """Coût d'équité δ = sqrt(KL(w || q) / 2)."""
    return delta_from_kl(kl_divergence(w, q))


# ============================================================================
# VARIABLES DE CONTRAINTE
# ============================================================================

def build_constraints(d: Dataset, surrogate: Union[Surrogate, str]) -> ConstraintFeatures:
    """
    Construit la matrice g (K x n) de la contrainte de substitution, avec G = 1.

    dp    : g(i) = 1[a=1] - 1[a=0]
    eopp  : g(i) = 1[y=1] (1[a=1] - 1[a=0])
    eodds : deux lignes, eopp puis 1[y=-1] (1[a=1] - 1[a=0])
    """
    try:
        surrogate = Surrogate(surrogate)
    except ValueError as exc:
        raise ArgumentError(f"Contrainte de substitution inconnue: '{surrogate}'") from exc

    counts = d.group_counts
    if counts.total[0] == 0 or counts.total[1] == 0:
        logger.warning(f"Un seul groupe présent ({counts.total}) : la contrainte '{surrogate.value}' est dégénérée")

    group_sign = np.where(d.protected == 1, 1.0, -1.0)
    positive = (d.labels == 1).astype(np.float64)
    negative = 1.0 - positive

    if surrogate is Surrogate.DP:
        rows, labels = [group_sign], ["dp"]
    elif surrogate is Surrogate.EOPP:
        rows, labels = [positive * group_sign], ["eopp"]
    else:
        rows, labels = [positive * group_sign, negative * group_sign], ["eodds_pos", "eodds_neg"]
    return ConstraintFeatures(g=np.vstack(rows), bound=1.0, labels=labels)


def constraint_moments(g: ConstraintFeatures, p: SimplexWeights) -> Tuple[np.ndarray, float]:
    """Moments <p, g_k> et violation maximale max_k |<p, g_k>|."""
    if g.n != len(p):
        raise ArgumentError(f"g porte sur {g.n} exemples, la distribution sur {len(p)}")
    moments = g.moments(p)
    return moments, float(np.max(np.abs(moments)))
