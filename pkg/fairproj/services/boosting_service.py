# fairproj/services/boosting_service.py
"""
Boucle de boosting FairProj et références AdaBoost / Reweighing.

À chaque tour : q^t (poids exponentiels des marges courantes), projection
w^t de q^t sur le polytope d'équité, souche ajustée sur w^t, puis erreur
ε_q et coefficient α calculés sous q^t. Les trois modes partagent la même
boucle ; AdaBoost et Reweighing sautent la projection (w^t = q^t).
"""

from typing import List, Optional, Tuple

import numpy as np

from fairproj.core.exceptions import (
    ArgumentError,
    BoundViolationError,
    ContractViolationError,
    ProjectionFailureError,
)
from fairproj.core.logger import get_logger
from fairproj.models import (
    Dataset,
    Ensemble,
    EnsembleTerm,
    RoundDiagnostics,
    RunLog,
    SimplexWeights,
    StopRecord,
)
from fairproj.schemas import BoostConfig, BoostMode, TerminationReason
from fairproj.services.distributions import (
    build_constraints,
    constraint_moments,
    exponential_weights,
    log_total_weight,
)
from fairproj.services.projection_service import project
from fairproj.services.weak_learner import edge, fit_stump, predict_batch, weighted_error

logger = get_logger(__name__)

EDGE_TRANSFER_SLACK = 1e-9


# ============================================================================
# ENSEMBLE
# ============================================================================

def decision_function(f: Ensemble, features: np.ndarray) -> np.ndarray:
    """f(x) = Σ α_t h_t(x) pour chaque ligne."""
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    scores = np.zeros(features.shape[0])
    for term in f.terms:
        scores += term.alpha * predict_batch(term.stump, features)
    return scores


def predict_ensemble_batch(f: Ensemble, features: np.ndarray) -> np.ndarray:
    """sign(f(x)) avec sign(0) = +1."""
    return np.where(decision_function(f, features) >= 0, 1, -1)


def predict_ensemble(f: Ensemble, x) -> int:
    """sign(Σ α_t h_t(x)) avec la convention sign(0) = +1."""
    return int(predict_ensemble_batch(f, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def margins(d: Dataset, f: Ensemble) -> np.ndarray:
    """y_i f(x_i)."""
    return d.labels * decision_function(f, d.features)


def log_exp_loss(d: Dataset, f: Ensemble) -> float:
    """log Σ_i exp(-y_i f(x_i)), sous forme log-sum-exp décalée par le maximum."""
    return log_total_weight(margins(d, f))


def exp_loss(d: Dataset, f: Ensemble) -> float:
    """
    L_exp(f) = Σ_i exp(-y_i f(x_i)) ; vaut n pour l'ensemble vide.

    Peut valoir 0 par sous-dépassement pour de grandes marges ; log_exp_loss
    reste fini et c'est lui qui est conservé dans RoundDiagnostics.log_exp_loss.
    """
    return float(np.exp(log_exp_loss(d, f)))


def training_error(d: Dataset, f: Ensemble) -> float:
    return float(np.mean(predict_ensemble_batch(f, d.features) != d.labels))


# ============================================================================
# COEFFICIENTS ET POIDS
# ============================================================================

def compute_alpha(eps_q: float, floor: float) -> float:
    """
    α = ½ ln((1 - ε) / ε) avec ε = max(eps_q, floor).

    Raises:
        ContractViolationError: eps_q >= ½ (l'appelant aurait dû s'arrêter)
        ArgumentError: eps_q < 0 ou plancher hors de ]0, ½[
    """
    if eps_q >= 0.5:
        raise ContractViolationError(
            f"compute_alpha appelé avec eps_q={eps_q} >= 0.5", {"eps_q": eps_q}
        )
    if eps_q < 0:
        raise ArgumentError(f"eps_q négatif: {eps_q}")
    if not 0.0 < floor < 0.5:
        raise ArgumentError(f"Le plancher doit appartenir à ]0, 0.5[ (reçu {floor})")
    eps = max(eps_q, floor)
    return float(0.5 * np.log1p((1.0 - 2.0 * eps) / eps))


def reweighing_weights(d: Dataset) -> SimplexWeights:
    """
    Poids de Kamiran-Calders v_i = n_a n_y / (n n_{a,y}) pour la cellule (a_i, y_i),
    normalisés sur le simplexe.
    """
    counts = d.group_counts
    n = counts.n
    raw = np.empty(n)
    for a in (0, 1):
        for y, cell_count, label_count in (
            (1, counts.positives[a], sum(counts.positives.values())),
            (-1, counts.negatives[a], sum(counts.negatives.values())),
        ):
            if cell_count == 0:
                raise ArgumentError(
                    f"Cellule (a={a}, y={y:+d}) vide : reweighing impossible",
                    {"group": a, "label": y},
                )
            in_cell = (d.protected == a) & (d.labels == y)
            raw[in_cell] = counts.total[a] * label_count / (n * cell_count)
    return SimplexWeights.normalized(raw)


# ============================================================================
# BOUCLE
# ============================================================================

def _boost(
    d: Dataset,
    cfg: BoostConfig,
    base_log_weights: Optional[np.ndarray],
) -> Tuple[Ensemble, RunLog]:
    mode = cfg.mode
    n = d.n
    floor = cfg.floor_for(n)
    g = build_constraints(d, cfg.surrogate)
    projection_cfg = cfg.projection_config()
    projected = mode is BoostMode.FAIRPROJ

    logger.info(
        f"Boosting {mode.value}: n={n}, T={cfg.rounds}, ε={cfg.epsilon}, "
        f"contrainte={cfg.surrogate.value}"
    )

    current = np.zeros(n)
    log_loss = log_total_weight(current, base_log_weights)
    warm_start: Optional[List[float]] = None
    terms: List[EnsembleTerm] = []
    rounds: List[RoundDiagnostics] = []
    termination = TerminationReason.COMPLETED
    stop: Optional[StopRecord] = None

    for t in range(1, cfg.rounds + 1):
        q = exponential_weights(current, base_log_weights)

        if projected:
            try:
                result = project(q, g, projection_cfg, warm_start)
            except ProjectionFailureError as exc:
                logger.error(f"Échec de projection au tour {t}: {exc.message}")
                raise exc.at_round(t) from exc
            w, delta, kl = result.w, result.delta, result.kl_direct
            lam, dual_iters, converged = result.dual.lambda_, result.dual.iterations, result.dual.converged
            max_violation = result.max_violation
            warm_start = lam
        else:
            w, delta, kl = q, 0.0, 0.0
            lam, dual_iters, converged = [0.0] * g.k, 0, True
            max_violation = constraint_moments(g, q)[1]

        report = fit_stump(d, w)
        stump = report.stump
        gamma_w = edge(stump, d, w)
        gamma_q = edge(stump, d, q)
        eps_q = weighted_error(stump, d, q)

        if gamma_q < gamma_w - delta - EDGE_TRANSFER_SLACK:
            raise BoundViolationError(
                f"Transfert d'avantage violé au tour {t}: γ_q={gamma_q:.6g} < γ_w - δ = {gamma_w - delta:.6g}",
                {"round": t, "gamma_q": gamma_q, "gamma_w": gamma_w, "delta": delta},
            )

        if eps_q >= 0.5 - cfg.edge_tolerance:
            stop = StopRecord(
                round=t, gamma_w=gamma_w, gamma_q=gamma_q, delta=delta, eps_q=eps_q, kl=kl, stump=stump
            )
            termination = TerminationReason.NO_USEFUL_WEAK_LEARNER
            logger.info(f"Arrêt au tour {t}: aucun apprenant utile sous q (ε_q={eps_q:.6f})")
            break

        alpha = compute_alpha(eps_q, floor)
        current = current + alpha * d.labels * predict_batch(stump, d.features)
        new_log_loss = log_total_weight(current, base_log_weights)
        terms.append(EnsembleTerm(alpha=alpha, stump=stump))
        rounds.append(RoundDiagnostics(
            round=t,
            gamma_w=gamma_w,
            gamma_q=gamma_q,
            delta=delta,
            eps_q=eps_q,
            eps_w=report.weighted_error,
            alpha=alpha,
            exp_loss=float(np.exp(new_log_loss)),
            log_exp_loss=new_log_loss,
            loss_factor=float(np.exp(new_log_loss - log_loss)),
            kl=kl,
            max_violation=max_violation,
            dual_iters=dual_iters,
            converged=converged,
            lambda_=lam,
            stump=stump,
        ))
        logger.debug(
            f"Tour {t}: γ_w={gamma_w:.4f} γ_q={gamma_q:.4f} δ={delta:.4f} "
            f"ε_q={eps_q:.4f} α={alpha:.4f} L={np.exp(new_log_loss):.6g}"
        )
        log_loss = new_log_loss

        scores = d.labels * current
        if eps_q < floor and np.all(np.where(scores >= 0, 1, -1) == d.labels):
            termination = TerminationReason.PERFECT_FIT
            logger.info(f"Ajustement parfait au tour {t}")
            break

    ensemble = Ensemble(terms=terms, termination=termination)
    run_log = RunLog(
        n=n, mode=mode, surrogate=cfg.surrogate, config=cfg,
        rounds=rounds, ensemble=ensemble, stop=stop,
    )
    logger.info(
        f"Boosting {mode.value} terminé: {len(terms)} termes, motif={termination.value}, "
        f"L={np.exp(log_loss):.6g}"
    )
    return ensemble, run_log


def run_fairproj(d: Dataset, cfg: BoostConfig) -> Tuple[Ensemble, RunLog]:
    """Boosting avec projection KL de q^t sur C_ε à chaque tour."""
    return _boost(d, cfg.model_copy(update={"mode": BoostMode.FAIRPROJ}), None)


def run_adaboost(d: Dataset, cfg: BoostConfig) -> Tuple[Ensemble, RunLog]:
    """AdaBoost : souches entraînées directement sur q^t."""
    return _boost(d, cfg.model_copy(update={"mode": BoostMode.ADABOOST}), None)


def run_reweighing(d: Dataset, cfg: BoostConfig) -> Tuple[Ensemble, RunLog]:
    """AdaBoost sur la distribution exponentielle inclinée par les poids v (fixes)."""
    v = reweighing_weights(d).weights
    base = None if np.all(v == v[0]) else np.log(d.n * v)
    return _boost(d, cfg.model_copy(update={"mode": BoostMode.REWEIGHING}), base)


_RUNNERS = {
    BoostMode.FAIRPROJ: run_fairproj,
    BoostMode.ADABOOST: run_adaboost,
    BoostMode.REWEIGHING: run_reweighing,
}


def run_boosting(d: Dataset, cfg: BoostConfig) -> Tuple[Ensemble, RunLog]:
    """Lance le mode indiqué par cfg.mode."""
    return _RUNNERS[cfg.mode](d, cfg)
