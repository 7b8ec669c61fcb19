# fairproj/services/bounds.py
"""
Contrôles a posteriori d'un RunLog : borne de perte avec coût d'équité,
borne côté q, condition suffisante d'avantage effectif positif, récurrence
de la perte exponentielle et résumé de la dynamique d'entraînement.
"""

from typing import Optional

import numpy as np

from fairproj.core.logger import get_logger
from fairproj.models import (
    BoundTracePoint,
    RecursionReport,
    RunLog,
    RunSummary,
    SufficientConditionReport,
    TheoremBoundReport,
    VerificationReport,
)
from fairproj.schemas import BoostMode, TerminationReason
from fairproj.services.boosting_service import EDGE_TRANSFER_SLACK

logger = get_logger(__name__)

BOUND_RELATIVE_TOLERANCE = 1e-8
RECURSION_RELATIVE_TOLERANCE = 1e-8


def check_theorem_bound(log: RunLog) -> TheoremBoundReport:
    """
    Sur le plus long préfixe où γ_w > δ à chaque tour :
        L(f_prefixe) <= n exp(-2 Σ (γ_w - δ)²) (1 + 1e-8).
    Les tours hors préfixe sont déclarés « vacuous », jamais vérifiés.
    La borne côté q, L(f_t) <= n exp(-2 Σ γ_q²), est vérifiée à chaque tour.
    """
    n = log.n
    prefix_length = 0
    for diag in log.rounds:
        if diag.gamma_w > diag.delta:
            prefix_length += 1
        else:
            break

    trace = []
    q_violations = []
    q_sum = w_sum = 0.0
    for index, diag in enumerate(log.rounds):
        q_sum += diag.gamma_q ** 2
        q_bound = n * np.exp(-2.0 * q_sum)
        w_bound = None
        if index < prefix_length:
            w_sum += diag.effective_edge ** 2
            w_bound = float(n * np.exp(-2.0 * w_sum))
        if diag.exp_loss > q_bound * (1 + BOUND_RELATIVE_TOLERANCE):
            q_violations.append(diag.round)
        trace.append(BoundTracePoint(round=diag.round, exp_loss=diag.exp_loss, q_bound=float(q_bound), w_bound=w_bound))

    w_bound_value = float(n * np.exp(-2.0 * w_sum))
    loss_at_prefix_end = log.rounds[prefix_length - 1].exp_loss if prefix_length else log.initial_exp_loss
    vacuous_rounds = [diag.round for diag in log.rounds[prefix_length:]]

    if log.rounds and prefix_length == 0:
        status = "vacuous"
    elif loss_at_prefix_end <= w_bound_value * (1 + BOUND_RELATIVE_TOLERANCE):
        status = "holds"
    else:
        status = "violated"

    if status == "violated" or q_violations:
        logger.warning(
            f"Borne de perte mise en défaut: statut={status}, tours côté q en défaut={q_violations}"
        )
    elif vacuous_rounds:
        logger.info(f"Borne vide (γ_w <= δ) à partir du tour {vacuous_rounds[0]}")

    return TheoremBoundReport(
        status=status,
        prefix_length=prefix_length,
        rounds=len(log.rounds),
        w_bound=w_bound_value,
        loss_at_prefix_end=loss_at_prefix_end,
        q_side_holds=not q_violations,
        q_side_violations=q_violations,
        vacuous_rounds=vacuous_rounds,
        trace=trace,
    )


def check_sufficient_condition(
    log: RunLog,
    gamma_min: Optional[float] = None,
    D: Optional[float] = None,
) -> SufficientConditionReport:
    """
    Diagnostic γ_min > sqrt(D / 2). Par défaut γ_min est le minimum observé
    de γ_w et D le maximum observé de KL(w^t || q^t).
    """
    gammas = [diag.gamma_w for diag in log.rounds]
    kls = [diag.kl for diag in log.rounds]
    gamma_min = gamma_min if gamma_min is not None else (min(gammas) if gammas else None)
    D = D if D is not None else (max(kls) if kls else None)

    threshold = float(np.sqrt(max(D, 0.0) / 2.0)) if D is not None else None
    condition_holds = gamma_min is not None and threshold is not None and gamma_min > threshold
    all_positive = all(diag.effective_edge > 0 for diag in log.rounds)
    early_stop = log.ensemble.termination is TerminationReason.NO_USEFUL_WEAK_LEARNER

    return SufficientConditionReport(
        gamma_min=gamma_min,
        max_kl=D,
        threshold=threshold,
        condition_holds=condition_holds,
        all_effective_edges_positive=all_positive,
        early_stop=early_stop,
        consistent=(not condition_holds) or all_positive,
    )


def expected_loss_factor(eps_q: float, alpha: float) -> float:
    """Σ_i q_i exp(-α y_i h(x_i)) = (1 - ε_q) e^{-α} + ε_q e^{α} ; 2 sqrt(ε(1-ε)) sans plancher."""
    return float((1.0 - eps_q) * np.exp(-alpha) + eps_q * np.exp(alpha))


def check_recursion(log: RunLog) -> RecursionReport:
    """L(f_t) = L(f_{t-1}) Σ q_i exp(-α y h) à 1e-8 relatif, et décroissance stricte."""
    previous = float(np.log(log.n))
    max_error = 0.0
    violations = []
    decreasing = True
    for diag in log.rounds:
        expected = previous + np.log(expected_loss_factor(diag.eps_q, diag.alpha))
        error = abs(np.expm1(diag.log_exp_loss - expected))
        max_error = max(max_error, float(error))
        if error > RECURSION_RELATIVE_TOLERANCE:
            violations.append(diag.round)
        if not diag.log_exp_loss < previous:
            decreasing = False
        previous = diag.log_exp_loss
    return RecursionReport(
        rounds=len(log.rounds),
        max_relative_error=max_error,
        strictly_decreasing=decreasing,
        violations=violations,
    )


def summarize_run(log: RunLog) -> RunSummary:
    """Moyennes par tour ; sans tour ajouté, δ moyen est celui du tour d'arrêt."""
    rounds = log.rounds
    if not rounds:
        return RunSummary(
            rounds=0,
            termination=log.ensemble.termination,
            mean_delta=log.stop.delta if log.stop is not None else 0.0,
            final_exp_loss=log.initial_exp_loss,
        )
    return RunSummary(
        rounds=len(rounds),
        termination=log.ensemble.termination,
        mean_gamma_w=float(np.mean([r.gamma_w for r in rounds])),
        mean_gamma_q=float(np.mean([r.gamma_q for r in rounds])),
        mean_delta=float(np.mean([r.delta for r in rounds])),
        mean_effective_edge=float(np.mean([r.effective_edge for r in rounds])),
        active_fraction=float(np.mean([any(v != 0.0 for v in r.lambda_) for r in rounds])),
        max_violation=float(max(r.max_violation for r in rounds)),
        final_exp_loss=rounds[-1].exp_loss,
    )


def verify_run_log(log: RunLog, feasibility_tolerance: float = 1e-6) -> VerificationReport:
    """Rejoue tous les contrôles, dont γ_q >= γ_w - δ (tour d'arrêt compris) et la faisabilité de w^t."""
    records = list(log.rounds) + ([log.stop] if log.stop is not None else [])
    edge_violations = [
        record.round for record in records
        if record.gamma_q < record.gamma_w - record.delta - EDGE_TRANSFER_SLACK
    ]
    feasibility_violations = []
    if log.mode is BoostMode.FAIRPROJ:
        limit = log.config.epsilon + feasibility_tolerance
        feasibility_violations = [diag.round for diag in log.rounds if diag.max_violation > limit]
    return VerificationReport(
        theorem=check_theorem_bound(log),
        sufficient=check_sufficient_condition(log),
        recursion=check_recursion(log),
        edge_transfer_violations=edge_violations,
        feasibility_violations=feasibility_violations,
    )
