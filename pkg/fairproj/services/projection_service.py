# fairproj/services/projection_service.py
"""
Projection KL d'une distribution q sur le polytope d'équité
C_ε = {w ∈ Δ_n : |<w, g_k>| <= ε pour tout k}, via son problème dual :

    min_λ  log Z(λ) + ε ||λ||_1,   Z(λ) = Σ_i q_i exp(-λ^T g(i))

La solution primale est l'inclinaison w_i = q_i exp(-λ^T g(i)) / Z(λ) et
KL(w* || q) = -log Z(λ*) - ε ||λ*||_1.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, rel_entr

from fairproj.core.exceptions import (
    ArgumentError,
    InfeasibleGridError,
    NumericError,
    ProjectionFailureError,
)
from fairproj.core.logger import get_logger
from fairproj.models import (
    ConstraintFeatures,
    DualSolution,
    OracleCase,
    OracleSuiteReport,
    ProjectionResult,
    SimplexWeights,
)
from fairproj.schemas import ProjectionConfig, SolverMode
from fairproj.services.distributions import delta_from_kl, kl_divergence

logger = get_logger(__name__)

ARMIJO_C = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_BACKTRACKS = 60
DUALITY_GAP_TOLERANCE = 1e-6


# ============================================================================
# OBJECTIF DUAL
# ============================================================================

def _log_q(q: SimplexWeights) -> np.ndarray:
    if q.log_weights is not None:
        return q.log_weights
    with np.errstate(divide="ignore"):
        return np.log(q.weights)


def _check_dims(q: SimplexWeights, g: ConstraintFeatures) -> None:
    if g.n != len(q):
        raise ArgumentError(f"g porte sur {g.n} exemples, q sur {len(q)}")


def _tilt(lam: np.ndarray, log_q: np.ndarray, g: ConstraintFeatures) -> Tuple[float, np.ndarray]:
    """log Z(λ) et w(λ) normalisée."""
    exponent = log_q - g.g.T @ lam
    log_z = float(logsumexp(exponent))
    return log_z, np.exp(exponent - log_z)


def _as_lambda(lam, k: int) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if lam.shape != (k,):
        raise ArgumentError(f"λ doit être de longueur K={k} (reçu {lam.shape})")
    if not np.all(np.isfinite(lam)):
        raise NumericError("λ non fini")
    return lam


def dual_objective(
    lam,
    q: SimplexWeights,
    g: ConstraintFeatures,
    epsilon: float,
    mu: Optional[float] = None,
) -> Tuple[float, np.ndarray]:
    """
    Valeur et gradient de log Z(λ) + ε ||λ||_1.

    Avec `mu`, |λ_k| est remplacé par sqrt(λ_k² + μ) - sqrt(μ) (nul en λ = 0).
    Sans lissage, le terme ε sign(λ) est un sous-gradient (0 en λ_k = 0).
    """
    _check_dims(q, g)
    lam = _as_lambda(lam, g.k)
    value, grad = _value_and_grad(lam, _log_q(q), g, epsilon, mu)
    if not np.isfinite(value):
        raise NumericError("Objectif dual non fini")
    return value, grad


def _value_and_grad(
    lam: np.ndarray, log_q: np.ndarray, g: ConstraintFeatures, epsilon: float, mu: Optional[float]
) -> Tuple[float, np.ndarray]:
    log_z, w = _tilt(lam, log_q, g)
    grad = -(g.g @ w)
    if mu is None:
        return log_z + epsilon * float(np.abs(lam).sum()), grad + epsilon * np.sign(lam)
    root = np.sqrt(lam ** 2 + mu)
    return log_z + epsilon * float((root - np.sqrt(mu)).sum()), grad + epsilon * lam / root


def _exact_dual_value(lam: np.ndarray, log_q: np.ndarray, g: ConstraintFeatures, epsilon: float) -> float:
    log_z, _ = _tilt(lam, log_q, g)
    return log_z + epsilon * float(np.abs(lam).sum())


# ============================================================================
# SOLVEURS
# ============================================================================

@dataclass
class _SolverOutcome:
    lam: np.ndarray
    iterations: int
    converged: bool


def _kkt_satisfied(lam: np.ndarray, moments: np.ndarray, epsilon: float, tol: float) -> bool:
    """w(λ) réalisable et écarts complémentaires λ⁺(ε - m), λ⁻(ε + m) <= tol."""
    feasible = np.all(np.abs(moments) <= epsilon + tol)
    slack_plus = np.maximum(lam, 0.0) * np.abs(epsilon - moments)
    slack_minus = np.maximum(-lam, 0.0) * np.abs(epsilon + moments)
    return bool(feasible and max(slack_plus.max(), slack_minus.max()) <= tol)


def _split_objective(log_q: np.ndarray, g: ConstraintFeatures, epsilon: float) -> Callable:
    k = g.k

    def objective(z: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        lam = z[:k] - z[k:]
        log_z, w = _tilt(lam, log_q, g)
        moments = g.g @ w
        value = log_z + epsilon * float(z.sum())
        grad = np.concatenate([epsilon - moments, epsilon + moments])
        return value, grad, moments

    return objective


def _solve_split_variable(
    log_q: np.ndarray, g: ConstraintFeatures, cfg: ProjectionConfig, lam0: np.ndarray
) -> _SolverOutcome:
    """Gradient projeté sur z = (λ⁺, λ⁻) >= 0 : pas de Barzilai-Borwein puis recherche d'Armijo."""
    k = g.k
    epsilon = cfg.epsilon
    objective = _split_objective(log_q, g, epsilon)

    z = np.concatenate([np.maximum(lam0, 0.0), np.maximum(-lam0, 0.0)])
    value, grad, moments = objective(z)
    step = 1.0
    z_prev = grad_prev = None

    for iteration in range(1, cfg.max_iterations + 1):
        residual = np.max(np.abs(z - np.maximum(z - grad, 0.0)))
        if residual <= cfg.tolerance or _kkt_satisfied(z[:k] - z[k:], moments, epsilon, cfg.tolerance):
            return _SolverOutcome(z[:k] - z[k:], iteration - 1, True)

        if z_prev is not None:
            s, y = z - z_prev, grad - grad_prev
            sy = float(s @ y)
            if sy > 0:
                step = float(s @ s) / sy

        for _ in range(MAX_BACKTRACKS):
            candidate = np.maximum(z - step * grad, 0.0)
            cand_value, cand_grad, cand_moments = objective(candidate)
            if not np.isfinite(cand_value):
                raise NumericError("Valeur non finie pendant la recherche linéaire du dual")
            if cand_value <= value + ARMIJO_C * float(grad @ (candidate - z)):
                break
            step *= BACKTRACK_FACTOR
        else:
            logger.debug(f"Recherche linéaire épuisée à l'itération {iteration}")
            return _SolverOutcome(z[:k] - z[k:], iteration, False)

        z_prev, grad_prev = z, grad
        z, value, grad, moments = candidate, cand_value, cand_grad, cand_moments

    lam = z[:k] - z[k:]
    residual = np.max(np.abs(z - np.maximum(z - grad, 0.0)))
    converged = residual <= cfg.tolerance or _kkt_satisfied(lam, moments, epsilon, cfg.tolerance)
    return _SolverOutcome(lam, cfg.max_iterations, bool(converged))


def _solve_lbfgsb(
    log_q: np.ndarray, g: ConstraintFeatures, cfg: ProjectionConfig, lam0: np.ndarray
) -> _SolverOutcome:
    """Même formulation séparée, bornes z >= 0 confiées à L-BFGS-B."""
    k = g.k
    objective = _split_objective(log_q, g, cfg.epsilon)
    z0 = np.concatenate([np.maximum(lam0, 0.0), np.maximum(-lam0, 0.0)])
    result = minimize(
        lambda z: objective(z)[:2],
        z0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * (2 * k),
        options={"maxiter": cfg.max_iterations, "gtol": cfg.tolerance, "ftol": 1e-15},
    )
    z = result.x
    _, grad, moments = objective(z)
    lam = z[:k] - z[k:]
    residual = np.max(np.abs(z - np.maximum(z - grad, 0.0)))
    converged = residual <= cfg.tolerance or _kkt_satisfied(lam, moments, cfg.epsilon, cfg.tolerance)
    return _SolverOutcome(lam, int(result.nit), bool(converged or result.success))


def _solve_smoothed(
    log_q: np.ndarray, g: ConstraintFeatures, cfg: ProjectionConfig, lam0: np.ndarray
) -> _SolverOutcome:
    """Norme l1 lissée, L-BFGS sans contrainte."""
    result = minimize(
        lambda lam: _value_and_grad(lam, log_q, g, cfg.epsilon, cfg.mu),
        lam0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iterations, "gtol": cfg.tolerance, "ftol": 1e-15},
    )
    return _SolverOutcome(np.asarray(result.x, dtype=np.float64), int(result.nit), bool(result.success))


_SOLVERS = {
    SolverMode.SPLIT_VARIABLE: _solve_split_variable,
    SolverMode.LBFGSB: _solve_lbfgsb,
    SolverMode.SMOOTHED_L1: _solve_smoothed,
}


def solve_dual(
    q: SimplexWeights,
    g: ConstraintFeatures,
    cfg: ProjectionConfig,
    warm_start: Optional[Sequence[float]] = None,
) -> DualSolution:
    """
    Minimise le dual depuis `warm_start` (λ du tour précédent) ou 0.

    Le meilleur itéré est comparé à λ = 0 (valeur 0) : la valeur duale
    renvoyée est donc toujours <= 0. Un plafond d'itérations atteint donne
    converged=False, la décision revient à l'appelant.
    """
    _check_dims(q, g)
    if np.any(q.weights <= 0):
        raise ArgumentError("solve_dual exige une distribution q strictement positive")
    lam0 = np.zeros(g.k) if warm_start is None else _as_lambda(warm_start, g.k)

    log_q = _log_q(q)
    outcome = _SOLVERS[cfg.solver](log_q, g, cfg, lam0)
    lam = outcome.lam
    if not np.all(np.isfinite(lam)):
        raise NumericError("Le solveur dual a produit un λ non fini")

    value = _exact_dual_value(lam, log_q, g, cfg.epsilon)
    if value > 0.0:
        lam, value = np.zeros(g.k), 0.0

    return DualSolution(
        lambda_=lam.tolist(),
        dual_value=value,
        kl_value=-value,
        iterations=outcome.iterations,
        converged=outcome.converged,
        active=np.sign(lam).astype(int).tolist(),
    )


def primal_from_dual(q: SimplexWeights, g: ConstraintFeatures, lam) -> SimplexWeights:
    """w_i = q_i exp(-λ^T g(i)) / Z(λ) ; λ = 0 renvoie q elle-même."""
    _check_dims(q, g)
    lam = _as_lambda(lam, g.k)
    if not lam.any():
        return q
    exponent = _log_q(q) - g.g.T @ lam
    log_z = logsumexp(exponent)
    log_w = exponent - log_z
    return SimplexWeights(np.exp(log_w), log_w)


# ============================================================================
# PROJECTION
# ============================================================================

def _zero_solution(k: int) -> DualSolution:
    return DualSolution(
        lambda_=[0.0] * k, dual_value=0.0, kl_value=0.0, iterations=0, converged=True, active=[0] * k
    )


def project(
    q: SimplexWeights,
    g: ConstraintFeatures,
    cfg: ProjectionConfig,
    warm_start: Optional[Sequence[float]] = None,
) -> ProjectionResult:
    """
    w = argmin_{w ∈ C_ε} KL(w || q) et δ = sqrt(KL(w || q) / 2).

    Une q déjà réalisable est renvoyée telle quelle (λ = 0, δ = 0).
    Une violation résiduelle n'est jamais corrigée, seulement rapportée.

    Raises:
        ProjectionFailureError: solveur non convergé et violation > acceptance_tolerance
    """
    _check_dims(q, g)
    epsilon = cfg.epsilon
    initial_violation = g.max_violation(q)
    if initial_violation <= epsilon:
        return ProjectionResult(
            w=q, dual=_zero_solution(g.k), delta=0.0, kl_direct=0.0,
            max_violation=initial_violation, duality_gap=0.0,
        )

    dual = solve_dual(q, g, cfg, warm_start)
    w = primal_from_dual(q, g, dual.lam)
    max_violation = g.max_violation(w)
    excess = max_violation - epsilon

    accepted_with_warning = False
    if excess > cfg.feasibility_tolerance:
        if excess > cfg.acceptance_tolerance:
            raise ProjectionFailureError(
                f"Projection non réalisable: violation {excess:.3e} > {cfg.acceptance_tolerance:.0e} "
                f"après {dual.iterations} itérations (convergé={dual.converged})",
                excess,
            )
        accepted_with_warning = True
        logger.warning(
            f"Projection acceptée avec une violation de {excess:.3e} "
            f"(convergé={dual.converged}, {dual.iterations} itérations)"
        )
    elif not dual.converged:
        accepted_with_warning = True
        logger.warning(f"Solveur dual non convergé après {dual.iterations} itérations, w réalisable")

    kl_direct = kl_divergence(w, q)
    duality_gap = abs(dual.kl_value - kl_direct)
    if duality_gap > DUALITY_GAP_TOLERANCE:
        logger.warning(f"Écart de dualité {duality_gap:.3e} entre KL duale et KL directe")

    return ProjectionResult(
        w=w,
        dual=dual,
        delta=delta_from_kl(kl_direct),
        kl_direct=kl_direct,
        max_violation=max_violation,
        duality_gap=duality_gap,
        accepted_with_warning=accepted_with_warning,
    )


# ============================================================================
# ORACLE PAR GRILLE
# ============================================================================

GRID_SLACK = 1e-12


def _prefix_grid(dims: int, resolution: int) -> np.ndarray:
    """Tous les vecteurs entiers >= 0 de longueur `dims` et de somme <= resolution."""
    if dims == 0:
        return np.zeros((1, 0), dtype=np.int64)
    axes = np.meshgrid(*[np.arange(resolution + 1)] * dims, indexing="ij")
    points = np.stack([axis.ravel() for axis in axes], axis=1)
    return points[points.sum(axis=1) <= resolution]


def brute_force_project(
    q: SimplexWeights,
    g: ConstraintFeatures,
    epsilon: float,
    grid_resolution: int,
) -> Tuple[SimplexWeights, float]:
    """
    Oracle exhaustif sur la grille {c / R : c entier, Σ c = R} du simplexe (n <= 4).

    Les n-2 premières coordonnées sont énumérées ; la dernière paire
    (s, r - s) est résolue exactement, la KL étant convexe en s : le meilleur
    entier réalisable est l'arrondi inférieur ou supérieur du minimiseur
    continu r q_{n-1} / (q_{n-1} + q_n) ramené dans l'intervalle réalisable.

    Raises:
        InfeasibleGridError: aucun point de la grille ne satisfait les contraintes
    """
    _check_dims(q, g)
    n = len(q)
    if n > 4:
        raise ArgumentError(f"brute_force_project est limité à n <= 4 (reçu {n})")
    if grid_resolution < 1:
        raise ArgumentError("grid_resolution doit être >= 1")
    R = grid_resolution
    qw = q.weights

    if n == 1:
        w = SimplexWeights(np.ones(1))
        if np.max(np.abs(g.g[:, 0])) > epsilon + GRID_SLACK:
            raise InfeasibleGridError("Aucun point réalisable sur la grille")
        return w, kl_divergence(w, q)

    prefix = _prefix_grid(n - 2, R)
    rest = R - prefix.sum(axis=1)
    prefix_kl = rel_entr(prefix / R, qw[: n - 2]).sum(axis=1)
    prefix_moment = (prefix / R) @ g.g[:, : n - 2].T

    lo = np.zeros(len(prefix))
    hi = rest.astype(np.float64)
    for k in range(g.k):
        slope = (g.g[k, n - 2] - g.g[k, n - 1]) / R
        offset = prefix_moment[:, k] + g.g[k, n - 1] * rest / R
        if slope == 0.0:
            hi = np.where(np.abs(offset) <= epsilon + GRID_SLACK, hi, -1.0)
            continue
        a = (-epsilon - offset) / slope
        b = (epsilon - offset) / slope
        lo = np.maximum(lo, np.minimum(a, b))
        hi = np.minimum(hi, np.maximum(a, b))

    s_lo = np.ceil(lo - 1e-9)
    s_hi = np.floor(hi + 1e-9)
    feasible = s_lo <= s_hi
    if not feasible.any():
        raise InfeasibleGridError(
            f"Aucun point réalisable sur la grille de résolution {R} pour ε={epsilon}",
            {"epsilon": epsilon, "resolution": R},
        )

    prefix, rest, prefix_kl = prefix[feasible], rest[feasible], prefix_kl[feasible]
    s_lo, s_hi = s_lo[feasible], s_hi[feasible]

    pair_mass = qw[n - 2] + qw[n - 1]
    ratio = qw[n - 2] / pair_mass if pair_mass > 0 else 0.0
    target = np.clip(rest * ratio, s_lo, s_hi)

    best_kl = np.full(len(prefix), np.inf)
    best_s = s_lo.copy()
    for s in (np.floor(target), np.ceil(target)):
        s = np.clip(s, s_lo, s_hi)
        kl = prefix_kl + rel_entr(s / R, qw[n - 2]) + rel_entr((rest - s) / R, qw[n - 1])
        better = kl < best_kl
        best_kl = np.where(better, kl, best_kl)
        best_s = np.where(better, s, best_s)

    winner = int(np.argmin(best_kl))
    counts = np.concatenate([prefix[winner], [best_s[winner], rest[winner] - best_s[winner]]])
    w = SimplexWeights(counts / R)
    return w, float(best_kl[winner])


# ============================================================================
# BANC DE COMPARAISON SOLVEUR / ORACLE
# ============================================================================

ORACLE_EPSILONS = (0.0, 0.05, 0.2, 0.5)
ORACLE_KL_TOLERANCE = 1e-3
ORACLE_MIN_MASS = 0.02


def random_instance(rng: np.random.Generator, n: int) -> Tuple[SimplexWeights, ConstraintFeatures]:
    """q de Dirichlet plancher, g à valeurs dans {-1, 0, 1} contenant +1 et -1 (C_0 non vide)."""
    while True:
        row = rng.integers(-1, 2, size=n)
        if (row == 1).any() and (row == -1).any():
            break
    q = np.maximum(rng.dirichlet(np.ones(n)), ORACLE_MIN_MASS)
    return SimplexWeights(q / q.sum()), ConstraintFeatures(g=row.astype(np.float64), bound=1.0)


def oracle_suite(
    count: int,
    resolution: int,
    rng: np.random.Generator,
    cfg: Optional[ProjectionConfig] = None,
    epsilons: Sequence[float] = ORACLE_EPSILONS,
) -> OracleSuiteReport:
    """Compare project() et brute_force_project() sur `count` instances n ∈ {2, 3, 4}, K = 1."""
    cfg = cfg or ProjectionConfig()
    cases = []
    for _ in range(count):
        n = int(rng.integers(2, 5))
        epsilon = float(rng.choice(epsilons))
        q, g = random_instance(rng, n)
        result = project(q, g, cfg.model_copy(update={"epsilon": epsilon}))
        _, oracle_kl = brute_force_project(q, g, epsilon, resolution)
        violation = max(result.max_violation - epsilon, 0.0)
        passed = (
            abs(result.kl_direct - oracle_kl) <= ORACLE_KL_TOLERANCE
            and violation <= cfg.feasibility_tolerance
        )
        cases.append(OracleCase(
            n=n, epsilon=epsilon, solver_kl=result.kl_direct, oracle_kl=oracle_kl,
            violation=violation, passed=passed,
        ))
    report = OracleSuiteReport(
        cases=cases,
        kl_tolerance=ORACLE_KL_TOLERANCE,
        max_kl_error=max((abs(c.solver_kl - c.oracle_kl) for c in cases), default=0.0),
        max_violation=max((c.violation for c in cases), default=0.0),
    )
    logger.info(
        f"Banc oracle: {count} instances, {report.failures} échec(s), "
        f"écart KL max {report.max_kl_error:.2e}"
    )
    return report
