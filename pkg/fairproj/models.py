# fairproj/models.py
"""
Types du domaine : jeux de données, distributions sur le simplexe,
solutions de projection, ensembles de souches et journaux d'exécution.

Les conteneurs numériques (tableaux numpy) sont des dataclasses figées dont
les tableaux sont en lecture seule ; les enregistrements destinés à être
sérialisés en JSON sont des modèles Pydantic figés.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fairproj.core.exceptions import ArgumentError
from fairproj.schemas import BoostConfig, BoostMode, Surrogate, TerminationReason

SIMPLEX_TOLERANCE = 1e-9


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


# ============================================================================
# JEU DE DONNÉES
# ============================================================================

class DatasetSchema(BaseModel):
    """Métadonnées d'encodage : noms des colonnes produites et niveaux one-hot"""
    feature_names: List[str] = Field(default_factory=list)
    source_columns: List[str] = Field(default_factory=list, description="Colonnes d'origine, dans l'ordre")
    categorical_levels: Dict[str, List[str]] = Field(default_factory=dict)
    numeric_columns: List[str] = Field(default_factory=list)

    model_config = ConfigDict(frozen=True)

    @property
    def width(self) -> int:
        return len(self.feature_names)


class GroupCounts(BaseModel):
    """Effectifs n_a, n_a^+ et n_a^- pour chaque groupe a"""
    total: Dict[int, int]
    positives: Dict[int, int]
    negatives: Dict[int, int]

    model_config = ConfigDict(frozen=True)

    @classmethod
    def recount(cls, protected: np.ndarray, labels: np.ndarray) -> "GroupCounts":
        total, positives, negatives = {}, {}, {}
        for a in (0, 1):
            in_group = protected == a
            total[a] = int(in_group.sum())
            positives[a] = int((in_group & (labels == 1)).sum())
            negatives[a] = int((in_group & (labels == -1)).sum())
        return cls(total=total, positives=positives, negatives=negatives)

    @property
    def n(self) -> int:
        return sum(self.total.values())


@dataclass(frozen=True, eq=False)
class Example:
    """Triplet (x_i, a_i, y_i)"""
    features: np.ndarray
    protected: int
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """n exemples encodés : matrice des variables, groupe protégé et étiquette +/-1"""
    features: np.ndarray
    protected: np.ndarray
    labels: np.ndarray
    schema: DatasetSchema
    group_counts: Optional[GroupCounts] = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        object.__setattr__(self, "features", _frozen_array(features, np.float64))
        object.__setattr__(self, "protected", _frozen_array(self.protected, np.int64))
        object.__setattr__(self, "labels", _frozen_array(self.labels, np.int64))

        n = self.features.shape[0]
        if n < 1:
            raise ArgumentError("Un jeu de données doit contenir au moins un exemple")
        if self.protected.shape != (n,) or self.labels.shape != (n,):
            raise ArgumentError("Les vecteurs groupe et étiquette doivent être de longueur n")
        if not np.isin(self.labels, (-1, 1)).all():
            raise ArgumentError("Les étiquettes doivent valoir -1 ou +1")
        if not np.isin(self.protected, (0, 1)).all():
            raise ArgumentError("L'attribut protégé doit valoir 0 ou 1")
        if self.schema.width and self.schema.width != self.features.shape[1]:
            raise ArgumentError(
                f"Largeur du schéma ({self.schema.width}) différente de celle des variables "
                f"({self.features.shape[1]})"
            )

        counts = GroupCounts.recount(self.protected, self.labels)
        if self.group_counts is not None and self.group_counts != counts:
            raise ArgumentError("Les effectifs par groupe ne correspondent pas au recomptage")
        object.__setattr__(self, "group_counts", counts)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return len(self)

    @property
    def width(self) -> int:
        return self.features.shape[1]

    @property
    def examples(self) -> Iterator[Example]:
        for i in range(len(self)):
            yield Example(self.features[i], int(self.protected[i]), int(self.labels[i]))

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Sous-jeu de données dans l'ordre des indices fournis."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            protected=self.protected[idx],
            labels=self.labels[idx],
            schema=self.schema,
        )


# ============================================================================
# DISTRIBUTIONS
# ============================================================================

@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """Point du simplexe de dimension n (q^t ou w^t)"""
    weights: np.ndarray
    log_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        weights = _frozen_array(self.weights, np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ArgumentError("Les poids doivent former un vecteur non vide")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ArgumentError("Les poids doivent être finis et positifs ou nuls")
        total = float(weights.sum())
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise ArgumentError(f"Les poids somment à {total!r} au lieu de 1")
        object.__setattr__(self, "weights", weights)
        if self.log_weights is not None:
            object.__setattr__(self, "log_weights", _frozen_array(self.log_weights, np.float64))

    def __len__(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int) -> "SimplexWeights":
        return cls(np.full(n, 1.0 / n), np.full(n, -np.log(n)))

    @classmethod
    def normalized(cls, values) -> "SimplexWeights":
        """Normalise un vecteur positif ou nul sur le simplexe."""
        values = np.asarray(values, dtype=np.float64)
        total = values.sum()
        if not np.isfinite(total) or total <= 0:
            raise ArgumentError("Impossible de normaliser un vecteur de masse nulle")
        return cls(values / total)


@dataclass(frozen=True, eq=False)
class MarginVector:
    """Marges y_i f(x_i)"""
    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scores", _frozen_array(self.scores, np.float64))

    def __len__(self) -> int:
        return self.scores.size


@dataclass(frozen=True, eq=False)
class ConstraintFeatures:
    """Matrice g (K x n) des contraintes d'équité, de borne G"""
    g: np.ndarray
    bound: float
    labels: List[str] = field(default_factory=list)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=np.float64)
        if g.ndim == 1:
            g = g.reshape(1, -1)
        if g.shape[0] < 1:
            raise ArgumentError("Au moins une contrainte (K >= 1) est requise")
        if np.any(np.abs(g) > self.bound):
            raise ArgumentError(f"Une entrée de g dépasse la borne G={self.bound}")
        object.__setattr__(self, "g", _frozen_array(g, np.float64))
        if not self.labels:
            object.__setattr__(self, "labels", [f"g{k}" for k in range(g.shape[0])])

    @property
    def k(self) -> int:
        return self.g.shape[0]

    @property
    def n(self) -> int:
        return self.g.shape[1]

    def moments(self, p: SimplexWeights) -> np.ndarray:
        """Vecteur des produits scalaires <p, g_k>."""
        return self.g @ p.weights

    def max_violation(self, p: SimplexWeights) -> float:
        """max_k |<p, g_k>|."""
        return float(np.max(np.abs(self.moments(p))))


# ============================================================================
# PROJECTION
# ============================================================================

class DualSolution(BaseModel):
    """Solution du problème dual de projection KL"""
    lambda_: List[float] = Field(alias="lambda")
    dual_value: float
    kl_value: float
    iterations: int
    converged: bool
    active: List[int] = Field(description="Signe de la contrainte active par k (-1, 0, +1)")

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def check_signs(self) -> "DualSolution":
        if self.kl_value < -1e-10:
            raise ValueError(f"Valeur KL négative: {self.kl_value}")
        if self.dual_value > 1e-10:
            raise ValueError(f"Optimum dual positif: {self.dual_value}")
        return self

    @property
    def lam(self) -> np.ndarray:
        return np.asarray(self.lambda_, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """Distribution projetée w, solution duale et coût d'équité delta"""
    w: SimplexWeights
    dual: DualSolution
    delta: float
    kl_direct: float
    max_violation: float
    duality_gap: float
    accepted_with_warning: bool = False


# ============================================================================
# APPRENANTS FAIBLES ET ENSEMBLES
# ============================================================================

class DecisionStump(BaseModel):
    """Souche : prédit polarity si x[feature] > threshold, -polarity sinon"""
    feature: int = Field(ge=0)
    threshold: float
    polarity: int

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_stump(self) -> "DecisionStump":
        if self.polarity not in (-1, 1):
            raise ValueError("La polarité doit valoir -1 ou +1")
        if not np.isfinite(self.threshold):
            raise ValueError("Le seuil doit être fini")
        return self


class StumpFitReport(BaseModel):
    """Résultat de l'ajustement d'une souche"""
    stump: DecisionStump
    weighted_error: float = Field(ge=0.0)
    candidate_count: int

    model_config = ConfigDict(frozen=True)


class EnsembleTerm(BaseModel):
    """Terme alpha_t h_t de l'ensemble"""
    alpha: float = Field(gt=0.0)
    stump: DecisionStump

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_alpha(self) -> "EnsembleTerm":
        if not np.isfinite(self.alpha):
            raise ValueError("alpha doit être fini")
        return self


class Ensemble(BaseModel):
    """f_T = somme des alpha_t h_t"""
    terms: List[EnsembleTerm] = Field(default_factory=list)
    termination: TerminationReason = TerminationReason.COMPLETED

    model_config = ConfigDict(frozen=True)

    def __len__(self) -> int:
        return len(self.terms)


# ============================================================================
# DIAGNOSTICS DE BOOSTING
# ============================================================================

class RoundDiagnostics(BaseModel):
    """Diagnostic d'un tour de boosting ayant ajouté un terme"""
    round: int
    gamma_w: float
    gamma_q: float
    delta: float
    eps_q: float
    eps_w: float
    alpha: float
    exp_loss: float
    log_exp_loss: float
    loss_factor: float
    kl: float
    max_violation: float
    dual_iters: int
    converged: bool = True
    lambda_: List[float] = Field(default_factory=list, alias="lambda")
    stump: DecisionStump

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @property
    def effective_edge(self) -> float:
        return self.gamma_w - self.delta


class StopRecord(BaseModel):
    """Tour ayant déclenché l'arrêt « aucun apprenant utile »"""
    round: int
    gamma_w: float
    gamma_q: float
    delta: float
    eps_q: float
    kl: float
    stump: DecisionStump

    model_config = ConfigDict(frozen=True)


class RunLog(BaseModel):
    """Journal complet d'une exécution (données des courbes d'entraînement)"""
    n: int
    mode: BoostMode
    surrogate: Surrogate
    config: BoostConfig
    rounds: List[RoundDiagnostics] = Field(default_factory=list)
    ensemble: Ensemble = Field(default_factory=Ensemble)
    stop: Optional[StopRecord] = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_length(self) -> "RunLog":
        if len(self.rounds) > self.config.rounds:
            raise ValueError("Le journal contient plus de tours que T")
        return self

    @property
    def initial_exp_loss(self) -> float:
        return float(self.n)


# ============================================================================
# MÉTRIQUES
# ============================================================================

class ConfusionCounts(BaseModel):
    """Matrice de confusion d'un groupe"""
    tp: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    tn: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    model_config = ConfigDict(frozen=True)

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn


class GroupConfusion(BaseModel):
    """Matrices de confusion par groupe a dans {0, 1}"""
    groups: Dict[int, ConfusionCounts]

    model_config = ConfigDict(frozen=True)

    @property
    def total(self) -> int:
        return sum(c.size for c in self.groups.values())


class EvaluationReport(BaseModel):
    """Performance et écarts d'équité d'un classifieur ; None si indéfini"""
    accuracy: float
    eopp_gap: Optional[float] = None
    dp_gap: Optional[float] = None

    model_config = ConfigDict(frozen=True)


# ============================================================================
# RAPPORTS DE VÉRIFICATION
# ============================================================================

class BoundTracePoint(BaseModel):
    """Perte observée et bornes théoriques après un tour"""
    round: int
    exp_loss: float
    q_bound: float
    w_bound: Optional[float] = Field(None, description="None hors du préfixe où γ_w > δ")


class TheoremBoundReport(BaseModel):
    """Borne n exp(-2 Σ (γ_w - δ)²) sur le plus long préfixe où γ_w > δ, et borne côté q"""
    status: str = Field(description="holds, violated ou vacuous")
    prefix_length: int
    rounds: int
    w_bound: float
    loss_at_prefix_end: float
    q_side_holds: bool
    q_side_violations: List[int] = Field(default_factory=list)
    vacuous_rounds: List[int] = Field(default_factory=list)
    trace: List[BoundTracePoint] = Field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status != "violated" and self.q_side_holds


class SufficientConditionReport(BaseModel):
    """Condition suffisante γ_min > sqrt(D / 2) pour un avantage effectif positif"""
    gamma_min: Optional[float]
    max_kl: Optional[float]
    threshold: Optional[float]
    condition_holds: bool
    all_effective_edges_positive: bool
    early_stop: bool
    consistent: bool


class RecursionReport(BaseModel):
    """Contrôle de L(f_t) = L(f_{t-1}) Σ q_i exp(-α y_i h(x_i))"""
    rounds: int
    max_relative_error: float
    strictly_decreasing: bool
    violations: List[int] = Field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations and self.strictly_decreasing


class RunSummary(BaseModel):
    """Moyennes de la dynamique d'entraînement d'une exécution"""
    rounds: int
    termination: TerminationReason
    mean_gamma_w: Optional[float] = None
    mean_gamma_q: Optional[float] = None
    mean_delta: float = 0.0
    mean_effective_edge: Optional[float] = None
    active_fraction: float = 0.0
    max_violation: Optional[float] = None
    final_exp_loss: float


# ============================================================================
# BALAYAGES
# ============================================================================

class CellResult(BaseModel):
    """Résultat d'une cellule (mode, ε, graine) évaluée sur le jeu de test"""
    cell_id: str
    mode: BoostMode
    epsilon: Optional[float] = None
    seed: int
    ok: bool = True
    error: Optional[str] = None
    accuracy: Optional[float] = None
    eopp_gap: Optional[float] = None
    dp_gap: Optional[float] = None
    rounds: Optional[int] = None
    mean_delta: Optional[float] = None
    termination: Optional[TerminationReason] = None
    run_log_path: Optional[str] = None


class AggregateRow(BaseModel):
    """Moyenne et écart-type (population) d'un groupe de cellules (mode, ε)"""
    mode: BoostMode
    epsilon: Optional[float] = None
    cells: int
    failed: int = 0
    accuracy_mean: Optional[float] = None
    accuracy_std: Optional[float] = None
    eopp_gap_mean: Optional[float] = None
    eopp_gap_std: Optional[float] = None
    dp_gap_mean: Optional[float] = None
    dp_gap_std: Optional[float] = None
    rounds_mean: Optional[float] = None
    rounds_std: Optional[float] = None
    mean_delta_mean: Optional[float] = None
    mean_delta_std: Optional[float] = None


class SweepResult(BaseModel):
    """Cellules et agrégats d'un balayage"""
    dataset: str
    cells: List[CellResult] = Field(default_factory=list)
    aggregates: List[AggregateRow] = Field(default_factory=list)

    @property
    def failed_count(self) -> int:
        return sum(1 for cell in self.cells if not cell.ok)

    @property
    def exit_code(self) -> int:
        """0 : succès, 1 : toutes les cellules en échec, 2 : échec partiel."""
        failed = self.failed_count
        if failed == 0:
            return 0
        return 1 if failed == len(self.cells) else 2


# ============================================================================
# VÉRIFICATIONS EN LIGNE DE COMMANDE
# ============================================================================

class OracleCase(BaseModel):
    """Comparaison solveur dual / grille sur une instance"""
    n: int
    epsilon: float
    solver_kl: float
    oracle_kl: float
    violation: float
    passed: bool


class OracleSuiteReport(BaseModel):
    """Bilan de la comparaison sur un lot d'instances aléatoires"""
    cases: List[OracleCase] = Field(default_factory=list)
    kl_tolerance: float
    max_kl_error: float = 0.0
    max_violation: float = 0.0

    @property
    def failures(self) -> int:
        return sum(1 for case in self.cases if not case.passed)


class VerificationReport(BaseModel):
    """Ensemble des contrôles rejoués sur un RunLog stocké"""
    theorem: TheoremBoundReport
    sufficient: SufficientConditionReport
    recursion: RecursionReport
    edge_transfer_violations: List[int] = Field(default_factory=list)
    feasibility_violations: List[int] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.theorem.holds
            and self.recursion.holds
            and not self.edge_transfer_violations
            and not self.feasibility_violations
        )
