"""
fairproj/schemas.py
Schémas Pydantic pour la validation des configurations d'entrée
(schéma CSV, projection, boosting, plan d'expérience).
"""

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import List, Optional, Type, TypeVar

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fairproj.core.exceptions import ArgumentError, SchemaError

ModelT = TypeVar("ModelT", bound=BaseModel)

# ============================================================================
# ENUMS
# ============================================================================

class Surrogate(str, Enum):
    """Contraintes de substitution sur les poids d'entraînement"""
    DP = "dp"
    EOPP = "eopp"
    EODDS = "eodds"


class BoostMode(str, Enum):
    """Algorithme de boosting"""
    FAIRPROJ = "fairproj"
    ADABOOST = "adaboost"
    REWEIGHING = "reweighing"


class SolverMode(str, Enum):
    """Formulation du problème dual de projection"""
    SPLIT_VARIABLE = "split-variable"  # gradient projeté sur (lambda+, lambda-) >= 0
    SMOOTHED_L1 = "smoothed-l1"        # |l| ~ sqrt(l^2 + mu) - sqrt(mu), L-BFGS
    LBFGSB = "lbfgsb"                  # (lambda+, lambda-) >= 0, L-BFGS-B de scipy


class TerminationReason(str, Enum):
    """Motif d'arrêt d'une exécution de boosting"""
    COMPLETED = "completed"
    NO_USEFUL_WEAK_LEARNER = "no-useful-weak-learner"
    PERFECT_FIT = "perfect-fit"


class GapMetric(str, Enum):
    """Écart d'équité utilisé pour les courbes de Pareto"""
    EOPP = "eopp"
    DP = "dp"


# ============================================================================
# DONNÉES
# ============================================================================

class SchemaConfig(BaseModel):
    """Description déclarative d'un fichier CSV tabulaire"""
    label_column: str = Field(description="Colonne de la cible")
    positive_value: str = Field(description="Valeur de la classe positive (mappée sur +1)")
    protected_column: str = Field(description="Colonne de l'attribut protégé")
    group_one_value: str = Field(description="Valeur du groupe a=1")
    categorical_columns: List[str] = Field(default_factory=list, description="Colonnes à encoder en one-hot")
    drop_columns: List[str] = Field(default_factory=list, description="Colonnes ignorées")

    model_config = ConfigDict(frozen=True, json_schema_extra={
        "example": {
            "label_column": "income",
            "positive_value": ">50K",
            "protected_column": "sex",
            "group_one_value": "Male",
            "categorical_columns": ["workclass", "education"],
            "drop_columns": ["fnlwgt"],
        }
    })

    @field_validator("positive_value", "group_one_value", mode="before")
    @classmethod
    def stringify(cls, v):
        """Les cellules CSV sont lues comme texte : on compare des chaînes."""
        return str(v)

    @model_validator(mode="after")
    def check_disjoint(self) -> "SchemaConfig":
        if self.label_column == self.protected_column:
            raise ValueError("La cible et l'attribut protégé doivent être des colonnes distinctes")
        reserved = {self.label_column, self.protected_column}
        if reserved & set(self.drop_columns):
            raise ValueError("Impossible d'ignorer la cible ou l'attribut protégé")
        return self


class SyntheticSpec(BaseModel):
    """Paramètres du générateur synthétique à deux groupes"""
    n: int = Field(2000, ge=4)
    group_imbalance: float = Field(0.5, ge=0.0, le=1.0, description="P(A=1)")
    base_rate_gap: float = Field(0.4, ge=0.0, le=1.0, description="P(Y=1|A=1) - P(Y=1|A=0)")
    noise: float = Field(1.0, ge=0.0, description="Écart-type du bruit gaussien sur le signal")
    proxy_label_weight: float = Field(
        0.5, ge=0.0, description="Poids de l'étiquette dans x1 ; 0 fait de x1 un pur indicateur de groupe"
    )
    seed: Optional[int] = Field(None, description="Graine fixe ; sinon la graine de chaque cellule")

    model_config = ConfigDict(frozen=True)

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        """Analyse la forme 'n=2000,imbalance=0.5,gap=0.4,noise=1.0,proxy=0.5,seed=7'."""
        aliases = {"imbalance": "group_imbalance", "gap": "base_rate_gap", "proxy": "proxy_label_weight"}
        values = {}
        for item in filter(None, (part.strip() for part in text.split(","))):
            if "=" not in item:
                raise ArgumentError(f"Paramètre synthétique mal formé: '{item}' (attendu clé=valeur)")
            key, value = (s.strip() for s in item.split("=", 1))
            values[aliases.get(key, key)] = value
        return cls.model_validate(values)


class CsvSource(BaseModel):
    """Jeu de données fourni sous forme de fichier CSV"""
    path: str
    schema_config: SchemaConfig = Field(alias="schema")

    model_config = ConfigDict(frozen=True, populate_by_name=True)


# ============================================================================
# PROJECTION ET BOOSTING
# ============================================================================

class ProjectionConfig(BaseModel):
    """Réglages du solveur de projection KL"""
    epsilon: float = Field(0.25, ge=0.0, description="Marge de la contrainte |<w, g_k>| <= epsilon")
    tolerance: float = Field(1e-8, gt=0.0, description="Seuil sur la norme infinie du gradient projeté")
    max_iterations: int = Field(500, ge=1)
    solver: SolverMode = SolverMode.SPLIT_VARIABLE
    mu: float = Field(1e-8, gt=0.0, description="Lissage de la norme l1")
    feasibility_tolerance: float = Field(1e-6, gt=0.0)
    acceptance_tolerance: float = Field(1e-4, gt=0.0)

    model_config = ConfigDict(frozen=True)


class BoostConfig(BaseModel):
    """Paramètres d'une exécution de boosting"""
    rounds: int = Field(100, ge=1, description="Nombre maximal de tours T")
    epsilon: float = Field(0.25, gt=0.0, description="Marge de la contrainte d'équité")
    surrogate: Surrogate = Surrogate.EOPP
    mode: BoostMode = BoostMode.FAIRPROJ
    error_floor: Optional[float] = Field(None, description="Plancher de eps_q ; 1/(2n) par défaut")
    edge_tolerance: float = Field(1e-6, ge=0.0, lt=0.5, description="Arrêt si eps_q >= 1/2 - tolérance")
    projection: ProjectionConfig = Field(default_factory=ProjectionConfig)

    model_config = ConfigDict(frozen=True)

    @field_validator("error_floor")
    @classmethod
    def check_floor(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 < v < 0.5:
            raise ValueError("error_floor doit appartenir à ]0, 0.5[")
        return v

    def floor_for(self, n: int) -> float:
        """Plancher effectif pour un jeu de n exemples."""
        return self.error_floor if self.error_floor is not None else 1.0 / (2 * n)

    def projection_config(self) -> ProjectionConfig:
        """Configuration de projection avec la marge epsilon du boosting."""
        return self.projection.model_copy(update={"epsilon": self.epsilon})


# ============================================================================
# PLAN D'EXPÉRIENCE
# ============================================================================

def parse_seeds(text: str) -> List[int]:
    """Analyse '42..51' (bornes incluses), '1,2,3' ou une combinaison '1..3,7'."""
    seeds: List[int] = []
    for part in filter(None, (p.strip() for p in str(text).split(","))):
        try:
            if ".." in part:
                start, stop = (int(s) for s in part.split("..", 1))
                if stop < start:
                    raise ArgumentError(f"Intervalle de graines décroissant: '{part}'")
                seeds.extend(range(start, stop + 1))
            else:
                seeds.append(int(part))
        except ValueError as exc:
            if isinstance(exc, ArgumentError):
                raise
            raise ArgumentError(f"Graine invalide: '{part}'") from exc
    if not seeds:
        raise ArgumentError("Aucune graine fournie")
    return seeds


class ExperimentPlan(BaseModel):
    """Plan complet d'un balayage (modes x epsilons x graines)"""
    name: str = "experiment"
    csv: Optional[CsvSource] = None
    synthetic: Optional[SyntheticSpec] = None
    modes: List[BoostMode] = Field(default_factory=lambda: [BoostMode.ADABOOST, BoostMode.FAIRPROJ])
    epsilons: List[float] = Field(default_factory=lambda: [0.25])
    surrogate: Surrogate = Surrogate.EOPP
    rounds: int = Field(100, ge=1)
    seeds: List[int] = Field(default_factory=lambda: list(range(42, 52)))
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    output_dir: str = "./outputs"
    jobs: int = Field(1, ge=1)
    projection: ProjectionConfig = Field(default_factory=ProjectionConfig)

    model_config = ConfigDict(frozen=True)

    @field_validator("seeds", mode="before")
    @classmethod
    def coerce_seeds(cls, v):
        return parse_seeds(v) if isinstance(v, str) else v

    @field_validator("epsilons")
    @classmethod
    def check_epsilons(cls, v: List[float]) -> List[float]:
        if any(eps <= 0 for eps in v):
            raise ValueError("Chaque epsilon doit être > 0")
        return v

    @model_validator(mode="after")
    def check_plan(self) -> "ExperimentPlan":
        if (self.csv is None) == (self.synthetic is None):
            raise ValueError("Le plan doit définir exactement une source: 'csv' ou 'synthetic'")
        if not self.modes:
            raise ValueError("La liste des modes est vide")
        if not self.seeds:
            raise ValueError("La liste des graines est vide")
        if not self.epsilons:
            raise ValueError("La grille d'epsilon est vide")
        return self

    @property
    def dataset_name(self) -> str:
        if self.csv is not None:
            return Path(self.csv.path).stem
        return "synthetic"


# ============================================================================
# LECTURE DE FICHIERS DÉCLARATIFS
# ============================================================================

def load_model_file(path: str, model: Type[ModelT]) -> ModelT:
    """Charge un modèle Pydantic depuis un fichier JSON ou TOML."""
    file_path = Path(path)
    if not file_path.exists():
        raise SchemaError(f"Fichier de configuration introuvable: {path}")
    text = file_path.read_text(encoding="utf-8")
    if file_path.suffix.lower() == ".toml":
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    return model.model_validate(data)
