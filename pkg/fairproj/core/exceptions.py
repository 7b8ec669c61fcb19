"""
fairproj/core/exceptions.py
Hiérarchie d'exceptions de la bibliothèque.
Chaque erreur porte un message lisible et un dictionnaire de détails sérialisable.
"""

from typing import Any, Dict, Optional


class FairProjError(Exception):
    """Exception de base pour toutes les erreurs fairproj."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


# ============================================================================
# DONNÉES
# ============================================================================

class SchemaError(FairProjError):
    """Colonne absente ou schéma incohérent avec le fichier source."""


class DataParseError(FairProjError):
    """Cellule numérique illisible, repérée par son indice de ligne (0 = première ligne de données)."""

    def __init__(self, row: int, column: str, value: str):
        super().__init__(
            f"Valeur non numérique '{value}' à la ligne {row}, colonne '{column}'",
            {"row": row, "column": column, "value": value},
        )
        self.row = row
        self.column = column
        self.value = value


class EmptyDatasetError(FairProjError):
    """Le fichier ne contient aucune ligne de données."""


class ArgumentError(FairProjError, ValueError):
    """Argument hors du domaine autorisé."""


# ============================================================================
# CALCUL NUMÉRIQUE
# ============================================================================

class NumericError(FairProjError, ArithmeticError):
    """Valeur non finie rencontrée pendant un calcul."""


class DivergenceInfiniteError(NumericError):
    """KL(p || q) infinie : p charge un point où q est nulle."""


class ContractViolationError(FairProjError):
    """Précondition d'appel violée par l'appelant (ex. alpha demandé pour eps_q >= 1/2)."""


class BoundViolationError(FairProjError):
    """Une inégalité garantie par la théorie a été mise en défaut à l'exécution."""


# ============================================================================
# PROJECTION
# ============================================================================

class ProjectionFailureError(FairProjError):
    """Le solveur dual n'a pas convergé et la violation dépasse le seuil d'acceptation."""

    def __init__(self, message: str, violation: float, round_index: Optional[int] = None):
        super().__init__(message, {"violation": violation, "round": round_index})
        self.violation = violation
        self.round_index = round_index

    def at_round(self, round_index: int) -> "ProjectionFailureError":
        """Retourne une copie de l'erreur annotée avec l'indice du tour de boosting."""
        return ProjectionFailureError(
            f"Tour {round_index} : {self.message}", self.violation, round_index
        )


class InfeasibleGridError(FairProjError):
    """Aucun point de la grille ne satisfait les contraintes."""


# ============================================================================
# SORTIES
# ============================================================================

class OutputError(FairProjError):
    """Échec d'écriture ou de lecture d'un fichier de résultats."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{message} ({path})", {"path": path})
        self.path = path
