# fairproj/services/harness.py
"""
Service d'exécution des plans d'expérience : balayage des cellules
(mode, ε, graine), agrégation moyenne ± écart-type et écriture des tables
CSV, des courbes d'entraînement et du manifeste JSON.

Arborescence produite sous le répertoire de sortie :
    results.csv, cells.csv, pareto.csv, pareto_dp.csv, manifest.json,
    runs/<cell-id>/curves.csv, runs/<cell-id>/runlog.json
"""

import json
import platform
from concurrent.futures import ThreadPoolExecutor
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from fairproj import __version__
from fairproj.config import Settings, get_settings
from fairproj.core.exceptions import ArgumentError, FairProjError, OutputError
from fairproj.core.logger import get_logger
from fairproj.models import AggregateRow, CellResult, Dataset, RunLog, SweepResult
from fairproj.schemas import BoostConfig, BoostMode, ExperimentPlan, GapMetric
from fairproj.services.boosting_service import run_boosting
from fairproj.services.bounds import summarize_run
from fairproj.services.dataset_service import load_csv, make_synthetic_from_spec, train_test_split
from fairproj.services.metrics import evaluate

logger = get_logger(__name__)

CURVE_COLUMNS = [
    "round", "gamma_w", "gamma_q", "delta", "eps_q", "alpha",
    "exp_loss", "kl", "max_violation", "dual_iters",
]
RESULT_METRICS = ["accuracy", "eopp_gap", "dp_gap", "rounds", "mean_delta"]

PathLike = Union[str, Path]


class CellSpec(NamedTuple):
    """Clé d'une cellule du balayage"""
    cell_id: str
    mode: BoostMode
    epsilon: Optional[float]
    seed: int


def cell_id(mode: BoostMode, epsilon: Optional[float], seed: int) -> str:
    if epsilon is None:
        return f"{mode.value}_seed{seed}"
    return f"{mode.value}_eps{epsilon:g}_seed{seed}"


# ============================================================================
# ÉCRITURE DES FICHIERS
# ============================================================================

def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as exc:
        raise OutputError(f"Écriture impossible: {exc.strerror or exc}", str(path)) from exc
    return path


def _write_text(text: str, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Écriture impossible: {exc.strerror or exc}", str(path)) from exc
    return path


def write_json(payload, path: PathLike) -> Path:
    return _write_text(json.dumps(payload, indent=2, ensure_ascii=False), path)


def emit_curves(log: RunLog, path: PathLike) -> Path:
    """Une ligne par tour ajouté, colonnes CURVE_COLUMNS."""
    if not log.rounds:
        raise ArgumentError("Journal vide : aucune courbe à écrire")
    frame = pd.DataFrame(
        [[getattr(diag, column) for column in CURVE_COLUMNS] for diag in log.rounds],
        columns=CURVE_COLUMNS,
    )
    return _write_frame(frame, path)


def write_run_log(log: RunLog, path: PathLike) -> Path:
    return _write_text(log.model_dump_json(by_alias=True, indent=2), path)


def load_run_log(path: PathLike) -> RunLog:
    """Relit un runlog.json écrit par write_run_log."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"Lecture impossible: {exc.strerror or exc}", str(path)) from exc
    return RunLog.model_validate_json(text)


def emit_cells(result: SweepResult, path: PathLike) -> Path:
    frame = pd.DataFrame([cell.model_dump(mode="json") for cell in result.cells])
    frame.insert(0, "dataset", result.dataset)
    return _write_frame(frame, path)


def emit_results(result: SweepResult, path: PathLike) -> Path:
    """Table des agrégats (mode, ε) : moyenne et écart-type de chaque métrique."""
    frame = pd.DataFrame([row.model_dump(mode="json") for row in result.aggregates])
    frame.insert(0, "dataset", result.dataset)
    return _write_frame(frame, path)


def emit_pareto(result: SweepResult, path: PathLike, gap: Union[GapMetric, str] = GapMetric.EOPP) -> Path:
    """
    Points (exactitude, écart) des cellules FairProj par ε décroissant, suivis
    des références. La colonne gap_monotone indique si l'écart moyen décroît
    quand ε diminue.
    """
    gap = GapMetric(gap)
    key = "eopp_gap" if gap is GapMetric.EOPP else "dp_gap"
    fair_rows = sorted(
        (row for row in result.aggregates if row.mode is BoostMode.FAIRPROJ),
        key=lambda row: -row.epsilon,
    )
    baseline_rows = [row for row in result.aggregates if row.mode is not BoostMode.FAIRPROJ]
    if not fair_rows:
        logger.warning(f"Aucune cellule FairProj : {path} ne contient que les références")

    gaps = [getattr(row, f"{key}_mean") for row in fair_rows]
    defined = [value for value in gaps if value is not None]
    monotone = len(defined) == len(gaps) and all(b <= a for a, b in zip(defined, defined[1:]))

    records = []
    for row in fair_rows + baseline_rows:
        records.append({
            "mode": row.mode.value,
            "epsilon": row.epsilon,
            "accuracy_mean": row.accuracy_mean,
            "accuracy_std": row.accuracy_std,
            "gap_mean": getattr(row, f"{key}_mean"),
            "gap_std": getattr(row, f"{key}_std"),
            "gap_monotone": monotone if row.mode is BoostMode.FAIRPROJ else None,
        })
    columns = ["mode", "epsilon", "accuracy_mean", "accuracy_std", "gap_mean", "gap_std", "gap_monotone"]
    return _write_frame(pd.DataFrame(records, columns=columns), path)


def _package_versions() -> Dict[str, str]:
    versions = {"fairproj": __version__, "python": platform.python_version()}
    for package in ("numpy", "scipy", "pandas", "pydantic", "pydantic-settings"):
        try:
            versions[package] = version(package)
        except PackageNotFoundError:
            versions[package] = "absent"
    return versions


def write_manifest(plan: ExperimentPlan, result: SweepResult, path: PathLike) -> Path:
    """Écho du plan, versions et conventions ; aucun horodatage."""
    manifest = {
        "plan": plan.model_dump(mode="json", by_alias=True),
        "dataset": result.dataset,
        "versions": _package_versions(),
        "conventions": {
            "rounds": "nombre de termes ajoutés ; le tour d'arrêt n'est pas compté",
            "std": "écart-type de population (ddof=0)",
            "prng": "numpy PCG64",
            "sign_zero": "+1",
            "undefined_gap": "valeur manquante, exclue des moyennes",
        },
        "cells": len(result.cells),
        "failed": result.failed_count,
    }
    return write_json(manifest, path)


# ============================================================================
# AGRÉGATION
# ============================================================================

def _mean_std(values: List[Optional[float]]) -> Tuple[Optional[float], Optional[float]]:
    defined = np.array([v for v in values if v is not None], dtype=np.float64)
    if defined.size == 0:
        return None, None
    return float(defined.mean()), float(defined.std(ddof=0))


def aggregate_cells(cells: List[CellResult]) -> List[AggregateRow]:
    """Moyenne et écart-type de population par (mode, ε), dans l'ordre des cellules."""
    groups: Dict[Tuple[BoostMode, Optional[float]], List[CellResult]] = {}
    for cell in cells:
        groups.setdefault((cell.mode, cell.epsilon), []).append(cell)

    rows = []
    for (mode, epsilon), members in groups.items():
        ok = [cell for cell in members if cell.ok]
        values = {}
        for metric in RESULT_METRICS:
            mean, std = _mean_std([getattr(cell, metric) for cell in ok])
            values[f"{metric}_mean"], values[f"{metric}_std"] = mean, std
        rows.append(AggregateRow(
            mode=mode, epsilon=epsilon, cells=len(ok), failed=len(members) - len(ok), **values
        ))
    return rows


# ============================================================================
# SERVICE
# ============================================================================

class ExperimentRunner:
    """Exécute un ExperimentPlan et écrit ses artefacts."""

    def __init__(self, settings: Optional[Settings] = None, jobs: Optional[int] = None):
        self.settings = settings or get_settings()
        self.jobs = jobs
        self.logger = logger
        self._csv_cache: Optional[Dataset] = None

    @staticmethod
    def plan_cells(plan: ExperimentPlan) -> List[CellSpec]:
        """fairproj x ε x graine ; références x graine (ε sans objet)."""
        cells = []
        for mode in plan.modes:
            if mode is BoostMode.FAIRPROJ:
                for epsilon in plan.epsilons:
                    cells.extend(CellSpec(cell_id(mode, epsilon, s), mode, epsilon, s) for s in plan.seeds)
            else:
                cells.extend(CellSpec(cell_id(mode, None, s), mode, None, s) for s in plan.seeds)
        return cells

    def load_dataset(self, plan: ExperimentPlan, seed: int) -> Dataset:
        if plan.csv is not None:
            if self._csv_cache is None:
                self._csv_cache = load_csv(plan.csv.path, plan.csv.schema_config)
            return self._csv_cache
        return make_synthetic_from_spec(plan.synthetic, seed)

    def run_cell(self, plan: ExperimentPlan, cell: CellSpec, out_dir: Path) -> CellResult:
        """Entraîne, évalue sur le jeu de test et écrit le journal de la cellule."""
        data = self.load_dataset(plan, cell.seed)
        train, test = train_test_split(data, plan.test_fraction, cell.seed)
        cfg = BoostConfig(
            rounds=plan.rounds,
            epsilon=cell.epsilon if cell.epsilon is not None else max(plan.epsilons),
            surrogate=plan.surrogate,
            mode=cell.mode,
            projection=plan.projection,
        )
        ensemble, log = run_boosting(train, cfg)
        report = evaluate(test, ensemble)
        summary = summarize_run(log)

        run_dir = out_dir / "runs" / cell.cell_id
        write_run_log(log, run_dir / "runlog.json")
        if log.rounds:
            emit_curves(log, run_dir / "curves.csv")

        return CellResult(
            cell_id=cell.cell_id,
            mode=cell.mode,
            epsilon=cell.epsilon,
            seed=cell.seed,
            accuracy=report.accuracy,
            eopp_gap=report.eopp_gap,
            dp_gap=report.dp_gap,
            rounds=summary.rounds,
            mean_delta=summary.mean_delta,
            termination=summary.termination,
            run_log_path=str(Path("runs") / cell.cell_id / "runlog.json"),
        )

    def _run_cell_isolated(self, plan: ExperimentPlan, cell: CellSpec, out_dir: Path) -> CellResult:
        try:
            return self.run_cell(plan, cell, out_dir)
        except (FairProjError, ValueError, ArithmeticError) as exc:
            self.logger.error(f"Échec de la cellule {cell.cell_id}: {exc}", exc_info=True)
            return CellResult(
                cell_id=cell.cell_id, mode=cell.mode, epsilon=cell.epsilon, seed=cell.seed,
                ok=False, error=f"{type(exc).__name__}: {exc}",
            )

    def run_plan(self, plan: ExperimentPlan) -> SweepResult:
        """
        Exécute toutes les cellules (en parallèle si jobs > 1), agrège et écrit
        les artefacts. Les résultats sont fusionnés dans l'ordre du plan,
        indépendamment de l'ordre d'exécution.
        """
        out_dir = Path(plan.output_dir)
        cells = self.plan_cells(plan)
        jobs = self.jobs or plan.jobs or self.settings.DEFAULT_JOBS
        if plan.csv is not None:
            self.load_dataset(plan, plan.seeds[0])

        self.logger.info(f"Balayage '{plan.name}': {len(cells)} cellules, {jobs} worker(s), sortie {out_dir}")
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {cell.cell_id: pool.submit(self._run_cell_isolated, plan, cell, out_dir) for cell in cells}
            results = [futures[cell.cell_id].result() for cell in cells]

        sweep = SweepResult(dataset=plan.dataset_name, cells=results, aggregates=aggregate_cells(results))
        emit_results(sweep, out_dir / "results.csv")
        emit_cells(sweep, out_dir / "cells.csv")
        emit_pareto(sweep, out_dir / "pareto.csv", GapMetric.EOPP)
        emit_pareto(sweep, out_dir / "pareto_dp.csv", GapMetric.DP)
        write_manifest(plan, sweep, out_dir / "manifest.json")

        if sweep.failed_count:
            self.logger.warning(f"{sweep.failed_count}/{len(results)} cellule(s) en échec")
        self.logger.info(f"Balayage '{plan.name}' terminé (code {sweep.exit_code})")
        return sweep
