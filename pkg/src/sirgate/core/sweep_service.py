"""
Service de balayage des probabilités de migration λ.
Chaque point est une simulation indépendante; les points sont répartis sur
un pool de processus borné et les résultats rangés par indice de grille.
"""

import logging
from collections.abc import Callable, Hashable, Mapping
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from threading import Lock

import numpy as np

from sirgate.config import SimulationConfig
from sirgate.core.metrics import SummaryRow, summarize
from sirgate.core.stepper import run_simulation

logger = logging.getLogger(__name__)

# Valeurs de λ du tableau de référence
TABLE_LAMBDAS = (1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.2, 0.5, 1.0)


def run_point(cfg: SimulationConfig) -> SummaryRow:
    """Simulation + synthèse d'un point; un échec devient une ligne d'erreur"""
    try:
        return summarize(run_simulation(cfg))
    except Exception as e:
        logger.error(f"Échec du point λ=({cfg.params.lambda_1}, {cfg.params.lambda_2}): {e}")
        return SummaryRow.failed(cfg.params.lambda_1, cfg.params.lambda_2, f"{type(e).__name__}: {e}")


class SweepService:
    """Exécution de points de balayage avec suivi de progression par callbacks"""

    def __init__(self, max_workers: int = 1):
        self.max_workers = max(1, int(max_workers))
        self._lock = Lock()
        self._progress_callbacks: list[Callable[[int, int], None]] = []
        self.logger = logging.getLogger(__name__)

        self.completed = 0
        self.failed = 0
        self.total = 0

    def add_progress_callback(self, callback: Callable[[int, int], None]):
        """Ajoute un callback appelé après chaque point (terminés, total)"""
        self._progress_callbacks.append(callback)

    def _notify_progress(self):
        for callback in self._progress_callbacks:
            try:
                callback(self.completed, self.total)
            except Exception as e:
                self.logger.error(f"Erreur dans le callback de progression: {e}")

    def _record(self, row: SummaryRow):
        with self._lock:
            self.completed += 1
            if not row.ok:
                self.failed += 1
        self._notify_progress()

    def get_state(self) -> dict:
        """Retourne l'état du dernier balayage"""
        return {
            "max_workers": self.max_workers,
            "completed": self.completed,
            "failed": self.failed,
            "total": self.total,
        }

    def run_points(self, configs: Mapping[Hashable, SimulationConfig]) -> dict[Hashable, SummaryRow]:
        """
        Exécute chaque configuration et range les résultats par clé

        Args:
            configs: configurations indexées (indice de grille, valeur de λ...)

        Returns:
            Synthèses indexées par les mêmes clés, indépendantes de l'ordre d'exécution
        """
        self.completed, self.failed, self.total = 0, 0, len(configs)
        results: dict[Hashable, SummaryRow] = {}
        if not configs:
            return results

        self.logger.info(f"Balayage de {self.total} points sur {self.max_workers} processus")
        if self.max_workers == 1:
            for key, cfg in configs.items():
                results[key] = run_point(cfg)
                self._record(results[key])
        else:
            with ProcessPoolExecutor(max_workers=self.max_workers) as pool:
                futures = {pool.submit(run_point, cfg): key for key, cfg in configs.items()}
                for future in as_completed(futures):
                    key = futures[future]
                    try:
                        results[key] = future.result()
                    except Exception as e:
                        cfg = configs[key]
                        self.logger.error(f"Processus de balayage interrompu: {e}")
                        results[key] = SummaryRow.failed(cfg.params.lambda_1, cfg.params.lambda_2, str(e))
                    self._record(results[key])

        self.logger.info(f"Balayage terminé: {self.completed - self.failed}/{self.total} points réussis")
        return results


@dataclass(frozen=True)
class LambdaGrid:
    """Résultats d'une grille (λ₁, λ₂), indexés [i₁][i₂]"""
    lambda1_values: tuple[float, ...]
    lambda2_values: tuple[float, ...]
    rows: dict[tuple[int, int], SummaryRow]

    def matrix(self, column: str) -> np.ndarray:
        out = np.empty((len(self.lambda1_values), len(self.lambda2_values)))
        for (i1, i2), row in self.rows.items():
            out[i1, i2] = getattr(row, column)
        return out

    @property
    def peak_infected(self) -> np.ndarray:
        return self.matrix("peak_infected")

    @property
    def lockdown_days(self) -> np.ndarray:
        return self.matrix("lockdown_days")

    def long_rows(self) -> list[tuple[float, float, float, float]]:
        """(lambda1, lambda2, peak_infected, lockdown_days) dans l'ordre de la grille"""
        return [
            (self.lambda1_values[i1], self.lambda2_values[i2],
             self.rows[(i1, i2)].peak_infected, self.rows[(i1, i2)].lockdown_days)
            for i1 in range(len(self.lambda1_values))
            for i2 in range(len(self.lambda2_values))
        ]


def run_lambda_sweep(
    base_cfg: SimulationConfig,
    lambda_values: list[float],
    *,
    service: SweepService | None = None,
) -> list[SummaryRow]:
    """Une synthèse par λ, avec λ₁ = λ₂ = λ, dans l'ordre des valeurs données"""
    service = service or sweep_service
    configs = {k: base_cfg.with_lambda(lam, lam) for k, lam in enumerate(lambda_values)}
    results = service.run_points(configs)
    return [results[k] for k in range(len(lambda_values))]


def run_lambda_grid(
    base_cfg: SimulationConfig,
    lambda1_values: list[float],
    lambda2_values: list[float],
    *,
    service: SweepService | None = None,
) -> LambdaGrid:
    """Produit cartésien de simulations indépendantes sur (λ₁, λ₂)"""
    if not lambda1_values or not lambda2_values:
        raise ValueError("les deux grilles de λ doivent être non vides")
    service = service or sweep_service
    configs = {
        (i1, i2): base_cfg.with_lambda(l1, l2)
        for i1, l1 in enumerate(lambda1_values)
        for i2, l2 in enumerate(lambda2_values)
    }
    rows = service.run_points(configs)
    return LambdaGrid(tuple(lambda1_values), tuple(lambda2_values), rows)


# Instance globale du service de balayage
sweep_service = SweepService()
