"""
Statistiques de synthèse: effectifs totaux, pic d'infectés, infectés
résiduels et durée de confinement.
"""

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from sirgate.config import TwoRegionGrid
from sirgate.core.state import Frame, RegionState, SimulationRecord
from sirgate.errors import EmptyRecordError


def region_totals(state: RegionState, grid: TwoRegionGrid, scale: float) -> tuple[float, float, float]:
    """Effectifs (S, I, R) d'une région en individus"""
    factor = grid.dx * scale
    return (
        float(np.sum(state.s)) * factor,
        float(np.sum(state.i)) * factor,
        float(np.sum(state.r)) * factor,
    )


def totals(
    state1: RegionState, state2: RegionState, grid: TwoRegionGrid, scale: float
) -> tuple[float, float, float, float]:
    """(population totale, S, I, R) sur les deux régions, en individus"""
    s1, i1, r1 = region_totals(state1, grid, scale)
    s2, i2, r2 = region_totals(state2, grid, scale)
    s, i, r = s1 + s2, i1 + i2, r1 + r2
    return s + i + r, s, i, r


def frame_totals(frame: Frame, grid: TwoRegionGrid, scale: float) -> tuple[float, float, float, float]:
    return totals(frame.state1, frame.state2, grid, scale)


@dataclass(frozen=True)
class SummaryRow:
    """Une ligne de synthèse; les six premières colonnes suivent le tableau de référence"""
    total_population: float
    total_recovered: float
    peak_infected: float
    rest_infected_pct: float
    lockdown_days: float
    lockdown_pct: float
    lambda_1: float = math.nan
    lambda_2: float = math.nan
    population_1: float = math.nan
    population_2: float = math.nan
    recovered_1: float = math.nan
    recovered_2: float = math.nan
    peak_time: float = math.nan
    lockdown_switches: int = 0
    clamp_count: int = 0
    error: str = ""

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def failed(cls, lambda_1: float, lambda_2: float, message: str) -> "SummaryRow":
        """Ligne d'erreur d'un point de balayage"""
        nan = math.nan
        return cls(nan, nan, nan, nan, nan, nan, lambda_1=lambda_1, lambda_2=lambda_2, error=message)

    @property
    def ok(self) -> bool:
        return not self.error

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(record: SimulationRecord) -> SummaryRow:
    """Synthèse d'une simulation.

    rest_infected_pct = 100 × infectés finaux / pic d'infectés, le pic étant
    pris sur les trames enregistrées.

    Raises:
        EmptyRecordError: si l'enregistrement ne contient aucune trame
    """
    if not record.frames:
        raise EmptyRecordError("enregistrement vide")
    cfg = record.config
    grid, scale = cfg.grid, cfg.initial.population_scale

    infected = np.array([frame_totals(f, grid, scale)[2] for f in record.frames])
    peak_index = int(np.argmax(infected))
    peak = float(infected[peak_index])

    final = record.frames[-1]
    total, _, final_infected, recovered = frame_totals(final, grid, scale)
    s1, i1, r1 = region_totals(final.state1, grid, scale)
    s2, i2, r2 = region_totals(final.state2, grid, scale)

    rest = 100.0 * final_infected / peak if peak > 0.0 else 0.0
    lockdown_pct = 100.0 * record.lockdown_days / cfg.t_final if cfg.t_final > 0 else 0.0
    return SummaryRow(
        total_population=total,
        total_recovered=recovered,
        peak_infected=peak,
        rest_infected_pct=rest,
        lockdown_days=record.lockdown_days,
        lockdown_pct=lockdown_pct,
        lambda_1=cfg.params.lambda_1,
        lambda_2=cfg.params.lambda_2,
        population_1=s1 + i1 + r1,
        population_2=s2 + i2 + r2,
        recovered_1=r1,
        recovered_2=r2,
        peak_time=record.frames[peak_index].t,
        lockdown_switches=record.lockdown_switches,
        clamp_count=record.clamp_count,
    )
