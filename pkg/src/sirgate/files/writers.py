"""
Écriture des résultats en CSV (pandas), valeurs à 17 chiffres significatifs.
"""

import logging
from collections.abc import Iterable
from pathlib import Path

import numpy as np
import pandas as pd

from sirgate.core.coefficients import DiffusionField, sigma_eval
from sirgate.core.galerkin import DiscrepancyReport
from sirgate.core.metrics import SummaryRow, region_totals
from sirgate.core.state import Compartment, SimulationRecord
from sirgate.core.sweep_service import LambdaGrid

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

TIMESERIES_COLUMNS = [
    "t", "region", "S_total", "I_total", "R_total",
    "S_at_monitor", "I_at_monitor", "R_at_monitor", "N_total", "interface_mode",
]
HEATMAP_COLUMNS = ["t", "x", "value"]
INTERFACE_COLUMNS = ["t", "interface_mode", "alpha_1", "alpha_2", "lockdown_days"]
GRID_COLUMNS = ["lambda1", "lambda2", "peak_infected", "lockdown_days"]
LOCKDOWN_COLUMNS = ["start", "end", "days"]


def write_csv(frame: pd.DataFrame, path: str | Path) -> Path:
    """Écriture déterministe: pas d'index, fins de ligne `\\n`, 17 chiffres"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")
    logger.debug(f"{len(frame)} lignes écrites dans {path}")
    return path


def emit_timeseries(record: SimulationRecord, path: str | Path) -> Path:
    """Une ligne par trame et par région: effectifs, valeurs à la cellule suivie et mode d'interface"""
    rows = []
    if record.frames:
        cfg = record.config
        monitor, scale = cfg.monitor_cell, cfg.initial.population_scale
        for frame in record.frames:
            for region in (1, 2):
                state = frame.state(region)
                s, i, r = region_totals(state, cfg.grid, scale)
                s_p, i_p, r_p = state.cell(monitor)
                rows.append((frame.t, region, s, i, r, s_p, i_p, r_p, s + i + r, frame.mode.value))
    return write_csv(pd.DataFrame(rows, columns=TIMESERIES_COLUMNS), path)


def emit_heatmap(record: SimulationRecord, compartment: Compartment, path: str | Path) -> Path:
    """Format long `t,x,value` sur l'axe complet des deux régions, aux centres des cellules"""
    if not record.frames:
        return write_csv(pd.DataFrame(columns=HEATMAP_COLUMNS), path)
    grid = record.config.grid
    x = np.concatenate([grid.cell_centers(1), grid.cell_centers(2)])
    t = np.repeat(record.times, x.size)
    values = np.concatenate([
        np.concatenate([frame.state1.field(compartment), frame.state2.field(compartment)])
        for frame in record.frames
    ])
    frame = pd.DataFrame({"t": t, "x": np.tile(x, len(record.frames)), "value": values})
    return write_csv(frame, path)


def emit_summary(rows: Iterable[SummaryRow], path: str | Path) -> Path:
    """Tableau de synthèse, colonnes dans l'ordre de SummaryRow"""
    frame = pd.DataFrame([row.as_dict() for row in rows], columns=SummaryRow.columns())
    return write_csv(frame, path)


def emit_interface(record: SimulationRecord, path: str | Path) -> Path:
    """Mode et α signés des deux conditions d'interface à chaque trame"""
    rows = [
        (f.t, f.mode.value, f.interface1.alpha_value, f.interface2.alpha_value, f.lockdown_days)
        for f in record.frames
    ]
    return write_csv(pd.DataFrame(rows, columns=INTERFACE_COLUMNS), path)


def emit_lockdown_intervals(record: SimulationRecord, path: str | Path) -> Path:
    """Intervalles de fermeture [start, end) en jours, un par ligne"""
    rows = [(start, end, end - start) for start, end in record.lockdown_intervals]
    return write_csv(pd.DataFrame(rows, columns=LOCKDOWN_COLUMNS), path)


def emit_lambda_grid(grid: LambdaGrid, path: str | Path) -> Path:
    """Grille (λ₁, λ₂) en format long"""
    return write_csv(pd.DataFrame(grid.long_rows(), columns=GRID_COLUMNS), path)


def emit_sigma_dump(field: DiffusionField, y: np.ndarray, t: np.ndarray, path: str | Path) -> Path:
    """Surface σ(y, t) en format long `t,y,sigma`"""
    rows = [(ti, yi, s) for ti in t for yi, s in zip(y, sigma_eval(field, y, float(ti)), strict=True)]
    return write_csv(pd.DataFrame(rows, columns=["t", "y", "sigma"]), path)


def emit_discrepancy(report: DiscrepancyReport, path: str | Path) -> Path:
    frame = pd.DataFrame({"t": report.times, "relative_l2": report.relative})
    return write_csv(frame, path)
