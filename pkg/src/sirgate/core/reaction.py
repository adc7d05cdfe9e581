"""
Termes de réaction f(u^i, u^j) et opérateur d'échange 𝓘 entre régions.
Toutes les fonctions acceptent des scalaires ou des tableaux numpy
(évaluation cellule par cellule).
"""

from dataclasses import dataclass

import numpy as np

from sirgate.config import BirthBasis, EpidemicParams, SimulationConfig, TwoRegionGrid
from sirgate.core.state import RegionState
from sirgate.errors import IndexOutOfRangeError

Triple = tuple


@dataclass(frozen=True)
class ReactionInput:
    """Cellule locale (région i), cellule appariée (région j) et N_i"""
    local: Triple
    foreign: Triple
    n_total_local: float


def reaction_eval(inp: ReactionInput, p: EpidemicParams, region: int) -> Triple:
    """Vitesses (dS, dI, dR) en densité par jour"""
    s, i, r = inp.local
    _, i_foreign, _ = inp.foreign
    force = p.beta(region) * i + p.beta_cross(region) * i_foreign
    infection = force * s
    recovery = p.gamma(region) * i

    ds = p.birth(region) * inp.n_total_local - p.mu_s * s - infection
    di = infection - recovery - p.mu_i * i
    dr = recovery - p.mu_r * r
    return ds, di, dr


def exchange_eval(u1_cell: Triple, u2_cell: Triple, lam1, lam2) -> tuple[Triple, Triple]:
    """Gains de migration: gain₁ = λ₂u² − λ₁u¹ et gain₂ = −gain₁"""
    gain1 = tuple(lam2 * b - lam1 * a for a, b in zip(u1_cell, u2_cell, strict=True))
    gain2 = tuple(-g for g in gain1)
    return gain1, gain2


def pair_cells(grid: TwoRegionGrid, k: int) -> int:
    """Cellule de la région j au même décalage depuis son extrémité gauche"""
    if not 0 <= k < grid.n_cells_per_region:
        raise IndexOutOfRangeError(f"cellule {k} hors de [0, {grid.n_cells_per_region})")
    return k


def paired_indices(grid: TwoRegionGrid) -> np.ndarray:
    """Version vectorisée de pair_cells pour toute la région"""
    return np.array([pair_cells(grid, k) for k in range(grid.n_cells_per_region)], dtype=np.intp)


def birth_population(cfg: SimulationConfig, region: int, mass: float) -> float:
    """N_i à partir de la masse courante de la région (∫(S+I+R) en densité)"""
    if cfg.numerics.birth_basis is BirthBasis.INITIAL_INDIVIDUALS:
        return cfg.initial.population_scale * sum(cfg.initial.triple(region)) * cfg.grid.region_length
    return mass / cfg.grid.region_length


def regional_population(state: RegionState, cfg: SimulationConfig, region: int) -> float:
    """N_i du terme de naissance.

    `initial_individuals`: effectif initial de la région, figé (échelle × (s0+i0+r0) × longueur);
    `density`: densité moyenne courante, recalculée à chaque pas.
    """
    mass = float(np.sum(state.s + state.i + state.r)) * cfg.grid.dx
    return birth_population(cfg, region, mass)
