from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from sirgate.config import (
    CrossDiffusion,
    SigmaProfile,
    SimulationConfig,
    configure_for_testing,
    reference_config,
)
from sirgate.core.state import RegionState


def without_reactions(cfg: SimulationConfig) -> SimulationConfig:
    """Tous les taux de réaction et de naissance à 0"""
    params = replace(
        cfg.params,
        beta_1=0.0, beta_2=0.0, beta_12=0.0, beta_21=0.0,
        gamma_1=0.0, gamma_2=0.0, big_lambda_1=0.0, big_lambda_2=0.0,
        mu_s=0.0, mu_i=0.0, mu_r=0.0,
    )
    return replace(cfg, params=params)


def isolated(
    cfg: SimulationConfig,
    *,
    sigma_scale: float = 0.01,
    profile: SigmaProfile = SigmaProfile.PARABOLIC,
    sigma_a: float = 0.0,
) -> SimulationConfig:
    """Régions découplées: pas d'échange, pas de diffusion croisée, interface toujours fermée"""
    params = replace(cfg.params, lambda_1=0.0, lambda_2=0.0, sigma_a=sigma_a)
    numerics = replace(
        cfg.numerics,
        cross_diffusion=CrossDiffusion.OFF,
        sigma_profile=profile,
        sigma_scale=sigma_scale,
    )
    policy = replace(cfg.policy, lockdown_trigger=0.0)
    return replace(cfg, params=params, numerics=numerics, policy=policy)


def with_grid(cfg: SimulationConfig, n: int) -> SimulationConfig:
    return replace(cfg, grid=replace(cfg.grid, n_cells_per_region=n))


def read_table(path) -> pd.DataFrame:
    """Relit un CSV écrit en %.17g sans perte sur les réels"""
    return pd.read_csv(path, float_precision="round_trip")


def bump_states(cfg: SimulationConfig) -> tuple[RegionState, RegionState]:
    """États non uniformes et lisses, nuls nulle part"""
    n = cfg.grid.n_cells_per_region
    x1, x2 = cfg.grid.cell_centers(1), cfg.grid.cell_centers(2)
    s1 = 0.5 + np.sin(np.pi * x1) ** 2
    s2 = 0.5 + 0.5 * np.cos(np.pi * x2) ** 2
    return (
        RegionState(s1, 0.2 * s1, np.full(n, 0.1), 0.0),
        RegionState(s2, 0.3 * s2, np.full(n, 0.05), 0.0),
    )


@pytest.fixture
def reference_cfg() -> SimulationConfig:
    return reference_config()


@pytest.fixture
def small_cfg() -> SimulationConfig:
    return configure_for_testing()
