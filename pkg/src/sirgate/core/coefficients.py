"""
Coefficients spatiaux: diffusion dégénérée σ(y, t, λ), probabilité de
migration λ_i(x) et diagnostic de dégénérescence faible.
"""

import logging
from dataclasses import dataclass

import numpy as np

from sirgate.config import SigmaProfile, SimulationConfig
from sirgate.errors import DegenerateAtEveryPointError, OutOfDomainError

logger = logging.getLogger(__name__)

# Tolérance d'arrondi sur les coordonnées de faces (x_left + k·dx)
_COORD_TOL = 1e-12

# Rapport raffiné/grossier au-delà duquel la somme est jugée divergente
_REFINEMENT_RATIO = 2.0


@dataclass(frozen=True)
class DiffusionField:
    """σ(y, t) = λ·(y_right − y)(y − y_left)·e^{−a(t − t_a)}"""
    lambda_scale: float
    a: float
    t_a: float
    y_left: float = 0.0
    y_right: float = 2.0
    profile: SigmaProfile = SigmaProfile.PARABOLIC

    def kappa(self, t: float) -> float:
        """Facteur temporel κ(t)"""
        return float(np.exp(-self.a * (t - self.t_a)))


@dataclass(frozen=True)
class LambdaField:
    """λ_i(x): valeur intérieure, nulle aux points déclarés"""
    interior_value: float
    zero_points: tuple[float, ...] = ()


@dataclass(frozen=True)
class DegeneracyReport:
    value: float
    refined_value: float
    finite: bool


def sigma_eval(field: DiffusionField, y, t: float):
    """Évalue σ en y (scalaire ou tableau) à l'instant t.

    Raises:
        OutOfDomainError: si y sort de [y_left, y_right] ou si t < 0
    """
    y_arr = np.asarray(y, dtype=float)
    span = field.y_right - field.y_left
    tol = _COORD_TOL * max(1.0, abs(span))
    if np.any(y_arr < field.y_left - tol) or np.any(y_arr > field.y_right + tol):
        raise OutOfDomainError(f"y hors de [{field.y_left}, {field.y_right}]")
    if t < 0:
        raise OutOfDomainError(f"t = {t} < 0")
    y_arr = np.clip(y_arr, field.y_left, field.y_right)

    if field.profile is SigmaProfile.PARABOLIC:
        shape = (field.y_right - y_arr) * (y_arr - field.y_left)
    else:
        shape = np.ones_like(y_arr)
    value = field.lambda_scale * shape * field.kappa(t)
    if np.ndim(y) == 0:
        return float(value)
    return value


def lambda_eval(field: LambdaField, x):
    """λ(x): 0 aux points déclarés, valeur intérieure ailleurs"""
    x_arr = np.asarray(x, dtype=float)
    value = np.full(x_arr.shape, float(field.interior_value))
    for point in field.zero_points:
        value[np.abs(x_arr - point) <= _COORD_TOL * max(1.0, abs(point))] = 0.0
    if np.ndim(x) == 0:
        return float(value)
    return value


def diffusion_field(cfg: SimulationConfig, region: int) -> DiffusionField:
    """Champ σ_i de la région: λ_i sauf si sigma_scale est imposé"""
    scale = cfg.numerics.sigma_scale
    if scale is None:
        scale = cfg.params.migration(region)
    return DiffusionField(
        lambda_scale=scale,
        a=cfg.params.sigma_a,
        t_a=cfg.params.sigma_t_a,
        y_left=cfg.grid.x_left,
        y_right=cfg.grid.x_right,
        profile=cfg.numerics.sigma_profile,
    )


def lambda_field(cfg: SimulationConfig, region: int) -> LambdaField:
    """λ₁ s'annule en x_left, λ₂ en x_right"""
    zero = cfg.grid.x_left if region == 1 else cfg.grid.x_right
    return LambdaField(interior_value=cfg.params.migration(region), zero_points=(zero,))


def _midpoint_integral(field: DiffusionField, t: float, lo: float, hi: float,
                       delta: float, quad_points: int) -> float:
    h_t = 2.0 * delta / quad_points
    h_x = (hi - lo) / quad_points
    ts = t - delta + h_t * (np.arange(quad_points) + 0.5)
    xs = lo + h_x * (np.arange(quad_points) + 0.5)
    shape = sigma_eval(field, xs, 0.0) / field.kappa(0.0)
    kappas = np.exp(-field.a * (ts - field.t_a))
    sigma = np.outer(kappas, shape)
    if np.any(sigma == 0.0):
        raise DegenerateAtEveryPointError(
            "σ s'annule à l'intérieur de la fenêtre (ensemble de mesure positive)"
        )
    return float(np.sum(1.0 / sigma) * h_t * h_x)


def weak_degeneracy_check(
    field: DiffusionField,
    t: float,
    x: float,
    delta: float,
    quad_points: int,
    *,
    region_bounds: tuple[float, float] | None = None,
    t_final: float | None = None,
) -> DegeneracyReport:
    """Approche ∫∫ 1/σ sur (t−δ, t+δ) × (Ω_i ∩ B_δ(x)) par la règle du point milieu.

    Le drapeau `finite` est vrai si la valeur est finie et si doubler quad_points
    la multiplie par moins de 2; une singularité non intégrable fait croître la
    somme sans borne à chaque raffinement. Diagnostic seulement: le solveur tourne
    quel que soit le résultat.
    """
    if delta <= 0 or quad_points < 1:
        raise OutOfDomainError("delta > 0 et quad_points >= 1 requis")
    if delta >= t or (t_final is not None and delta >= t_final - t):
        raise OutOfDomainError(f"delta={delta} doit être < min(t, T − t)")
    lo_region, hi_region = region_bounds or (field.y_left, field.y_right)
    lo, hi = max(lo_region, x - delta), min(hi_region, x + delta)
    if hi <= lo:
        raise OutOfDomainError("la boule B_δ(x) ne rencontre pas la région")

    value = _midpoint_integral(field, t, lo, hi, delta, quad_points)
    refined = _midpoint_integral(field, t, lo, hi, delta, 2 * quad_points)
    finite = bool(
        np.isfinite(value) and np.isfinite(refined) and refined / value < _REFINEMENT_RATIO
    )
    logger.debug(f"Dégénérescence en x={x}, t={t}: {value:.6g} -> {refined:.6g} (finie={finite})")
    return DegeneracyReport(value=value, refined_value=refined, finite=finite)
