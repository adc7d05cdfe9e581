"""
Configuration centralisée du solveur SIR à deux régions.
Chaque section est un dataclass immuable; les valeurs par défaut
reproduisent le jeu de paramètres de référence (taux journaliers,
N_x = 302 cellules par région, Δt = 0.0125 j, T = 300 j).
"""

import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__

import numpy as np

from sirgate.errors import ConfigValidationError

Violation = tuple[str, str, str]


class AlphaForm(StrEnum):
    """Forme décroissante de la mobilité α(I)"""
    RATIONAL_DECAY = "RationalDecay"  # 1/(1+I²)
    EXPONENTIAL_DECAY = "ExponentialDecay"  # e^{-I}


class LockdownSignal(StrEnum):
    INTERFACE = "interface"
    REGIONAL_TOTAL = "regional_total"


class CrossDiffusion(StrEnum):
    OFF = "off"
    PAIRED = "paired"


class TransferLosses(StrEnum):
    """Traitement des pertes d'interface et de diffusion croisée"""
    IMPLICIT = "implicit"  # pertes sur la diagonale (positivité inconditionnelle)
    EXPLICIT = "explicit"  # crochet explicite littéral


class BirthBasis(StrEnum):
    """Lecture de N_i dans le terme de naissance Λ_i N_i"""
    INITIAL_INDIVIDUALS = "initial_individuals"  # effectif initial de la région, figé
    DENSITY = "density"  # densité moyenne courante de la région


class SigmaProfile(StrEnum):
    PARABOLIC = "parabolic"  # (y_right - y)(y - y_left)
    CONSTANT = "constant"


def _is_real(value: Any) -> bool:
    return isinstance(value, int | float) and not isinstance(value, bool) and math.isfinite(value)


class _Section:
    """Validation commune: chaque section refuse d'exister invalide"""

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        raise NotImplementedError

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __post_init__(self):
        violations = type(self).find_violations(self.as_dict())
        if violations:
            raise ConfigValidationError(violations)


@dataclass(frozen=True)
class TwoRegionGrid(_Section):
    """Maillage 1D de Ω = Ω₁ ∪ Ω₂, interface Γ au point x_interface"""
    x_left: float = 0.0
    x_interface: float = 1.0
    x_right: float = 2.0
    n_cells_per_region: int = 302

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        a, g, b = values["x_left"], values["x_interface"], values["x_right"]
        n = values["n_cells_per_region"]
        if not all(_is_real(v) for v in (a, g, b)):
            out.append(("GridDegenerate", "x_left", "coordonnées non finies"))
        elif not a < g < b:
            out.append(("GridDegenerate", "x_interface", "x_left < x_interface < x_right requis"))
        elif abs((g - a) - (b - g)) > 1e-12 * (b - a):
            out.append(("GridDegenerate", "x_right", "les deux sous-domaines doivent avoir la même longueur"))
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            out.append(("GridDegenerate", "n_cells_per_region", "nombre de cellules entier positif requis"))
        return out

    @property
    def region_length(self) -> float:
        return self.x_interface - self.x_left

    @property
    def dx(self) -> float:
        return self.region_length / self.n_cells_per_region

    def region_bounds(self, region: int) -> tuple[float, float]:
        if region == 1:
            return self.x_left, self.x_interface
        return self.x_interface, self.x_right

    def faces(self, region: int) -> np.ndarray:
        """Coordonnées des n+1 faces de la région"""
        start, _ = self.region_bounds(region)
        return start + self.dx * np.arange(self.n_cells_per_region + 1)

    def cell_centers(self, region: int) -> np.ndarray:
        start, _ = self.region_bounds(region)
        return start + self.dx * (np.arange(self.n_cells_per_region) + 0.5)

    def interface_cell(self, region: int) -> int:
        """Indice de la cellule adjacente à Γ"""
        return self.n_cells_per_region - 1 if region == 1 else 0

    def outer_side(self, region: int) -> str:
        return "left" if region == 1 else "right"


@dataclass(frozen=True)
class EpidemicParams(_Section):
    """Taux du modèle (j⁻¹), forme temporelle de σ et seuils I_th"""
    beta_1: float = 0.05
    beta_2: float = 0.05
    beta_12: float = 0.1
    beta_21: float = 0.1
    gamma_1: float = 0.2
    gamma_2: float = 0.2
    lambda_1: float = 0.01
    lambda_2: float = 0.01
    big_lambda_1: float = 0.005
    big_lambda_2: float = 0.005
    mu_s: float = 0.05
    mu_i: float = 0.13
    mu_r: float = 0.05
    sigma_a: float = 0.01
    sigma_t_a: float = 50.0
    i_threshold_1: float = 5.0
    i_threshold_2: float = 5.0

    RATES = (
        "beta_1", "beta_2", "beta_12", "beta_21", "gamma_1", "gamma_2",
        "big_lambda_1", "big_lambda_2", "mu_s", "mu_i", "mu_r", "sigma_a",
    )

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        for name in cls.RATES:
            if not _is_real(values[name]) or values[name] < 0:
                out.append(("NegativeRate", name, f"taux >= 0 requis, reçu {values[name]!r}"))
        for name in ("lambda_1", "lambda_2"):
            if not _is_real(values[name]) or not 0.0 <= values[name] <= 1.0:
                out.append(("NegativeRate", name, f"probabilité dans [0, 1] requise, reçu {values[name]!r}"))
        if not _is_real(values["sigma_t_a"]):
            out.append(("NegativeRate", "sigma_t_a", "temps fini requis"))
        for name in ("i_threshold_1", "i_threshold_2"):
            if not _is_real(values[name]) or values[name] <= 0:
                out.append(("ThresholdNonPositive", name, f"seuil > 0 requis, reçu {values[name]!r}"))
        return out

    def beta(self, region: int) -> float:
        return self.beta_1 if region == 1 else self.beta_2

    def beta_cross(self, region: int) -> float:
        """β_ij vu depuis la région i"""
        return self.beta_12 if region == 1 else self.beta_21

    def gamma(self, region: int) -> float:
        return self.gamma_1 if region == 1 else self.gamma_2

    def birth(self, region: int) -> float:
        return self.big_lambda_1 if region == 1 else self.big_lambda_2

    def migration(self, region: int) -> float:
        """λ_i: un seul λ par région, commun aux trois compartiments"""
        return self.lambda_1 if region == 1 else self.lambda_2

    def i_threshold(self, region: int) -> float:
        return self.i_threshold_1 if region == 1 else self.i_threshold_2


@dataclass(frozen=True)
class InitialData(_Section):
    """Densités initiales uniformes par région et échelle individus/densité"""
    s0_1: float = 0.8
    i0_1: float = 0.2
    r0_1: float = 0.0
    s0_2: float = 1.0
    i0_2: float = 0.0
    r0_2: float = 0.0
    population_scale: float = 300.0

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        for name in ("s0_1", "i0_1", "r0_1", "s0_2", "i0_2", "r0_2"):
            if not _is_real(values[name]) or values[name] < 0:
                out.append(("NegativeInitial", name, f"densité initiale >= 0 requise, reçu {values[name]!r}"))
        if not _is_real(values["population_scale"]) or values["population_scale"] <= 0:
            out.append(("NonPositiveScale", "population_scale", "échelle > 0 requise"))
        return out

    def triple(self, region: int) -> tuple[float, float, float]:
        if region == 1:
            return self.s0_1, self.i0_1, self.r0_1
        return self.s0_2, self.i0_2, self.r0_2


@dataclass(frozen=True)
class PolicyConfig(_Section):
    """Paramètres de confinement (la forme de α est portée par SimulationConfig)"""
    lockdown_trigger: float | None = None  # None: mêmes seuils que la direction
    alpha_floor: float = 0.0
    reopen_delay: float = 0.0
    lockdown_signal: LockdownSignal = LockdownSignal.INTERFACE

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        trigger = values["lockdown_trigger"]
        if trigger is not None and (isinstance(trigger, bool) or not isinstance(trigger, int | float)
                                    or math.isnan(trigger) or trigger < 0):
            out.append(("ThresholdNonPositive", "lockdown_trigger", "déclencheur >= 0 ou None requis"))
        if not _is_real(values["alpha_floor"]) or values["alpha_floor"] < 0:
            out.append(("NegativeRate", "alpha_floor", "plancher >= 0 requis"))
        if not _is_real(values["reopen_delay"]) or values["reopen_delay"] < 0:
            out.append(("NonPositiveStep", "reopen_delay", "délai >= 0 requis"))
        if not isinstance(values["lockdown_signal"], LockdownSignal):
            out.append(("UnknownChoice", "lockdown_signal", "interface ou regional_total"))
        return out


@dataclass(frozen=True)
class NumericsConfig(_Section):
    """Choix de discrétisation et de sortie"""
    cross_diffusion: CrossDiffusion = CrossDiffusion.PAIRED
    transfer_losses: TransferLosses = TransferLosses.IMPLICIT
    birth_basis: BirthBasis = BirthBasis.INITIAL_INDIVIDUALS
    sigma_profile: SigmaProfile = SigmaProfile.PARABOLIC
    sigma_scale: float | None = None  # None: σ proportionnel à λ_i
    output_stride: int = 80  # une trame par jour à Δt = 0.0125
    monitor_cell: int | None = None  # None: milieu de la région
    clamp_tol: float = 1e-10  # relatif à la densité maximale

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        for name, enum in (
            ("cross_diffusion", CrossDiffusion),
            ("transfer_losses", TransferLosses),
            ("birth_basis", BirthBasis),
            ("sigma_profile", SigmaProfile),
        ):
            if not isinstance(values[name], enum):
                out.append(("UnknownChoice", name, f"valeurs admises: {[m.value for m in enum]}"))
        scale = values["sigma_scale"]
        if scale is not None and (not _is_real(scale) or scale < 0):
            out.append(("NegativeRate", "sigma_scale", "échelle de σ >= 0 ou None requise"))
        stride = values["output_stride"]
        if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
            out.append(("NonPositiveStep", "output_stride", "pas d'écriture entier >= 1 requis"))
        monitor = values["monitor_cell"]
        if monitor is not None and (not isinstance(monitor, int) or isinstance(monitor, bool) or monitor < 0):
            out.append(("GridDegenerate", "monitor_cell", "indice de cellule suivie >= 0 requis"))
        if not _is_real(values["clamp_tol"]) or values["clamp_tol"] < 0:
            out.append(("NegativeRate", "clamp_tol", "tolérance >= 0 requise"))
        return out


@dataclass(frozen=True)
class SimulationConfig(_Section):
    """Configuration principale d'une simulation"""
    grid: TwoRegionGrid = field(default_factory=TwoRegionGrid)
    params: EpidemicParams = field(default_factory=EpidemicParams)
    dt: float = 0.0125
    t_final: float = 300.0
    initial: InitialData = field(default_factory=InitialData)
    alpha_form: AlphaForm = AlphaForm.RATIONAL_DECAY
    coupling_sweeps: int = 1
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)

    @classmethod
    def find_violations(cls, values: dict[str, Any]) -> list[Violation]:
        out: list[Violation] = []
        dt, t_final = values["dt"], values["t_final"]
        if not _is_real(dt) or dt <= 0:
            out.append(("NonPositiveStep", "dt", f"pas de temps > 0 requis, reçu {dt!r}"))
        if not _is_real(t_final) or t_final < 0:
            out.append(("NonPositiveStep", "t_final", f"horizon >= 0 requis, reçu {t_final!r}"))
        if not out:
            ratio = t_final / dt
            if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
                out.append(("NonPositiveStep", "t_final", "t_final/dt doit être entier"))
        sweeps = values["coupling_sweeps"]
        if not isinstance(sweeps, int) or isinstance(sweeps, bool) or sweeps < 1:
            out.append(("NonPositiveStep", "coupling_sweeps", "au moins un balayage requis"))
        if not isinstance(values["alpha_form"], AlphaForm):
            out.append(("UnknownChoice", "alpha_form", f"valeurs admises: {[m.value for m in AlphaForm]}"))
        grid, numerics = values["grid"], values["numerics"]
        if (isinstance(grid, TwoRegionGrid) and isinstance(numerics, NumericsConfig)
                and numerics.monitor_cell is not None
                and numerics.monitor_cell >= grid.n_cells_per_region):
            out.append(("GridDegenerate", "monitor_cell", "indice de cellule suivie hors de la région"))
        return out

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def monitor_cell(self) -> int:
        if self.numerics.monitor_cell is None:
            return self.grid.n_cells_per_region // 2
        return self.numerics.monitor_cell

    def with_lambda(self, lambda_1: float, lambda_2: float) -> "SimulationConfig":
        return replace(self, params=replace(self.params, lambda_1=lambda_1, lambda_2=lambda_2))


def validate_config(cfg: SimulationConfig) -> SimulationConfig:
    """Revérifie toutes les invariantes et renvoie la configuration inchangée.

    Les sections refusent déjà d'être construites invalides; cette fonction
    rassemble les violations de toutes les sections dans un seul rapport.
    """
    violations: list[Violation] = []
    for section in (cfg.grid, cfg.params, cfg.initial, cfg.policy, cfg.numerics):
        violations.extend(type(section).find_violations(section.as_dict()))
    violations.extend(SimulationConfig.find_violations(cfg.as_dict()))
    if violations:
        raise ConfigValidationError(violations)
    return cfg


# Configurations pour différents usages
def reference_config() -> SimulationConfig:
    """Configuration de référence (N_x = 302, Δt = 0.0125 j, T = 300 j)"""
    return SimulationConfig()


def configure_for_testing(cfg: SimulationConfig | None = None) -> SimulationConfig:
    """Maillage grossier et horizon court pour les tests"""
    cfg = cfg or reference_config()
    return replace(
        cfg,
        grid=replace(cfg.grid, n_cells_per_region=16),
        dt=0.05,
        t_final=2.0,
        numerics=replace(cfg.numerics, output_stride=4, monitor_cell=None),
    )


def configure_for_development(cfg: SimulationConfig | None = None) -> SimulationConfig:
    """Horizon réduit, résolution complète"""
    cfg = cfg or reference_config()
    return replace(cfg, t_final=30.0)


def configure_for_oracle(cfg: SimulationConfig | None = None) -> SimulationConfig:
    """Problème lisse non dégénéré de la comparaison avec Galerkin.

    σ constant (0.01), α exponentiel, 20 jours et naissances Λ·(masse/longueur).
    L'infection y décroît, si bien que l'erreur d'Euler en temps (≈ T·r²·Δt/2 pour
    un taux de croissance r) reste petite devant l'écart d'espace et de couplage.
    """
    cfg = cfg or reference_config()
    numerics = replace(
        cfg.numerics,
        sigma_scale=0.01,
        sigma_profile=SigmaProfile.CONSTANT,
        birth_basis=BirthBasis.DENSITY,
    )
    return replace(cfg, t_final=20.0, alpha_form=AlphaForm.EXPONENTIAL_DECAY, numerics=numerics)
