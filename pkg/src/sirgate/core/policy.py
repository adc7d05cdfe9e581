"""
Politique de mobilité: décroissance α(I), règle de signe par seuil,
déclenchement du confinement (Robin → Neumann) et comptabilité des jours
de confinement.
"""

import logging
import math
from dataclasses import dataclass, field

from sirgate.config import AlphaForm, LockdownSignal, SimulationConfig
from sirgate.core.state import InterfaceMode
from sirgate.errors import NegativeInfectedError

logger = logging.getLogger(__name__)

# Constantes de Lipschitz de α sur [0, ∞)
LIPSCHITZ = {
    AlphaForm.RATIONAL_DECAY: 3.0 * math.sqrt(3.0) / 8.0,
    AlphaForm.EXPONENTIAL_DECAY: 1.0,
}


@dataclass(frozen=True)
class MobilityPolicy:
    alpha_form: AlphaForm = AlphaForm.RATIONAL_DECAY
    i_threshold: tuple[float, float] = (5.0, 5.0)
    lockdown_trigger: float | None = None
    alpha_floor: float = 0.0
    reopen_delay: float = 0.0
    lockdown_signal: LockdownSignal = LockdownSignal.INTERFACE

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> "MobilityPolicy":
        return cls(
            alpha_form=cfg.alpha_form,
            i_threshold=(cfg.params.i_threshold_1, cfg.params.i_threshold_2),
            lockdown_trigger=cfg.policy.lockdown_trigger,
            alpha_floor=cfg.policy.alpha_floor,
            reopen_delay=cfg.policy.reopen_delay,
            lockdown_signal=cfg.policy.lockdown_signal,
        )

    def threshold(self, region: int) -> float:
        return self.i_threshold[region - 1]


def _decay(form: AlphaForm, i_value: float) -> float:
    if form is AlphaForm.RATIONAL_DECAY:
        return 1.0 / (1.0 + i_value * i_value)
    return math.exp(-i_value)


def alpha_eval(policy: MobilityPolicy, i_value: float) -> float:
    """α(I) selon la forme choisie; 0 sous le plancher alpha_floor.

    Raises:
        NegativeInfectedError: si i_value < 0
    """
    if i_value < 0:
        raise NegativeInfectedError(f"densité d'infectés négative: {i_value}")
    value = _decay(policy.alpha_form, float(i_value))
    if value < policy.alpha_floor:
        return 0.0
    return value


def signed_alpha(policy: MobilityPolicy, i_local: float, region_j: int) -> float:
    """α^j(I): positif si I ≥ I_th^j, négatif sinon"""
    value = alpha_eval(policy, i_local)
    if i_local >= policy.threshold(region_j):
        return value
    return -value


@dataclass
class LockdownLedger:
    """Comptabilité du confinement, mise à jour une fois par pas"""
    dt: float
    lockdown_days: float = 0.0
    switches: int = 0
    intervals: list[tuple[float, float]] = field(default_factory=list)
    closed: bool = False
    closed_since: float | None = None
    last_active: float | None = None

    def close_open_interval(self, t_end: float) -> None:
        """Ferme l'intervalle en cours à la fin de la simulation"""
        if self.closed and self.closed_since is not None:
            self.intervals.append((self.closed_since, t_end))
            self.closed_since = None


def lockdown_condition(policy: MobilityPolicy, level_1: float, level_2: float) -> bool:
    """Vrai si le signal impose la fermeture de l'interface"""
    level = max(level_1, level_2)
    if policy.lockdown_trigger is None:
        # même comparaison que celle qui rend α^j positif
        triggered = level_1 >= policy.threshold(2) or level_2 >= policy.threshold(1)
    else:
        triggered = level >= policy.lockdown_trigger
    return triggered or _decay(policy.alpha_form, max(level, 0.0)) <= policy.alpha_floor


def lockdown_update(
    policy: MobilityPolicy,
    i_gamma_1: float,
    i_gamma_2: float,
    t: float,
    ledger: LockdownLedger,
) -> tuple[InterfaceMode, LockdownLedger]:
    """Décide le mode de l'interface pour le pas [t, t+dt] et met à jour le registre.

    Args:
        i_gamma_1, i_gamma_2: niveaux du signal (infectés adjacents à Γ ou
            densité régionale moyenne selon lockdown_signal)
    """
    if lockdown_condition(policy, i_gamma_1, i_gamma_2):
        ledger.last_active = t
        closed = True
    elif ledger.closed and ledger.last_active is not None:
        closed = t - ledger.last_active < policy.reopen_delay
    else:
        closed = False

    if closed and not ledger.closed:
        ledger.switches += 1
        ledger.closed_since = t
        logger.info(f"Confinement à t={t:.4g} j (signal {i_gamma_1:.4g} / {i_gamma_2:.4g})")
    elif not closed and ledger.closed:
        if ledger.closed_since is not None:
            ledger.intervals.append((ledger.closed_since, t))
        ledger.closed_since = None
        logger.info(f"Réouverture de l'interface à t={t:.4g} j")
    ledger.closed = closed

    if closed:
        ledger.lockdown_days += ledger.dt
        return InterfaceMode.NEUMANN_CLOSED, ledger
    return InterfaceMode.ROBIN_OPEN, ledger
