"""
Types d'état: champs S, I, R par région, trames enregistrées et
enregistrement complet d'une simulation.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from sirgate.config import SimulationConfig
from sirgate.core.coefficients import DegeneracyReport


class Compartment(Enum):
    S = 0
    I = 1  # noqa: E741
    R = 2


class InterfaceMode(Enum):
    ROBIN_OPEN = "RobinOpen"
    NEUMANN_CLOSED = "NeumannClosed"


@dataclass(frozen=True)
class RegionState:
    """Moyennes par cellule (individus par unité de longueur, à l'échelle près)"""
    s: np.ndarray
    i: np.ndarray
    r: np.ndarray
    time: float

    def __post_init__(self):
        if not (self.s.shape == self.i.shape == self.r.shape) or self.s.ndim != 1:
            raise ValueError("s, i, r doivent être des tableaux 1D de même longueur")
        for name, values in (("s", self.s), ("i", self.i), ("r", self.r)):
            if np.any(values < 0.0):
                raise ValueError(f"densité {name} négative: min {float(values.min()):.3e}")

    @classmethod
    def uniform(cls, n: int, s0: float, i0: float, r0: float, time: float = 0.0) -> "RegionState":
        return cls(np.full(n, float(s0)), np.full(n, float(i0)), np.full(n, float(r0)), time)

    @classmethod
    def from_stack(cls, u: np.ndarray, time: float) -> "RegionState":
        return cls(u[0].copy(), u[1].copy(), u[2].copy(), time)

    def stack(self) -> np.ndarray:
        """Tableau (3, n) dans l'ordre S, I, R"""
        return np.stack((self.s, self.i, self.r))

    def field(self, compartment: Compartment) -> np.ndarray:
        return (self.s, self.i, self.r)[compartment.value]

    def cell(self, k: int) -> tuple[float, float, float]:
        return float(self.s[k]), float(self.i[k]), float(self.r[k])

    @property
    def n_cells(self) -> int:
        return self.s.shape[0]

    def min_value(self) -> float:
        return float(min(self.s.min(), self.i.min(), self.r.min()))

    def max_value(self) -> float:
        return float(max(self.s.max(), self.i.max(), self.r.max()))


@dataclass(frozen=True)
class InterfaceFluxState:
    """État d'une condition d'interface (α signé et mode)"""
    alpha_value: float
    mode: InterfaceMode

    def __post_init__(self):
        if self.mode is InterfaceMode.NEUMANN_CLOSED and self.alpha_value != 0.0:
            raise ValueError("une interface fermée n'a pas de flux")


@dataclass(frozen=True)
class Frame:
    """Trame enregistrée: les deux régions et les deux conditions d'interface"""
    t: float
    state1: RegionState
    state2: RegionState
    interface1: InterfaceFluxState  # condition portée par la région 1 (α²(I¹))
    interface2: InterfaceFluxState  # condition portée par la région 2 (α¹(I²))
    lockdown_days: float

    @property
    def mode(self) -> InterfaceMode:
        return self.interface1.mode

    def state(self, region: int) -> RegionState:
        return self.state1 if region == 1 else self.state2


@dataclass
class SimulationRecord:
    """Série temporelle d'une simulation; l'accumulateur n'a qu'un écrivain"""
    config: SimulationConfig
    frames: list[Frame] = field(default_factory=list)
    lockdown_days: float = 0.0
    lockdown_switches: int = 0
    lockdown_intervals: list[tuple[float, float]] = field(default_factory=list)
    clamp_count: int = 0
    max_clamp: float = 0.0
    degeneracy: dict[int, DegeneracyReport] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.array([frame.t for frame in self.frames])

    def __len__(self) -> int:
        return len(self.frames)
