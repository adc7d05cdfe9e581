"""
Intégration en temps du système couplé.

Schéma IMEX: diffusion implicite (Euler), réaction, échange, interface et
diffusion croisée explicites. Les deux régions sont résolues dans l'ordre
de Gauss–Seidel: la région 1 avec l'état de la région 2 à t, puis la
région 2 avec le nouvel état de la région 1.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from sirgate.config import (
    CrossDiffusion,
    LockdownSignal,
    SimulationConfig,
    TransferLosses,
    validate_config,
)
from sirgate.core.coefficients import (
    DegeneracyReport,
    DiffusionField,
    diffusion_field,
    lambda_eval,
    lambda_field,
    weak_degeneracy_check,
)
from sirgate.core.fvm import InterfaceCoefficients, assemble_diffusion, interface_coefficients
from sirgate.core.policy import LockdownLedger, MobilityPolicy, lockdown_condition, lockdown_update
from sirgate.core.reaction import (
    ReactionInput,
    exchange_eval,
    paired_indices,
    reaction_eval,
    regional_population,
)
from sirgate.core.state import (
    Compartment,
    Frame,
    InterfaceFluxState,
    InterfaceMode,
    RegionState,
    SimulationRecord,
)
from sirgate.core.tridiag import TridiagonalMatrix, thomas_solve
from sirgate.errors import (
    DegenerateAtEveryPointError,
    NumericalError,
    OutOfDomainError,
    PositivityViolationError,
    SimulationStepError,
)

logger = logging.getLogger(__name__)

# source(region, t, x) -> tableau (3, n) de termes sources (densité/jour)
SourceFn = Callable[[int, float, np.ndarray], np.ndarray]

# En dessous, une densité est traitée comme nulle par le poids de Patankar
_DENSITY_FLOOR = 1.0e-250

# Fenêtre du test de dégénérescence faible lancé avec chaque simulation
_DEGENERACY_DELTA = 0.1
_DEGENERACY_QUAD_POINTS = 64


@dataclass(frozen=True)
class RegionCoefficients:
    """Coefficients indépendants du temps, calculés une fois par simulation"""
    sigma: dict[int, DiffusionField]
    lam: dict[int, np.ndarray]
    centers: dict[int, np.ndarray]
    pairs: np.ndarray
    policy: MobilityPolicy

    @classmethod
    def from_config(cls, cfg: SimulationConfig) -> "RegionCoefficients":
        grid = cfg.grid
        return cls(
            sigma={r: diffusion_field(cfg, r) for r in (1, 2)},
            lam={r: lambda_eval(lambda_field(cfg, r), grid.cell_centers(r)) for r in (1, 2)},
            centers={r: grid.cell_centers(r) for r in (1, 2)},
            pairs=paired_indices(grid),
            policy=MobilityPolicy.from_config(cfg),
        )


@dataclass(frozen=True)
class StepPlan:
    """Données figées d'un pas [t, t+dt]: mode, conditions d'interface, K(t+dt)"""
    t: float
    mode: InterfaceMode
    interface: dict[int, InterfaceCoefficients]
    stiffness: dict[int, TridiagonalMatrix]
    coefficients: RegionCoefficients

    def flux_states(self) -> tuple[InterfaceFluxState, InterfaceFluxState]:
        """Conditions portées par chaque région: α²(I¹_Γ) puis α¹(I²_Γ)"""
        return tuple(
            InterfaceFluxState(-self.interface[r].c_other + 0.0, self.mode) for r in (1, 2)
        )


@dataclass
class ClampStats:
    count: int = 0
    max_clamp: float = 0.0


def lockdown_levels(state1: RegionState, state2: RegionState, cfg: SimulationConfig) -> tuple[float, float]:
    """Niveaux du signal de confinement pour chaque région"""
    grid = cfg.grid
    if cfg.policy.lockdown_signal is LockdownSignal.REGIONAL_TOTAL:
        return tuple(
            float(np.sum(s.i)) * grid.dx / grid.region_length for s in (state1, state2)
        )
    return float(state1.i[grid.interface_cell(1)]), float(state2.i[grid.interface_cell(2)])


def plan_step(
    state1: RegionState,
    state2: RegionState,
    cfg: SimulationConfig,
    t: float,
    *,
    mode: InterfaceMode | None = None,
    coefficients: RegionCoefficients | None = None,
) -> StepPlan:
    """Prépare le pas à partir des états à t.

    Sans mode imposé, le mode est décidé par le signal courant sans registre
    (pas de délai de réouverture).
    """
    coefficients = coefficients or RegionCoefficients.from_config(cfg)
    if mode is None:
        closed = lockdown_condition(coefficients.policy, *lockdown_levels(state1, state2, cfg))
        mode = InterfaceMode.NEUMANN_CLOSED if closed else InterfaceMode.ROBIN_OPEN
    t_new = t + cfg.dt
    states = {1: state1, 2: state2}
    interface = {
        r: interface_coefficients(cfg.grid, states[r], states[3 - r], coefficients.policy, r, mode)
        for r in (1, 2)
    }
    stiffness = {
        r: assemble_diffusion(cfg.grid, coefficients.sigma[r], t_new, r) for r in (1, 2)
    }
    return StepPlan(t, mode, interface, stiffness, coefficients)


def _split_losses(rates: np.ndarray, u_old: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sépare des termes de transfert en gains explicites et pertes sur la diagonale.

    Une perte L < 0 devient le coefficient −L/u_old; elle est ignorée si
    u_old ne dépasse pas _DENSITY_FLOOR (valeurs sous-normales comprises).
    """
    gains = np.where(rates > 0.0, rates, 0.0)
    losses = np.where(rates < 0.0, -rates, 0.0)
    positive = u_old > _DENSITY_FLOOR
    weight = np.zeros_like(rates)
    np.divide(losses, u_old, out=weight, where=positive)
    return gains, weight


def _exchange_gains(region: int, u_own: np.ndarray, u_other: np.ndarray,
                    lam_own: np.ndarray, lam_other: np.ndarray) -> np.ndarray:
    """Gains de migration 𝓘 de la région, cellule par cellule"""
    if region == 1:
        gains, _ = exchange_eval(tuple(u_own), tuple(u_other), lam_own, lam_other)
    else:
        _, gains = exchange_eval(tuple(u_other), tuple(u_own), lam_other, lam_own)
    return np.stack(gains)


def step_region(
    region: int,
    own_state: RegionState,
    other_state: RegionState,
    cfg: SimulationConfig,
    t: float,
    *,
    plan: StepPlan | None = None,
    source: SourceFn | None = None,
    stats: ClampStats | None = None,
) -> RegionState:
    """Avance une région de t à t+dt.

    Résout (I + Δt·K(t+dt))·u_new = u_old + Δt·[f + échange + flux_Γ/dx + croisé]
    pour S, I et R, tous les termes entre crochets étant explicites. Les petites
    valeurs négatives du résultat sont ramenées à 0 avant de construire l'état.

    Raises:
        PositivityViolationError: valeur négative au-delà de la tolérance
    """
    if plan is None:
        pair = (own_state, other_state) if region == 1 else (other_state, own_state)
        plan = plan_step(*pair, cfg, t)
    grid, dt, dx = cfg.grid, cfg.dt, cfg.grid.dx
    coeffs = plan.coefficients
    other = 2 if region == 1 else 1
    implicit = cfg.numerics.transfer_losses is TransferLosses.IMPLICIT

    u_old = own_state.stack()
    u_other = other_state.stack()[:, coeffs.pairs]

    n_total = regional_population(own_state, cfg, region)
    reaction = np.stack(reaction_eval(
        ReactionInput(local=tuple(u_old), foreign=tuple(u_other), n_total_local=n_total),
        cfg.params,
        region,
    ))
    explicit = reaction + _exchange_gains(
        region, u_old, u_other, coeffs.lam[region], coeffs.lam[other][coeffs.pairs]
    )
    extra_diag = np.zeros_like(u_old)

    if source is not None:
        explicit = explicit + source(region, t + dt, coeffs.centers[region])

    k = grid.interface_cell(region)
    closure = plan.interface[region]
    if closure.mode is InterfaceMode.ROBIN_OPEN:
        u_own_gamma = u_old[:, k]
        u_other_gamma = other_state.stack()[:, grid.interface_cell(other)]
        if implicit:
            if closure.c_own >= 0.0:
                explicit[:, k] += closure.c_own * u_own_gamma / dx
            else:
                extra_diag[:, k] += -closure.c_own / dx
            gains, weight = _split_losses(closure.c_other * u_other_gamma / dx, u_own_gamma)
            explicit[:, k] += gains
            extra_diag[:, k] += weight
        else:
            explicit[:, k] += closure.flux(u_own_gamma, u_other_gamma) / dx

    if cfg.numerics.cross_diffusion is CrossDiffusion.PAIRED:
        k_other = plan.stiffness[other]
        full_other = other_state.stack()
        cross = -np.stack([k_other.matvec(full_other[c]) for c in range(3)])[:, coeffs.pairs]
        if implicit:
            gains, weight = _split_losses(cross, u_old)
            explicit += gains
            extra_diag += weight
        else:
            explicit += cross

    rhs = u_old + dt * explicit
    stiffness = plan.stiffness[region]
    u_new = np.stack([
        thomas_solve(stiffness.shifted(dt, extra_diag[c]), rhs[c]) for c in range(3)
    ])
    u_new = clamp_negatives(u_new, region, cfg, stats, t=t + dt)
    return RegionState.from_stack(u_new, t + dt)


def clamp_negatives(
    u: np.ndarray,
    region: int,
    cfg: SimulationConfig,
    stats: ClampStats | None = None,
    *,
    t: float = 0.0,
) -> np.ndarray:
    """Met à 0 les valeurs de u (3, n) dans (−tol, 0); au-delà lève PositivityViolationError.

    tol = clamp_tol × densité maximale de u. Renvoie une copie si une valeur a changé.
    """
    if not np.any(u < 0.0):
        return u
    tolerance = cfg.numerics.clamp_tol * max(float(np.max(np.abs(u))), 1.0e-300)
    worst = np.unravel_index(np.argmin(u), u.shape)
    if u[worst] < -tolerance:
        raise PositivityViolationError(
            region, Compartment(int(worst[0])).name, float(u[worst]), tolerance
        )
    negative = u < 0.0
    if stats is not None:
        stats.count += int(np.count_nonzero(negative))
        stats.max_clamp = max(stats.max_clamp, float(-u[worst]))
    logger.debug(f"Région {region}: {np.count_nonzero(negative)} valeurs négatives ramenées à 0 "
                 f"(min {u[worst]:.3e}) à t={t:.6g}")
    return np.where(negative, 0.0, u)


def step_coupled(
    state1: RegionState,
    state2: RegionState,
    cfg: SimulationConfig,
    t: float,
    *,
    ledger: LockdownLedger | None = None,
    stats: ClampStats | None = None,
    coefficients: RegionCoefficients | None = None,
    source: SourceFn | None = None,
) -> tuple[RegionState, RegionState, InterfaceFluxState, InterfaceFluxState]:
    """Un pas de Gauss–Seidel sur les deux régions, répété coupling_sweeps fois"""
    coefficients = coefficients or RegionCoefficients.from_config(cfg)
    ledger = ledger if ledger is not None else LockdownLedger(dt=cfg.dt)
    mode, _ = lockdown_update(coefficients.policy, *lockdown_levels(state1, state2, cfg), t, ledger)
    plan = plan_step(state1, state2, cfg, t, mode=mode, coefficients=coefficients)

    new2 = state2
    for _ in range(cfg.coupling_sweeps):
        new1 = step_region(1, state1, new2, cfg, t, plan=plan, source=source, stats=stats)
        new2 = step_region(2, state2, new1, cfg, t, plan=plan, source=source, stats=stats)
    interface1, interface2 = plan.flux_states()
    return new1, new2, interface1, interface2


@dataclass
class _Recorder:
    record: SimulationRecord
    stride: int
    ledger: LockdownLedger
    stats: ClampStats = field(default_factory=ClampStats)

    def append(self, t, state1, state2, interface1, interface2):
        self.record.frames.append(
            Frame(t, state1, state2, interface1, interface2, self.ledger.lockdown_days)
        )


def uniform_initial_states(cfg: SimulationConfig) -> tuple[RegionState, RegionState]:
    """États uniformes (s0, i0, r0) de chaque région à t = 0"""
    n = cfg.grid.n_cells_per_region
    return (
        RegionState.uniform(n, *cfg.initial.triple(1)),
        RegionState.uniform(n, *cfg.initial.triple(2)),
    )


def degeneracy_diagnostics(cfg: SimulationConfig, coefficients: RegionCoefficients) -> dict[int, DegeneracyReport]:
    """Test de dégénérescence faible au bord extérieur de chaque région, à mi-parcours.

    Diagnostic seulement: une région sans test possible (horizon trop court,
    σ identiquement nul) est signalée dans les logs et absente du résultat.
    """
    reports = {}
    if cfg.t_final <= 0.0:
        return reports
    t_mid = cfg.t_final / 2.0
    delta = min(_DEGENERACY_DELTA, cfg.t_final / 4.0)
    for region in (1, 2):
        bounds = cfg.grid.region_bounds(region)
        x = bounds[0] if region == 1 else bounds[1]
        try:
            report = weak_degeneracy_check(
                coefficients.sigma[region], t_mid, x, delta, _DEGENERACY_QUAD_POINTS,
                region_bounds=bounds, t_final=cfg.t_final,
            )
        except (DegenerateAtEveryPointError, OutOfDomainError) as e:
            logger.warning(f"Région {region}: test de dégénérescence impossible ({e})")
            continue
        reports[region] = report
        if report.finite:
            logger.info(f"Région {region}: dégénérescence faible en x={x} "
                        f"(∫∫1/σ ≈ {report.value:.4g})")
        else:
            logger.warning(f"Région {region}: ∫∫1/σ diverge au raffinement en x={x} "
                           f"({report.value:.4g} -> {report.refined_value:.4g})")
    return reports


def run_simulation(
    cfg: SimulationConfig,
    *,
    source: SourceFn | None = None,
    initial_states: tuple[RegionState, RegionState] | None = None,
) -> SimulationRecord:
    """Boucle en temps de 0 à t_final; une trame toutes les output_stride itérations.

    Raises:
        SimulationStepError: échec numérique d'un pas, horodaté
    """
    validate_config(cfg)
    coefficients = RegionCoefficients.from_config(cfg)
    state1, state2 = initial_states or uniform_initial_states(cfg)
    ledger = LockdownLedger(dt=cfg.dt)
    recorder = _Recorder(SimulationRecord(config=cfg), cfg.numerics.output_stride, ledger)
    recorder.record.degeneracy = degeneracy_diagnostics(cfg, coefficients)

    preview = plan_step(state1, state2, cfg, 0.0, coefficients=coefficients)
    recorder.append(0.0, state1, state2, *preview.flux_states())

    n_steps = cfg.n_steps
    logger.info(f"Simulation: {n_steps} pas de {cfg.dt} j, {cfg.grid.n_cells_per_region} cellules par région")
    for step in range(n_steps):
        t = step * cfg.dt
        try:
            state1, state2, interface1, interface2 = step_coupled(
                state1, state2, cfg, t,
                ledger=ledger, stats=recorder.stats, coefficients=coefficients, source=source,
            )
        except NumericalError as e:
            logger.error(f"Échec du pas à t={t:.6g} j: {e}")
            raise SimulationStepError(t, e) from e
        if (step + 1) % recorder.stride == 0 or step + 1 == n_steps:
            recorder.append((step + 1) * cfg.dt, state1, state2, interface1, interface2)

    ledger.close_open_interval(cfg.t_final)
    record = recorder.record
    record.lockdown_days = ledger.lockdown_days
    record.lockdown_switches = ledger.switches
    record.lockdown_intervals = list(ledger.intervals)
    record.clamp_count = recorder.stats.count
    record.max_clamp = recorder.stats.max_clamp
    logger.info(f"Simulation terminée: {len(record)} trames, confinement {ledger.lockdown_days:.4g} j, "
                f"{record.clamp_count} corrections de positivité")
    return record
