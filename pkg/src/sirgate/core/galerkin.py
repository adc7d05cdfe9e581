"""
Oracle de Faedo–Galerkin: base de sinus par région, matrices par
quadrature de Gauss–Legendre composite, intégration RK4 explicite.

Sert uniquement à vérifier le solveur volumes finis; il ne partage pas sa
machinerie implicite.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sirgate.config import BirthBasis, CrossDiffusion, LockdownSignal, SimulationConfig, validate_config
from sirgate.core.coefficients import DiffusionField, diffusion_field, lambda_eval, lambda_field, sigma_eval
from sirgate.core.fvm import InterfaceCoefficients, robin_coefficients
from sirgate.core.policy import LockdownLedger, MobilityPolicy, lockdown_update
from sirgate.core.reaction import ReactionInput, birth_population, reaction_eval
from sirgate.core.state import InterfaceMode, RegionState, SimulationRecord
from sirgate.core.stepper import uniform_initial_states
from sirgate.errors import EmptyRecordError, QuadratureUnderResolvedError, StiffnessStepTooLargeError

logger = logging.getLogger(__name__)

GAUSS_ORDER = 8  # points par panneau
QUADRATURE_TOL = 1e-8
POWER_ITERATIONS = 200


def gauss_legendre(lo: float, hi: float, quad_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Nœuds et poids de Gauss–Legendre composite (panneaux d'ordre 8)"""
    panels = max(1, math.ceil(quad_points / GAUSS_ORDER))
    ref_x, ref_w = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    w = (half[:, None] * ref_w[None, :]).ravel()
    return x, w


@dataclass(frozen=True)
class GalerkinBasis:
    """Modes sinus orthonormés d'une région.

    `dirichlet`: √(2/L)·sin(kπξ/L), nuls aux deux extrémités;
    `mixed`: √(2/L)·sin((k−½)πξ/L), nuls au bord extérieur seulement.
    ξ est la distance au bord extérieur de la région.
    """
    n_modes: int
    lo: float
    hi: float
    outer_side: str = "left"
    kind: str = "dirichlet"

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("au moins un mode requis")
        if self.kind not in ("dirichlet", "mixed"):
            raise ValueError(f"base inconnue: {self.kind}")

    @classmethod
    def for_region(cls, cfg: SimulationConfig, region: int, n_modes: int, kind: str = "mixed") -> "GalerkinBasis":
        lo, hi = cfg.grid.region_bounds(region)
        return cls(n_modes, lo, hi, cfg.grid.outer_side(region), kind)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def wavenumbers(self) -> np.ndarray:
        k = np.arange(1, self.n_modes + 1, dtype=float)
        if self.kind == "mixed":
            k = k - 0.5
        return k * np.pi / self.length

    def _xi(self, x) -> tuple[np.ndarray, float]:
        x = np.asarray(x, dtype=float)
        if self.outer_side == "left":
            return x - self.lo, 1.0
        return self.hi - x, -1.0

    def values(self, x) -> np.ndarray:
        """Matrice (n_modes, len(x)) des v_k(x)"""
        xi, _ = self._xi(x)
        return math.sqrt(2.0 / self.length) * np.sin(np.outer(self.wavenumbers, np.atleast_1d(xi)))

    def derivatives(self, x) -> np.ndarray:
        xi, sign = self._xi(x)
        k = self.wavenumbers[:, None]
        return sign * math.sqrt(2.0 / self.length) * k * np.cos(k * np.atleast_1d(xi)[None, :])

    def at_interface(self) -> np.ndarray:
        gamma = self.hi if self.outer_side == "left" else self.lo
        return self.values(gamma)[:, 0]


@dataclass(frozen=True)
class GalerkinSystem:
    """Matrices de masse et de rigidité d'une région à l'instant t"""
    basis: GalerkinBasis
    mass: np.ndarray
    stiffness: np.ndarray
    t: float
    nodes: np.ndarray
    weights: np.ndarray
    modes: np.ndarray  # v_k aux nœuds

    def project(self, values: np.ndarray) -> np.ndarray:
        """∫ g·v_k pour chaque ligne de `values` (…, n_nodes)"""
        return (values * self.weights) @ self.modes.T

    def reconstruct(self, d: np.ndarray) -> np.ndarray:
        return d @ self.modes


def _assemble(basis: GalerkinBasis, sigma_field: DiffusionField, t: float, quad_points: int):
    x, w = gauss_legendre(basis.lo, basis.hi, quad_points)
    v = basis.values(x)
    dv = basis.derivatives(x)
    sigma = sigma_eval(sigma_field, x, t)
    mass = (v * w) @ v.T
    stiffness = (dv * (sigma * w)) @ dv.T
    return x, w, v, mass, stiffness


def assemble_galerkin(
    basis: GalerkinBasis,
    sigma_field: DiffusionField,
    t: float,
    quad_points: int,
    *,
    check: bool = True,
) -> GalerkinSystem:
    """Masse M_kl = ∫ v_k v_l et rigidité K_kl = ∫ σ v_k′ v_l′ par quadrature.

    Raises:
        QuadratureUnderResolvedError: si doubler quad_points change une entrée de plus de 1e-8
    """
    if quad_points < 4 * basis.n_modes:
        raise ValueError(f"quad_points >= {4 * basis.n_modes} requis pour {basis.n_modes} modes")
    x, w, v, mass, stiffness = _assemble(basis, sigma_field, t, quad_points)
    if check:
        _, _, _, mass_2, stiffness_2 = _assemble(basis, sigma_field, t, 2 * quad_points)
        change = max(np.max(np.abs(mass_2 - mass)), np.max(np.abs(stiffness_2 - stiffness)))
        if change > QUADRATURE_TOL:
            raise QuadratureUnderResolvedError(float(change))
    return GalerkinSystem(basis, mass, stiffness, t, x, w, v)


def largest_eigenvalue(matrix: np.ndarray, iterations: int = POWER_ITERATIONS) -> float:
    """Estimation par itération de la puissance de la plus grande valeur propre en module"""
    vector = np.ones(matrix.shape[0]) / math.sqrt(matrix.shape[0])
    value = 0.0
    for _ in range(iterations):
        image = matrix @ vector
        norm = float(np.linalg.norm(image))
        if norm == 0.0:
            return 0.0
        vector = image / norm
        value = norm
    return value


@dataclass
class GalerkinProblem:
    """Système couplé des deux régions: matrices, couplages et paramètres"""
    cfg: SimulationConfig
    systems: dict[int, GalerkinSystem]
    sigma: dict[int, DiffusionField]
    mass_inv: dict[int, np.ndarray]
    foreign_modes: dict[int, np.ndarray]  # modes de j aux points appariés des nœuds de i
    cross: dict[int, np.ndarray]  # P_ij M_j⁻¹ K_j(t0) (sans le facteur κ)
    lam: dict[int, np.ndarray]
    gamma_values: dict[int, np.ndarray]
    policy: MobilityPolicy

    def kappa_ratio(self, region: int, t: float) -> float:
        return self.sigma[region].kappa(t) / self.sigma[region].kappa(self.systems[region].t)

    @classmethod
    def build(cls, cfg: SimulationConfig, n_modes: int, *, kind: str = "mixed",
              quad_points: int | None = None, check: bool = True) -> "GalerkinProblem":
        quad_points = quad_points or 32 * n_modes
        policy = MobilityPolicy.from_config(cfg)
        sigma = {r: diffusion_field(cfg, r) for r in (1, 2)}
        systems = {
            r: assemble_galerkin(GalerkinBasis.for_region(cfg, r, n_modes, kind), sigma[r], 0.0,
                                 quad_points, check=check)
            for r in (1, 2)
        }
        mass_inv = {r: np.linalg.inv(systems[r].mass) for r in (1, 2)}
        foreign_modes, cross, lam = {}, {}, {}
        for r in (1, 2):
            other = 3 - r
            shift = systems[other].basis.lo - systems[r].basis.lo
            foreign_modes[r] = systems[other].basis.values(systems[r].nodes + shift)
            projection = (systems[r].modes * systems[r].weights) @ foreign_modes[r].T
            cross[r] = projection @ mass_inv[other] @ systems[other].stiffness
            lam[r] = lambda_eval(lambda_field(cfg, r), systems[r].nodes)
        gamma_values = {r: systems[r].basis.at_interface() for r in (1, 2)}
        return cls(cfg, systems, sigma, mass_inv, foreign_modes, cross, lam, gamma_values, policy)

    def interface_levels(self, d_all: np.ndarray) -> tuple[float, float]:
        """Niveaux du signal de confinement reconstruits depuis les coefficients"""
        if self.cfg.policy.lockdown_signal is LockdownSignal.REGIONAL_TOTAL:
            length = self.cfg.grid.region_length
            return tuple(
                float(np.sum(self.systems[r].reconstruct(d_all[r - 1, 1]) * self.systems[r].weights)) / length
                for r in (1, 2)
            )
        return tuple(float(d_all[r - 1, 1] @ self.gamma_values[r]) for r in (1, 2))

    def interface_coefficients(self, d_all: np.ndarray, mode: InterfaceMode) -> dict[int, InterfaceCoefficients]:
        i_gamma = {r: float(d_all[r - 1, 1] @ self.gamma_values[r]) for r in (1, 2)}
        return {r: robin_coefficients(self.policy, i_gamma[r], i_gamma[3 - r], r, mode) for r in (1, 2)}

    def robin_bound(self) -> float:
        """Majorant de la raideur du terme de Robin: max|α|·Σ v_k(Γ)²"""
        return max(float(self.mass_inv[r].diagonal().max() * np.sum(self.gamma_values[r] ** 2)) for r in (1, 2))


def galerkin_rhs(
    problem: GalerkinProblem,
    d_all: np.ndarray,
    t: float,
    interface: dict[int, InterfaceCoefficients] | None = None,
) -> np.ndarray:
    """Dérivées d′ pour les deux régions, tableau (2, 3, n_modes).

    M_i d_i′ = −κ K_i d_i − κ_j P M_j⁻¹ K_j d_j + ∫ (f + échange) v_k + Φ_i v_k(Γ)
    """
    cfg = problem.cfg
    out = np.empty_like(d_all)
    fields_at = {r: problem.systems[r].reconstruct(d_all[r - 1]) for r in (1, 2)}
    gamma = {r: d_all[r - 1] @ problem.gamma_values[r] for r in (1, 2)}

    for r in (1, 2):
        other = 3 - r
        system = problem.systems[r]
        own = fields_at[r]
        foreign = d_all[other - 1] @ problem.foreign_modes[r]

        if cfg.numerics.birth_basis is BirthBasis.DENSITY:
            mass = float(np.sum(own.sum(axis=0) * system.weights))
        else:
            mass = 0.0
        local = np.stack(reaction_eval(
            ReactionInput(local=tuple(own), foreign=tuple(foreign),
                          n_total_local=birth_population(cfg, r, mass)),
            cfg.params,
            r,
        ))
        local = local + problem.lam[other] * foreign - problem.lam[r] * own
        load = system.project(local)

        load -= problem.kappa_ratio(r, t) * d_all[r - 1] @ system.stiffness.T
        if cfg.numerics.cross_diffusion is CrossDiffusion.PAIRED:
            load -= problem.kappa_ratio(other, t) * d_all[other - 1] @ problem.cross[r].T

        if interface is not None and interface[r].mode is InterfaceMode.ROBIN_OPEN:
            flux = interface[r].flux(gamma[r], gamma[other])
            load += np.outer(flux, problem.gamma_values[r])

        out[r - 1] = load @ problem.mass_inv[r].T
    return out


def rk4_step(problem: GalerkinProblem, d_all: np.ndarray, t: float, dt: float,
             interface: dict[int, InterfaceCoefficients] | None) -> np.ndarray:
    """Runge–Kutta classique à 4 étages, conditions d'interface figées sur le pas"""
    k1 = galerkin_rhs(problem, d_all, t, interface)
    k2 = galerkin_rhs(problem, d_all + 0.5 * dt * k1, t + 0.5 * dt, interface)
    k3 = galerkin_rhs(problem, d_all + 0.5 * dt * k2, t + 0.5 * dt, interface)
    k4 = galerkin_rhs(problem, d_all + dt * k3, t + dt, interface)
    return d_all + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class OracleRecord:
    """Champs reconstruits aux centres des cellules, aux instants enregistrés"""
    config: SimulationConfig
    n_modes: int
    dt: float
    times: list[float] = field(default_factory=list)
    # tableaux (3, n) par région; la troncature spectrale peut donner des valeurs négatives
    cell_values: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    coefficients: list[np.ndarray] = field(default_factory=list)
    lockdown_days: float = 0.0

    def __len__(self) -> int:
        return len(self.times)


def stability_bound(problem: GalerkinProblem) -> float:
    """Pas RK4 admissible 0.5/λ_max, κ étant maximal à t = 0"""
    lam_max = max(
        largest_eigenvalue(problem.mass_inv[r] @ problem.systems[r].stiffness) for r in (1, 2)
    )
    lam_max += problem.robin_bound()
    return 0.5 / lam_max if lam_max > 0 else math.inf


def project_states(problem: GalerkinProblem, state1: RegionState, state2: RegionState) -> np.ndarray:
    """Projection L² de champs constants par cellule sur les modes de chaque région"""
    grid = problem.cfg.grid
    d_all = np.empty((2, 3, problem.systems[1].basis.n_modes))
    for r, state in ((1, state1), (2, state2)):
        system = problem.systems[r]
        lo = grid.region_bounds(r)[0]
        cells = np.clip(((system.nodes - lo) / grid.dx).astype(int), 0, grid.n_cells_per_region - 1)
        d_all[r - 1] = system.project(state.stack()[:, cells]) @ problem.mass_inv[r].T
    return d_all


def run_oracle(
    cfg: SimulationConfig,
    n_modes: int,
    *,
    kind: str = "mixed",
    quad_points: int | None = None,
    dt: float | None = None,
    initial_coefficients: np.ndarray | None = None,
) -> OracleRecord:
    """Intègre le système de Galerkin et reconstruit S, I, R aux centres des cellules.

    Les enregistrements coïncident avec ceux de run_simulation (toutes les
    output_stride itérations de cfg.dt). Sans `dt`, chaque pas cfg.dt est
    découpé en sous-pas sous la borne de stabilité.

    Raises:
        StiffnessStepTooLargeError: si `dt` dépasse 0.5/λ_max(M⁻¹K)
    """
    validate_config(cfg)
    problem = GalerkinProblem.build(cfg, n_modes, kind=kind, quad_points=quad_points)
    bound = stability_bound(problem)
    if dt is not None and dt > bound:
        raise StiffnessStepTooLargeError(dt, bound)
    substeps = max(1, math.ceil(cfg.dt / (dt if dt is not None else bound)))
    dt_oracle = cfg.dt / substeps
    logger.info(f"Oracle de Galerkin: {n_modes} modes ({kind}), pas RK4 {dt_oracle:.4g} j "
                f"(borne {bound:.4g} j)")

    if initial_coefficients is None:
        d_all = project_states(problem, *uniform_initial_states(cfg))
    else:
        d_all = np.array(initial_coefficients, dtype=float)

    grid = cfg.grid
    cell_modes = {r: problem.systems[r].basis.values(grid.cell_centers(r)) for r in (1, 2)}
    record = OracleRecord(cfg, n_modes, dt_oracle)

    def keep(t: float, d: np.ndarray) -> None:
        record.times.append(t)
        record.coefficients.append(d.copy())
        record.cell_values.append(tuple(d[r - 1] @ cell_modes[r] for r in (1, 2)))

    keep(0.0, d_all)
    ledger = LockdownLedger(dt=cfg.dt)
    for step in range(cfg.n_steps):
        t = step * cfg.dt
        mode, _ = lockdown_update(problem.policy, *problem.interface_levels(d_all), t, ledger)
        interface = problem.interface_coefficients(d_all, mode)
        for sub in range(substeps):
            d_all = rk4_step(problem, d_all, t + sub * dt_oracle, dt_oracle, interface)
        if (step + 1) % cfg.numerics.output_stride == 0 or step + 1 == cfg.n_steps:
            keep((step + 1) * cfg.dt, d_all)
    record.lockdown_days = ledger.lockdown_days
    return record


@dataclass(frozen=True)
class DiscrepancyReport:
    times: np.ndarray
    relative: np.ndarray

    @property
    def final(self) -> float:
        return float(self.relative[-1])


def discrepancy(record: SimulationRecord, oracle: OracleRecord) -> DiscrepancyReport:
    """Écart L² relatif ‖u_fvm − u_oracle‖/‖u_oracle‖ par trame (deux régions, trois compartiments)"""
    if not record.frames or not oracle.times:
        raise EmptyRecordError("enregistrement vide")
    if len(record.frames) != len(oracle.times):
        raise ValueError("les deux enregistrements n'ont pas les mêmes instants")
    relative = []
    for frame, (o1, o2) in zip(record.frames, oracle.cell_values, strict=True):
        diff = np.concatenate([frame.state1.stack() - o1, frame.state2.stack() - o2])
        ref = np.concatenate([o1, o2])
        ref_norm = float(np.linalg.norm(ref))
        relative.append(float(np.linalg.norm(diff)) / ref_norm if ref_norm > 0 else float(np.linalg.norm(diff)))
    return DiscrepancyReport(np.array(record.times), np.array(relative))

