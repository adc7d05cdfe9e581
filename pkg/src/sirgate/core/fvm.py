"""
Volumes finis centrés: flux aux faces, matrice de rigidité par région,
fermeture de Dirichlet aux bords extérieurs et condition d'interface sur Γ.
"""

from dataclasses import dataclass

import numpy as np

from sirgate.config import TwoRegionGrid
from sirgate.core.coefficients import DiffusionField, sigma_eval
from sirgate.core.policy import MobilityPolicy, signed_alpha
from sirgate.core.state import Compartment, InterfaceFluxState, InterfaceMode, RegionState
from sirgate.core.tridiag import TridiagonalMatrix


def face_flux(sigma_face, u_left, u_right, dx: float):
    """Ψ = σ_face·(u_right − u_left)/dx"""
    if dx <= 0:
        raise ValueError(f"dx > 0 requis, reçu {dx}")
    return sigma_face * (np.asarray(u_right) - np.asarray(u_left)) / dx


def face_sigmas(grid: TwoRegionGrid, sigma_field: DiffusionField, t: float, region: int) -> np.ndarray:
    """σ aux n+1 faces de la région, évalué exactement sur les coordonnées de face"""
    return sigma_eval(sigma_field, grid.faces(region), t)


def boundary_closure_outer(
    matrix: TridiagonalMatrix, sigma_face: float, dx: float, side: str
) -> TridiagonalMatrix:
    """Dirichlet homogène par valeur fantôme nulle à distance dx/2 de la face.

    Le flux fantôme σ_face·(0 − u_k)/(dx/2) ajoute 2σ_face/dx² à la diagonale
    de la ligne de bord.
    """
    if side not in ("left", "right"):
        raise ValueError(f"côté inconnu: {side}")
    row = 0 if side == "left" else matrix.n - 1
    # flux par unité de saut à travers la demi-cellule, rapporté au volume dx
    return matrix.with_diag_added(row, float(face_flux(sigma_face, 0.0, 1.0, dx / 2.0)) / dx)


def assemble_diffusion(
    grid: TwoRegionGrid,
    sigma_field: DiffusionField,
    t: float,
    region: int,
    compartment: Compartment | None = None,
) -> TridiagonalMatrix:
    """Matrice K de la région (faces intérieures + bord extérieur).

    La face Γ n'apparaît pas dans K: son flux est imposé par interface_closure.
    Un seul σ par région, donc `compartment` ne change pas l'opérateur.
    """
    dx = grid.dx
    sigma = face_sigmas(grid, sigma_field, t, region)
    inner = face_flux(sigma[1:-1], 0.0, 1.0, dx) / dx

    diag = np.zeros(grid.n_cells_per_region)
    diag[:-1] += inner
    diag[1:] += inner
    matrix = TridiagonalMatrix(-inner, diag, -inner.copy())

    side = grid.outer_side(region)
    outer_sigma = sigma[0] if side == "left" else sigma[-1]
    return boundary_closure_outer(matrix, float(outer_sigma), dx, side)


@dataclass(frozen=True)
class InterfaceCoefficients:
    """Flux entrant dans la région i: c_own·u^i_Γ + c_other·u^j_Γ"""
    c_own: float
    c_other: float
    mode: InterfaceMode

    def flux(self, u_own_gamma: np.ndarray, u_other_gamma: np.ndarray) -> np.ndarray:
        return self.c_own * u_own_gamma + self.c_other * u_other_gamma


def interface_closure(
    state_i: RegionState,
    state_j: RegionState,
    policy: MobilityPolicy,
    sigma_i_face: float | None = None,
    sigma_j_face: float | None = None,
    *,
    region_i: int = 1,
    mode: InterfaceMode = InterfaceMode.ROBIN_OPEN,
) -> tuple[np.ndarray, InterfaceFluxState]:
    """Valeur de Robin −α^j(I^i_Γ)·u^j_Γ portée par la région i.

    Le flux diffusif total à travers Γ est remplacé par cette valeur, de sorte
    que σ_i_face et σ_j_face n'interviennent pas; ils sont acceptés pour la
    symétrie d'appel.

    Returns:
        (flux entrant dans i par compartiment S, I, R, état de la condition)
    """
    region_j = 2 if region_i == 1 else 1
    k_i = state_i.n_cells - 1 if region_i == 1 else 0
    k_j = 0 if region_i == 1 else state_j.n_cells - 1
    if mode is InterfaceMode.NEUMANN_CLOSED:
        return np.zeros(3), InterfaceFluxState(0.0, mode)
    alpha = signed_alpha(policy, max(float(state_i.i[k_i]), 0.0), region_j)
    u_j = np.array(state_j.cell(k_j))
    return -alpha * u_j, InterfaceFluxState(alpha, mode)


def interface_coefficients(
    grid: TwoRegionGrid,
    state_i: RegionState,
    state_j: RegionState,
    policy: MobilityPolicy,
    region_i: int,
    mode: InterfaceMode,
) -> InterfaceCoefficients:
    """Coefficients des deux conditions de Robin vues depuis la région i.

    Flux net dans 1: Φ = −α²(I¹_Γ)u²_Γ + α¹(I²_Γ)u¹_Γ; la région 2 reçoit −Φ.
    Chaque terme est la condition de Robin portée par une région (interface_closure).
    """
    if state_i.n_cells != grid.n_cells_per_region or state_j.n_cells != grid.n_cells_per_region:
        raise ValueError("états incompatibles avec la grille")
    region_j = 2 if region_i == 1 else 1
    _, carried_by_i = interface_closure(state_i, state_j, policy, region_i=region_i, mode=mode)
    _, carried_by_j = interface_closure(state_j, state_i, policy, region_i=region_j, mode=mode)
    return InterfaceCoefficients(
        c_own=carried_by_j.alpha_value + 0.0,
        c_other=-carried_by_i.alpha_value + 0.0,
        mode=mode,
    )


def robin_coefficients(
    policy: MobilityPolicy, i_own: float, i_other: float, region_i: int, mode: InterfaceMode
) -> InterfaceCoefficients:
    """c_own = α^i(I^j_Γ), c_other = −α^j(I^i_Γ); nuls si l'interface est fermée"""
    if mode is InterfaceMode.NEUMANN_CLOSED:
        return InterfaceCoefficients(0.0, 0.0, mode)
    region_j = 2 if region_i == 1 else 1
    return InterfaceCoefficients(
        c_own=signed_alpha(policy, max(i_other, 0.0), region_i),
        c_other=-signed_alpha(policy, max(i_own, 0.0), region_j),
        mode=mode,
    )
