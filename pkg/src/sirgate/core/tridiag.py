"""
Matrices tridiagonales et solveur de Thomas compilé par numba.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from sirgate.errors import SingularMatrixError

PIVOT_TOL = 1e-14


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Matrice tridiagonale n×n: sub[k] = m[k+1, k], super[k] = m[k, k+1]"""
    sub: np.ndarray
    diag: np.ndarray
    super: np.ndarray

    def __post_init__(self):
        n = self.diag.shape[0]
        if self.diag.ndim != 1 or n < 1:
            raise ValueError("diagonale 1D non vide requise")
        if self.sub.shape != (n - 1,) or self.super.shape != (n - 1,):
            raise ValueError(f"sous/sur-diagonales de longueur {n - 1} requises")

    @classmethod
    def zeros(cls, n: int) -> "TridiagonalMatrix":
        return cls(np.zeros(n - 1), np.zeros(n), np.zeros(n - 1))

    @classmethod
    def identity(cls, n: int) -> "TridiagonalMatrix":
        return cls(np.zeros(n - 1), np.ones(n), np.zeros(n - 1))

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def shifted(self, dt: float, extra_diag: np.ndarray | None = None) -> "TridiagonalMatrix":
        """I + dt·K (+ dt·diag(extra_diag))"""
        diag = 1.0 + dt * self.diag
        if extra_diag is not None:
            diag = diag + dt * extra_diag
        return TridiagonalMatrix(dt * self.sub, diag, dt * self.super)

    def with_diag_added(self, row: int, value: float) -> "TridiagonalMatrix":
        diag = self.diag.copy()
        diag[row] += value
        return TridiagonalMatrix(self.sub.copy(), diag, self.super.copy())

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.super * x[1:]
        return y

    def row_sums(self) -> np.ndarray:
        sums = self.diag.copy()
        sums[1:] += self.sub
        sums[:-1] += self.super
        return sums

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.super, 1)


@njit(cache=True)
def _thomas_kernel(sub, diag, sup, rhs, out):
    """Élimination sans pivotage; renvoie l'indice du pivot défaillant ou -1"""
    n = diag.shape[0]
    c_prime = np.empty(n)
    d_prime = np.empty(n)

    pivot = diag[0]
    if abs(pivot) < PIVOT_TOL:
        return 0
    c_prime[0] = sup[0] / pivot if n > 1 else 0.0
    d_prime[0] = rhs[0] / pivot
    for k in range(1, n):
        pivot = diag[k] - sub[k - 1] * c_prime[k - 1]
        if abs(pivot) < PIVOT_TOL:
            return k
        c_prime[k] = sup[k] / pivot if k < n - 1 else 0.0
        d_prime[k] = (rhs[k] - sub[k - 1] * d_prime[k - 1]) / pivot

    out[n - 1] = d_prime[n - 1]
    for k in range(n - 2, -1, -1):
        out[k] = d_prime[k] - c_prime[k] * out[k + 1]
    return -1


def _failed_pivot(m: TridiagonalMatrix, row: int) -> float:
    pivot = m.diag[0]
    for k in range(1, row + 1):
        pivot = m.diag[k] - m.sub[k - 1] * m.super[k - 1] / pivot
    return float(pivot)


def thomas_solve(m: TridiagonalMatrix, rhs: np.ndarray) -> np.ndarray:
    """Résout m·x = rhs (algorithme de Thomas, O(n)).

    Raises:
        SingularMatrixError: si un pivot a une magnitude < 1e-14
    """
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    if rhs.shape != (m.n,):
        raise ValueError(f"second membre de longueur {m.n} requis, reçu {rhs.shape}")
    out = np.empty(m.n)
    failed = _thomas_kernel(
        np.ascontiguousarray(m.sub, dtype=np.float64),
        np.ascontiguousarray(m.diag, dtype=np.float64),
        np.ascontiguousarray(m.super, dtype=np.float64),
        rhs,
        out,
    )
    if failed >= 0:
        raise SingularMatrixError(failed, _failed_pivot(m, failed))
    return out
