"""Periodic 2D cell problems on square and tubular domains.

The corrector chi_j solves, with periodic boundary conditions on
[-delta1/2, delta1/2] x [-delta2/2, delta2/2],

    -div(a grad chi_j) = div(a e_j),    mean(chi_j) = 0,

discretized by the conservative second-order five-point stencil with the
scalar coefficient sampled at face midpoints.  The operator is symmetric
positive semidefinite with the constants as nullspace; the singular
system is solved by conjugate gradients with the iterate re-projected to
zero mean each step, preconditioned by the constant-coefficient periodic
operator (inverted exactly with FFTs, zero mode removed).  The tensor
estimate is the node average of a * (delta_ij + d(chi_j)/dx_i) with
centered differences, which on a periodic grid is the composite
trapezoidal rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import Coefficient2D
from .errors import (
    NonConvergenceError,
    NumericalIntegrityError,
    ValidationError,
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50_000


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic grid on [-delta1/2, delta1/2] x [-delta2/2, delta2/2]."""

    delta1: float
    delta2: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.delta1 <= 0 or self.delta2 <= 0:
            raise ValidationError("grid extents must be positive")
        if self.n1 < 1 or self.n2 < 1:
            raise ValidationError("grid sizes must be positive")

    @property
    def h1(self) -> float:
        return self.delta1 / self.n1

    @property
    def h2(self) -> float:
        return self.delta2 / self.n2

    def x1(self) -> np.ndarray:
        return -self.delta1 / 2.0 + self.h1 * np.arange(self.n1)

    def x2(self) -> np.ndarray:
        return -self.delta2 / 2.0 + self.h2 * np.arange(self.n2)

    @classmethod
    def from_resolution(cls, delta1: float, delta2: float, n_base: int) -> "Grid2D":
        """Resolution law: n_k = round(n_base * delta_k), half-up, floor 4."""
        if n_base < 4:
            raise ValidationError(f"n_base must be >= 4, got {n_base}")
        return cls(delta1=float(delta1), delta2=float(delta2),
                   n1=max(4, round_half_up(n_base * delta1)),
                   n2=max(4, round_half_up(n_base * delta2)))


@dataclass
class CellOperator:
    """Five-point conservative stencil with periodic wraparound.

    a_face1[i, k] holds the coefficient at the (i + 1/2, k) face and
    a_face2[i, k] at the (i, k + 1/2) face.
    """

    grid: Grid2D
    a_face1: np.ndarray
    a_face2: np.ndarray

    def matvec(self, chi: np.ndarray) -> np.ndarray:
        h1sq = self.grid.h1 ** 2
        h2sq = self.grid.h2 ** 2
        a_w = np.roll(self.a_face1, 1, axis=0)
        a_s = np.roll(self.a_face2, 1, axis=1)
        d_e = np.roll(chi, -1, axis=0) - chi
        d_w = chi - np.roll(chi, 1, axis=0)
        d_n = np.roll(chi, -1, axis=1) - chi
        d_s = chi - np.roll(chi, 1, axis=1)
        return (-(self.a_face1 * d_e - a_w * d_w) / h1sq
                - (self.a_face2 * d_n - a_s * d_s) / h2sq)

    def mean_coefficients(self) -> tuple[float, float]:
        return float(self.a_face1.mean()), float(self.a_face2.mean())


@dataclass
class CellSolution:
    """Mean-zero corrector for one driving direction."""

    chi: np.ndarray
    residual_norm: float
    iterations: int


@dataclass(frozen=True)
class HomogenizedTensor:
    a11: float
    a22: float
    a12: float
    a21: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def diagonal(self) -> tuple[float, float]:
        return self.a11, self.a22


def _face_coefficients(grid: Grid2D, coeff: Coefficient2D):
    X1, X2 = np.meshgrid(grid.x1(), grid.x2(), indexing="ij")
    a1 = coeff(X1 + grid.h1 / 2.0, X2)
    a2 = coeff(X1, X2 + grid.h2 / 2.0)
    if np.min(a1) <= 0.0 or np.min(a2) <= 0.0:
        raise NumericalIntegrityError("coefficient is not strictly positive on faces")
    return a1, a2


def assemble(grid: Grid2D, coeff: Coefficient2D, j: int):
    """Operator and right-hand side div(a e_j) for one driving direction."""
    if grid.n1 < 4 or grid.n2 < 4:
        raise ValidationError(f"grid must have at least 4 nodes per direction, "
                              f"got {grid.n1}x{grid.n2}")
    if j not in (1, 2):
        raise ValidationError(f"driving direction j must be 1 or 2, got {j}")
    a1, a2 = _face_coefficients(grid, coeff)
    op = CellOperator(grid=grid, a_face1=a1, a_face2=a2)
    if j == 1:
        rhs = (a1 - np.roll(a1, 1, axis=0)) / grid.h1
    else:
        rhs = (a2 - np.roll(a2, 1, axis=1)) / grid.h2
    return op, rhs


def _fft_preconditioner(op: CellOperator):
    """Pseudo-inverse of the mean-coefficient five-point operator."""
    n1, n2 = op.grid.n1, op.grid.n2
    c1, c2 = op.mean_coefficients()
    k1 = np.arange(n1)
    k2 = np.arange(n2 // 2 + 1)
    lam = (c1 * (2.0 - 2.0 * np.cos(2.0 * np.pi * k1 / n1))[:, None] / op.grid.h1 ** 2
           + c2 * (2.0 - 2.0 * np.cos(2.0 * np.pi * k2 / n2))[None, :] / op.grid.h2 ** 2)
    lam[0, 0] = 1.0  # zero mode is projected out below

    def apply(r: np.ndarray) -> np.ndarray:
        rh = np.fft.rfft2(r)
        rh[0, 0] = 0.0
        rh /= lam
        return np.fft.irfft2(rh, s=r.shape)

    return apply


def solve_cell(operator: CellOperator, rhs: np.ndarray,
               tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> CellSolution:
    """Preconditioned CG on the singular periodic system.

    The iterate (and residual) are re-projected to zero mean every step,
    so the solve stays in the orthogonal complement of the nullspace.
    Converges when ||A chi - f|| / ||f|| <= tol.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be positive, got {max_iter}")
    rhs_norm = float(np.linalg.norm(rhs))
    if abs(float(rhs.mean())) > 1e-10 * (1.0 + float(np.max(np.abs(rhs)))):
        raise ValidationError("right-hand side is not mean-zero")
    if rhs_norm == 0.0:
        return CellSolution(chi=np.zeros_like(rhs), residual_norm=0.0, iterations=0)

    minv = _fft_preconditioner(operator)
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = minv(r)
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    history = []
    for it in range(1, max_iter + 1):
        ap = operator.matvec(p)
        alpha = rz / float(np.vdot(p, ap).real)
        x += alpha * p
        r -= alpha * ap
        x -= x.mean()
        r -= r.mean()
        rel = float(np.linalg.norm(r)) / rhs_norm
        history.append(rel)
        if rel <= tol:
            return CellSolution(chi=x, residual_norm=rel, iterations=it)
        z = minv(r)
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"cell solve did not reach tol={tol:g} in {max_iter} iterations "
        f"(residual {history[-1]:.3e})", residual_history=history)


def solve_cell_problem(grid: Grid2D, coeff: Coefficient2D,
                       tol: float = DEFAULT_TOL,
                       max_iter: int = DEFAULT_MAX_ITER) -> tuple[CellSolution, CellSolution]:
    """Correctors for both driving directions on one grid."""
    op, rhs1 = assemble(grid, coeff, 1)
    _, rhs2 = assemble(grid, coeff, 2)
    return solve_cell(op, rhs1, tol, max_iter), solve_cell(op, rhs2, tol, max_iter)


def homogenized_estimate(grid: Grid2D, coeff: Coefficient2D,
                         solution: tuple[CellSolution, CellSolution]) -> HomogenizedTensor:
    """Tensor estimate from the corrector pair by node averaging."""
    sol1, sol2 = solution
    X1, X2 = np.meshgrid(grid.x1(), grid.x2(), indexing="ij")
    a = coeff(X1, X2)
    entries = {}
    for j, sol in ((1, sol1), (2, sol2)):
        chi = sol.chi
        d1 = (np.roll(chi, -1, axis=0) - np.roll(chi, 1, axis=0)) / (2.0 * grid.h1)
        d2 = (np.roll(chi, -1, axis=1) - np.roll(chi, 1, axis=1)) / (2.0 * grid.h2)
        entries[(1, j)] = float(np.mean(a * ((j == 1) + d1)))
        entries[(2, j)] = float(np.mean(a * ((j == 2) + d2)))
    return HomogenizedTensor(a11=entries[(1, 1)], a22=entries[(2, 2)],
                             a12=entries[(1, 2)], a21=entries[(2, 1)])


def rho_estimate(coeff: Coefficient2D, delta1: float, delta2: float, n_base: int,
                 tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> tuple[HomogenizedTensor, int]:
    """Solve on [-delta1/2,delta1/2]x[-delta2/2,delta2/2]; returns tensor and CG iterations."""
    grid = Grid2D.from_resolution(delta1, delta2, n_base)
    sol1, sol2 = solve_cell_problem(grid, coeff, tol, max_iter)
    tensor = homogenized_estimate(grid, coeff, (sol1, sol2))
    return tensor, sol1.iterations + sol2.iterations


def reference_tensor(coeff: Coefficient2D, n_ref: int = 1024,
                     tol: float = DEFAULT_TOL) -> HomogenizedTensor:
    """Reference tensor for a 1-periodic field: unit-cell solve on a fine grid."""
    if coeff.period_kind != "periodic-1":
        raise ValidationError(
            "a unit-cell reference requires a periodic-1 coefficient; average "
            "rho over a large-delta window instead (sweep.average_reference)")
    grid = Grid2D(delta1=1.0, delta2=1.0, n1=n_ref, n2=n_ref)
    sol1, sol2 = solve_cell_problem(grid, coeff, tol)
    return homogenized_estimate(grid, coeff, (sol1, sol2))


def tubular_sweep(coeff: Coefficient2D, delta_list, n_base: int,
                  tol: float = DEFAULT_TOL,
                  abar: tuple[float, float] | None = None,
                  n_ref: int = 1024) -> dict[str, np.ndarray]:
    """Resonance error on tubular domains [-d/2, d/2] x [-1/2, 1/2].

    The x2 extent stays one period while the x1 extent sweeps delta, so
    only the x1 direction is incommensurate.  The reference diagonal
    comes from a fine unit-cell solve unless supplied.
    """
    deltas = np.asarray(list(delta_list), dtype=float)
    if np.any(deltas < 1.0):
        raise ValidationError("tubular sweep requires delta >= 1")
    if abar is None:
        ref = reference_tensor(coeff, n_ref=n_ref, tol=tol)
        abar = (ref.a11, ref.a22)
    rows = []
    for d in deltas:
        tensor, iters = rho_estimate(coeff, d, 1.0, n_base, tol)
        rows.append((tensor.a11, tensor.a22, tensor.a12,
                     tensor.a11 - abar[0], tensor.a22 - abar[1], iters))
    cols = np.array(rows, dtype=float)
    return {
        "delta": deltas,
        "rho11": cols[:, 0],
        "rho22": cols[:, 1],
        "rho12": cols[:, 2],
        "err11": cols[:, 3],
        "err22": cols[:, 4],
        "iterations": cols[:, 5],
    }
