"""Classical linear Galerkin method.

Given images ``g_k = L psi_k`` and test functionals ``l_tau``, the
coefficients of ``u_N = sum c_k psi_k`` solve

    sum_k l_tau(g_k) c_k = l_tau(f),    tau = 1..N,

i.e. ``l_tau(L u_N - f) = 0``. Two solvers are provided: Cramer's rule,
kept literally (column replacement) for small N, and a pivoted LU solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    GridMismatchError,
    LengthMismatchError,
    SingularSystemError,
    SizeLimitError,
    SizeMismatchError,
)
from .function_space import BasisMember, GridFunction, QuadratureGrid, l2_norm
from .functionals import FunctionalSet, apply_all, functional_matrix
from .operators import OperatorImages, OperatorSpec, apply_operator

#: sigma_min(A) / sigma_max(A) must exceed this for the system to be correct
DEGENERACY_THRESHOLD = 1e-12
CRAMER_MAX_N = 12


def is_correct(matrix: np.ndarray, row_norms=None, col_norms=None) -> bool:
    """Nonsingularity test for the Galerkin matrix.

    Uses the singular value ratio rather than ``|det|`` against the product
    of row norms: the latter shrinks geometrically with N and rejects
    16x16 systems with condition numbers near 1e3. When the norms of the
    test functionals (rows) and images (columns) are given, the entries are
    divided by them first; those entries are bounded by 1, so a matrix made
    of rounding noise is rejected even when its singular values happen to be
    comparable to each other.
    """
    a = np.asarray(matrix, dtype=float)
    normalized = row_norms is not None and col_norms is not None
    if normalized:
        rn = np.asarray(row_norms, dtype=float)
        cn = np.asarray(col_norms, dtype=float)
        if np.any(rn <= 0) or np.any(cn <= 0):
            return False
        a = a / rn[:, None] / cn[None, :]
    sv = np.linalg.svd(a, compute_uv=False)
    if not sv.size or sv[0] <= 0:
        return False
    ref = max(sv[0], 1.0) if normalized else sv[0]
    return bool(sv[-1] > DEGENERACY_THRESHOLD * ref)


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    matrix: np.ndarray
    det: float
    condition_estimate: float
    images: OperatorImages
    tests: FunctionalSet
    n: int
    correct: bool

    @property
    def trial_basis(self) -> tuple[BasisMember, ...]:
        return self.images.psi[: self.n]

    def rhs(self, f: GridFunction) -> np.ndarray:
        return apply_all(self.tests, f)


@dataclass(frozen=True, eq=False)
class ApproxSolution:
    coeffs: np.ndarray
    trial_basis: tuple[BasisMember, ...]
    u_samples: GridFunction
    image_samples: GridFunction


def assemble(images: OperatorImages, tests: FunctionalSet, n: int) -> GalerkinSystem:
    """Build ``A[tau, k] = l_tau(g_k)`` for ``tau, k < n``."""
    if n < 1 or n > len(images) or n > len(tests):
        raise SizeMismatchError(
            f"system size {n} needs {n} images and {n} tests, have {len(images)} and {len(tests)}"
        )
    tests = tests[:n]
    matrix = functional_matrix(tests, images.g[:n])
    matrix.setflags(write=False)
    det = float(np.linalg.det(matrix))
    sv = np.linalg.svd(matrix, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    return GalerkinSystem(
        matrix=matrix,
        det=det,
        condition_estimate=cond,
        images=images,
        tests=tests,
        n=n,
        correct=is_correct(
            matrix,
            [l2_norm(m.representer) for m in tests],
            [l2_norm(g) for g in images.g[:n]],
        ),
    )


def cramer_solve(matrix, rhs) -> np.ndarray:
    """Solve ``A c = b`` by Cramer's rule.

    ``c_k = det(A with column k replaced by b) / det(A)``. Exists to check
    the closed form against the factorization path; capped at
    ``CRAMER_MAX_N`` unknowns.
    """
    a = np.array(matrix, dtype=float)
    b = np.asarray(rhs, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise SizeMismatchError(f"matrix {a.shape} and rhs {b.shape} do not form a square system")
    if n > CRAMER_MAX_N:
        raise SizeLimitError(f"Cramer's rule is capped at N = {CRAMER_MAX_N}, got {n}")
    det = float(np.linalg.det(a))
    if not is_correct(a):
        raise SingularSystemError(f"singular system (det = {det:.3g})")
    coeffs = np.empty(n)
    for k in range(n):
        replaced = a.copy()
        replaced[:, k] = b
        coeffs[k] = np.linalg.det(replaced) / det
    return coeffs


def coefficients_cramer(system: GalerkinSystem, f: GridFunction) -> np.ndarray:
    if not system.correct:
        raise SingularSystemError(f"Galerkin matrix is degenerate (det = {system.det:.3g})")
    if system.n > CRAMER_MAX_N:
        raise SizeLimitError(f"Cramer's rule is capped at N = {CRAMER_MAX_N}, got {system.n}")
    return cramer_solve(system.matrix, system.rhs(f))


def coefficients_solve(system: GalerkinSystem, f: GridFunction) -> np.ndarray:
    if not system.correct:
        raise SingularSystemError(f"Galerkin matrix is degenerate (det = {system.det:.3g})")
    return np.linalg.solve(system.matrix, system.rhs(f))


def coefficient_functionals(system: GalerkinSystem) -> FunctionalSet:
    """The coefficient maps ``f -> c_k(f)`` as Riesz representers.

    Since ``c(f) = A^{-1} b(f)`` with ``b_tau(f) = <f, r_tau>``, the
    representer of ``c_k`` is ``sum_tau (A^{-1})[k, tau] r_tau``.
    """
    if not system.correct:
        raise SingularSystemError(f"Galerkin matrix is degenerate (det = {system.det:.3g})")
    reps = system.tests.representer_matrix()
    combos = np.linalg.solve(system.matrix, reps.T).T
    grid = system.tests.grid
    return FunctionalSet.from_representers(
        [GridFunction(grid, combos[:, k]) for k in range(system.n)],
        grid,
        labels=[f"c_{k + 1}[galerkin]" for k in range(system.n)],
    )


def build_solution(
    op: OperatorSpec,
    basis: Sequence[BasisMember],
    coeffs,
    grid: QuadratureGrid,
    x_grid: QuadratureGrid | None = None,
) -> ApproxSolution:
    """``u_N = sum c_k psi_k`` on the X grid and ``L u_N`` on the Y grid."""
    coeffs = np.array(coeffs, dtype=float)
    basis = tuple(basis)
    if coeffs.shape != (len(basis),):
        raise LengthMismatchError(f"{coeffs.size} coefficients for {len(basis)} trial functions")
    x_grid = x_grid or op.x_grid_for(grid)
    if basis:
        psi = np.column_stack([m(x_grid.nodes) for m in basis])
        u = GridFunction(x_grid, psi @ coeffs)
    else:
        u = x_grid.zeros()
    image = apply_operator(op, coeffs, basis, grid, x_grid)
    coeffs.setflags(write=False)
    return ApproxSolution(coeffs, basis, u, image)


def solve(system: GalerkinSystem, f: GridFunction, method: str = "solve") -> ApproxSolution:
    """Galerkin solution for right-hand side ``f``."""
    if method == "cramer":
        coeffs = coefficients_cramer(system, f)
    else:
        coeffs = coefficients_solve(system, f)
    images = system.images
    return build_solution(images.op, system.trial_basis, coeffs, images.grid, images.x_grid)


def residual_norm(f: GridFunction, sol: ApproxSolution) -> float:
    if not f.grid.same_as(sol.image_samples.grid):
        raise GridMismatchError("right-hand side and solution image are on different grids")
    return l2_norm(f - sol.image_samples)


def orthogonality_defect(f: GridFunction, sol: ApproxSolution, tests: FunctionalSet) -> float:
    """``max_tau |l_tau(L u_N - f)|``."""
    if len(tests) == 0:
        return 0.0
    return float(np.max(np.abs(apply_all(tests, sol.image_samples - f))))
