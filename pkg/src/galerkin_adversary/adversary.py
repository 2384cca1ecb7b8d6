"""Adversarial right-hand sides for linear Galerkin-type methods.

For a method given by trial functions ``psi_1..psi_N``, test functionals
``l_1..l_N`` and coefficient functionals ``c_1..c_N`` (arbitrary, or the
Galerkin ones), extend the trial system to ``T`` functions whose images
``g_j = L psi_j`` stay independent and pick

    f = sum_j v_j g_j,   ||f|| = 1,   c_k(f) = l_tau(f) = 0 for all k, tau.

Then ``u_N(f) = 0``, so ``l_tau(L u_N(f)) = l_tau(f)`` holds while the
residual ``||f - L u_N(f)||`` equals ``||f|| = 1``. A nonzero ``v`` exists
as soon as ``T > 2N``, since the ``2N`` constraints cut at most ``2N``
dimensions out of a ``T``-dimensional span.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import errors
from .errors import (
    CannotExtendError,
    ImagesDependentError,
    IncompatibleSpacesError,
    InvalidCountError,
    NoFeasibleDirectionError,
    NoWitnessError,
    SingularSystemError,
)
from .function_space import (
    INDEPENDENCE_THRESHOLD,
    BasisFamily,
    GridFunction,
    QuadratureGrid,
    gram_from_samples,
    independence_score,
    l2_norm,
)
from .functionals import FunctionalSet, apply_all, functional_matrix
from .galerkin import (
    GalerkinSystem,
    assemble,
    coefficient_functionals,
    coefficients_solve,
)
from .operators import OperatorImages, OperatorSpec, images_from_samples, apply_operator, operator_norm_estimate

#: singular values below this fraction of the largest count as zero
RANK_TOLERANCE = 1e-10

FunctionalSpec = Union[FunctionalSet, Callable[[OperatorImages], FunctionalSet]]


@dataclass(frozen=True)
class Tolerances:
    norm_tol: float = 1e-9
    orth_tol: float = 1e-8
    residual_tol: float = 1e-8
    kernel_tol: float = 1e-9
    sample_tol: float = 1e-10


# --------------------------------------------------------------------------
# functional schemes


def image_tests(n: int, offset: int = 0) -> Callable[[OperatorImages], FunctionalSet]:
    """``l_tau = <., g_{offset + tau}>``; ``offset = 0`` is the Bubnov choice."""

    def build(images: OperatorImages) -> FunctionalSet:
        if offset + n > len(images):
            raise InvalidCountError(f"need {offset + n} images for these tests, have {len(images)}")
        return FunctionalSet.from_representers(
            images.g[offset : offset + n],
            images.grid,
            labels=[f"l_{t + 1}=<.,g_{offset + t + 1}>" for t in range(n)],
        )

    return build


def trial_tests(n: int) -> Callable[[OperatorImages], FunctionalSet]:
    """``l_tau = <., psi_tau>`` (classical Ritz-Galerkin); needs X = Y."""

    def build(images: OperatorImages) -> FunctionalSet:
        if not images.x_grid.same_as(images.grid):
            raise IncompatibleSpacesError("trial-function tests need X = Y on one grid")
        return FunctionalSet.from_representers(
            images.psi_samples[:n],
            images.grid,
            labels=[f"l_{t + 1}=<.,psi_{t + 1}>" for t in range(n)],
        )

    return build


@dataclass(frozen=True, eq=False)
class ResolvedMethod:
    tests: FunctionalSet
    coeffs: FunctionalSet
    system: GalerkinSystem
    coupled: bool


@dataclass(frozen=True, eq=False)
class MethodConfig:
    """A linear Galerkin-type method together with the ``T`` to extend to.

    ``tests`` and ``coeff_functionals`` are either fixed functional sets or
    callables that build them from the operator images (Bubnov tests need
    the images). ``coeff_functionals=None`` selects the Galerkin-coupled
    coefficients obtained from the test system by Cramer's rule.

    ``relaxed`` lifts the ``n >= 2`` requirement; it exists for small
    hand-checkable cases only.
    """

    n: int
    op: OperatorSpec
    trial_family: BasisFamily
    grid: QuadratureGrid
    tests: FunctionalSpec
    coeff_functionals: FunctionalSpec | None = None
    t: int | None = None
    relaxed: bool = False
    label: str = ""

    def __post_init__(self):
        if self.n < (1 if self.relaxed else 2):
            raise InvalidCountError(f"N must be >= 2, got {self.n}")
        if self.t is None:
            object.__setattr__(self, "t", 5 * self.n)
        if self.t < self.n:
            raise InvalidCountError(f"T = {self.t} is smaller than N = {self.n}")

    @property
    def coupled(self) -> bool:
        return self.coeff_functionals is None

    def galerkin_system(self, images: OperatorImages) -> GalerkinSystem:
        """The ``N x N`` system ``l_tau(g_k)``; never raises on singularity."""
        tests = self.tests(images) if callable(self.tests) else self.tests
        return assemble(images, tests[: self.n], self.n)

    def resolve(self, images: OperatorImages) -> ResolvedMethod:
        system = self.galerkin_system(images)
        tests = system.tests
        if self.coeff_functionals is None:
            coeffs = coefficient_functionals(system)
        elif callable(self.coeff_functionals):
            coeffs = self.coeff_functionals(images)[: self.n]
        else:
            coeffs = self.coeff_functionals[: self.n]
        if len(tests) != self.n or len(coeffs) != self.n:
            raise InvalidCountError(
                f"need {self.n} tests and coefficient functionals, got {len(tests)} and {len(coeffs)}"
            )
        return ResolvedMethod(tests, coeffs, system, self.coupled)


# --------------------------------------------------------------------------
# trial system extension


def extend_trial_system(config: MethodConfig) -> OperatorImages:
    """Trial functions ``psi_1..psi_T`` with independent images.

    Members are taken from the family in index order. A member whose image
    is (numerically) zero, or whose trial function or image would break the
    independence threshold, is skipped in favour of the next one. Nested
    families are searched up to ``2T`` members; the hat family only has the
    ``T`` members of its mesh.
    """
    T = config.t
    family = config.trial_family
    grid = config.grid
    op = config.op
    x_grid = op.x_grid_for(grid)
    pool = family.members(max(2 * T, T + 16) if family.nested else T)

    images = op.image_matrix(pool, grid, x_grid)
    psi = np.column_stack([m(x_grid.nodes) for m in pool])
    gram_g = gram_from_samples(images, grid.weights)
    gram_p = gram_from_samples(psi, x_grid.weights)
    norms = np.sqrt(np.clip(np.diag(gram_g), 0.0, None))
    scale = norms.max() if norms.size else 0.0

    accepted: list[int] = []
    for j in range(len(pool)):
        if len(accepted) == T:
            break
        if norms[j] <= 1e-10 * scale or scale == 0.0:
            continue
        idx = accepted + [j]
        sub = np.ix_(idx, idx)
        if (
            independence_score(gram_g[sub]) > INDEPENDENCE_THRESHOLD
            and independence_score(gram_p[sub]) > INDEPENDENCE_THRESHOLD
        ):
            accepted.append(j)

    if len(accepted) < T:
        raise CannotExtendError(
            f"{op.label} on the {family.kind.value} family reaches only {len(accepted)} "
            f"independent images; {T} requested",
            achieved_rank=len(accepted),
            requested=T,
        )
    return images_from_samples(op, [pool[j] for j in accepted], grid, x_grid, images[:, accepted])


# --------------------------------------------------------------------------
# witness


@dataclass(frozen=True, eq=False)
class AdversaryWitness:
    """A unit-norm ``f_N = sum v_j g_j`` and its certificate numbers."""

    span_coeffs: np.ndarray
    f_samples: GridFunction
    norm: float
    orthogonality_defect: float
    residual: float
    coeff_values: np.ndarray
    epsilon_floor: float
    null_dimension: int = 0

    def certifies(self, tol: Tolerances = Tolerances()) -> bool:
        return (
            abs(self.norm - 1.0) <= tol.norm_tol
            and self.orthogonality_defect <= tol.orth_tol
            and abs(self.residual - 1.0) <= tol.residual_tol
        )


def constraint_matrix(resolved: ResolvedMethod, images: OperatorImages) -> np.ndarray:
    """Rows ``c_k(g_j)`` (k = 1..N) followed by ``l_tau(g_j)`` (tau = 1..N)."""
    return np.vstack(
        [functional_matrix(resolved.coeffs, images.g), functional_matrix(resolved.tests, images.g)]
    )


def _null_space(matrix: np.ndarray, ncols: int) -> tuple[np.ndarray, int]:
    """Orthonormal null-space basis (columns) and the numerical rank."""
    if matrix.shape[0] == 0:
        return np.eye(ncols), 0
    _, s, vt = np.linalg.svd(matrix, full_matrices=True)
    rank = int(np.sum(s > RANK_TOLERANCE * s[0])) if s.size and s[0] > 0 else 0
    return vt[rank:].T, rank


def construct_witness(
    config: MethodConfig,
    images: OperatorImages,
    resolved: ResolvedMethod | None = None,
) -> AdversaryWitness:
    """Unit-norm ``f_N`` in the joint kernel of every ``c_k`` and ``l_tau``.

    The null-space basis comes from the SVD of the constraint matrix; the
    last basis vector is used, with its sign fixed so that the entry of
    largest magnitude is positive.
    """
    if not images.independent:
        raise ImagesDependentError(
            f"images are dependent (score {images.independence_score_g:.3g})",
            score=images.independence_score_g,
        )
    resolved = resolved or config.resolve(images)
    T = len(images)
    rows = constraint_matrix(resolved, images)
    null, rank = _null_space(rows, T)
    if null.shape[1] == 0:
        raise NoWitnessError(
            f"constraints have full rank {rank} on a {T}-dimensional span; no witness (need T > {rank})"
        )
    v = null[:, -1].copy()
    if v[np.argmax(np.abs(v))] < 0:
        v = -v

    g = images.image_samples()
    f = GridFunction(images.grid, g @ v)
    v = v / l2_norm(f)
    f = GridFunction(images.grid, g @ v)

    n = config.n
    coeff_values = apply_all(resolved.coeffs, f)
    image_un = GridFunction(images.grid, g[:, :n] @ coeff_values)
    defect = float(np.max(np.abs(apply_all(resolved.tests, image_un) - apply_all(resolved.tests, f))))
    residual = l2_norm(f - image_un)
    v.setflags(write=False)
    coeff_values.setflags(write=False)
    return AdversaryWitness(
        span_coeffs=v,
        f_samples=f,
        norm=l2_norm(f),
        orthogonality_defect=defect,
        residual=residual,
        coeff_values=coeff_values,
        epsilon_floor=residual,
        null_dimension=null.shape[1],
    )


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float
    passed: bool


@dataclass(frozen=True)
class CertificateReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


def verify_witness(
    witness: AdversaryWitness,
    config: MethodConfig,
    images: OperatorImages,
    tol: Tolerances = Tolerances(),
) -> CertificateReport:
    """Recheck a witness without reusing anything computed during construction.

    The span coefficients are pushed through the operator again and compared
    with the stored samples; ``u_N(f)`` comes from the Galerkin solve when
    the coefficients are coupled, from the coefficient functionals
    otherwise. Failures are reported, never raised.
    """
    grid = images.grid
    f = witness.f_samples
    resolved = config.resolve(images)
    n = config.n

    rebuilt = apply_operator(config.op, witness.span_coeffs, images.psi, grid, images.x_grid)
    sample_gap = l2_norm(rebuilt - f)

    if resolved.coupled and resolved.system.correct:
        coeffs = coefficients_solve(resolved.system, f)
    else:
        coeffs = apply_all(resolved.coeffs, f)
    image_un = apply_operator(config.op, coeffs, images.psi[:n], grid, images.x_grid)

    norm = l2_norm(f)
    orth = float(np.max(np.abs(apply_all(resolved.tests, image_un - f))))
    residual = l2_norm(f - image_un)
    kernel = float(np.max(np.abs(coeffs)))
    return CertificateReport(
        (
            Check("norm", norm, tol.norm_tol, abs(norm - 1.0) <= tol.norm_tol),
            Check("orthogonality", orth, tol.orth_tol, orth <= tol.orth_tol),
            Check("residual", residual, tol.residual_tol, abs(residual - 1.0) <= tol.residual_tol),
            Check("coefficient_kernel", kernel, tol.kernel_tol, kernel <= tol.kernel_tol),
            Check("samples", sample_gap, tol.sample_tol, sample_gap <= tol.sample_tol),
        )
    )


# --------------------------------------------------------------------------
# worst case over the unit sphere of span{g}


@dataclass(frozen=True, eq=False)
class WorstCaseReport:
    sup_residual: float
    maximizer_coeffs: np.ndarray
    constraint_defect: float
    feasible_dimension: int


def worst_case_residual(
    config: MethodConfig,
    images: OperatorImages,
    resolved: ResolvedMethod | None = None,
) -> WorstCaseReport:
    """``sup ||f - sum_k c_k(f) g_k||`` over unit ``f`` in ``span{g}`` meeting the test equations.

    Works in orthonormal coordinates of the span: the constraints
    ``l_tau(L u_N(f) - f) = 0`` cut out a subspace, and the supremum is the
    largest singular value of the residual map restricted to it.
    """
    if not images.independent:
        raise ImagesDependentError("images are dependent", score=images.independence_score_g)
    resolved = resolved or config.resolve(images)
    grid = images.grid
    n = config.n
    sw = np.sqrt(grid.weights)

    g = images.image_samples()
    u, s, vt = np.linalg.svd(g * sw[:, None], full_matrices=False)
    q = u  # weighted coordinates: f_w = q @ y, ||f|| = |y|

    rho = resolved.coeffs.representer_matrix() * sw[:, None]
    tests = resolved.tests.representer_matrix() * sw[:, None]
    gn = g[:, :n] * sw[:, None]
    # residual map f -> f - sum_k c_k(f) g_k in weighted coordinates
    resid = q - gn @ (rho.T @ q)
    cons = -(tests.T @ resid)
    # scale rows by the functional norms so the rank test is dimensionless
    row_scale = np.linalg.norm(tests, axis=0)
    row_scale[row_scale == 0] = 1.0
    cons_n = cons / row_scale[:, None]
    _, cs, cvt = np.linalg.svd(cons_n, full_matrices=True)
    floor = RANK_TOLERANCE * max(1.0, cs[0] if cs.size else 0.0)
    rank = int(np.sum(cs > floor))
    z = cvt[rank:].T
    if z.shape[1] == 0:
        raise NoFeasibleDirectionError("the test equations leave no feasible direction in span{g}")

    ru, rs, rvt = np.linalg.svd(resid @ z, full_matrices=False)
    y = z @ rvt[0]
    if y[np.argmax(np.abs(y))] < 0:
        y = -y
    coeffs = vt.T @ (y / s)
    f = GridFunction(grid, g @ coeffs)
    image_un = GridFunction(grid, g[:, :n] @ apply_all(resolved.coeffs, f))
    defect = float(np.max(np.abs(apply_all(resolved.tests, image_un - f))))
    coeffs.setflags(write=False)
    return WorstCaseReport(float(rs[0]), coeffs, defect, z.shape[1])


# --------------------------------------------------------------------------
# solution error


@dataclass(frozen=True)
class ErrorBound:
    error: float
    operator_norm: float
    bound: float
    holds: bool


def solution_error_bound(
    config: MethodConfig,
    images: OperatorImages,
    witness: AdversaryWitness,
    slack: float = 1e-8,
) -> ErrorBound:
    """``||u_N(f_N) - u*||_X`` against the lower bound ``1 / ||L||``.

    ``u* = sum v_j psi_j`` solves ``L u = f_N`` exactly because
    ``f_N = sum v_j g_j``. The operator norm is the restricted estimate of
    :func:`operator_norm_estimate`.
    """
    resolved = config.resolve(images)
    n = config.n
    op_norm = operator_norm_estimate(images)
    coeffs = apply_all(resolved.coeffs, witness.f_samples)
    psi = np.column_stack([p.values for p in images.psi_samples])
    u_n = psi[:, :n] @ coeffs
    u_star = psi @ witness.span_coeffs
    error = l2_norm(GridFunction(images.x_grid, u_n - u_star))
    bound = 1.0 / op_norm if op_norm > 0 else math.inf
    return ErrorBound(error, op_norm, bound, error >= bound - slack)


# --------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True, eq=False)
class SweepEntry:
    config: MethodConfig
    witness: AdversaryWitness | None = None
    worst: WorstCaseReport | None = None
    system: GalerkinSystem | None = None
    certificate: CertificateReport | None = None
    error: str | None = None
    message: str = ""
    wall_ms: float = 0.0

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def t(self) -> int:
        return self.config.t

    @property
    def summary(self) -> dict:
        return {"label": self.config.label, "n": self.n, "t": self.t, "operator": self.config.op.label}


def run_config(config: MethodConfig, tol: Tolerances = Tolerances()) -> SweepEntry:
    """Extend, construct, verify and bound one configuration.

    Errors are captured in the entry rather than raised.
    """
    start = time.perf_counter()
    system = None
    try:
        images = extend_trial_system(config)
        system = config.galerkin_system(images)
        resolved = config.resolve(images)
        if resolved.coupled and not system.correct:
            raise SingularSystemError(f"Galerkin matrix is degenerate (det = {system.det:.3g})")
        witness = construct_witness(config, images, resolved)
        worst = worst_case_residual(config, images, resolved)
        cert = verify_witness(witness, config, images, tol)
    except errors.GalerkinError as exc:
        return SweepEntry(
            config,
            system=system,
            error=errors.error_code(exc),
            message=str(exc),
            wall_ms=1e3 * (time.perf_counter() - start),
        )
    return SweepEntry(
        config,
        witness=witness,
        worst=worst,
        system=system,
        certificate=cert,
        wall_ms=1e3 * (time.perf_counter() - start),
    )


def default_workers() -> int:
    env = os.environ.get("GALERKIN_ADVERSARY_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def sweep(
    configs: Sequence[MethodConfig],
    tol: Tolerances = Tolerances(),
    max_workers: int | None = None,
) -> list[SweepEntry]:
    """Run every configuration; results come back in input order.

    An error in one entry does not stop the others. ``min_residual`` on the
    result tells whether a uniform floor ``epsilon_0`` held across the sweep.
    """
    configs = list(configs)
    if not configs:
        return []
    workers = min(max_workers or default_workers(), len(configs))
    if workers <= 1:
        return [run_config(c, tol) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_config(c, tol), configs))


def min_residual(entries: Sequence[SweepEntry]) -> float:
    """Smallest certified residual over the successful entries."""
    values = [e.witness.residual for e in entries if e.witness is not None]
    return min(values) if values else math.inf
