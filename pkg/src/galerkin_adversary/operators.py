"""Linear operators ``L: X -> Y`` defined through their action on basis members.

Images ``L psi`` are computed analytically where possible (identity,
scaling, multiplication, exact derivatives of the built-in families) and by
quadrature on the Y grid for Fredholm kernels. An operator is therefore
linear by construction: the image of a coefficient vector is the same
combination of member images.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DomainMismatchError,
    ImagesDependentError,
    IncompatibleSpacesError,
    LengthMismatchError,
    SingularGramError,
)
from .function_space import (
    INDEPENDENCE_THRESHOLD,
    BasisFamily,
    BasisMember,
    FamilyKind,
    GridFunction,
    QuadratureGrid,
    gram_from_samples,
    independence_score,
    make_grid,
)


class OperatorKind(str, enum.Enum):
    IDENTITY = "identity"
    SCALED_IDENTITY = "scaled_identity"
    FREDHOLM = "fredholm"
    SPECTRAL_DERIVATIVE = "spectral_derivative"
    MULTIPLICATION = "multiplication"


#: weights for the multiplication operator, in the normalized coordinate
#: ``s = (x - lower) / (upper - lower)``
WEIGHTS = {
    "one": lambda s: np.ones_like(s),
    "linear": lambda s: 1.0 + s,
    "exp": np.exp,
}


def catalog_function(name: str, lower: float, upper: float):
    """Resolve ``"<family>:<k>"`` (1-based) to a normalized basis member."""
    try:
        fam_name, idx = name.split(":")
        kind = {"trig": "trigonometric"}.get(fam_name, fam_name)
        index = int(idx) - 1
        family = BasisFamily(FamilyKind(kind), lower, upper)
        if family.kind is FamilyKind.HAT or index < 0:
            raise ValueError
    except ValueError:
        raise ConfigError(f"unknown function {name!r}; expected e.g. 'trig:2' or 'legendre:1'") from None
    return family.member(index)


@dataclass(frozen=True)
class Kernel:
    """Fredholm kernel from the built-in catalog.

    ``gaussian``  ``exp(-(x - y)**2 / (2 sigma**2))``
    ``constant``  ``value``
    ``rank1``     ``phi(x) phi(y)`` with ``phi`` a catalog function name
    """

    name: str
    sigma: float = 0.5
    value: float = 1.0
    phi: str | None = None

    def __post_init__(self):
        if self.name not in ("gaussian", "constant", "rank1"):
            raise ConfigError(f"unknown kernel {self.name!r}")
        if self.name == "gaussian" and not self.sigma > 0:
            raise ConfigError("gaussian kernel needs sigma > 0")
        if self.name == "rank1" and not self.phi:
            raise ConfigError("rank1 kernel needs a phi function name")

    def matrix(self, x: np.ndarray, y: np.ndarray, lower: float, upper: float) -> np.ndarray:
        if self.name == "gaussian":
            d = x[:, None] - y[None, :]
            return np.exp(-(d * d) / (2.0 * self.sigma**2))
        if self.name == "constant":
            return np.full((x.size, y.size), float(self.value))
        phi = catalog_function(self.phi, lower, upper)
        return np.outer(phi(x), phi(y))


@dataclass(frozen=True)
class OperatorSpec:
    """An operator on ``[lower, upper]`` (optionally into a different Y interval).

    ``shift`` holds the ``lambda`` of ``A_lambda u = L u - lambda u``; it is
    zero unless the operator came out of :func:`shift_operator`.
    """

    kind: OperatorKind
    lower: float
    upper: float
    alpha: float = 1.0
    kernel: Kernel | None = None
    order: int = 1
    weight: str = "one"
    shift: float = 0.0
    codomain: tuple[float, float] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "kind", OperatorKind(self.kind))
        if not self.lower < self.upper:
            raise DomainMismatchError("operator domain needs lower < upper")
        if self.kind is OperatorKind.FREDHOLM and self.kernel is None:
            raise ConfigError("fredholm operator needs a kernel")
        if self.kind is OperatorKind.SPECTRAL_DERIVATIVE and self.order < 1:
            raise ConfigError("derivative order must be >= 1")
        if self.kind is OperatorKind.MULTIPLICATION and self.weight not in WEIGHTS:
            raise ConfigError(f"unknown weight {self.weight!r}; choose from {sorted(WEIGHTS)}")
        if self.codomain is not None:
            cod = (float(self.codomain[0]), float(self.codomain[1]))
            if cod == (self.lower, self.upper):
                cod = None
            elif self.kind is not OperatorKind.FREDHOLM:
                raise IncompatibleSpacesError("only fredholm operators may map into another interval")
            object.__setattr__(self, "codomain", cod)

    @property
    def domain(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    @property
    def y_domain(self) -> tuple[float, float]:
        return self.codomain or self.domain

    @property
    def label(self) -> str:
        base = {
            OperatorKind.IDENTITY: "identity",
            OperatorKind.SCALED_IDENTITY: f"scaled_identity({self.alpha:g})",
            OperatorKind.FREDHOLM: f"fredholm({self.kernel.name if self.kernel else '?'})",
            OperatorKind.SPECTRAL_DERIVATIVE: f"spectral_derivative({self.order})",
            OperatorKind.MULTIPLICATION: f"multiplication({self.weight})",
        }[self.kind]
        return base if self.shift == 0 else f"{base} - {self.shift:g}*I"

    def x_grid_for(self, grid: QuadratureGrid) -> QuadratureGrid:
        """Grid on the X interval used to integrate Fredholm kernels."""
        if self.codomain is None:
            return grid
        panels = max(1, grid.size // 8)
        return make_grid(self.lower, self.upper, panels, 8)

    def image_matrix(
        self,
        basis: Sequence[BasisMember],
        grid: QuadratureGrid,
        x_grid: QuadratureGrid | None = None,
    ) -> np.ndarray:
        """Samples of ``L psi_k`` on ``grid`` as the columns of an ``(M, T)`` array."""
        if (grid.lower, grid.upper) != self.y_domain:
            raise DomainMismatchError(f"grid is not on the operator's Y interval {self.y_domain}")
        for member in basis:
            fam = member.family
            if (fam.lower, fam.upper) != self.domain:
                raise DomainMismatchError(f"basis member {member.label} is not on {self.domain}")
        if not basis:
            return np.zeros((grid.size, 0))
        x = grid.nodes
        kind = self.kind
        if kind is OperatorKind.FREDHOLM:
            xg = x_grid or self.x_grid_for(grid)
            kmat = self.kernel.matrix(x, xg.nodes, self.lower, self.upper)
            psi = np.column_stack([m(xg.nodes) for m in basis])
            out = kmat @ (xg.weights[:, None] * psi)
        elif kind is OperatorKind.SPECTRAL_DERIVATIVE:
            out = np.column_stack([m.derivative(x, self.order) for m in basis])
        else:
            out = np.column_stack([m(x) for m in basis])
            if kind is OperatorKind.SCALED_IDENTITY:
                out = self.alpha * out
            elif kind is OperatorKind.MULTIPLICATION:
                s = (x - self.lower) / (self.upper - self.lower)
                out = WEIGHTS[self.weight](s)[:, None] * out
        if self.shift != 0:
            out = out - self.shift * np.column_stack([m(x) for m in basis])
        return out


def identity(lower: float, upper: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.IDENTITY, lower, upper)


def scaled_identity(alpha: float, lower: float, upper: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.SCALED_IDENTITY, lower, upper, alpha=alpha)


def fredholm(kernel: Kernel, lower: float, upper: float, codomain=None) -> OperatorSpec:
    return OperatorSpec(OperatorKind.FREDHOLM, lower, upper, kernel=kernel, codomain=codomain)


def spectral_derivative(order: int, lower: float, upper: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.SPECTRAL_DERIVATIVE, lower, upper, order=order)


def multiplication(weight: str, lower: float, upper: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.MULTIPLICATION, lower, upper, weight=weight)


@dataclass(frozen=True, eq=False)
class OperatorImages:
    """Trial functions ``psi_k`` together with their images ``g_k = L psi_k``.

    ``grid`` is the Y grid holding the images; ``x_grid`` holds the trial
    samples and defines the X inner product (the same grid when X = Y).
    """

    op: OperatorSpec
    psi: tuple[BasisMember, ...]
    g: tuple[GridFunction, ...]
    gram_g: np.ndarray
    independence_score_g: float
    grid: QuadratureGrid
    x_grid: QuadratureGrid
    psi_samples: tuple[GridFunction, ...]
    gram_psi: np.ndarray
    independence_score_psi: float

    def __len__(self) -> int:
        return len(self.psi)

    @property
    def independent(self) -> bool:
        return (
            self.independence_score_g > INDEPENDENCE_THRESHOLD
            and self.independence_score_psi > INDEPENDENCE_THRESHOLD
        )

    def image_samples(self) -> np.ndarray:
        return np.column_stack([g.values for g in self.g])

    def head(self, n: int) -> "OperatorImages":
        """The first ``n`` trial functions and images."""
        return images_from_samples(self.op, self.psi[:n], self.grid, self.x_grid, self.image_samples()[:, :n])


def images_from_samples(op, basis, grid, x_grid, images: np.ndarray) -> OperatorImages:
    basis = tuple(basis)
    g = tuple(GridFunction(grid, images[:, k]) for k in range(len(basis)))
    gram_g = gram_from_samples(images, grid.weights)
    psi_mat = np.column_stack([m(x_grid.nodes) for m in basis])
    psi_samples = tuple(GridFunction(x_grid, psi_mat[:, k]) for k in range(len(basis)))
    gram_psi = gram_from_samples(psi_mat, x_grid.weights)
    return OperatorImages(
        op=op,
        psi=basis,
        g=g,
        gram_g=gram_g,
        independence_score_g=independence_score(gram_g),
        grid=grid,
        x_grid=x_grid,
        psi_samples=psi_samples,
        gram_psi=gram_psi,
        independence_score_psi=independence_score(gram_psi),
    )


def apply_operator(
    op: OperatorSpec,
    psi_coeffs,
    basis: Sequence[BasisMember],
    grid: QuadratureGrid,
    x_grid: QuadratureGrid | None = None,
) -> GridFunction:
    """``sum_k psi_coeffs[k] * L(basis[k])`` sampled on ``grid``."""
    coeffs = np.asarray(psi_coeffs, dtype=float)
    if coeffs.shape != (len(basis),):
        raise LengthMismatchError(f"{coeffs.size} coefficients for {len(basis)} basis members")
    if not basis:
        return grid.zeros()
    return GridFunction(grid, op.image_matrix(basis, grid, x_grid) @ coeffs)


def compute_images(
    op: OperatorSpec,
    basis: Sequence[BasisMember],
    grid: QuadratureGrid,
    x_grid: QuadratureGrid | None = None,
    strict: bool = True,
) -> OperatorImages:
    """Images ``g_k = L psi_k`` with Gram data.

    With ``strict`` (the default) a dependent image system raises
    :class:`ImagesDependentError`; otherwise it is returned and
    ``images.independent`` is false.
    """
    if not basis:
        raise ValueError("basis must be nonempty")
    if x_grid is None:
        x_grid = op.x_grid_for(grid)
    images = images_from_samples(op, basis, grid, x_grid, op.image_matrix(basis, grid, x_grid))
    if strict and images.independence_score_g <= INDEPENDENCE_THRESHOLD:
        raise ImagesDependentError(
            f"images of {len(basis)} trial functions under {op.label} are dependent "
            f"(score {images.independence_score_g:.3g})",
            score=images.independence_score_g,
        )
    return images


def operator_norm_estimate(images: OperatorImages, gram_psi: np.ndarray | None = None) -> float:
    """Norm of ``L`` restricted to ``span{psi_1..psi_T}``.

    This is the largest generalized singular value ``sqrt(lambda_max)`` of
    the pencil ``(gram_g, gram_psi)``. It bounds ``||L||`` from below and is
    exact when the span is invariant under ``L``.
    """
    if gram_psi is None:
        gram_psi = images.gram_psi
    gram_psi = np.asarray(gram_psi, dtype=float)
    if independence_score(gram_psi) <= INDEPENDENCE_THRESHOLD:
        raise SingularGramError("trial Gram matrix is singular")
    try:
        chol = np.linalg.cholesky(gram_psi)
    except np.linalg.LinAlgError as exc:
        raise SingularGramError("trial Gram matrix is not positive definite") from exc
    inv = np.linalg.inv(chol)
    reduced = inv @ images.gram_g @ inv.T
    top = np.linalg.eigvalsh(0.5 * (reduced + reduced.T))[-1]
    return math.sqrt(max(top, 0.0))


def shift_operator(op: OperatorSpec, lam: float) -> OperatorSpec:
    """``A_lambda = L - lambda I``; requires X = Y on the same interval."""
    if op.codomain is not None:
        raise IncompatibleSpacesError(
            f"{op.label} maps {op.domain} into {op.codomain}; L - lambda*I needs X = Y"
        )
    if not math.isfinite(lam):
        raise ValueError("shift must be finite")
    return replace(op, shift=op.shift + float(lam))
