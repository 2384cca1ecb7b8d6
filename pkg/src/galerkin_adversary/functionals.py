"""Continuous linear functionals on Y, stored as Riesz representers.

A functional ``phi`` is kept as the grid function ``r`` with
``phi(f) = <f, r>``. Point evaluation has no such representer on L², so
collocation-style tests are approximated with a narrow normalized bump
(:func:`bump_functional`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GridMismatchError
from .function_space import (
    INDEPENDENCE_THRESHOLD,
    BasisFamily,
    FamilyKind,
    GridFunction,
    QuadratureGrid,
    gram_matrix,
    independence_score,
    inner_product,
)


@dataclass(frozen=True, eq=False)
class LinearFunctional:
    representer: GridFunction
    label: str = ""

    @property
    def grid(self) -> QuadratureGrid:
        return self.representer.grid

    def __call__(self, f: GridFunction) -> float:
        return apply(self, f)


@dataclass(frozen=True, eq=False)
class FunctionalSet:
    """An ordered family of functionals sharing one grid."""

    members: tuple[LinearFunctional, ...]
    grid: QuadratureGrid

    def __post_init__(self):
        members = tuple(self.members)
        for m in members:
            if not m.grid.same_as(self.grid):
                raise GridMismatchError(f"functional {m.label!r} is on a different grid")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_representers(
        cls,
        representers: Iterable[GridFunction],
        grid: QuadratureGrid | None = None,
        labels: Sequence[str] | None = None,
        prefix: str = "phi",
    ) -> "FunctionalSet":
        reps = list(representers)
        if grid is None:
            if not reps:
                raise ValueError("empty functional set needs an explicit grid")
            grid = reps[0].grid
        if labels is None:
            labels = [f"{prefix}_{i + 1}" for i in range(len(reps))]
        return cls(tuple(LinearFunctional(r, lab) for r, lab in zip(reps, labels)), grid)

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return FunctionalSet(self.members[index], self.grid)
        return self.members[index]

    def __iter__(self):
        return iter(self.members)

    @property
    def labels(self) -> list[str]:
        return [m.label for m in self.members]

    def representer_matrix(self) -> np.ndarray:
        """Representer samples as the columns of an ``(M, n)`` array."""
        if not self.members:
            return np.zeros((self.grid.size, 0))
        return np.column_stack([m.representer.values for m in self.members])

    def independence_score(self) -> float:
        if not self.members:
            return 1.0
        return independence_score(gram_matrix([m.representer for m in self.members]))

    @property
    def independent(self) -> bool:
        return self.independence_score() > INDEPENDENCE_THRESHOLD


def apply(phi: LinearFunctional, f: GridFunction) -> float:
    return inner_product(f, phi.representer)


def apply_all(fset: FunctionalSet, f: GridFunction) -> np.ndarray:
    if not fset.grid.same_as(f.grid):
        raise GridMismatchError("function and functionals live on different grids")
    return np.array([apply(m, f) for m in fset.members], dtype=float)


def functional_matrix(fset: FunctionalSet, fs: Sequence[GridFunction]) -> np.ndarray:
    """``M[tau, k] = fset[tau](fs[k])``."""
    out = np.empty((len(fset), len(fs)))
    for k, f in enumerate(fs):
        out[:, k] = apply_all(fset, f)
    return out


# --------------------------------------------------------------------------
# constructors


def bump_functional(
    grid: QuadratureGrid,
    centre: float,
    half_width: float | None = None,
    label: str | None = None,
) -> LinearFunctional:
    """Smooth stand-in for point evaluation at ``centre``.

    The representer is a raised-cosine bump normalized to unit integral, so
    ``phi(f)`` is a local average of ``f`` around ``centre``. The default
    half-width is two panels of a uniform 64-panel grid.
    """
    if half_width is None:
        half_width = 2.0 * grid.length / 64
    x = grid.nodes
    u = np.clip(np.abs(x - centre) / half_width, 0.0, 1.0)
    shape = 0.5 * (1.0 + np.cos(math.pi * u))
    mass = grid.integrate(shape)
    if mass <= 0:
        raise ValueError(f"bump at {centre} with half-width {half_width} misses every node")
    return LinearFunctional(GridFunction(grid, shape / mass), label or f"bump({centre:g})")


def random_functionals(
    grid: QuadratureGrid,
    count: int,
    rng: np.random.Generator,
    pool: int = 64,
    prefix: str = "random",
) -> FunctionalSet:
    """``count`` unit-norm representers with Gaussian coefficients.

    Each representer is a random combination of the first ``pool``
    trigonometric functions on the grid's interval, which keeps them smooth
    and generic with respect to any fixed finite system.
    """
    pool = max(pool, 2 * count)
    family = BasisFamily(FamilyKind.TRIGONOMETRIC, grid.lower, grid.upper)
    basis = np.column_stack([m(grid.nodes) for m in family.members(pool)])
    coeffs = rng.standard_normal((pool, count))
    reps = basis @ coeffs
    norms = np.sqrt(grid.weights @ reps**2)
    reps = reps / norms
    return FunctionalSet.from_representers(
        [GridFunction(grid, reps[:, i]) for i in range(count)], grid, prefix=prefix
    )
