"""Discretized L² on a bounded interval.

Everything downstream measures functions through one object, the
:class:`QuadratureGrid`: a composite Gauss-Legendre rule whose nodes and
weights define the inner product

    <f, g> = sum_i w_i f(x_i) g(x_i).

Functions are stored as samples on such a grid (:class:`GridFunction`).
Basis families are analytic objects that can be sampled on any grid and,
where the family allows it, differentiated exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import (
    DomainMismatchError,
    GridMismatchError,
    IndependenceLossError,
    InvalidCountError,
    InvalidRangeError,
)

#: smallest eigenvalue of the diagonally normalized Gram matrix that still
#: counts as linearly independent
INDEPENDENCE_THRESHOLD = 1e-8

DEFAULT_PANELS = 64
DEFAULT_NODES_PER_PANEL = 8


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes and positive weights discretizing ``[lower, upper]``."""

    lower: float
    upper: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes, weights = _frozen(self.nodes), _frozen(self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if not self.lower < self.upper:
            raise InvalidRangeError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size == 0:
            raise InvalidCountError("nodes and weights must be equal-length 1-d arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] < self.lower or nodes[-1] > self.upper:
            raise ValueError("grid nodes must lie inside [lower, upper]")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        length = self.upper - self.lower
        if abs(weights.sum() - length) > 1e-12 * length:
            raise ValueError("quadrature weights must sum to the interval length")

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def same_as(self, other: "QuadratureGrid") -> bool:
        return self is other or (
            self.lower == other.lower
            and self.upper == other.upper
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def function(self, values) -> "GridFunction":
        return GridFunction(self, values)

    def evaluate(self, func) -> "GridFunction":
        """Sample a vectorized callable at the nodes."""
        return GridFunction(self, func(self.nodes))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))


def make_grid(
    lower: float,
    upper: float,
    panels: int = DEFAULT_PANELS,
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL,
) -> QuadratureGrid:
    """Composite Gauss-Legendre grid on ``[lower, upper]``.

    Each of the ``panels`` equal subintervals carries an
    ``nodes_per_panel``-point Gauss rule, so polynomials of degree up to
    ``2 * nodes_per_panel - 1`` are integrated exactly on every panel.

    >>> g = make_grid(0.0, 1.0, 1, 2)
    >>> g.size, round(g.integrate(g.nodes ** 2), 15)
    (2, 0.333333333333333)
    """
    lower, upper = float(lower), float(upper)
    if not lower < upper:
        raise InvalidRangeError(f"need lower < upper, got [{lower}, {upper}]")
    if int(panels) != panels or panels < 1:
        raise InvalidCountError(f"panels must be a positive integer, got {panels}")
    if int(nodes_per_panel) != nodes_per_panel or not 2 <= nodes_per_panel <= 16:
        raise InvalidCountError(f"nodes_per_panel must be in [2, 16], got {nodes_per_panel}")
    ref_x, ref_w = npleg.leggauss(int(nodes_per_panel))
    edges = np.linspace(lower, upper, int(panels) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    # rescale so the weights sum to the length to the last bit the invariant needs
    weights *= (upper - lower) / weights.sum()
    return QuadratureGrid(lower, upper, nodes, weights)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """An element of Y stored as its values at the grid nodes."""

    grid: QuadratureGrid
    values: np.ndarray

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", values)

    def _other(self, other: "GridFunction") -> np.ndarray:
        _check_grids(self.grid, other.grid)
        return other.values

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __mul__(self, alpha):
        return GridFunction(self.grid, float(alpha) * self.values)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return GridFunction(self.grid, self.values / float(alpha))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self):
        return self.values.size


def _check_grids(a: QuadratureGrid, b: QuadratureGrid) -> None:
    if not a.same_as(b):
        raise GridMismatchError("grid functions live on different grids")


def inner_product(f: GridFunction, g: GridFunction) -> float:
    _check_grids(f.grid, g.grid)
    # f*g is commutative bit for bit, so the result is exactly symmetric
    return float(np.dot(f.grid.weights, f.values * g.values))


def l2_norm(f: GridFunction) -> float:
    # scale by max |f| so tiny or huge values neither underflow nor overflow
    scale = float(np.max(np.abs(f.values))) if f.values.size else 0.0
    if scale == 0.0:
        return 0.0
    v = f.values / scale
    return scale * math.sqrt(float(np.dot(f.grid.weights, v * v)))


def sample_matrix(fs: Sequence[GridFunction]) -> np.ndarray:
    """Stack samples column-wise into an ``(M, len(fs))`` array."""
    if not fs:
        raise ValueError("need at least one grid function")
    grid = fs[0].grid
    for f in fs[1:]:
        _check_grids(grid, f.grid)
    return np.column_stack([f.values for f in fs])


def gram_from_samples(samples: np.ndarray, weights: np.ndarray) -> np.ndarray:
    scaled = samples * np.sqrt(weights)[:, None]
    gram = scaled.T @ scaled
    return 0.5 * (gram + gram.T)


def gram_matrix(fs: Sequence[GridFunction]) -> np.ndarray:
    """Matrix of pairwise inner products ``G[i, j] = <fs[i], fs[j]>``."""
    samples = sample_matrix(fs)
    return gram_from_samples(samples, fs[0].grid.weights)


def independence_score(gram: np.ndarray) -> float:
    """Smallest eigenvalue of the diagonally normalized Gram matrix.

    The score lies in ``[0, 1]``: 1 for an orthogonal set, 0 when the set is
    linearly dependent or contains a (numerically) zero function.
    """
    gram = np.asarray(gram, dtype=float)
    diag = np.diag(gram)
    if gram.size == 0:
        return 1.0
    top = diag.max()
    if top <= 0 or np.any(diag <= 1e-28 * top):
        return 0.0
    d = 1.0 / np.sqrt(diag)
    normalized = gram * d[:, None] * d[None, :]
    return float(max(np.linalg.eigvalsh(normalized)[0], 0.0))


def is_independent(fs: Sequence[GridFunction], threshold: float = INDEPENDENCE_THRESHOLD) -> bool:
    return independence_score(gram_matrix(fs)) > threshold


# --------------------------------------------------------------------------
# basis families


class FamilyKind(str, enum.Enum):
    TRIGONOMETRIC = "trigonometric"
    LEGENDRE = "legendre"
    HAT = "hat"
    MONOMIAL = "monomial"


@dataclass(frozen=True)
class BasisFamily:
    """A named sequence of functions on ``[lower, upper]``.

    ``trigonometric``
        ``1/sqrt(L)``, then ``sqrt(2/L) sin(k t)``, ``sqrt(2/L) cos(k t)`` for
        ``k = 1, 2, ...`` with ``t = 2 pi (x - lower) / L``. Orthonormal.
    ``legendre``
        ``sqrt((2j + 1) / L) P_j`` mapped to the interval. Orthonormal.
    ``monomial``
        ``s**j`` with ``s = (x - lower) / L``. Independent in exact
        arithmetic, but the Gram matrix degrades like a Hilbert matrix.
    ``hat``
        Piecewise-linear FEM hats on ``count + 1`` uniform intervals, one
        per interior knot. The family depends on ``count``, so it is not
        nested: ``members(5)[:3] != members(3)``.
    """

    kind: FamilyKind
    lower: float
    upper: float

    def __post_init__(self):
        object.__setattr__(self, "kind", FamilyKind(self.kind))
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not self.lower < self.upper:
            raise InvalidRangeError(f"need lower < upper, got [{self.lower}, {self.upper}]")

    @property
    def nested(self) -> bool:
        return self.kind is not FamilyKind.HAT

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def members(self, count: int) -> list["BasisMember"]:
        if count < 1:
            raise InvalidCountError(f"count must be >= 1, got {count}")
        return [BasisMember(self, i, count) for i in range(count)]

    def member(self, index: int, count: int | None = None) -> "BasisMember":
        if index < 0:
            raise InvalidCountError("member index must be nonnegative")
        if count is None:
            if not self.nested:
                raise InvalidCountError("hat members need the family size")
            count = index + 1
        return BasisMember(self, index, count)


@dataclass(frozen=True)
class BasisMember:
    """Member ``index`` (0-based) of a family drawn at size ``count``."""

    family: BasisFamily
    index: int
    count: int

    @property
    def label(self) -> str:
        if self.family.kind is FamilyKind.HAT:
            return f"hat[{self.index + 1}/{self.count}]"
        return f"{self.family.kind.value}[{self.index + 1}]"

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, 0)

    def derivative(self, x, order: int = 1) -> np.ndarray:
        """Exact derivative of the given order at the points ``x``."""
        x = np.asarray(x, dtype=float)
        fam = self.family
        L = fam.length
        s = (x - fam.lower) / L
        kind, j = fam.kind, self.index

        if kind is FamilyKind.TRIGONOMETRIC:
            if j == 0:
                return np.full_like(x, 1.0 / math.sqrt(L)) if order == 0 else np.zeros_like(x)
            k = (j + 1) // 2
            omega = 2.0 * math.pi * k / L
            # sin: phase 0, cos: phase pi/2; d^n/dx^n shifts the phase by n*pi/2
            phase = 0.0 if j % 2 == 1 else 0.5 * math.pi
            return math.sqrt(2.0 / L) * omega**order * np.sin(omega * (x - fam.lower) + phase + 0.5 * math.pi * order)

        if kind is FamilyKind.LEGENDRE:
            coef = np.zeros(j + 1)
            coef[j] = math.sqrt((2 * j + 1) / L)
            if order:
                coef = npleg.legder(coef, order) * (2.0 / L) ** order
            return npleg.legval(2.0 * s - 1.0, coef)

        if kind is FamilyKind.MONOMIAL:
            if order > j:
                return np.zeros_like(x)
            factor = math.perm(j, order) / L**order
            return factor * s ** (j - order)

        # hat: knot spacing h, centre at knot index + 1
        h = L / (self.count + 1)
        centre = fam.lower + (j + 1) * h
        left, right = max(centre - h, fam.lower), min(centre + h, fam.upper)
        inside = (x >= left) & (x <= right)
        if order == 0:
            return np.where(inside, np.clip(1.0 - np.abs(x - centre) / h, 0.0, None), 0.0)
        if order == 1:
            rising = (x >= left) & (x < centre)
            falling = (x >= centre) & (x < right)
            return np.where(rising, 1.0 / h, 0.0) - np.where(falling, 1.0 / h, 0.0)
        raise DomainMismatchError("hat functions have no pointwise derivative beyond order 1")

    def sample(self, grid: QuadratureGrid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes))


def _check_domain(family: BasisFamily, grid: QuadratureGrid) -> None:
    if family.lower != grid.lower or family.upper != grid.upper:
        raise DomainMismatchError(
            f"family on [{family.lower}, {family.upper}] but grid on [{grid.lower}, {grid.upper}]"
        )


def sample_family(
    family: BasisFamily,
    count: int,
    grid: QuadratureGrid,
    threshold: float = INDEPENDENCE_THRESHOLD,
) -> list[GridFunction]:
    """Sample the first ``count`` members and check they stay independent.

    Raises :class:`IndependenceLossError` when the grid is too coarse to
    separate the members; refining the grid is the usual remedy.
    """
    _check_domain(family, grid)
    fs = [m.sample(grid) for m in family.members(count)]
    score = independence_score(gram_matrix(fs))
    if score <= threshold:
        raise IndependenceLossError(
            f"{count} {family.kind.value} members are dependent on a {grid.size}-node grid "
            f"(score {score:.3g})",
            score=score,
        )
    return fs
