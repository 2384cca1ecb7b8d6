"""Shared builders for the test modules."""

import math

import numpy as np

from galerkin_adversary import (
    BasisFamily,
    FamilyKind,
    FunctionalSet,
    Kernel,
    assemble,
    compute_images,
    make_grid,
    shift_operator,
)
from galerkin_adversary.operators import fredholm, identity, spectral_derivative

TWO_PI = 2.0 * math.pi
WIDE = 16.0 * math.pi  # interval long enough for T = 80 independent Gaussian images


def suite_operators(lower=0.0, upper=WIDE):
    return {
        "identity": identity(lower, upper),
        "fredholm": fredholm(Kernel("gaussian", 0.5), lower, upper),
        "derivative": shift_operator(spectral_derivative(1, lower, upper), -1.0),
    }


def system_with_matrix(matrix, grid=None, extra=0):
    """A Galerkin system for the identity on orthonormal trig images whose
    matrix is ``matrix``: test representers ``r_tau = sum_k M[tau, k] g_k``,
    optionally padded with components along further images."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    grid = grid or make_grid(0.0, TWO_PI)
    basis = BasisFamily(FamilyKind.TRIGONOMETRIC, 0.0, TWO_PI).members(n + extra)
    images = compute_images(identity(0.0, TWO_PI), basis, grid)
    g = np.column_stack([x.values for x in images.g])
    pad = np.zeros((n, extra)) if extra == 0 else np.random.default_rng(n).standard_normal((n, extra))
    reps = g @ np.hstack([m, pad]).T
    tests = FunctionalSet.from_representers([grid.function(reps[:, t]) for t in range(n)], grid)
    return assemble(images, tests, n), images
