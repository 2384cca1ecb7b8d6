import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from galerkin_adversary import (
    BasisFamily,
    FamilyKind,
    Kernel,
    apply_operator,
    compute_images,
    gram_matrix,
    independence_score,
    make_grid,
    operator_norm_estimate,
    shift_operator,
)
from galerkin_adversary.errors import (
    ConfigError,
    ImagesDependentError,
    IncompatibleSpacesError,
    LengthMismatchError,
    SingularGramError,
)
from galerkin_adversary.operators import (
    fredholm,
    identity,
    multiplication,
    scaled_identity,
    spectral_derivative,
)

TWO_PI = 2.0 * math.pi
TRIG = BasisFamily(FamilyKind.TRIGONOMETRIC, 0.0, TWO_PI)


def test_identity_images_are_trial_samples(grid_2pi):
    basis = TRIG.members(5)
    images = compute_images(identity(0.0, TWO_PI), basis, grid_2pi)
    assert np.allclose(images.gram_g, np.eye(5), atol=1e-10)
    e1 = apply_operator(identity(0.0, TWO_PI), [1, 0, 0, 0, 0], basis, grid_2pi)
    assert np.array_equal(e1.values, basis[0](grid_2pi.nodes))


@pytest.mark.parametrize(
    "op",
    [
        identity(0.0, TWO_PI),
        scaled_identity(3.0, 0.0, TWO_PI),
        fredholm(Kernel("gaussian", 0.5), 0.0, TWO_PI),
        spectral_derivative(2, 0.0, TWO_PI),
        multiplication("exp", 0.0, TWO_PI),
    ],
    ids=lambda op: op.label,
)
def test_zero_coefficients_give_zero(op, grid_2pi):
    out = apply_operator(op, np.zeros(4), TRIG.members(4), grid_2pi)
    assert np.all(out.values == 0)


def test_constant_kernel_on_linear_function():
    # (L psi)(x) = int_0^1 y dy = 1/2; the monomial family's second member is y
    grid = make_grid(0.0, 1.0, 8, 4)
    psi = BasisFamily(FamilyKind.MONOMIAL, 0.0, 1.0).member(1)
    out = apply_operator(fredholm(Kernel("constant"), 0.0, 1.0), [1.0], [psi], grid)
    assert np.allclose(out.values, 0.5, atol=1e-14)
    # quadrature oracle: explicit sum over nodes
    oracle = sum(w * y for w, y in zip(grid.weights, grid.nodes))
    assert np.allclose(out.values, oracle, atol=1e-15)


def test_gaussian_kernel_matches_explicit_sum(rng):
    grid = make_grid(0.0, 3.0, 6, 4)
    basis = BasisFamily(FamilyKind.LEGENDRE, 0.0, 3.0).members(3)
    c = rng.standard_normal(3)
    out = apply_operator(fredholm(Kernel("gaussian", 0.7), 0.0, 3.0), c, basis, grid)
    psi = sum(ck * m(grid.nodes) for ck, m in zip(c, basis))
    for i in (0, 7, 23):
        xi = grid.nodes[i]
        expected = sum(w * math.exp(-((xi - y) ** 2) / (2 * 0.49)) * p for w, y, p in zip(grid.weights, grid.nodes, psi))
        assert abs(out.values[i] - expected) <= 1e-12 * (1 + abs(expected))


def test_rank_one_kernel_images_are_dependent(grid_2pi):
    op = fredholm(Kernel("rank1", phi="trig:2"), 0.0, TWO_PI)
    with pytest.raises(ImagesDependentError):
        compute_images(op, TRIG.members(3), grid_2pi)
    loose = compute_images(op, TRIG.members(3), grid_2pi, strict=False)
    assert not loose.independent


def test_derivative_of_sines(grid_2pi):
    # sines are members 2, 4, 6 of the trig family: sin(kx)/sqrt(pi)
    sines = [TRIG.member(2 * k - 1) for k in (1, 2, 3)]
    images = compute_images(spectral_derivative(1, 0.0, TWO_PI), sines, grid_2pi)
    x = grid_2pi.nodes
    for k, g in zip((1, 2, 3), images.g):
        assert np.allclose(g.values, k * np.cos(k * x) / math.sqrt(math.pi), atol=1e-12)
    assert images.independence_score_g > 1e-8
    # Gram oracle: diag(k^2), normalized score 1
    assert np.allclose(images.gram_g, np.diag([1.0, 4.0, 9.0]), atol=1e-10)
    assert abs(independence_score(images.gram_g) - 1.0) <= 1e-10


def test_length_mismatch(grid_2pi):
    with pytest.raises(LengthMismatchError):
        apply_operator(identity(0.0, TWO_PI), [1.0, 2.0], TRIG.members(3), grid_2pi)


def test_norm_estimates(grid_2pi):
    basis = TRIG.members(6)
    assert abs(operator_norm_estimate(compute_images(identity(0.0, TWO_PI), basis, grid_2pi)) - 1) <= 1e-10
    two = compute_images(scaled_identity(2.0, 0.0, TWO_PI), basis, grid_2pi)
    assert abs(operator_norm_estimate(two) - 2) <= 1e-10


def test_rank_one_norm_matches_dense_eigensolve(grid_2pi):
    # ||phi phi^T|| = ||phi||^2 = 1; cross-check the discretized operator's
    # largest singular value with a dense symmetric eigensolve
    op = fredholm(Kernel("rank1", phi="trig:3"), 0.0, TWO_PI)
    basis = TRIG.members(7)
    images = compute_images(op, basis, grid_2pi, strict=False)
    est = operator_norm_estimate(images)
    assert abs(est - 1.0) <= 1e-8

    sw = np.sqrt(grid_2pi.weights)
    kmat = Kernel("rank1", phi="trig:3").matrix(grid_2pi.nodes, grid_2pi.nodes, 0.0, TWO_PI)
    dense = sw[:, None] * kmat * sw[None, :]
    assert abs(np.linalg.eigvalsh(dense)[-1] - est) <= 1e-8


@pytest.mark.parametrize(
    "op",
    [
        multiplication("linear", 0.0, TWO_PI),
        fredholm(Kernel("gaussian", 1.0), 0.0, TWO_PI),
        spectral_derivative(1, 0.0, TWO_PI),
    ],
    ids=lambda op: op.label,
)
def test_norm_estimate_against_brute_force(op, grid_2pi):
    # maximize ||L p|| / ||p|| over a dense sample of the unit sphere in R^T
    basis = TRIG.members(4)[1:]  # the derivative kills the constant
    images = compute_images(op, basis, grid_2pi)
    est = operator_norm_estimate(images)
    gm = np.column_stack([g.values for g in images.g])
    pm = np.column_stack([p.values for p in images.psi_samples])
    w = grid_2pi.weights
    angles = np.linspace(0, math.pi, 181)
    best = 0.0
    for a, b in itertools.product(angles, angles * 2):
        c = np.array([math.cos(a), math.sin(a) * math.cos(b), math.sin(a) * math.sin(b)])
        num = math.sqrt(w @ (gm @ c) ** 2)
        den = math.sqrt(w @ (pm @ c) ** 2)
        best = max(best, num / den)
    assert best <= est * (1 + 1e-12)
    # polish the grid maximum with a local search on the sphere
    from scipy.optimize import minimize

    def neg(c):
        return -math.sqrt(w @ (gm @ c) ** 2) / math.sqrt(w @ (pm @ c) ** 2)

    starts = [np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0]), np.ones(3)]
    polished = max(-minimize(neg, s, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15}).fun for s in starts)
    assert abs(polished - est) <= 1e-9 * est


def test_singular_trial_gram(grid_2pi):
    images = compute_images(identity(0.0, TWO_PI), TRIG.members(2), grid_2pi)
    with pytest.raises(SingularGramError):
        operator_norm_estimate(images, np.ones((2, 2)))


def test_shift_examples(grid_2pi):
    basis = TRIG.members(4)
    op = fredholm(Kernel("gaussian", 0.5), 0.0, TWO_PI)
    same = compute_images(shift_operator(op, 0.0), basis, grid_2pi)
    ref = compute_images(op, basis, grid_2pi)
    for a, b in zip(same.g, ref.g):
        assert np.array_equal(a.values, b.values)

    zero = shift_operator(identity(0.0, TWO_PI), 1.0)
    out = compute_images(zero, basis, grid_2pi, strict=False)
    assert all(np.all(g.values == 0) for g in out.g)

    three = shift_operator(scaled_identity(3.0, 0.0, TWO_PI), 1.0)
    g1 = apply_operator(three, [1.0], basis[:1], grid_2pi)
    assert np.allclose(g1.values, 2.0 * basis[0](grid_2pi.nodes), rtol=1e-15, atol=1e-15)


def test_shift_needs_matching_spaces():
    op = fredholm(Kernel("gaussian", 0.5), 0.0, 1.0, codomain=(0.0, 2.0))
    with pytest.raises(IncompatibleSpacesError):
        shift_operator(op, 1.0)


def test_unknown_catalog_names():
    with pytest.raises(ConfigError):
        Kernel("cauchy")
    with pytest.raises(ConfigError):
        Kernel("rank1", phi="hat:1").matrix(np.zeros(1), np.zeros(1), 0.0, 1.0)


def test_codomain_operator_samples_on_its_own_grid():
    y_grid = make_grid(0.0, 2.0, 8, 4)
    op = fredholm(Kernel("constant", value=2.0), 0.0, 1.0, codomain=(0.0, 2.0))
    psi = BasisFamily(FamilyKind.MONOMIAL, 0.0, 1.0).member(0)
    out = apply_operator(op, [1.0], [psi], y_grid)
    assert out.grid is y_grid
    assert np.allclose(out.values, 2.0, atol=1e-14)


# -- properties ------------------------------------------------------------

OPS = [
    identity(0.0, TWO_PI),
    fredholm(Kernel("gaussian", 0.5), 0.0, TWO_PI),
    shift_operator(spectral_derivative(1, 0.0, TWO_PI), -1.0),
    multiplication("linear", 0.0, TWO_PI),
]
PGRID = make_grid(0.0, TWO_PI, 16, 8)
coef = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(OPS), st.lists(coef, min_size=5, max_size=5), st.lists(coef, min_size=5, max_size=5), coef)
def test_apply_operator_is_linear(op, a, b, alpha):
    basis = TRIG.members(5)
    a, b = np.array(a), np.array(b)
    lhs = apply_operator(op, alpha * a + b, basis, PGRID).values
    rhs = alpha * apply_operator(op, a, basis, PGRID).values + apply_operator(op, b, basis, PGRID).values
    scale = np.max(np.abs(alpha * apply_operator(op, a, basis, PGRID).values)) + np.max(
        np.abs(apply_operator(op, b, basis, PGRID).values)
    )
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (scale + 1e-300) + 1e-300


@pytest.mark.parametrize("op", OPS, ids=lambda op: op.label)
def test_unit_coefficients_reproduce_images(op):
    basis = TRIG.members(6)
    images = compute_images(op, basis, PGRID, strict=False)
    for k in range(6):
        e = np.zeros(6)
        e[k] = 1.0
        assert np.array_equal(apply_operator(op, e, basis, PGRID).values, images.g[k].values)


@pytest.mark.parametrize("op", OPS, ids=lambda op: op.label)
def test_zero_shift_is_exact(op):
    basis = TRIG.members(5)
    a = compute_images(op, basis, PGRID, strict=False)
    b = compute_images(shift_operator(op, 0.0), basis, PGRID, strict=False)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a.g, b.g))


def test_images_of_extended_family_stay_independent(grid_2pi):
    basis = TRIG.members(16)
    images = compute_images(spectral_derivative(1, 0.0, TWO_PI), basis[1:], grid_2pi)
    assert images.independent
    assert np.allclose(images.gram_g, gram_matrix(list(images.g)), atol=0)
