# pylint: disable=redefined-outer-name
"""
Tests for the pickforge.realizations module.
"""
import json

import numpy as np
import pytest
from pydantic import ValidationError

from pickforge.config import ToleranceConfig
from pickforge.errors import DimensionMismatch, SingularFactor, SingularResolvent, UnboundedTruncation
from pickforge.realizations import (
    Realization,
    blaschke,
    block,
    certify_schur,
    combine,
    constant,
    evaluate,
    evaluate_many,
    h2_gram,
    h2_inner,
    hstack,
    identity,
    kernel_column,
    moebius,
    polynomial,
    prune,
    random_schur,
    scale,
    select,
    shift,
    realize_taylor,
    taylor_coeffs,
    vstack,
)

POINTS = (0.0, 0.3, -0.2 + 0.5j, 0.7j)


@pytest.fixture
def small_grid() -> ToleranceConfig:
    """Fewer sample points for the Schur certificate."""
    return ToleranceConfig(grid_boundary_points=64, grid_interior_points=64)


def test_empty_blocks_are_restored() -> None:
    """A constant function round-trips through the JSON encoding, where empty blocks lose their shape."""
    realization = Realization.from_json_dict({"A": [], "B": [], "C": [], "D": [[0.5, 0.25]]})
    assert realization.state_dim == 0
    assert realization.B.shape == (0, 2)
    assert realization.C.shape == (1, 0)
    assert realization.shape == (1, 2)
    assert Realization.from_json_dict(realization.to_json_dict()) == realization


def test_realization_dimension_errors() -> None:
    """Inconsistent blocks are rejected."""
    with pytest.raises((DimensionMismatch, ValidationError)):
        Realization(A=[[0.0, 0.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]])
    with pytest.raises((DimensionMismatch, ValidationError)):
        Realization(A=np.zeros((2, 2)), B=np.zeros((3, 1)), C=np.zeros((1, 2)), D=[[0.0]])
    with pytest.raises(ValidationError):
        Realization.from_json_dict({"A": [], "B": [], "D": [[1.0]]})


def test_polynomial_and_shift() -> None:
    """The block shift register realizes the polynomial."""
    square = polynomial([0.0, 0.0, 1.0])
    cubic = polynomial([1.0, -2.0, 0.0, 3.0])
    for z in POINTS:
        assert square(z)[0, 0] == pytest.approx(z**2)
        assert cubic(z)[0, 0] == pytest.approx(1 - 2 * z + 3 * z**3)
        np.testing.assert_allclose(shift(2)(z), z * np.eye(2))
    assert polynomial([2.0]).state_dim == 0
    with pytest.raises(DimensionMismatch):
        polynomial([np.eye(2), 1.0])


def test_derivatives() -> None:
    """Derivatives of z^2 at the boundary point 1 are 1, 2, 2 and 0."""
    square = polynomial([0.0, 0.0, 1.0])
    values = [evaluate(square, 1.0, order)[0, 0] for order in range(4)]
    np.testing.assert_allclose(values, [1.0, 2.0, 2.0, 0.0], atol=1e-12)
    with pytest.raises(ValueError):
        evaluate(square, 0.0, -1)
    assert evaluate(constant(3.0), 0.5, 1)[0, 0] == 0.0


def test_derivatives_match_finite_differences() -> None:
    """Order-one evaluation agrees with central differences of step 1e-5 on random Schur functions."""
    step = 1e-5
    for seed in range(10):
        schur = random_schur(3, 2, 2, seed=seed)
        for z in POINTS:
            difference = (schur(z + step) - schur(z - step)) / (2 * step)
            derivative = evaluate(schur, z, 1)
            assert np.linalg.norm(derivative - difference) <= 1e-6 * max(1.0, np.linalg.norm(derivative))


def test_json_round_trip_of_random_realizations() -> None:
    """Encoding to JSON text and back gives an equal realization."""
    for seed in range(100):
        realization = random_schur(1 + seed % 4, 1 + seed % 3, 1 + seed % 2, seed=seed)
        decoded = Realization.from_json_dict(json.loads(json.dumps(realization.to_json_dict())))
        assert decoded == realization
        assert decoded.hash_key == realization.hash_key


def test_singular_resolvent() -> None:
    """1 / (1 - z) cannot be evaluated at z = 1."""
    pole = Realization(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[1.0]])
    assert pole(0.5)[0, 0] == pytest.approx(2.0)
    with pytest.raises(SingularResolvent):
        pole(1.0)


def test_kernel_column() -> None:
    """C0 (I - zT)^-1 for a diagonal T is a row of Szego kernels."""
    column = kernel_column([[1.0, 1.0]], np.diag([0.0, 0.5]))
    for z in POINTS:
        np.testing.assert_allclose(column(z), [[1.0, 1.0 / (1.0 - 0.5 * z)]])


def test_arithmetic() -> None:
    """Sums, differences, products and inverses act pointwise."""
    first = polynomial([1.0, 0.5])
    second = blaschke([0.3])
    for z in POINTS:
        f, g = first(z)[0, 0], second(z)[0, 0]
        assert (first + second)(z)[0, 0] == pytest.approx(f + g)
        assert (first - second)(z)[0, 0] == pytest.approx(f - g)
        assert (first @ second)(z)[0, 0] == pytest.approx(f * g)
        assert combine("invert", first)(z)[0, 0] == pytest.approx(1.0 / f)
        assert (-first)(z)[0, 0] == pytest.approx(-f)


def test_backward_shift() -> None:
    """The backward shift maps f to (f - f(0)) / z."""
    cubic = polynomial([1.0, 2.0, 3.0, 4.0])
    shifted = combine("backward_shift", cubic)
    for z in POINTS:
        assert shifted(z)[0, 0] == pytest.approx(2.0 + 3.0 * z + 4.0 * z**2)


def test_backward_shift_norm_estimate() -> None:
    """
    For a finite Blaschke product S and f a combination of kernels K_S(., w_j), the backward shift loses at least
    |f(0)|^2 of the H^2 norm.
    """
    rng = np.random.default_rng(3)
    schur = blaschke([0.3, -0.5j, 0.2 + 0.6j])
    f = None
    for w, c in zip((0.1, -0.4 + 0.2j, 0.6j), rng.standard_normal(3) + 1j * rng.standard_normal(3)):
        numerator = constant(1.0) - schur @ constant(np.conj(schur(w)))
        term = scale(kernel_column([[1.0]], [[np.conj(w)]]) @ numerator, right=[[c]])
        f = term if f is None else f + term
    shifted = combine("backward_shift", f)
    norm_f = h2_inner(f, f).real
    assert h2_inner(shifted, shifted).real <= norm_f - abs(f(0.0)[0, 0]) ** 2 + 1e-8


def test_arithmetic_errors() -> None:
    """Shapes must match and inverted values must be nonsingular."""
    with pytest.raises(DimensionMismatch):
        identity(2) + identity(1)
    with pytest.raises(DimensionMismatch):
        constant(np.ones((2, 3))) @ constant(np.ones((2, 3)))
    with pytest.raises(SingularFactor):
        combine("invert", shift(1))
    with pytest.raises(ValueError):
        combine("add", shift(1))
    with pytest.raises(ValueError):
        combine("divide", shift(1), shift(1))


def test_stacking_and_selection() -> None:
    """Block assembly and sub-block selection agree with the pointwise operations."""
    f, g = polynomial([1.0, 1.0]), blaschke([0.5])
    grid = block([[f, g], [g, f]])
    for z in POINTS:
        fz, gz = f(z)[0, 0], g(z)[0, 0]
        np.testing.assert_allclose(grid(z), [[fz, gz], [gz, fz]])
        np.testing.assert_allclose(hstack([f, g])(z), [[fz, gz]])
        np.testing.assert_allclose(vstack([f, g])(z), [[fz], [gz]])
        np.testing.assert_allclose(select(grid, [1], [0])(z), [[gz]])
        np.testing.assert_allclose(scale(grid, left=[[1.0, 1.0]], right=[[2.0], [0.0]])(z), [[2 * (fz + gz)]])
    with pytest.raises(DimensionMismatch):
        hstack([identity(1), identity(2)])
    with pytest.raises(DimensionMismatch):
        scale(identity(2), left=np.eye(3))


def test_moebius() -> None:
    """The Moebius change of variable composes with the automorphism."""
    f = blaschke([0.2, -0.4j])
    w = 0.3 - 0.1j
    moved = moebius(f, w)
    for s in POINTS:
        assert moved(s)[0, 0] == pytest.approx(f((s + w) / (1 + np.conj(w) * s))[0, 0])
    with pytest.raises(ValueError):
        moebius(f, 1.0)


def test_prune_removes_cancelled_states() -> None:
    """A product of a Blaschke factor with its inverse prunes down to a constant."""
    factor = blaschke([0.5])
    product = factor @ combine("invert", factor)
    pruned = prune(product)
    assert product.state_dim == 2
    assert pruned.state_dim == 0
    assert pruned(0.3)[0, 0] == pytest.approx(1.0)


def test_prune_keeps_minimal_realizations() -> None:
    """A minimal realization keeps its state dimension."""
    f = random_schur(3, 2, 2, seed=1)
    pruned = prune(f)
    assert pruned.state_dim == 3
    for z in POINTS:
        np.testing.assert_allclose(pruned(z), f(z), atol=1e-10)


def test_certify_schur(small_grid: ToleranceConfig) -> None:
    """Random colligations and Blaschke products pass; 2z does not."""
    assert certify_schur(random_schur(4, 2, 3, seed=3), small_grid)
    assert certify_schur(blaschke([0.5, -0.25j]), small_grid)
    certificate = certify_schur(scale(shift(1), left=[[2.0]]), small_grid)
    assert not certificate
    assert certificate.sup_singular_value == pytest.approx(2.0, abs=1e-5)
    assert abs(certificate.worst_z) == pytest.approx(1.0, abs=1e-5)


def test_taylor_coeffs() -> None:
    """1 / (1 - z/2) has coefficients 2^-k and the resummed series matches the function."""
    f = Realization(A=[[0.5]], B=[[1.0]], C=[[0.5]], D=[[1.0]])
    expansion = taylor_coeffs(f, 40)
    np.testing.assert_allclose([c[0, 0] for c in expansion.coefficients[:4]], [1.0, 0.5, 0.25, 0.125])
    assert expansion.tail_bound < 1e-10
    assert expansion.resum(0.3)[0, 0] == pytest.approx(f(0.3)[0, 0])
    with pytest.raises(UnboundedTruncation):
        taylor_coeffs(Realization(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[0.0]]), 3)


def test_realize_taylor() -> None:
    """Hankel realizations reproduce rational functions from enough leading coefficients."""
    f = random_schur(2, 2, 1, seed=4)
    rebuilt = realize_taylor(taylor_coeffs(f, 9).coefficients)
    assert rebuilt.state_dim <= 2
    for z in POINTS:
        np.testing.assert_allclose(rebuilt(z), f(z), atol=1e-8)

    affine = realize_taylor([1.0, 0.5, 0.0])
    assert affine.state_dim == 1
    assert affine(0.4)[0, 0] == pytest.approx(1.2)
    assert realize_taylor([0.5, 0.0, 0.0]).state_dim == 0
    with pytest.raises(DimensionMismatch):
        realize_taylor([])


def test_h2_inner_products() -> None:
    """The H^2 norm of the Szego kernel at w is 1 / (1 - |w|^2) and monomials are orthonormal."""
    w = 0.5
    kernel = kernel_column([[1.0]], [[w]])
    assert h2_inner(kernel, kernel).real == pytest.approx(1.0 / (1.0 - w**2))
    square = polynomial([0.0, 0.0, 1.0])
    assert abs(h2_inner(square, shift(1))) == pytest.approx(0.0, abs=1e-14)
    assert h2_inner(square, square).real == pytest.approx(1.0)
    # reproducing property: <f, k_w> = f(w)
    assert h2_inner(square, kernel) == pytest.approx(w**2)


def test_h2_gram_matrix_valued() -> None:
    """The Gram matrix of an inner function's columns is the identity."""
    gram = h2_gram(blaschke([0.3]) @ shift(1), constant(1.0))
    assert gram[0, 0] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DimensionMismatch):
        h2_inner(identity(2), identity(2))
    assert evaluate_many(identity(1), []).shape == (0, 1, 1)
