"""
Tests for the pickforge.numerics module.
"""
import math

import numpy as np
import pytest

from pickforge.config import ToleranceConfig
from pickforge.errors import DimensionMismatch, NonFiniteMatrix, NonUniqueSteinSolution, NotPositiveSemidefinite
from pickforge.errors import UnboundedTruncation
from pickforge.numerics import (
    as_column,
    as_matrix,
    geometric_tail,
    null_basis,
    op_norm,
    orthogonal_complement,
    orthonormal_basis,
    pinv,
    psd_certificate,
    solve_stein,
    spectral_radius,
    sqrt_psd,
    stein_gap,
    truncation_length,
)


def test_as_matrix_shapes() -> None:
    """Scalars become 1x1 matrices and vectors become rows."""
    assert as_matrix(2.0).shape == (1, 1)
    assert as_matrix([1.0, 2.0, 3.0]).shape == (1, 3)
    assert as_matrix([[1.0], [2.0]]).shape == (2, 1)
    assert as_matrix(1.0).dtype == np.complex128


def test_as_matrix_rejects_bad_input() -> None:
    """Three-dimensional arrays and non-finite entries are input errors."""
    with pytest.raises(DimensionMismatch):
        as_matrix(np.zeros((2, 2, 2)))
    with pytest.raises(NonFiniteMatrix):
        as_matrix([[1.0, np.nan]])


def test_as_column() -> None:
    """Rows and flat lists both become column vectors."""
    assert as_column([1.0, 2.0]).shape == (2, 1)
    assert as_column([[1.0, 2.0]]).shape == (2, 1)
    assert as_column(3.0).shape == (1, 1)


def test_norms_of_empty_matrices() -> None:
    """The norm and the spectral radius of an empty matrix are zero."""
    assert op_norm(np.zeros((0, 0))) == 0.0
    assert spectral_radius(np.zeros((0, 0))) == 0.0
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0
    assert op_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)


def test_psd_certificate() -> None:
    """PSD, indefinite and non-Hermitian matrices are told apart."""
    certificate = psd_certificate([[1.0, 1.0], [1.0, 1.0]])
    assert certificate.is_psd
    assert certificate.min_eigenvalue == pytest.approx(0.0, abs=1e-14)
    assert certificate.scale == pytest.approx(2.0)

    assert not psd_certificate([[1.0, 0.0], [0.0, -1.0]])
    assert not psd_certificate([[1.0, 1.0], [0.0, 1.0]])
    assert psd_certificate(np.zeros((0, 0))).is_psd


def test_psd_certificate_relative_threshold() -> None:
    """The negative eigenvalue allowance scales with the matrix norm."""
    matrix = np.diag([1e6, -1e-6])
    assert psd_certificate(matrix).is_psd
    assert not psd_certificate(matrix, ToleranceConfig(psd_tol=1e-14)).is_psd


def test_sqrt_psd(rng: np.random.Generator) -> None:
    """The square root squares back to the matrix and is Hermitian."""
    factor = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    matrix = factor @ factor.conj().T
    root = sqrt_psd(matrix)
    np.testing.assert_allclose(root, root.conj().T, atol=1e-12)
    np.testing.assert_allclose(root @ root, matrix, atol=1e-10)

    with pytest.raises(NotPositiveSemidefinite):
        sqrt_psd([[-1.0]])


def test_pinv_drops_small_singular_values() -> None:
    """Singular values below the relative threshold count as zero."""
    matrix = np.diag([1.0, 1e-14])
    np.testing.assert_allclose(pinv(matrix), np.diag([1.0, 0.0]), atol=1e-12)
    assert pinv(np.zeros((2, 0))).shape == (0, 2)


def test_sqrt_psd_commutes_with_matrix(rng: np.random.Generator) -> None:
    """R M = M R for the root R of random PSD matrices, including rank-deficient ones."""
    for trial in range(100):
        rank = 1 + trial % 4
        factor = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
        matrix = factor @ factor.conj().T
        root = sqrt_psd(matrix)
        assert op_norm(root @ matrix - matrix @ root) <= 1e-10 * max(1.0, op_norm(matrix))


def test_pinv_penrose_identities(rng: np.random.Generator) -> None:
    """The four Penrose conditions on random full-rank and rank-deficient rectangular matrices."""
    for rank in (1, 2, 3):
        left = rng.standard_normal((5, rank)) + 1j * rng.standard_normal((5, rank))
        matrix = left @ rng.standard_normal((rank, 3))
        inverse = pinv(matrix)
        np.testing.assert_allclose(matrix @ inverse @ matrix, matrix, atol=1e-10)
        np.testing.assert_allclose(inverse @ matrix @ inverse, inverse, atol=1e-10)
        np.testing.assert_allclose(matrix @ inverse, (matrix @ inverse).conj().T, atol=1e-10)
        np.testing.assert_allclose(inverse @ matrix, (inverse @ matrix).conj().T, atol=1e-10)


def test_stein_gap() -> None:
    """The gap is the smallest |1 - lambda_i conj(lambda_j)|."""
    assert stein_gap(np.array([0.0, 0.5])) == pytest.approx(0.75)
    assert stein_gap(np.array([1.0])) == pytest.approx(0.0)
    assert stein_gap(np.zeros(0)) == math.inf


def test_solve_stein_diagonal() -> None:
    """For T = diag(a, b) the solution is Q_ij / (1 - a_i conj(a_j))."""
    t_matrix = np.diag([0.0, 0.5])
    q_matrix = np.ones((2, 2))
    solution = solve_stein(t_matrix, q_matrix)
    np.testing.assert_allclose(solution, [[1.0, 1.0], [1.0, 4.0 / 3.0]], atol=1e-12)


def test_solve_stein_residual(rng: np.random.Generator) -> None:
    """A random contraction gives a solution that satisfies the equation."""
    t_matrix = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    t_matrix *= 0.9 / op_norm(t_matrix)
    q_matrix = rng.standard_normal((4, 4))
    solution = solve_stein(t_matrix, q_matrix)
    np.testing.assert_allclose(solution - t_matrix @ solution @ t_matrix.conj().T, q_matrix, atol=1e-10)


def test_solve_stein_errors() -> None:
    """A unimodular eigenvalue makes the solution non-unique and a wrong Q shape is an input error."""
    with pytest.raises(NonUniqueSteinSolution):
        solve_stein([[1.0]], [[1.0]])
    with pytest.raises(DimensionMismatch):
        solve_stein(np.eye(2), np.eye(3))
    assert solve_stein(np.zeros((0, 0)), np.zeros((0, 0))).shape == (0, 0)


def test_truncation_length() -> None:
    """The returned length pushes the geometric tail under truncation_tol."""
    cfg = ToleranceConfig(truncation_tol=1e-6)
    terms = truncation_length(0.5, 1.0, cfg)
    assert geometric_tail(0.5, 1.0, terms) <= 1e-6
    assert geometric_tail(0.5, 1.0, terms - 1) > 1e-6
    assert truncation_length(0.0, 1.0, cfg) == 1


def test_truncation_length_unbounded() -> None:
    """A spectral radius of one or a tiny cap makes the expansion unbounded."""
    with pytest.raises(UnboundedTruncation):
        truncation_length(1.0, 1.0)
    with pytest.raises(UnboundedTruncation):
        truncation_length(0.999, 1.0, ToleranceConfig(truncation_cap=10))
    assert geometric_tail(1.0, 1.0, 5) == math.inf


def test_orthonormal_and_null_bases() -> None:
    """The range and kernel bases are orthonormal and complementary."""
    matrix = np.array([[1.0, 1.0], [1.0, 1.0]])
    range_basis = orthonormal_basis(matrix)
    kernel_basis = null_basis(matrix)
    assert range_basis.shape == (2, 1)
    assert kernel_basis.shape == (2, 1)
    np.testing.assert_allclose(matrix @ kernel_basis, 0.0, atol=1e-12)
    np.testing.assert_allclose(range_basis.conj().T @ kernel_basis, 0.0, atol=1e-12)
    # the largest entry of every column is real and positive
    assert np.all(range_basis.real >= 0.0)

    complement = orthogonal_complement(range_basis, 2)
    np.testing.assert_allclose(np.abs(complement.conj().T @ kernel_basis), 1.0, atol=1e-12)


def test_bases_of_degenerate_matrices() -> None:
    """The zero matrix has an empty range and a full kernel."""
    assert orthonormal_basis(np.zeros((3, 2))).shape == (3, 0)
    np.testing.assert_allclose(null_basis(np.zeros((1, 2))), np.eye(2))
    np.testing.assert_allclose(orthogonal_complement(np.zeros((2, 0)), 2), np.eye(2))
