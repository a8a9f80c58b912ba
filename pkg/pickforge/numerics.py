"""
Dense complex linear algebra used by every other module: Hermitian eigendecomposition, PSD certificates, square roots,
pseudoinverses, Stein equations and orthonormal bases.
"""

import logging
import math
from typing import Any

import numpy as np
import scipy.linalg

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import DimensionMismatch, NonFiniteMatrix, NonUniqueSteinSolution, NotPositiveSemidefinite
from pickforge.errors import UnboundedTruncation
from pickforge.models import PsdCertificate

logger = logging.getLogger(__name__)


def as_matrix(value: Any, name: str = "matrix") -> np.ndarray:
    """
    Convert the value into a two-dimensional complex128 array (a copy). Scalars become 1x1 matrices and
    one-dimensional arrays become single rows.
    """
    array = np.array(value, dtype=np.complex128)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    elif array.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got an array of shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFiniteMatrix(f"{name} contains NaN or Inf entries")
    return array


def as_column(value: Any, name: str = "vector") -> np.ndarray:
    """
    Convert the value into a column vector (an n x 1 complex128 array).
    """
    array = np.array(value, dtype=np.complex128)
    if array.ndim == 2 and 1 in array.shape:
        array = array.reshape(-1)
    if array.ndim == 0:
        array = array.reshape(1)
    if array.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got an array of shape {array.shape}")
    return array.reshape(-1, 1)


def require_square(matrix: np.ndarray, name: str = "matrix") -> None:
    """
    Raise DimensionMismatch unless the matrix is square.
    """
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {matrix.shape}")


def op_norm(matrix: np.ndarray) -> float:
    """
    Spectral norm (largest singular value); zero for empty matrices.
    """
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(matrix, 2))


def spectral_radius(matrix: np.ndarray) -> float:
    """
    Largest eigenvalue modulus; zero for the empty matrix.
    """
    matrix = np.asarray(matrix)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    """
    (M + M*) / 2
    """
    return (matrix + matrix.conj().T) / 2


def hermitian_eig(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of the Hermitian part of a square matrix. Eigenvalues are returned in ascending order together
    with the matrix of orthonormal eigenvectors (columns).
    """
    matrix = as_matrix(matrix)
    require_square(matrix)
    if matrix.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    eigenvalues, eigenvectors = scipy.linalg.eigh(hermitian_part(matrix))
    return eigenvalues, eigenvectors


def psd_certificate(matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> PsdCertificate:
    """
    Certify that a square matrix is positive semidefinite. The thresholds are relative to max(1, ||M||): the smallest
    eigenvalue of the Hermitian part may go down to -psd_tol * scale and the defect ||M - M*|| may go up to
    psd_tol * scale.
    """
    matrix = as_matrix(matrix)
    require_square(matrix)
    scale = max(1.0, op_norm(matrix))
    if matrix.shape[0] == 0:
        return PsdCertificate(is_psd=True, min_eigenvalue=0.0, hermitian_defect=0.0, scale=scale)

    eigenvalues, _ = hermitian_eig(matrix)
    min_eigenvalue = float(eigenvalues[0])
    hermitian_defect = op_norm(matrix - matrix.conj().T)
    threshold = cfg.psd_tol * scale
    return PsdCertificate(
        is_psd=bool(min_eigenvalue >= -threshold and hermitian_defect <= threshold),
        min_eigenvalue=min_eigenvalue,
        hermitian_defect=hermitian_defect,
        scale=scale,
    )


def sqrt_psd(matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Hermitian PSD square root. Eigenvalues that are negative only within tolerance are clamped to zero.
    """
    matrix = as_matrix(matrix)
    certificate = psd_certificate(matrix, cfg)
    if not certificate.is_psd:
        raise NotPositiveSemidefinite(
            f"cannot take the square root of a matrix with min eigenvalue {certificate.min_eigenvalue:.3e}",
            certificate=certificate,
        )
    if matrix.shape[0] == 0:
        return np.zeros((0, 0), dtype=np.complex128)

    eigenvalues, eigenvectors = hermitian_eig(matrix)
    if np.any(eigenvalues < 0):
        logger.debug("clamping %d slightly negative eigenvalue(s) to zero", int(np.sum(eigenvalues < 0)))
    root = (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.conj().T
    return hermitian_part(root)


def pinv(matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse. Singular values below psd_tol * sigma_max are treated as zero.
    """
    matrix = as_matrix(matrix)
    if matrix.size == 0:
        return np.zeros((matrix.shape[1], matrix.shape[0]), dtype=np.complex128)
    return scipy.linalg.pinv(matrix, atol=0.0, rtol=cfg.psd_tol)


def stein_gap(eigenvalues: np.ndarray) -> float:
    """
    The smallest value of |1 - lambda_i * conj(lambda_j)| over all eigenvalue pairs. The Stein operator
    X -> X - T X T* is invertible exactly when this is nonzero.
    """
    if eigenvalues.size == 0:
        return math.inf
    return float(np.min(np.abs(1.0 - np.outer(eigenvalues, eigenvalues.conj()))))


def solve_stein(t_matrix: Any, q_matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Solve P - T P T* = Q through the n^2 x n^2 vectorized linear system. With row-major vectorization,
    vec(T P T*) = (T kron conj(T)) vec(P).
    """
    t_matrix = as_matrix(t_matrix, "T")
    q_matrix = as_matrix(q_matrix, "Q")
    require_square(t_matrix, "T")
    size = t_matrix.shape[0]
    if q_matrix.shape != (size, size):
        raise DimensionMismatch(f"Q must be {size}x{size} to match T, got {q_matrix.shape}")
    if size == 0:
        return np.zeros((0, 0), dtype=np.complex128)

    gap = stein_gap(np.linalg.eigvals(t_matrix))
    if gap <= cfg.residual_tol:
        raise NonUniqueSteinSolution(
            f"the Stein operator is singular: two eigenvalues of T multiply (with conjugation) to 1 within {gap:.3e}",
            gap=gap,
        )

    system = np.eye(size * size, dtype=np.complex128) - np.kron(t_matrix, t_matrix.conj())
    solution = scipy.linalg.solve(system, q_matrix.reshape(-1)).reshape(size, size)

    residual = op_norm(solution - t_matrix @ solution @ t_matrix.conj().T - q_matrix) / max(1.0, op_norm(q_matrix))
    if residual > cfg.residual_tol:
        logger.warning(
            "Stein solve residual %.3e exceeds residual_tol %.1e (gap %.3e)", residual, cfg.residual_tol, gap
        )
    return solution


def truncation_length(rho: float, scale: float, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> int:
    """
    The number of terms K of a power series with geometric rate `rho` such that rho^K * scale / (1 - rho) does not
    exceed truncation_tol. Raises UnboundedTruncation when rho >= 1 or when K exceeds the configured cap.
    """
    if rho >= 1.0:
        raise UnboundedTruncation(f"the series does not converge geometrically (spectral radius {rho:.6f} >= 1)")
    if scale <= 0.0 or rho <= 0.0:
        return 1
    target = cfg.truncation_tol * (1.0 - rho) / scale
    if target >= 1.0:
        return 1
    terms = max(1, math.ceil(math.log(target) / math.log(rho)))
    if terms > cfg.truncation_cap:
        raise UnboundedTruncation(
            f"{terms} terms needed for spectral radius {rho:.6f}, more than the cap of {cfg.truncation_cap}"
        )
    return terms


def geometric_tail(rho: float, scale: float, terms: int) -> float:
    """
    The tail bound rho^terms * scale / (1 - rho) that goes with `truncation_length`.
    """
    if rho >= 1.0:
        return math.inf
    return (rho**terms) * scale / (1.0 - rho)


def normalize_phases(basis: np.ndarray) -> np.ndarray:
    """
    Multiply every column by a unimodular constant so that its largest-modulus entry is real and positive. This makes
    bases coming out of SVD-based routines deterministic.
    """
    basis = np.array(basis, dtype=np.complex128)
    for column in range(basis.shape[1]):
        pivot = basis[np.argmax(np.abs(basis[:, column])), column]
        if abs(pivot) > 0:
            basis[:, column] *= abs(pivot) / pivot
    return basis


def orthonormal_basis(matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Orthonormal basis of the column span; singular values below psd_tol * sigma_max are dropped.
    """
    matrix = as_matrix(matrix)
    if matrix.size == 0 or op_norm(matrix) == 0.0:
        return np.zeros((matrix.shape[0], 0), dtype=np.complex128)
    return normalize_phases(scipy.linalg.orth(matrix, rcond=cfg.psd_tol))


def null_basis(matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Orthonormal basis of the null space; singular values below psd_tol * sigma_max count as zero.
    """
    matrix = as_matrix(matrix)
    if matrix.shape[1] == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if matrix.shape[0] == 0 or op_norm(matrix) == 0.0:
        return np.eye(matrix.shape[1], dtype=np.complex128)
    return normalize_phases(scipy.linalg.null_space(matrix, rcond=cfg.psd_tol))


def orthogonal_complement(basis: np.ndarray, dim: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Orthonormal basis of the orthogonal complement (in C^dim) of the span of `basis`.
    """
    if basis.shape[1] == 0:
        return np.eye(dim, dtype=np.complex128)
    return null_basis(basis.conj().T, cfg)
