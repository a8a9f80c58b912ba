# pylint: disable=invalid-name
"""
The J-inner function Theta of a problem with a strictly positive Pick matrix, built either by the explicit formula or
by a Krein-space completion of the isometric column [T; C], together with the linear-fractional map that produces all
solutions from Schur-class parameters and its inverse.
"""

import logging
from typing import Literal, Optional, Sequence

import numpy as np
import scipy.linalg

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import DegeneratePickMatrix, DimensionMismatch, InertiaMismatch, InvalidNodes, NotSchurClass
from pickforge.errors import SingularFactor, SingularResolvent
from pickforge.models import Check, ComplexMatrix, Immutable, VerificationReport, encode_complex
from pickforge.numerics import as_matrix, hermitian_eig, normalize_phases, op_norm, spectral_radius
from pickforge.pick import InterpolationData
from pickforge.realizations import Realization, certify_schur, circle_points, combine, constant, evaluate
from pickforge.realizations import interior_points, moebius, prune, random_disk_points, select
from pickforge.redheffer import build_colligation

logger = logging.getLogger(__name__)

STRICT_PICK_TOL = 1e-8
MU_SEPARATION = 1e-6
MU_CANDIDATES = 64
MOEBIUS_RADIUS = 0.3
MOEBIUS_CANDIDATES = 8

Provenance = Literal["explicit", "krein"]


class Signature(Immutable):
    """
    The signature matrix J = diag(I_plus, -I_minus) on Y + U.
    """

    dim_plus: int
    dim_minus: int

    @property
    def size(self) -> int:
        """
        dim_plus + dim_minus
        """
        return self.dim_plus + self.dim_minus

    @property
    def matrix(self) -> np.ndarray:
        """
        J as a dense matrix.
        """
        return np.diag(np.concatenate([np.ones(self.dim_plus), -np.ones(self.dim_minus)])).astype(np.complex128)


class ThetaFunction(Immutable):
    """
    A 2x2-block J-inner function. The blocks are Theta_11 (q x q), Theta_12 (q x p), Theta_21 (p x q) and
    Theta_22 (p x p). `mu` is the normalization point of the explicit construction.
    """

    theta: Realization
    J: Signature
    provenance: Provenance
    mu: Optional[tuple[float, float]] = None

    def block(self, row: int, col: int) -> Realization:
        """
        The (row, col) block, indexed from 1 like Theta_11.
        """
        q = self.J.dim_plus
        ranges = {1: slice(0, q), 2: slice(q, self.J.size)}
        return select(self.theta, ranges[row], ranges[col])

    @property
    def theta11(self) -> Realization:
        return self.block(1, 1)

    @property
    def theta12(self) -> Realization:
        return self.block(1, 2)

    @property
    def theta21(self) -> Realization:
        return self.block(2, 1)

    @property
    def theta22(self) -> Realization:
        return self.block(2, 2)

    def __call__(self, z: complex) -> np.ndarray:
        return evaluate(self.theta, z)


class KreinCompletion(Immutable):
    """
    The columns [B; D] that complete [T; C] to a (diag(P, J), J)-unitary colligation, with the measured inertia of the
    indefinite Gram matrix and the residuals of the two completion identities.
    """

    B: ComplexMatrix
    D: ComplexMatrix
    inertia_check: tuple[int, int]
    isometry_residual: float
    completeness_residual: float


def signature(data: InterpolationData) -> Signature:
    """
    The signature of the problem: dim_plus = q, dim_minus = p.
    """
    return Signature(dim_plus=data.q, dim_minus=data.p)


def require_strict(pick_matrix: np.ndarray) -> None:
    """
    Raise DegeneratePickMatrix unless min eig(P) >= STRICT_PICK_TOL * ||P||.
    """
    eigenvalues, _ = hermitian_eig(pick_matrix)
    threshold = STRICT_PICK_TOL * max(op_norm(pick_matrix), np.finfo(float).tiny)
    if eigenvalues[0] < threshold:
        raise DegeneratePickMatrix(
            f"the Pick matrix is not strictly positive (min eigenvalue {eigenvalues[0]:.3e}); "
            "use pickforge.redheffer for degenerate problems",
            min_eigenvalue=float(eigenvalues[0]),
        )


def choose_mu(t_matrix: np.ndarray) -> complex:
    """
    The normalization point: 1 unless it is within MU_SEPARATION of the spectrum of T*, otherwise the 64th root of
    unity farthest from that spectrum.
    """
    spectrum = np.linalg.eigvals(as_matrix(t_matrix)).conj()
    if spectrum.size == 0 or np.min(np.abs(1.0 - spectrum)) > MU_SEPARATION:
        return 1.0 + 0j
    candidates = np.exp(2j * np.pi * np.arange(MU_CANDIDATES) / MU_CANDIDATES)
    distances = np.min(np.abs(candidates[:, None] - spectrum[None, :]), axis=1)
    mu = complex(candidates[int(np.argmax(distances))])
    logger.debug("mu = 1 lies on the spectrum of T*, using mu = %s instead", mu)
    return mu


def build_theta_explicit(
    data: InterpolationData,
    pick_matrix: np.ndarray,
    mu: Optional[complex] = None,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> ThetaFunction:
    """
    Theta(z) = I + (z - mu) C (I - zT)^-1 P^-1 (mu I - T*)^-1 C* J with C = [E; N]. Writing
    K = P^-1 (mu I - T*)^-1 C* J this is the realization (A=T, B=(I - mu T)K, C=C, D=I - mu C K), so Theta(mu) = I.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    require_strict(pick_matrix)
    if mu is None:
        mu = choose_mu(data.T)
    mu = complex(mu)
    if abs(abs(mu) - 1.0) > cfg.psd_tol:
        raise InvalidNodes(f"the normalization point must lie on the unit circle, got {mu}")

    n = data.n
    shifted = mu * np.eye(n) - data.T.conj().T
    condition = np.linalg.cond(shifted)
    if condition > 1.0 / cfg.psd_tol:
        raise SingularResolvent(f"mu = {mu} lies on the spectrum of T* (condition number {condition:.3e})", z=mu)

    sig = signature(data)
    c_matrix = np.vstack([data.E, data.N])
    k_matrix = scipy.linalg.solve(pick_matrix, scipy.linalg.solve(shifted, c_matrix.conj().T @ sig.matrix))
    theta = Realization(
        A=data.T,
        B=(np.eye(n) - mu * data.T) @ k_matrix,
        C=c_matrix,
        D=np.eye(sig.size) - mu * c_matrix @ k_matrix,
    )
    logger.debug("explicit Theta: state %d, signature (%d, %d), mu=%s", n, sig.dim_plus, sig.dim_minus, mu)
    return ThetaFunction(theta=theta, J=sig, provenance="explicit", mu=tuple(encode_complex(mu)))


def krein_complete(
    data: InterpolationData, pick_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[KreinCompletion, ThetaFunction]:
    """
    Complete the column [T; C], which is isometric from (C^n, P) into (C^n + C^(q+p), diag(P, J)), by a basis of the
    diag(P, J)-orthogonal complement of its range. The indefinite Gram matrix of that basis must have q positive and
    p negative eigenvalues; scaling its eigenvectors by |lambda|^(-1/2) gives [B; D] with
    [B; D]* diag(P, J) [B; D] = J, and Theta(z) = D + zC(I - zT)^-1 B.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    require_strict(pick_matrix)
    n, sig = data.n, signature(data)
    c_matrix = np.vstack([data.E, data.N])
    gram = scipy.linalg.block_diag(pick_matrix, sig.matrix)
    column = np.vstack([data.T, c_matrix])

    projection = np.eye(n + sig.size) - column @ scipy.linalg.solve(pick_matrix, column.conj().T @ gram)
    left, _, _ = scipy.linalg.svd(projection)
    basis = normalize_phases(left[:, : sig.size])

    eigenvalues, eigenvectors = hermitian_eig(basis.conj().T @ gram @ basis)
    positives = np.flatnonzero(eigenvalues > 0)[::-1]
    negatives = np.flatnonzero(eigenvalues < 0)
    inertia = (int(positives.size), int(negatives.size))
    if inertia != (sig.dim_plus, sig.dim_minus):
        raise InertiaMismatch(
            f"the completion Gram matrix has inertia {inertia}, expected ({sig.dim_plus}, {sig.dim_minus})",
            eigenvalues=eigenvalues.tolist(),
        )
    order = np.concatenate([positives, negatives])
    completion = basis @ (eigenvectors[:, order] / np.sqrt(np.abs(eigenvalues[order])))
    b_matrix, d_matrix = completion[:n], completion[n:]

    isometry_residual = op_norm(completion.conj().T @ gram @ completion - sig.matrix) + op_norm(
        column.conj().T @ gram @ completion
    )
    inverse_gram = scipy.linalg.block_diag(np.linalg.inv(pick_matrix), sig.matrix)
    completeness_residual = op_norm(
        completion @ sig.matrix @ completion.conj().T
        - (inverse_gram - column @ scipy.linalg.solve(pick_matrix, column.conj().T))
    )
    scale = max(1.0, op_norm(inverse_gram), op_norm(gram))
    if max(isometry_residual, completeness_residual) > cfg.residual_tol * scale:
        logger.warning(
            "Krein completion residuals %.2e / %.2e exceed residual_tol", isometry_residual, completeness_residual
        )

    theta = Realization(A=data.T, B=b_matrix, C=c_matrix, D=d_matrix)
    logger.debug("Krein completion: state %d, inertia %s", n, inertia)
    return (
        KreinCompletion(
            B=b_matrix,
            D=d_matrix,
            inertia_check=inertia,
            isometry_residual=isometry_residual,
            completeness_residual=completeness_residual,
        ),
        ThetaFunction(theta=theta, J=sig, provenance="krein"),
    )


# checks


def _relative(defect: float, reference: float) -> float:
    return defect / max(1.0, reference)


def theta_kernel_residual(
    theta: ThetaFunction,
    data: InterpolationData,
    pick_matrix: np.ndarray,
    pairs: Sequence[tuple[complex, complex]],
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> float:
    """
    The largest relative defect of J - Theta(z) J Theta(w)* = (1 - z conj(w)) C (I - zT)^-1 P^-1 (I - wT)^-* C*.
    """
    j_matrix, c_matrix = theta.J.matrix, np.vstack([data.E, data.N])
    eye = np.eye(data.n)
    worst = 0.0
    for z, w in pairs:
        left = j_matrix - theta(z) @ j_matrix @ theta(w).conj().T
        f_z = scipy.linalg.solve((eye - z * data.T).T, c_matrix.T).T
        f_w = scipy.linalg.solve((eye - w * data.T).T, c_matrix.T).T
        right = (1.0 - z * np.conj(w)) * f_z @ scipy.linalg.solve(pick_matrix, f_w.conj().T)
        worst = max(worst, _relative(op_norm(left - right), op_norm(right)))
    return worst


def theta_dual_kernel_residual(
    theta: ThetaFunction,
    pick_matrix: np.ndarray,
    pairs: Sequence[tuple[complex, complex]],
) -> float:
    """
    The largest relative defect of J - Theta(w)* J Theta(z) = (1 - z conj(w)) Ct(w) P Ct(z)* with the row function
    Ct(z) = B* (I - conj(z) A*)^-1 read off the realization.
    """
    j_matrix = theta.J.matrix
    a_matrix, b_matrix = theta.theta.A, theta.theta.B
    eye = np.eye(a_matrix.shape[0])
    worst = 0.0
    for z, w in pairs:
        left = j_matrix - theta(w).conj().T @ j_matrix @ theta(z)
        g_z = scipy.linalg.solve(eye - z * a_matrix, b_matrix)
        g_w = scipy.linalg.solve(eye - w * a_matrix, b_matrix)
        right = (1.0 - z * np.conj(w)) * g_w.conj().T @ pick_matrix @ g_z
        worst = max(worst, _relative(op_norm(left - right), op_norm(right)))
    return worst


def j_bicontractive_margin(theta: ThetaFunction, points: Sequence[complex]) -> float:
    """
    The smallest eigenvalue of J - Theta J Theta* and of J - Theta* J Theta over the points, relative to
    max(1, ||Theta||^2).
    """
    j_matrix = theta.J.matrix
    worst = np.inf
    for z in points:
        value = theta(z)
        scale = max(1.0, op_norm(value) ** 2)
        for defect in (j_matrix - value @ j_matrix @ value.conj().T, j_matrix - value.conj().T @ j_matrix @ value):
            eigenvalues, _ = hermitian_eig(defect)
            worst = min(worst, eigenvalues[0] / scale)
    return float(worst)


def boundary_j_unitarity(theta: ThetaFunction, points: Sequence[complex]) -> float:
    """
    max ||Theta(t) J Theta(t)* - J|| over points of the unit circle.
    """
    j_matrix = theta.J.matrix
    return max(op_norm(theta(t) @ j_matrix @ theta(t).conj().T - j_matrix) for t in points)


def theta22_bound(theta: ThetaFunction, points: Sequence[complex]) -> float:
    """
    max ||Theta_22(z)^-1 Theta_21(z)|| over the points; J-contractivity keeps it at most one.
    """
    q = theta.J.dim_plus
    worst = 0.0
    for z in points:
        value = theta(z)
        worst = max(worst, op_norm(np.linalg.solve(value[q:, q:], value[q:, :q])))
    return worst


def _sample_pairs(count: int, seed: int) -> list[tuple[complex, complex]]:
    rng = np.random.default_rng(seed)
    points = random_disk_points(rng, 2 * count)
    return list(zip(points[:count], points[count:]))


def verify_theta(
    theta: ThetaFunction,
    data: InterpolationData,
    pick_matrix: np.ndarray,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    seed: int = 0,
    pairs: int = 50,
) -> VerificationReport:
    """
    Check the two kernel identities of Theta at random pairs, its J-bicontractivity on the interior grid, the bound
    on Theta_22^-1 Theta_21, and J-unitarity on the circle when rho(T) < 1.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    sampled_pairs = _sample_pairs(pairs, seed)
    grid = interior_points(cfg.grid_interior_points)
    checks = [
        Check.at_most(
            "theta_kernel_identity", theta_kernel_residual(theta, data, pick_matrix, sampled_pairs), cfg.residual_tol
        ),
        Check.at_most(
            "theta_dual_kernel_identity",
            theta_dual_kernel_residual(theta, pick_matrix, sampled_pairs),
            cfg.residual_tol,
        ),
        Check.at_least("j_bicontractive_margin", j_bicontractive_margin(theta, grid), -cfg.residual_tol),
        Check.at_most("theta22_inverse_theta21", theta22_bound(theta, grid), 1.0 + cfg.residual_tol),
    ]
    rho = spectral_radius(data.T)
    if rho < 1.0:
        circle = circle_points(cfg.grid_boundary_points, 1.0)
        checks.append(Check.at_most("boundary_j_unitarity", boundary_j_unitarity(theta, circle), cfg.residual_tol))
    else:
        logger.debug("skipping the boundary J-unitarity check: rho(T) = %.6f", rho)
    return VerificationReport(subject=f"theta ({theta.provenance})", checks=tuple(checks))


def theta_quotient(
    explicit: ThetaFunction, other: ThetaFunction, points: Sequence[complex], cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> VerificationReport:
    """
    Two valid constructions differ by a constant J-unitary right factor: Q(z) = Theta_1(z)^-1 Theta_2(z) must not
    depend on z and Q(0) must be J-unitary.
    """
    j_matrix = explicit.J.matrix
    q0 = np.linalg.solve(explicit(0.0), other(0.0))
    constancy = max(op_norm(np.linalg.solve(explicit(z), other(z)) - q0) for z in points)
    unitarity = op_norm(q0.conj().T @ j_matrix @ q0 - j_matrix)
    return VerificationReport(
        subject="theta quotient",
        checks=(
            Check.at_most("quotient_constancy", constancy, cfg.residual_tol),
            Check.at_most("quotient_j_unitarity", unitarity, cfg.residual_tol),
        ),
    )


# linear-fractional parametrization


def lft(theta: ThetaFunction, param: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Realization:
    """
    S = (Theta_11 E + Theta_12)(Theta_21 E + Theta_22)^-1 for a Schur-class parameter E of size q x p.
    """
    q, p = theta.J.dim_plus, theta.J.dim_minus
    if param.shape != (q, p):
        raise DimensionMismatch(f"the parameter must be {q}x{p}, got {param.shape}")
    certificate = certify_schur(param, cfg)
    if not certificate:
        raise NotSchurClass(
            f"the parameter is not in the Schur class (sup norm {certificate.sup_singular_value:.6f})",
            certificate=certificate,
        )
    numerator = theta.theta11 @ param + theta.theta12
    denominator = theta.theta21 @ param + theta.theta22
    try:
        inverse = combine("invert", denominator)
    except SingularFactor as exc:
        raise SingularFactor("Theta_21 E + Theta_22 is singular at the origin", original_error=exc) from exc
    return prune(numerator @ inverse)


def recover_param(theta: ThetaFunction, schur: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Realization:
    """
    The parameter E = (Theta_11 - S Theta_21)^-1 (S Theta_22 - Theta_12) of a solution S. When the leading factor is
    singular at the origin the quotient is formed after a disk automorphism z -> (z + w) / (1 + conj(w) z) that moves
    the origin to a point where the factor is invertible, and moved back afterwards.
    """
    q, p = theta.J.dim_plus, theta.J.dim_minus
    if schur.shape != (q, p):
        raise DimensionMismatch(f"a solution must be {q}x{p}, got {schur.shape}")
    leading = theta.theta11 - schur @ theta.theta21
    trailing = schur @ theta.theta22 - theta.theta12

    if np.linalg.cond(evaluate(leading, 0.0, 0, cfg)) <= 1.0 / cfg.psd_tol:
        return prune(combine("invert", leading) @ trailing)

    candidates = MOEBIUS_RADIUS * np.exp(2j * np.pi * np.arange(MOEBIUS_CANDIDATES) / MOEBIUS_CANDIDATES)
    margins = [np.linalg.svd(evaluate(leading, w, 0, cfg), compute_uv=False)[-1] for w in candidates]
    best = int(np.argmax(margins))
    if margins[best] <= cfg.psd_tol:
        raise SingularFactor("Theta_11 - S Theta_21 is singular at every trial point")
    w = complex(candidates[best])
    logger.debug("Theta_11 - S Theta_21 is singular at 0, shifting the origin to %s", w)

    shifted = combine("invert", moebius(leading, w, cfg)) @ moebius(trailing, w, cfg)
    return prune(moebius(prune(shifted), -w, cfg))


def unique_solution(data: InterpolationData, pick_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    Whether the problem has exactly one solution: one of the defect spaces of its Redheffer colligation is trivial,
    so the only parameter is the empty one. This can only happen for a singular Pick matrix.
    """
    colligation = build_colligation(data, pick_matrix, cfg)
    unique = colligation.defect_dim == 0 or colligation.codefect_dim == 0
    logger.debug(
        "defect dimensions (%d, %d): %s solution",
        colligation.defect_dim,
        colligation.codefect_dim,
        "unique" if unique else "not a unique",
    )
    return unique


def zero_param(rows: int, cols: int) -> Realization:
    """
    The central parameter E = 0.
    """
    return constant(np.zeros((rows, cols)))
