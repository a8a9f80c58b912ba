# pylint: disable=invalid-name
"""
Interpolation data (T, E, N), Pick matrices, solvability certificates, interpolant verification and kernel-membership
certificates.

Convention: the state space is C^n, E is q x n and N is p x n with i-th columns E_i and N_i. A Schur-class S solves the
problem when sum_k T*^k E* S_k = N* (S_k the Taylor coefficients of S), and the Pick matrix solves the Stein equation
P - T* P T = E* E - N* N.
"""

import logging
from typing import Any, Literal, Optional, Sequence

import numpy as np
import scipy.linalg
from pydantic import model_validator

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import DimensionMismatch, InvalidNodes, NodesOutsideDisk, NonDiagonalNodes, RepeatedNodes
from pickforge.errors import UnboundedTruncation
from pickforge.models import Check, ComplexMatrix, Immutable, KernelSample, PsdCertificate, VerificationReport
from pickforge.models import as_complex_matrix, decode_complex, decode_vector, encode_complex
from pickforge.numerics import as_column, as_matrix, geometric_tail, hermitian_part, op_norm, psd_certificate
from pickforge.numerics import solve_stein, spectral_radius, truncation_length
from pickforge.realizations import Realization, certify_schur, constant, evaluate, kernel_column, random_disk_points
from pickforge.typing import KernelEvaluator

logger = logging.getLogger(__name__)

PickStrategy = Literal["explicit", "series", "stein"]

KERNEL_SAMPLING_RADIUS = 0.95


class InterpolationData(Immutable):
    """
    The data (T, E, N) of the interpolation problem. The classical Nevanlinna-Pick case has
    T = diag(conj z_1, ..., conj z_n) with nodes z_i in the open disk.
    """

    T: ComplexMatrix
    E: ComplexMatrix
    N: ComplexMatrix

    # noinspection PyNestedDecorators
    @model_validator(mode="before")
    @classmethod
    def _validate_dimensions(cls, values: Any) -> Any:
        if not isinstance(values, dict):
            return values
        t, e, n = (as_complex_matrix(values.get(key, [])) for key in ("T", "E", "N"))
        size = t.shape[0]
        if size == 0 or t.shape != (size, size):
            raise DimensionMismatch(f"T must be a nonempty square matrix, got shape {t.shape}")
        if e.shape[1] != size or e.shape[0] == 0:
            raise DimensionMismatch(f"E must have {size} columns, got shape {e.shape}")
        if n.shape[1] != size or n.shape[0] == 0:
            raise DimensionMismatch(f"N must have {size} columns, got shape {n.shape}")
        return {**values, "T": t, "E": e, "N": n}

    @property
    def n(self) -> int:
        """
        State dimension (number of interpolation conditions in the Nevanlinna-Pick case).
        """
        return self.T.shape[0]

    @property
    def q(self) -> int:
        """
        Dimension of the output space (rows of S).
        """
        return self.E.shape[0]

    @property
    def p(self) -> int:
        """
        Dimension of the input space (columns of S).
        """
        return self.N.shape[0]

    @property
    def stein_rhs(self) -> np.ndarray:
        """
        E* E - N* N
        """
        return self.E.conj().T @ self.E - self.N.conj().T @ self.N

    def is_diagonal(self, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
        """
        Whether T is diagonal (the Nevanlinna-Pick case) within psd_tol.
        """
        off_diagonal = self.T - np.diag(np.diag(self.T))
        return op_norm(off_diagonal) <= cfg.psd_tol * max(1.0, op_norm(self.T))

    @property
    def nodes(self) -> np.ndarray:
        """
        The interpolation nodes conj(T_ii). Meaningful when T is diagonal.
        """
        return np.diag(self.T).conj()

    @classmethod
    def from_points(
        cls, points: Sequence[complex], e_vectors: Sequence[Any], n_vectors: Sequence[Any]
    ) -> "InterpolationData":
        """
        Nevanlinna-Pick data: nodes z_i in the disk with vectors E_i (length q) and N_i (length p). The interpolation
        condition reads S(z_i)* E_i = N_i.
        """
        points = np.array([complex(point) for point in points])
        if points.size == 0:
            raise DimensionMismatch("at least one interpolation node is required")
        if len(e_vectors) != points.size or len(n_vectors) != points.size:
            raise DimensionMismatch("one E vector and one N vector is required per interpolation node")
        if np.any(np.abs(points) >= 1.0):
            raise InvalidNodes(f"interpolation nodes must lie in the open unit disk, got {points.tolist()}")
        return cls(
            T=np.diag(points.conj()),
            E=np.column_stack([decode_vector(vector) for vector in e_vectors]),
            N=np.column_stack([decode_vector(vector) for vector in n_vectors]),
        )

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "InterpolationData":
        """
        Decode either the full {"T", "E", "N"} encoding or the {"points", "E", "N"} shorthand, where E and N list one
        vector per node.
        """
        if "points" in data:
            extra = set(data) - {"points", "E", "N"}
            if extra:
                raise ValueError(f"unexpected keys in np-points data: {', '.join(sorted(extra))}")
            return cls.from_points([decode_complex(point) for point in data["points"]], data["E"], data["N"])
        return cls(**data)

    def to_json_dict(self) -> dict[str, Any]:
        """
        The full {"T", "E", "N"} encoding.
        """
        return self.as_dict()


class PickResult(Immutable):
    """
    A Pick matrix together with the strategy that produced it and its relative Stein residual.
    """

    P: ComplexMatrix
    strategy: PickStrategy
    stein_residual: float


class ObservabilityExpansion(Immutable):
    """
    Taylor coefficients E T^k x of the observability function E(I - zT)^-1 x. `tail_bound` is None when the pair is not
    output stable (rho(T) >= 1).
    """

    coefficients: tuple[ComplexMatrix, ...]
    tail_bound: Optional[float]

    @property
    def bounded(self) -> bool:
        """
        Whether a tail bound is available.
        """
        return self.tail_bound is not None

    def resum(self, z: complex) -> np.ndarray:
        """
        Evaluate the truncated series at z.
        """
        total = np.zeros_like(self.coefficients[0])
        for coefficient in reversed(self.coefficients):
            total = total * z + coefficient
        return total


def stein_residual(data: InterpolationData, pick_matrix: np.ndarray) -> float:
    """
    ||P - T* P T - (E* E - N* N)|| relative to max(1, ||E* E - N* N||).
    """
    rhs = data.stein_rhs
    residual = pick_matrix - data.T.conj().T @ pick_matrix @ data.T - rhs
    return op_norm(residual) / max(1.0, op_norm(rhs))


def build_pick(
    data: InterpolationData, strategy: PickStrategy = "stein", cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> PickResult:
    """
    Build the Pick matrix by the explicit Nevanlinna-Pick formula, by the truncated series sum_k T*^k (E*E - N*N) T^k,
    or by a Stein solve. The result is symmetrized.
    """
    if strategy == "explicit":
        pick_matrix = _explicit_pick(data, cfg)
    elif strategy == "series":
        pick_matrix = _series_pick(data, cfg)
    elif strategy == "stein":
        pick_matrix = solve_stein(data.T.conj().T, data.stein_rhs, cfg)
    else:
        raise ValueError(f"unknown Pick strategy: {strategy}")

    pick_matrix = hermitian_part(pick_matrix)
    residual = stein_residual(data, pick_matrix)
    logger.debug("built a %dx%d Pick matrix (%s), Stein residual %.2e", data.n, data.n, strategy, residual)
    return PickResult(P=pick_matrix, strategy=strategy, stein_residual=residual)


def _explicit_pick(data: InterpolationData, cfg: ToleranceConfig) -> np.ndarray:
    if not data.is_diagonal(cfg):
        raise NonDiagonalNodes("the explicit Pick formula needs a diagonal T")
    nodes = data.nodes
    if np.any(np.abs(nodes) >= 1.0):
        raise NodesOutsideDisk(f"the explicit Pick formula needs nodes in the open disk, got {nodes.tolist()}")
    if nodes.size > 1:
        separation = np.abs(nodes[:, None] - nodes[None, :]) + np.eye(nodes.size)
        if np.min(separation) <= cfg.psd_tol:
            raise RepeatedNodes("the explicit Pick formula needs distinct nodes")
    denominator = 1.0 - np.outer(nodes, nodes.conj())
    return (data.E.conj().T @ data.E - data.N.conj().T @ data.N) / denominator


def _series_pick(data: InterpolationData, cfg: ToleranceConfig) -> np.ndarray:
    rhs = data.stein_rhs
    rho = spectral_radius(data.T)
    terms = truncation_length(rho, op_norm(rhs), cfg) + data.n
    pick_matrix = np.zeros_like(rhs)
    term = rhs
    for _ in range(terms):
        pick_matrix = pick_matrix + term
        term = data.T.conj().T @ term @ data.T
    logger.debug("series Pick matrix: %d terms, tail bound %.2e", terms, geometric_tail(rho, op_norm(rhs), terms))
    return pick_matrix


def check_solvable(pick_matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> PsdCertificate:
    """
    The problem is solvable exactly when its Pick matrix is positive semidefinite.
    """
    return psd_certificate(pick_matrix, cfg)


def observability_coeffs(
    e_matrix: Any, t_matrix: Any, x: Any, count: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> ObservabilityExpansion:
    """
    The first `count` Taylor coefficients E T^k x of E(I - zT)^-1 x. The tail bound is only available when
    rho(T) < 1; otherwise the coefficients are returned unbounded.
    """
    e_matrix, t_matrix, x = as_matrix(e_matrix, "E"), as_matrix(t_matrix, "T"), as_column(x, "x")
    if e_matrix.shape[1] != t_matrix.shape[0] or x.shape[0] != t_matrix.shape[0]:
        raise DimensionMismatch("E, T and x have incompatible dimensions")
    coefficients = []
    state = x
    for _ in range(count):
        coefficients.append(e_matrix @ state)
        state = t_matrix @ state

    rho = spectral_radius(t_matrix)
    tail_bound = None
    if rho < 1.0:
        tail_bound = geometric_tail(rho, op_norm(e_matrix) * op_norm(x), count)
    else:
        logger.debug("observability coefficients requested for an unstable pair (rho=%.6f)", rho)
    return ObservabilityExpansion(coefficients=tuple(coefficients), tail_bound=tail_bound)


# kernels


def fs_value(data: InterpolationData, schur: Realization, z: complex, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    F^S(z) = (E - S(z) N)(I - zT)^-1, a q x n matrix.
    """
    row = data.E - evaluate(schur, z, 0, cfg) @ data.N
    resolvent = np.eye(data.n) - z * data.T
    return scipy.linalg.solve(resolvent.T, row.T).T


def fs_function(data: InterpolationData, schur: Realization) -> Realization:
    """
    F^S as a realization: (E - S N) composed with the kernel column (I - zT)^-1.
    """
    if schur.shape != (data.q, data.p):
        raise DimensionMismatch(f"S must be {data.q}x{data.p} for this data, got {schur.shape}")
    numerator = constant(data.E) - schur @ constant(data.N)
    return numerator @ kernel_column(np.eye(data.n), data.T)


def dbr_kernel_value(schur: Realization, z: complex, w: complex, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    The de Branges-Rovnyak kernel (I - S(z) S(w)*) / (1 - z conj(w)).
    """
    s_z = evaluate(schur, z, 0, cfg)
    s_w = s_z if z == w else evaluate(schur, w, 0, cfg)
    return (np.eye(schur.output_dim) - s_z @ s_w.conj().T) / (1.0 - z * np.conj(w))


class DeBrangesRovnyakKernel:
    """
    The kernel K_S(z, w) = (I - S(z) S(w)*) / (1 - z conj(w)) of a Schur-class function S.
    """

    def __init__(self, schur: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> None:
        self.schur = schur
        self.cfg = cfg

    def __call__(self, z: complex, w: complex) -> np.ndarray:
        return dbr_kernel_value(self.schur, z, w, self.cfg)


class SzegoKernel:
    """
    The Szego kernel I / (1 - z conj(w)) of H^2 (the de Branges-Rovnyak kernel of S = 0).
    """

    def __init__(self, dim: int = 1) -> None:
        self.dim = dim

    def __call__(self, z: complex, w: complex) -> np.ndarray:
        return np.eye(self.dim, dtype=np.complex128) / (1.0 - z * np.conj(w))


def szego_kernel(dim: int = 1) -> SzegoKernel:
    """
    The Szego kernel evaluator of vector-valued H^2 with `dim` components.
    """
    return SzegoKernel(dim)


def dbr_kernel(schur: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> DeBrangesRovnyakKernel:
    """
    The de Branges-Rovnyak kernel evaluator of S.
    """
    return DeBrangesRovnyakKernel(schur, cfg)


def pick_kernel_matrix(
    pick_matrix: np.ndarray,
    data: InterpolationData,
    schur: Realization,
    points: Sequence[complex],
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """
    The compact assembly of the kernel [[P, F^S(w)*], [F^S(z), K_S(z, w)]] on a point tuple: P once in the corner,
    the F^S(z_j) blocks along the border and the K_S(z_i, z_j) blocks inside. It is PSD for every tuple exactly when
    the kernel is positive.
    """
    n, q, m = data.n, data.q, len(points)
    fs_values = [fs_value(data, schur, z, cfg) for z in points]
    s_values = [evaluate(schur, z, 0, cfg) for z in points]
    matrix = np.zeros((n + m * q, n + m * q), dtype=np.complex128)
    matrix[:n, :n] = pick_matrix
    for j, (z_j, fs_j, s_j) in enumerate(zip(points, fs_values, s_values)):
        rows = slice(n + j * q, n + (j + 1) * q)
        matrix[rows, :n] = fs_j
        matrix[:n, rows] = fs_j.conj().T
        for i, (z_i, s_i) in enumerate(zip(points, s_values)):
            matrix[n + i * q : n + (i + 1) * q, rows] = (np.eye(q) - s_i @ s_j.conj().T) / (1.0 - z_i * np.conj(z_j))
    return matrix


def _relative_min_eig(certificate: PsdCertificate) -> float:
    return certificate.min_eigenvalue / certificate.scale


def fmi_check(
    data: InterpolationData,
    schur: Realization,
    points: Sequence[complex],
    pick_matrix: Optional[np.ndarray] = None,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> VerificationReport:
    """
    The pointwise matrix inequality [[P, F^S(z)*], [F^S(z), (I - S(z)S(z)*)/(1 - |z|^2)]] >= 0 at each point. It is
    implied by kernel positivity; the per-point minimal eigenvalues are kept as plot samples.
    """
    if pick_matrix is None:
        pick_matrix = build_pick(data, "stein", cfg).P
    samples = []
    worst = np.inf
    for z in points:
        certificate = psd_certificate(pick_kernel_matrix(pick_matrix, data, schur, [z], cfg), cfg)
        worst = min(worst, _relative_min_eig(certificate))
        samples.append(
            KernelSample(z_re=float(np.real(z)), z_im=float(np.imag(z)), min_eig=certificate.min_eigenvalue)
        )
    return VerificationReport(
        subject="pointwise matrix inequality",
        checks=(Check.at_least("pointwise_positivity", worst, -cfg.psd_tol),),
        samples=tuple(samples),
    )


def interpolation_residual(data: InterpolationData, schur: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    ||sum_k T*^k E* S_k - N*|| with the series truncated per truncation_tol. Needs rho(T) < 1.
    """
    rho_t = spectral_radius(data.T)
    if rho_t >= 1.0:
        raise UnboundedTruncation(
            f"rho(T) = {rho_t:.6f} >= 1: the pair (E, T) is not output stable, verify boundary data with "
            "pickforge.boundary instead"
        )
    rho = max(rho_t, spectral_radius(schur.A))
    bound = op_norm(data.E) * (op_norm(schur.C) * op_norm(schur.B) + op_norm(schur.D))
    terms = truncation_length(rho, bound, cfg) + data.n + schur.state_dim

    left = data.E.conj().T
    total = left @ schur.D
    state = schur.B
    for _ in range(terms):
        left = data.T.conj().T @ left
        total = total + left @ (schur.C @ state)
        state = schur.A @ state
    return op_norm(total - data.N.conj().T)


def verify_interpolant(
    data: InterpolationData,
    schur: Realization,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    seed: int = 0,
    pick_matrix: Optional[np.ndarray] = None,
) -> VerificationReport:
    """
    Verify a candidate solution: sampled Schur-class membership, the interpolation condition residual from the Taylor
    coefficients of S, and positivity of the kernel [[P, F^S(w)*], [F^S(z), K_S(z, w)]] on random point tuples.
    """
    if schur.shape != (data.q, data.p):
        raise DimensionMismatch(f"a solution must be {data.q}x{data.p}, got {schur.shape}")
    residual = interpolation_residual(data, schur, cfg)
    schur_certificate = certify_schur(schur, cfg)
    if pick_matrix is None:
        pick_matrix = build_pick(data, "stein", cfg).P

    rng = np.random.default_rng(seed)
    worst = np.inf
    sampled_points = []
    for _ in range(cfg.sample_tuples):
        points = random_disk_points(rng, cfg.tuple_size, KERNEL_SAMPLING_RADIUS)
        sampled_points.extend(points)
        certificate = psd_certificate(pick_kernel_matrix(pick_matrix, data, schur, points, cfg), cfg)
        worst = min(worst, _relative_min_eig(certificate))

    pointwise = fmi_check(data, schur, sampled_points, pick_matrix, cfg)
    checks = (
        Check.at_most("schur_sup_norm", schur_certificate.sup_singular_value, 1.0 + cfg.residual_tol),
        Check.at_most("interpolation_condition", residual, cfg.residual_tol * max(1.0, op_norm(data.N))),
        Check.at_least("kernel_positivity", worst, -cfg.psd_tol),
    )
    return VerificationReport(subject="interpolant", checks=checks + pointwise.checks, samples=pointwise.samples)


def membership_certificate(
    kernel: KernelEvaluator,
    function: Realization,
    gamma: float,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> PsdCertificate:
    """
    Sampled certificate that F belongs to H(K) with norm at most gamma: K(w, z) - F(w)F(z)*/gamma^2 must be a positive
    kernel. The certificate of the worst random tuple is returned.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    rng = np.random.default_rng(seed)
    worst: Optional[PsdCertificate] = None
    for _ in range(cfg.sample_tuples):
        points = random_disk_points(rng, cfg.tuple_size)
        values = [evaluate(function, z, 0, cfg) for z in points]
        gram = np.block(
            [
                [kernel(z_i, z_j) - (v_i @ v_j.conj().T) / gamma**2 for z_j, v_j in zip(points, values)]
                for z_i, v_i in zip(points, values)
            ]
        )
        certificate = psd_certificate(gram, cfg)
        if worst is None or _relative_min_eig(certificate) < _relative_min_eig(worst):
            worst = certificate
    return worst


def sample_data(
    schur: Realization, points: Sequence[complex], e_vectors: Sequence[Any], cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> InterpolationData:
    """
    Nevanlinna-Pick data generated by a known function: N_i = S(z_i)* E_i.
    """
    n_vectors = [evaluate(schur, z, 0, cfg).conj().T @ decode_vector(e) for z, e in zip(points, e_vectors)]
    return InterpolationData.from_points(points, e_vectors, n_vectors)


def encode_points(points: Sequence[complex]) -> list[list[float]]:
    """
    Encode nodes as [re, im] pairs.
    """
    return [encode_complex(point) for point in points]
