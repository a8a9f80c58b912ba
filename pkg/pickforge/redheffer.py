# pylint: disable=invalid-name
"""
The Redheffer route to the solution set, which works for singular Pick matrices too.

With P = L* L (L of full row rank r) the Stein identity says that V: [L x; N x] -> [L T x; E x] is isometric. V is
extended by the defect spaces to a unitary colligation U = [[A, B1, B2], [C1, D11, D12], [C2, D21, 0]] whose
characteristic function Sigma parametrizes every solution as S = Sigma11 + Sigma12 (I - E Sigma22)^-1 E Sigma21.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import DimensionMismatch, IsometryDefect, NotPositiveSemidefinite, NotSchurClass, StructureError
from pickforge.models import Check, ComplexMatrix, Immutable, VerificationReport
from pickforge.numerics import as_matrix, hermitian_eig, normalize_phases, op_norm, orthogonal_complement
from pickforge.numerics import null_basis, orthonormal_basis, pinv, psd_certificate
from pickforge.pick import InterpolationData, dbr_kernel_value, fs_value
from pickforge.realizations import Realization, certify_schur, combine, constant, evaluate, identity, kernel_column
from pickforge.realizations import circle_points, prune, random_disk_points, realize_taylor, select

logger = logging.getLogger(__name__)

PARAMETER_FIT_SAMPLES = 32
PARAMETER_FIT_RADIUS = 0.5


class RedhefferColligation(Immutable):
    """
    The unitary colligation U of size (r + q + d) x (r + p + d*), where r is the rank of P, d the dimension of the
    defect space Delta (complement of the domain of V) and d* that of Delta* (complement of the range of V). The rows
    are ordered (X0, Y, Delta) and the columns (X0, U, Delta*).
    """

    U: ComplexMatrix
    factor: ComplexMatrix
    rank: int
    output_dim: int
    input_dim: int
    defect_dim: int
    codefect_dim: int
    domain_basis: ComplexMatrix
    range_basis: ComplexMatrix
    defect_basis: ComplexMatrix
    codefect_basis: ComplexMatrix
    range_chain_trivial: bool

    def _rows(self, name: str) -> slice:
        r, q = self.rank, self.output_dim
        return {"x": slice(0, r), "y": slice(r, r + q), "d": slice(r + q, r + q + self.defect_dim)}[name]

    def _cols(self, name: str) -> slice:
        r, p = self.rank, self.input_dim
        return {"x": slice(0, r), "u": slice(r, r + p), "d": slice(r + p, r + p + self.codefect_dim)}[name]

    def part(self, rows: str, cols: str) -> np.ndarray:
        """
        A block of U; rows in {"x", "y", "d"} and columns in {"x", "u", "d"}.
        """
        return np.array(self.U[self._rows(rows), self._cols(cols)])

    @property
    def A(self) -> np.ndarray:
        return self.part("x", "x")

    @property
    def B1(self) -> np.ndarray:
        return self.part("x", "u")

    @property
    def B2(self) -> np.ndarray:
        return self.part("x", "d")

    @property
    def C1(self) -> np.ndarray:
        return self.part("y", "x")

    @property
    def C2(self) -> np.ndarray:
        return self.part("d", "x")

    @property
    def D11(self) -> np.ndarray:
        return self.part("y", "u")

    @property
    def D12(self) -> np.ndarray:
        return self.part("y", "d")

    @property
    def D21(self) -> np.ndarray:
        return self.part("d", "u")

    @property
    def D22(self) -> np.ndarray:
        return self.part("d", "d")

    @property
    def unitarity_residual(self) -> float:
        """
        max(||U*U - I||, ||UU* - I||)
        """
        size = self.U.shape[0]
        return max(op_norm(self.U.conj().T @ self.U - np.eye(size)), op_norm(self.U @ self.U.conj().T - np.eye(size)))


class SigmaFunction(Immutable):
    """
    The characteristic function Sigma of a Redheffer colligation, mapping U + Delta* to Y + Delta, together with the
    factor L of the Pick matrix the colligation was built from (P = L* L).
    """

    sigma: Realization
    factor: ComplexMatrix
    output_dim: int
    input_dim: int
    defect_dim: int
    codefect_dim: int

    @property
    def parameter_shape(self) -> tuple[int, int]:
        """
        Parameters map Delta to Delta*.
        """
        return self.codefect_dim, self.defect_dim

    @property
    def trivial_defect(self) -> bool:
        """
        Whether the parameter space is a single point, i.e. the solution is unique.
        """
        return self.defect_dim == 0 or self.codefect_dim == 0

    def block(self, row: int, col: int) -> Realization:
        """
        Sigma_11 (q x p), Sigma_12 (q x d*), Sigma_21 (d x p) or Sigma_22 (d x d*). Empty blocks are not representable
        and raise DimensionMismatch.
        """
        q, p = self.output_dim, self.input_dim
        rows = {1: slice(0, q), 2: slice(q, q + self.defect_dim)}[row]
        cols = {1: slice(0, p), 2: slice(p, p + self.codefect_dim)}[col]
        if rows.stop == rows.start or cols.stop == cols.start:
            raise DimensionMismatch(f"Sigma_{row}{col} is empty for defect dimensions {self.parameter_shape}")
        return select(self.sigma, rows, cols)

    def __call__(self, z: complex) -> np.ndarray:
        return evaluate(self.sigma, z)


def pick_factor(pick_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    L = Lambda_r^(1/2) W_r* (r x n) from the eigenvectors of P with eigenvalue above psd_tol * max(1, ||P||), so that
    L* L = P up to the discarded eigenvalues. The columns of W are phase-normalized.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    certificate = psd_certificate(pick_matrix, cfg)
    if not certificate:
        raise NotPositiveSemidefinite(
            f"the Pick matrix is not positive semidefinite (min eigenvalue {certificate.min_eigenvalue:.3e})",
            certificate=certificate,
        )
    eigenvalues, eigenvectors = hermitian_eig(pick_matrix)
    keep = eigenvalues > cfg.psd_tol * certificate.scale
    kept_vectors = normalize_phases(eigenvectors[:, keep][:, ::-1])
    return np.sqrt(eigenvalues[keep][::-1])[:, None] * kept_vectors.conj().T


def range_chain_trivial(t_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """
    Whether the intersection of the ranges of (T*)^k, k >= 1, is zero. The chain of ranges stabilizes after at most n
    steps, so it is enough to look at the rank of (T*)^n.
    """
    t_matrix = as_matrix(t_matrix, "T")
    power = np.eye(t_matrix.shape[0])
    ranks = []
    for _ in range(t_matrix.shape[0]):
        power = t_matrix.conj().T @ power
        ranks.append(orthonormal_basis(power, cfg).shape[1])
        if ranks[-1] == 0:
            break
    logger.debug("range chain of T*: %s", ranks)
    return not ranks or ranks[-1] == 0


def build_colligation(
    data: InterpolationData, pick_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> RedhefferColligation:
    """
    Build the unitary colligation U = [[V, Q*], [Q^*, 0]] where V = [L T; E] [L; N]^+ is the isometry defined on the
    range of [L; N], Q* is an orthonormal basis of the complement of the range of [L T; E] and Q an orthonormal basis
    of the complement of the range of [L; N].
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    factor = pick_factor(pick_matrix, cfg)
    r, q, p = factor.shape[0], data.q, data.p

    domain = np.vstack([factor, data.N])
    image = np.vstack([factor @ data.T, data.E])
    defect = op_norm(domain.conj().T @ domain - image.conj().T @ image)
    if defect > cfg.residual_tol * max(1.0, op_norm(domain) ** 2, op_norm(image) ** 2):
        raise IsometryDefect(
            f"[L; N] x -> [L T; E] x is not isometric (defect {defect:.3e}); the data violate the Stein identity",
            defect=defect,
        )

    domain_basis = orthonormal_basis(domain, cfg)
    range_basis = orthonormal_basis(image, cfg)
    if domain_basis.shape[1] != range_basis.shape[1]:
        raise IsometryDefect(
            f"the domain and the range of V have different dimensions ({domain_basis.shape[1]} and "
            f"{range_basis.shape[1]})"
        )
    defect_basis = orthogonal_complement(domain_basis, r + p, cfg)
    codefect_basis = orthogonal_complement(range_basis, r + q, cfg)
    d, d_star = defect_basis.shape[1], codefect_basis.shape[1]

    isometry = image @ pinv(domain, cfg)
    unitary = np.zeros((r + q + d, r + p + d_star), dtype=np.complex128)
    unitary[: r + q, : r + p] = isometry
    unitary[: r + q, r + p :] = codefect_basis
    unitary[r + q :, : r + p] = defect_basis.conj().T

    colligation = RedhefferColligation(
        U=unitary,
        factor=factor,
        rank=r,
        output_dim=q,
        input_dim=p,
        defect_dim=d,
        codefect_dim=d_star,
        domain_basis=domain_basis,
        range_basis=range_basis,
        defect_basis=defect_basis,
        codefect_basis=codefect_basis,
        range_chain_trivial=range_chain_trivial(data.T, cfg),
    )
    residual = colligation.unitarity_residual
    if residual > cfg.residual_tol:
        raise IsometryDefect(f"the completed colligation is not unitary (residual {residual:.3e})", residual=residual)
    logger.debug("Redheffer colligation: rank %d, defect dimensions (%d, %d)", r, d, d_star)
    return colligation


def sigma(colligation: RedhefferColligation) -> SigmaFunction:
    """
    Sigma(z) = [[D11, D12], [D21, 0]] + z [C1; C2] (I - zA)^-1 [B1, B2].
    """
    r = colligation.rank
    unitary = colligation.U
    return SigmaFunction(
        sigma=Realization(A=unitary[:r, :r], B=unitary[:r, r:], C=unitary[r:, :r], D=unitary[r:, r:]),
        factor=colligation.factor,
        output_dim=colligation.output_dim,
        input_dim=colligation.input_dim,
        defect_dim=colligation.defect_dim,
        codefect_dim=colligation.codefect_dim,
    )


def _check_param(sig: SigmaFunction, param: Optional[Realization], cfg: ToleranceConfig) -> Optional[Realization]:
    """
    None stands for the central parameter; with a trivial defect space no other parameter exists.
    """
    if sig.trivial_defect:
        if param is not None:
            raise DimensionMismatch("the parameter space is trivial, pass param=None")
        return None
    if param is None:
        return constant(np.zeros(sig.parameter_shape))
    if param.shape != sig.parameter_shape:
        raise DimensionMismatch(f"the parameter must be {sig.parameter_shape}, got {param.shape}")
    certificate = certify_schur(param, cfg)
    if not certificate:
        raise NotSchurClass(
            f"the parameter is not in the Schur class (sup norm {certificate.sup_singular_value:.6f})",
            certificate=certificate,
        )
    return param


def _feedback(sig: SigmaFunction, param: Realization) -> Realization:
    """
    (I - E Sigma22)^-1, invertible at the origin because Sigma22(0) = 0.
    """
    return combine("invert", identity(sig.codefect_dim) - param @ sig.block(2, 2))


def redheffer_apply(
    sig: SigmaFunction, param: Optional[Realization] = None, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> Realization:
    """
    S = Sigma11 + Sigma12 (I - E Sigma22)^-1 E Sigma21. `param=None` gives the central solution Sigma11.
    """
    param = _check_param(sig, param, cfg)
    sigma11 = sig.block(1, 1)
    if param is None:
        return prune(sigma11)
    return prune(sigma11 + sig.block(1, 2) @ _feedback(sig, param) @ param @ sig.block(2, 1))


def maps_g_gamma(
    sig: SigmaFunction, param: Optional[Realization] = None, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[Optional[Realization], Optional[Realization]]:
    """
    G = Sigma12 (I - E Sigma22)^-1 and Gamma = (C1 + G E C2)(I - zA)^-1. None stands for a function with no columns
    (G when Delta* is trivial, Gamma when P = 0).
    """
    param = _check_param(sig, param, cfg)
    q = sig.output_dim
    r = sig.factor.shape[0]
    a_matrix = sig.sigma.A
    c1, c2 = sig.sigma.C[:q], sig.sigma.C[q:]

    g_map = None
    if sig.codefect_dim > 0:
        g_map = sig.block(1, 2) if param is None else prune(sig.block(1, 2) @ _feedback(sig, param))

    gamma = None
    if r > 0:
        numerator = constant(c1)
        if param is not None:
            numerator = numerator + g_map @ param @ constant(c2)
        gamma = prune(numerator @ kernel_column(np.eye(r), a_matrix))
    return g_map, gamma


def parameter_kernel(sig: SigmaFunction, param: Optional[Realization], z: complex, w: complex, cfg=DEFAULT_TOLERANCES):
    """
    K_E(z, w) on Delta*, including the degenerate cases: with Delta trivial E is the zero map out of a zero space and
    its kernel is the Szego kernel.
    """
    if sig.codefect_dim == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if sig.defect_dim == 0:
        return np.eye(sig.codefect_dim) / (1.0 - z * np.conj(w))
    if param is None:
        param = constant(np.zeros(sig.parameter_shape))
    return dbr_kernel_value(param, z, w, cfg)


def sigma_kernel_residual(sig: SigmaFunction, pairs: Sequence[tuple[complex, complex]]) -> float:
    """
    The largest defect of I - Sigma(z) Sigma(w)* = (1 - z conj(w)) C (I - zA)^-1 (I - wA)^-* C*, which holds because
    the colligation is unitary.
    """
    size = sig.sigma.output_dim
    a_matrix, c_matrix = sig.sigma.A, sig.sigma.C
    eye = np.eye(a_matrix.shape[0])
    worst = 0.0
    for z, w in pairs:
        left = np.eye(size) - sig(z) @ sig(w).conj().T
        h_z = np.linalg.solve((eye - z * a_matrix).T, c_matrix.T).T
        h_w = np.linalg.solve((eye - w * a_matrix).T, c_matrix.T).T
        right = (1.0 - z * np.conj(w)) * h_z @ h_w.conj().T
        worst = max(worst, op_norm(left - right))
    return worst


def verify_decomposition(
    schur: Realization,
    param: Optional[Realization],
    g_map: Optional[Realization],
    gamma: Optional[Realization],
    pick_matrix: np.ndarray,
    data: InterpolationData,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    sig: Optional[SigmaFunction] = None,
    seed: int = 0,
    pairs: int = 50,
) -> VerificationReport:
    """
    Check the kernel decomposition K_S(z, w) = G(z) K_E(z, w) G(w)* + Gamma(z) Gamma(w)*, the factorization
    Gamma(z) L = F^S(z) and, when Sigma is given, its kernel identity, at random pairs of points.
    """
    factor = sig.factor if sig is not None else pick_factor(pick_matrix, cfg)
    rng = np.random.default_rng(seed)
    points = random_disk_points(rng, 2 * pairs)
    sampled = list(zip(points[:pairs], points[pairs:]))
    q = schur.output_dim

    def _param_kernel(z: complex, w: complex) -> np.ndarray:
        if sig is not None:
            return parameter_kernel(sig, param, z, w, cfg)
        if param is None:
            return np.eye(g_map.input_dim) / (1.0 - z * np.conj(w))
        return dbr_kernel_value(param, z, w, cfg)

    decomposition, factorization = 0.0, 0.0
    for z, w in sampled:
        right = np.zeros((q, q), dtype=np.complex128)
        if g_map is not None:
            right = right + evaluate(g_map, z, 0, cfg) @ _param_kernel(z, w) @ evaluate(g_map, w, 0, cfg).conj().T
        if gamma is not None:
            right = right + evaluate(gamma, z, 0, cfg) @ evaluate(gamma, w, 0, cfg).conj().T
        decomposition = max(decomposition, op_norm(dbr_kernel_value(schur, z, w, cfg) - right))

        gamma_l = np.zeros((q, data.n)) if gamma is None else evaluate(gamma, z, 0, cfg) @ factor
        factorization = max(factorization, op_norm(gamma_l - fs_value(data, schur, z, cfg)))

    checks = [
        Check.at_most("kernel_decomposition", decomposition, cfg.residual_tol),
        Check.at_most("gamma_factorization", factorization, cfg.residual_tol),
    ]
    if sig is not None:
        checks.append(Check.at_most("sigma_kernel_identity", sigma_kernel_residual(sig, sampled), cfg.residual_tol))
    return VerificationReport(subject="kernel decomposition", checks=tuple(checks))


class ParameterSamples(Immutable):
    """
    Pointwise values of a parameter reproducing a given solution, with the fit residual and the largest norm.
    """

    points: tuple[tuple[float, float], ...]
    values: tuple[ComplexMatrix, ...]
    residual: float
    sup_norm: float


def recover_redheffer_param(
    sig: SigmaFunction, schur: Realization, points: Sequence[complex], cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> ParameterSamples:
    """
    Solve Sigma11 + Sigma12 X Sigma21 = S pointwise for X = (I - E Sigma22)^-1 E in the least-squares sense and
    recover E = X (I + Sigma22 X)^-1 at each point.
    """
    if sig.trivial_defect:
        raise DimensionMismatch("the parameter space is trivial, there is no parameter to recover")
    q, p = sig.output_dim, sig.input_dim
    values, residual, sup_norm = [], 0.0, 0.0
    for z in points:
        value = sig(z)
        s11, s12, s21, s22 = value[:q, :p], value[:q, p:], value[q:, :p], value[q:, p:]
        target = evaluate(schur, z, 0, cfg) - s11
        x = pinv(s12, cfg) @ target @ pinv(s21, cfg)
        param_value = x @ np.linalg.inv(np.eye(s22.shape[0]) + s22 @ x)
        residual = max(residual, op_norm(s12 @ x @ s21 - target))
        sup_norm = max(sup_norm, op_norm(param_value))
        values.append(param_value)
    return ParameterSamples(
        points=tuple((float(np.real(z)), float(np.imag(z))) for z in points),
        values=tuple(values),
        residual=residual,
        sup_norm=sup_norm,
    )


def parameter_determined(t_matrix: np.ndarray, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """
    Whether the intersection of the ranges of (T*)^k meets Ker T* only in zero. Under this condition the Redheffer
    transform is injective, so S determines its parameter and G is an isometry from H(E) into H(S).
    """
    if range_chain_trivial(t_matrix, cfg):
        return True
    t_matrix = as_matrix(t_matrix, "T")
    core = orthonormal_basis(np.linalg.matrix_power(t_matrix.conj().T, t_matrix.shape[0]), cfg)
    kernel = null_basis(t_matrix.conj().T, cfg)
    if kernel.shape[1] == 0:
        return True
    return orthonormal_basis(np.hstack([core, kernel]), cfg).shape[1] == core.shape[1] + kernel.shape[1]


def fit_redheffer_param(
    sig: SigmaFunction,
    schur: Realization,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    samples: int = PARAMETER_FIT_SAMPLES,
    radius: float = PARAMETER_FIT_RADIUS,
) -> Realization:
    """
    A realization of the parameter E with S = Sigma11 + Sigma12 (I - E Sigma22)^-1 E Sigma21: E is recovered on a
    circle inside the disk, its Taylor coefficients are read off by the FFT and realized from their Hankel matrix. The
    result has to reproduce S, otherwise StructureError.
    """
    points = circle_points(samples, radius)
    recovered = recover_redheffer_param(sig, schur, points, cfg)
    if recovered.residual > cfg.residual_tol:
        raise StructureError(
            f"S is not of the Redheffer form for this colligation (pointwise residual {recovered.residual:.3e})",
            residual=recovered.residual,
        )
    values = np.array([np.asarray(value) for value in recovered.values])
    spectrum = np.fft.fft(values, axis=0) / samples
    count = samples // 2 + 1
    coefficients = [spectrum[k] / radius**k for k in range(count)]
    param = prune(realize_taylor(coefficients, cfg.residual_tol))

    mismatch = max(
        op_norm(evaluate(redheffer_apply(sig, param, cfg), z, 0, cfg) - evaluate(schur, z, 0, cfg))
        for z in random_disk_points(np.random.default_rng(0), 8)
    )
    if mismatch > cfg.residual_tol:
        raise StructureError(
            f"the fitted parameter does not reproduce S (mismatch {mismatch:.3e})", residual=recovered.residual
        )
    logger.debug("Redheffer parameter fitted with McMillan degree %d", param.state_dim)
    return param
