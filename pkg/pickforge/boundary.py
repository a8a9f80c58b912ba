# pylint: disable=invalid-name
"""
Boundary interpolation at a point t0 of the unit circle: Caratheodory-Julia certification, boundary derivative jets,
the structured boundary Pick matrix, boundary reproducing kernels of H(S) and the reduction of boundary interpolation
to an H(S) interpolation problem with Jordan-block data.

Boundary limits are computed exactly when the realization is regular at t0 and by radial Richardson extrapolation
otherwise.
"""

import logging
import math
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.special import comb

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import CaratheodoryJuliaFailure, DimensionMismatch, ExtrapolationFailure, InvalidNodes
from pickforge.errors import PoleCancellationFailure, SingularResolvent, UnboundedTruncation, VerificationFailure
from pickforge.hs_interp import HSProblemData, check_admissible, is_h2_isometric, kernel_form_certificate
from pickforge.hs_interp import h2_norm_check
from pickforge.models import Check, ComplexMatrix, Immutable, VerificationReport, decode_complex, decode_vector
from pickforge.models import as_complex_matrix
from pickforge.numerics import as_matrix, hermitian_part, op_norm
from pickforge.pick import InterpolationData, fs_function
from pickforge.realizations import Realization, evaluate, prune, resolvent_lu, select

logger = logging.getLogger(__name__)

RADIAL_STEP = 0.5
RADIAL_LEVELS = 8
DIVERGENCE_RATIO = 1.5
EXTRAPOLATION_TOL = 1e-6
POLE_SEPARATION = 1e-6


# radial extrapolation


class RadialLimit(Immutable):
    """
    A boundary limit estimated along the radius: the extrapolated value, the difference to the extrapolation with one
    level less, and the growth ratio of the last two samples (above DIVERGENCE_RATIO means the samples blow up).
    """

    value: ComplexMatrix
    error_estimate: float
    growth_ratio: float
    converged: bool


def radial_ladder() -> np.ndarray:
    """
    The radii 1 - RADIAL_STEP * 2^-k, k = 0 .. RADIAL_LEVELS - 1.
    """
    return 1.0 - RADIAL_STEP * 0.5 ** np.arange(RADIAL_LEVELS)


def richardson_limit(values: Sequence[np.ndarray], step_ratio: float = 2.0) -> np.ndarray:
    """
    Richardson extrapolation of samples taken at steps h, h / step_ratio, h / step_ratio^2, ... towards step zero,
    assuming an error expansion in integer powers of the step.
    """
    last_level = [np.asarray(value, dtype=np.complex128) for value in values]
    if len(last_level) == 1:
        return last_level[0]
    for m in range(1, len(last_level)):
        mult = step_ratio**m
        factor = 1.0 / (mult - 1.0)
        last_level = [factor * (mult * high - low) for low, high in zip(last_level[:-1], last_level[1:])]
    return last_level[0]


def extrapolate(sampler: Callable[[float], Any]) -> RadialLimit:
    """
    Extrapolate sampler(r) to r = 1 along the radial ladder.
    """
    values = [np.atleast_2d(np.asarray(sampler(r), dtype=np.complex128)) for r in radial_ladder()]
    norms = [op_norm(value) for value in values]
    if norms[-2] > 0.0:
        growth = norms[-1] / norms[-2]
    else:
        growth = math.inf if norms[-1] > 0.0 else 1.0
    diverging = norms[-1] > max(1.0, norms[0]) and growth > DIVERGENCE_RATIO

    limit = richardson_limit(values)
    error = op_norm(limit - richardson_limit(values[:-1]))
    converged = not diverging and error <= EXTRAPOLATION_TOL * max(1.0, op_norm(limit))
    if not converged:
        logger.debug("radial extrapolation did not converge: growth %.3f, error %.3e", growth, error)
    return RadialLimit(value=limit, error_estimate=error, growth_ratio=growth, converged=converged)


def _unimodular(t0: complex, cfg: ToleranceConfig) -> complex:
    t0 = complex(t0)
    if abs(abs(t0) - 1.0) > cfg.residual_tol:
        raise InvalidNodes(f"the boundary point must lie on the unit circle, got |t0| = {abs(t0):.12f}")
    return t0 / abs(t0)


def radial_limit(f: Realization, t0: complex, order: int = 0, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    The radial limit of f^(order)(r t0) / order! as r -> 1.
    """
    t0 = _unimodular(t0, cfg)
    return extrapolate(lambda r: evaluate(f, r * t0, order, cfg) / math.factorial(order))


def lower_order_limits(
    f: Realization, t0: complex, n: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> tuple[RadialLimit, ...]:
    """
    Radial limits of the Taylor coefficients of order 0 .. n. When the order-n limit exists all the lower-order ones
    exist as well.
    """
    return tuple(radial_limit(f, t0, order, cfg) for order in range(n + 1))


# jets and the Caratheodory-Julia condition


class BoundaryJet(Immutable):
    """
    S_j = S^(j)(t0) / j! for j = 0 .. order, and the Caratheodory-Julia limit of (I - S(z)S(z)*) / (1 - |z|^2) along
    the radius (None when it is infinite).
    """

    t0: tuple[float, float]
    derivatives: tuple[ComplexMatrix, ...]
    cj_limit: Optional[ComplexMatrix] = None
    extrapolated: bool = False
    error_estimate: float = 0.0

    @property
    def point(self) -> complex:
        return complex(*self.t0)

    @property
    def order(self) -> int:
        return len(self.derivatives) - 1

    @property
    def cj_value(self) -> float:
        """
        The norm of the Caratheodory-Julia limit, +inf when the condition fails.
        """
        return math.inf if self.cj_limit is None else op_norm(self.cj_limit)

    @property
    def cj_holds(self) -> bool:
        return self.cj_limit is not None


def _cj_quotient(schur: Realization, t0: complex, cfg: ToleranceConfig) -> Callable[[float], np.ndarray]:
    def _quotient(r: float) -> np.ndarray:
        value = evaluate(schur, r * t0, 0, cfg)
        return (np.eye(schur.output_dim) - value @ value.conj().T) / (1.0 - r * r)

    return _quotient


def boundary_jet(
    schur: Realization, t0: complex, order: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> BoundaryJet:
    """
    The boundary jet of S at t0. The derivatives come from the realization when I - t0 A is invertible and from radial
    extrapolation otherwise. The Caratheodory-Julia limit equals Herm(t0 S_1 S_0*) when S_0 is a coisometry on the
    exact path; on the extrapolated path it is extrapolated from the quotient itself.
    """
    t0 = _unimodular(t0, cfg)
    if order < 0:
        raise ValueError(f"the jet order must be nonnegative, got {order}")

    candidate = schur
    try:
        resolvent_lu(candidate, t0, cfg)
    except SingularResolvent:
        candidate = prune(schur)
        try:
            resolvent_lu(candidate, t0, cfg)
        except SingularResolvent:
            candidate = None

    if candidate is not None:
        derivatives = [evaluate(candidate, t0, j, cfg) / math.factorial(j) for j in range(max(order, 1) + 1)]
        s0, s1 = derivatives[0], derivatives[1]
        coisometric = op_norm(np.eye(schur.output_dim) - s0 @ s0.conj().T) <= cfg.residual_tol
        cj_limit = hermitian_part(t0 * s1 @ s0.conj().T) if coisometric else None
        return BoundaryJet(
            t0=(t0.real, t0.imag),
            derivatives=tuple(derivatives[: order + 1]),
            cj_limit=cj_limit,
        )

    logger.warning("I - t0 A is singular at t0 = %s; falling back to radial extrapolation", t0)
    limits = lower_order_limits(schur, t0, order, cfg)
    if not all(limit.converged for limit in limits):
        raise ExtrapolationFailure(
            f"the boundary jet of order {order} at t0 = {t0} does not converge radially",
            growth_ratios=[limit.growth_ratio for limit in limits],
        )
    quotient = extrapolate(_cj_quotient(schur, t0, cfg))
    return BoundaryJet(
        t0=(t0.real, t0.imag),
        derivatives=tuple(limit.value for limit in limits),
        cj_limit=hermitian_part(quotient.value) if quotient.converged else None,
        extrapolated=True,
        error_estimate=max(limit.error_estimate for limit in limits),
    )


def _weight_coefficients(weight: Optional[Sequence[Any]], n: int, q: int) -> list[np.ndarray]:
    """
    The coefficients A_0 .. A_n of A(z) = sum_k A_k (z - t0)^k, padded with zeros; no weight means A = I.
    """
    if weight is None:
        return [np.eye(q)] + [np.zeros((q, q))] * n
    coefficients = [as_matrix(coefficient, "A_k") for coefficient in weight]
    if not coefficients:
        raise DimensionMismatch("the weight needs at least one coefficient")
    rows = coefficients[0].shape[0]
    if any(coefficient.shape != (rows, q) for coefficient in coefficients):
        raise DimensionMismatch(f"weight coefficients must all be {rows}x{q}")
    return (coefficients + [np.zeros((rows, q))] * (n + 1))[: n + 1]


def _reexpanded(coefficients: Sequence[np.ndarray], shift: complex) -> list[np.ndarray]:
    """
    Coefficients of A(w0 + u) in powers of u, where shift = w0 - t0.
    """
    count = len(coefficients)
    return [sum(comb(k, i) * shift ** (k - i) * coefficients[k] for k in range(i, count)) for i in range(count)]


def lower_toeplitz(coefficients: Sequence[np.ndarray]) -> np.ndarray:
    """
    The block lower-triangular Toeplitz matrix [A_(i-j)].
    """
    count = len(coefficients)
    rows, cols = coefficients[0].shape
    matrix = np.zeros((count * rows, count * cols), dtype=np.complex128)
    for i in range(count):
        for j in range(i + 1):
            matrix[i * rows : (i + 1) * rows, j * cols : (j + 1) * cols] = coefficients[i - j]
    return matrix


def kernel_coefficients(schur: Realization, w0: complex, n: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    The block matrix [K_ij] of coefficients of u^i conj(v)^j in K_S(w0 + u, w0 + v), i, j = 0 .. n, from the
    recursion (1 - |w0|^2) K_ij = N_ij + conj(w0) K_(i-1)j + w0 K_i(j-1) + K_(i-1)(j-1).
    """
    q = schur.output_dim
    s = [evaluate(schur, w0, j, cfg) / math.factorial(j) for j in range(n + 1)]
    denominator = 1.0 - abs(w0) ** 2
    blocks: dict[tuple[int, int], np.ndarray] = {}
    zero = np.zeros((q, q), dtype=np.complex128)
    for i in range(n + 1):
        for j in range(n + 1):
            numerator = -s[i] @ s[j].conj().T
            if i == 0 and j == 0:
                numerator = numerator + np.eye(q)
            numerator = (
                numerator
                + np.conj(w0) * blocks.get((i - 1, j), zero)
                + w0 * blocks.get((i, j - 1), zero)
                + blocks.get((i - 1, j - 1), zero)
            )
            blocks[i, j] = numerator / denominator
    return np.block([[blocks[i, j] for j in range(n + 1)] for i in range(n + 1)])


class CjResult(Immutable):
    """
    Outcome of the generalized Caratheodory-Julia test of order n: whether the weighted quotient stays bounded along
    the radius, its limit, and the jets b_j of A S at t0 when it holds.
    """

    holds: bool
    order: int
    limit: Optional[ComplexMatrix] = None
    b_jets: tuple[ComplexMatrix, ...] = ()
    growth_ratio: float = 1.0


def cj_check(
    schur: Realization,
    t0: complex,
    n: int,
    weight: Optional[Sequence[Any]] = None,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> CjResult:
    """
    The generalized Caratheodory-Julia condition of order n: boundedness of T_A(w0) [K_ij(w0)] T_A(w0)* as w0 = r t0
    approaches t0, with A re-expanded at w0. Without a weight A = I. A unimodular value on the exact path is
    required; a strictly contractive S_0 fails at once.
    """
    t0 = _unimodular(t0, cfg)
    coefficients = _weight_coefficients(weight, n, schur.output_dim)
    jet = None
    try:
        jet = boundary_jet(schur, t0, n, cfg)
    except ExtrapolationFailure as exc:
        logger.debug("no boundary jet at t0 = %s: %s", t0, exc)
    if jet is not None and not jet.extrapolated and not jet.cj_holds:
        return CjResult(holds=False, order=n, growth_ratio=math.inf)

    def _weighted(r: float) -> np.ndarray:
        w0 = r * t0
        toeplitz = lower_toeplitz(_reexpanded(coefficients, w0 - t0))
        return toeplitz @ kernel_coefficients(schur, w0, n, cfg) @ toeplitz.conj().T

    limit = extrapolate(_weighted)
    if not limit.converged or jet is None:
        return CjResult(holds=False, order=n, growth_ratio=limit.growth_ratio)
    b_jets = tuple(
        sum(coefficients[k] @ jet.derivatives[j - k] for k in range(j + 1)) for j in range(n + 1)
    )
    return CjResult(
        holds=True, order=n, limit=hermitian_part(limit.value), b_jets=b_jets, growth_ratio=limit.growth_ratio
    )


# boundary Pick matrix and kernels


def psi_matrix(t0: complex, n: int) -> np.ndarray:
    """
    The upper-triangular matrix with entries (-1)^l binom(l, j) t0^(l + j + 1) for j <= l.
    """
    t0 = complex(t0)
    psi = np.zeros((n + 1, n + 1), dtype=np.complex128)
    for j in range(n + 1):
        for ell in range(j, n + 1):
            psi[j, ell] = (-1) ** ell * comb(ell, j, exact=True) * t0 ** (ell + j + 1)
    return psi


class BoundaryPick(Immutable):
    """
    The boundary Pick matrix Hankel(S_1 .. S_2n+1) (Psi (x) I) UpperToeplitz(S_0* .. S_n*) and its factors.
    """

    P: ComplexMatrix
    hankel: ComplexMatrix
    psi: ComplexMatrix
    toeplitz: ComplexMatrix
    asymmetry: float


def boundary_pick(jet: BoundaryJet, n: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> BoundaryPick:
    """
    Assemble the boundary Pick matrix of order n from a jet of order at least 2n + 1. The product is Hermitian for
    jets of functions meeting the Caratheodory-Julia condition; it is symmetrized and the asymmetry is reported.
    """
    if jet.order < 2 * n + 1:
        raise DimensionMismatch(f"the Pick matrix of order {n} needs a jet of order {2 * n + 1}, not {jet.order}")
    s = jet.derivatives
    q, p = s[0].shape
    hankel = np.block([[s[i + j + 1] for j in range(n + 1)] for i in range(n + 1)])
    psi = psi_matrix(jet.point, n)
    toeplitz = np.zeros(((n + 1) * p, (n + 1) * q), dtype=np.complex128)
    for j in range(n + 1):
        for ell in range(j, n + 1):
            toeplitz[j * p : (j + 1) * p, ell * q : (ell + 1) * q] = s[ell - j].conj().T

    product = hankel @ np.kron(psi, np.eye(p)) @ toeplitz
    asymmetry = op_norm(product - product.conj().T)
    if asymmetry > cfg.residual_tol * max(1.0, op_norm(product)):
        logger.warning("the boundary Pick matrix is not Hermitian (asymmetry %.3e); symmetrizing", asymmetry)
    return BoundaryPick(P=hermitian_part(product), hankel=hankel, psi=psi, toeplitz=toeplitz, asymmetry=asymmetry)


def jordan_data(jet: BoundaryJet, n: int, weight: Optional[Sequence[Any]] = None) -> InterpolationData:
    """
    T = (conj(t0) I + upper shift) (x) I_r, E = [A_0* .. A_n*] and N = [b_0* .. b_n*] with b_j the jets of A S.
    Without a weight A = I, so E = [I, 0, ..] and N = [S_0* .. S_n*].
    """
    if jet.order < n:
        raise DimensionMismatch(f"Jordan data of order {n} need a jet of order {n}, got {jet.order}")
    q = jet.derivatives[0].shape[0]
    coefficients = _weight_coefficients(weight, n, q)
    r = coefficients[0].shape[0]
    jordan = np.conj(jet.point) * np.eye(n + 1) + np.eye(n + 1, k=1)
    b_jets = [sum(coefficients[k] @ jet.derivatives[j - k] for k in range(j + 1)) for j in range(n + 1)]
    return InterpolationData(
        T=np.kron(jordan, np.eye(r)),
        E=np.hstack([coefficient.conj().T for coefficient in coefficients]),
        N=np.hstack([b.conj().T for b in b_jets]),
    )


def boundary_kernels(
    schur: Realization, jet: BoundaryJet, j: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> Realization:
    """
    The boundary kernel K_(t0, j) of H(S): the j-th block column of F^S for the Jordan data of order j. The apparent
    pole at t0 has to cancel; the pruned realization is checked to be regular at t0.
    """
    data = jordan_data(jet, j)
    q = schur.output_dim
    kernel = prune(select(fs_function(data, schur), slice(0, q), slice(j * q, (j + 1) * q)))
    t0 = jet.point
    try:
        resolvent_lu(kernel, t0, cfg)
    except SingularResolvent as exc:
        raise PoleCancellationFailure(
            f"the pole of the boundary kernel of order {j} at t0 = {t0} does not cancel", original_error=exc
        ) from exc
    if kernel.state_dim:
        distance = float(np.min(np.abs(scipy.linalg.eigvals(kernel.A) - np.conj(t0))))
        if distance < POLE_SEPARATION:
            raise PoleCancellationFailure(
                f"the boundary kernel of order {j} keeps a pole at t0 = {t0} (distance {distance:.3e})"
            )
    return kernel


# reduction to an H(S) problem


class BoundaryProblem(Immutable):
    """
    Boundary interpolation of order n at t0: find f in H(S) of norm at most one with (A f)^(j)(t0) / j! = f_j for
    j = 0 .. n. Without a weight A = I.
    """

    S: Realization
    t0: tuple[float, float]
    n: int
    targets: tuple[ComplexMatrix, ...]
    weight: Optional[tuple[ComplexMatrix, ...]] = None

    @property
    def point(self) -> complex:
        return complex(*self.t0)

    @classmethod
    def from_json_dict(cls, payload: dict[str, Any]) -> "BoundaryProblem":
        """
        Decode {"S": realization, "t0": [re, im], "n": order, "targets": [vector, ...], "weight": optional list}.
        """
        extra = set(payload) - {"S", "t0", "n", "targets", "weight"}
        if extra:
            raise ValueError(f"unexpected keys in boundary problem: {', '.join(sorted(extra))}")
        t0 = decode_complex(payload["t0"])
        weight = payload.get("weight")
        return cls(
            S=Realization.from_json_dict(payload["S"]),
            t0=(t0.real, t0.imag),
            n=int(payload["n"]),
            targets=tuple(decode_vector(target).reshape(-1, 1) for target in payload["targets"]),
            weight=None if weight is None else tuple(as_complex_matrix(coefficient) for coefficient in weight),
        )

    def target_row(self) -> np.ndarray:
        """
        y = conj of the stacked targets.
        """
        if len(self.targets) != self.n + 1:
            raise DimensionMismatch(f"{self.n + 1} targets are required for order {self.n}, got {len(self.targets)}")
        return np.vstack(self.targets).conj().T


def to_hs_problem(problem: BoundaryProblem, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> HSProblemData:
    """
    The H(S) problem with Jordan data at t0 whose Gram matrix is T_A P_n T_A*, P_n the boundary Pick matrix. Its F^S
    columns are the (weighted) boundary kernels, so the H(S) interpolation conditions are the boundary conditions.
    """
    n, t0 = problem.n, _unimodular(problem.point, cfg)
    result = cj_check(problem.S, t0, n, problem.weight, cfg)
    if not result.holds:
        raise CaratheodoryJuliaFailure(
            f"S does not meet the Caratheodory-Julia condition of order {n} at t0 = {t0}",
            growth_ratio=result.growth_ratio,
        )
    jet = boundary_jet(problem.S, t0, 2 * n + 1, cfg)
    pick = boundary_pick(jet, n, cfg).P
    coefficients = _weight_coefficients(problem.weight, n, problem.S.output_dim)
    toeplitz = lower_toeplitz(coefficients)
    prob = HSProblemData(
        S=problem.S,
        data=jordan_data(jet, n, problem.weight),
        y=problem.target_row(),
        P=hermitian_part(toeplitz @ pick @ toeplitz.conj().T),
    )
    report = check_admissible(prob, cfg)
    if not report.passed:
        raise VerificationFailure("the boundary data do not give an admissible H(S) problem", report=report)
    return prob


def boundary_values(
    f: Realization, t0: complex, n: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> list[np.ndarray]:
    """
    f^(j)(t0) / j! for j = 0 .. n, exact when the pruned realization is regular at t0 and extrapolated otherwise.
    """
    candidate = prune(f)
    try:
        resolvent_lu(candidate, t0, cfg)
        return [evaluate(candidate, t0, j, cfg) / math.factorial(j) for j in range(n + 1)]
    except SingularResolvent:
        logger.warning("f is not regular at t0 = %s; extrapolating its boundary values", t0)
    limits = lower_order_limits(f, t0, n, cfg)
    if not all(limit.converged for limit in limits):
        raise ExtrapolationFailure(f"the boundary values of f at t0 = {t0} do not converge radially")
    return [limit.value for limit in limits]


def verify_boundary_solution(
    problem: BoundaryProblem,
    f: Realization,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    seed: int = 0,
    prob: Optional[HSProblemData] = None,
) -> VerificationReport:
    """
    Verify a candidate by boundary evaluation: the weighted jets of f at t0 against the targets, sampled positivity of
    the bordered kernel for ||f|| <= 1, and the H^2 norm when S is inner.
    """
    prob = prob or to_hs_problem(problem, cfg)
    t0 = problem.point
    values = boundary_values(f, t0, problem.n, cfg)
    coefficients = _weight_coefficients(problem.weight, problem.n, problem.S.output_dim)
    weighted = [sum(coefficients[k] @ values[j - k] for k in range(j + 1)) for j in range(problem.n + 1)]
    residual = max(op_norm(value - target) for value, target in zip(weighted, problem.targets))

    certificate = kernel_form_certificate(prob, f, cfg, seed)
    checks = [
        Check.at_most("boundary_interpolation", residual, cfg.residual_tol),
        Check.at_least("kernel_form_positivity", certificate.min_eigenvalue / certificate.scale, -cfg.psd_tol),
    ]
    if is_h2_isometric(problem.S, cfg):
        try:
            checks.append(h2_norm_check(prob, f, cfg))
        except UnboundedTruncation as exc:
            logger.debug("H^2 norm check skipped: %s", exc)
    return VerificationReport(subject="boundary solution", checks=tuple(checks))
