# pylint: disable=invalid-name
"""
Interpolation with a norm constraint inside the de Branges-Rovnyak space H(S): find f in H(S) with
<f, F^S x> = x* y* for every x and ||f|| <= 1.

Solutions are kept in structured form f = F^S x + carrier * h, where h is a finite combination of kernel functions of
the parameter space H(E). In these coordinates every norm is exact: <F^S x, F^S x'> = x'* P x, the carrier is isometric
and its range is orthogonal to the span of F^S.
"""

import logging
from typing import Any, Literal, Optional, Sequence

import numpy as np
import scipy.linalg
from pydantic import model_validator

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import BudgetExceeded, DegeneratePickMatrix, DimensionMismatch, InfeasibleProblem
from pickforge.errors import NumericalFailure, StructureError, UnboundedTruncation, VerificationFailure
from pickforge.models import Check, ComplexMatrix, Immutable, KernelSample, PsdCertificate, VerificationReport
from pickforge.models import decode_complex, decode_vector
from pickforge.numerics import as_matrix, hermitian_part, op_norm, pinv, psd_certificate, solve_stein, sqrt_psd
from pickforge.numerics import null_basis, spectral_radius
from pickforge.parametrize import build_theta_explicit, lft, recover_param, require_strict
from pickforge.pick import InterpolationData, build_pick, dbr_kernel_value, fs_function, pick_kernel_matrix
from pickforge.pick import stein_residual
from pickforge.realizations import Realization, circle_points, constant, evaluate, h2_gram, prune
from pickforge.realizations import random_disk_points
from pickforge.redheffer import build_colligation, fit_redheffer_param, maps_g_gamma, parameter_determined
from pickforge.redheffer import redheffer_apply, sigma

logger = logging.getLogger(__name__)

Route = Literal["strict", "redheffer"]

KERNEL_FORM_RADIUS = 0.95
CONSISTENCY_POINTS = (0.0, 0.5, 0.5j, -0.3 - 0.4j)


class HSProblemData(Immutable):
    """
    An H(S) interpolation problem: a Schur-class S, data (T, E, N), the row functional y and the Gram matrix P of the
    columns of F^S = (E - S N)(I - zT)^-1 in H(S).
    """

    S: Realization
    data: InterpolationData
    y: ComplexMatrix
    P: ComplexMatrix

    @model_validator(mode="after")
    def _validate_dimensions(self) -> "HSProblemData":
        n = self.data.n
        if self.S.shape != (self.data.q, self.data.p):
            raise DimensionMismatch(f"S must be {self.data.q}x{self.data.p} for this data, got {self.S.shape}")
        if self.y.shape != (1, n):
            raise DimensionMismatch(f"y must be a row of length {n}, got shape {self.y.shape}")
        if self.P.shape != (n, n):
            raise DimensionMismatch(f"P must be {n}x{n}, got shape {self.P.shape}")
        return self

    @classmethod
    def from_interpolation(
        cls,
        schur: Realization,
        data: InterpolationData,
        y: Any,
        pick_matrix: Any = None,
        cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    ) -> "HSProblemData":
        """
        Build a problem, computing P from the Stein equation when it is not given. When T has eigenvalues on the circle
        the Stein equation is singular and P has to be supplied.
        """
        if pick_matrix is None:
            pick_matrix = hermitian_part(solve_stein(data.T.conj().T, data.stein_rhs, cfg))
        return cls(S=schur, data=data, y=np.atleast_2d(decode_vector(y)), P=pick_matrix)

    @classmethod
    def from_json_dict(cls, payload: dict[str, Any], cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> "HSProblemData":
        """
        Decode {"S": realization, "data": interpolation data, "y": row, "P": optional matrix}.
        """
        extra = set(payload) - {"S", "data", "y", "P"}
        if extra:
            raise ValueError(f"unexpected keys in H(S) problem: {', '.join(sorted(extra))}")
        return cls.from_interpolation(
            Realization.from_json_dict(payload["S"]),
            InterpolationData.from_json_dict(payload["data"]),
            payload["y"],
            payload.get("P"),
            cfg,
        )


class KernelCombination(Immutable):
    """
    h(z) = sum_k K_E(z, w_k) c_k in the parameter space H(E). `base` is the parameter E; None means the parameter
    computed by the solver. Coefficients are stored as rows.
    """

    base: Optional[Realization] = None
    points: tuple[tuple[float, float], ...] = ()
    coefficients: tuple[ComplexMatrix, ...] = ()

    @model_validator(mode="after")
    def _validate_lengths(self) -> "KernelCombination":
        if len(self.points) != len(self.coefficients):
            raise DimensionMismatch("a kernel combination needs one coefficient vector per point")
        if any(abs(complex(*point)) >= 1.0 for point in self.points):
            raise DimensionMismatch("kernel combination points must lie in the open unit disk")
        return self

    @classmethod
    def from_values(
        cls, points: Sequence[complex], coefficients: Sequence[Any], base: Optional[Realization] = None
    ) -> "KernelCombination":
        """
        Build from complex points and coefficient vectors.
        """
        return cls(
            base=base,
            points=tuple((float(np.real(w)), float(np.imag(w))) for w in points),
            coefficients=tuple(np.atleast_2d(decode_vector(c)) for c in coefficients),
        )

    @classmethod
    def from_json_dict(cls, payload: dict[str, Any]) -> "KernelCombination":
        """
        Decode {"points": [[re, im], ...], "coefficients": [vector, ...], "param_realization": optional realization}.
        """
        base = payload.get("param_realization")
        return cls.from_values(
            [decode_complex(point) for point in payload.get("points", [])],
            payload.get("coefficients", []),
            None if base is None else Realization.from_json_dict(base),
        )

    @property
    def nodes(self) -> list[complex]:
        return [complex(*point) for point in self.points]

    @property
    def columns(self) -> list[np.ndarray]:
        return [coefficient.reshape(-1, 1) for coefficient in self.coefficients]

    @property
    def empty(self) -> bool:
        return not self.points or all(op_norm(c) == 0.0 for c in self.coefficients)


class HSSolution(Immutable):
    """
    The solution set f = central + carrier * h, h in H(parameter) with ||h|| <= norm_budget. `coefficients` is the x of
    central = F^S x. On the Redheffer route with both defect spaces nontrivial the parameter is fitted from S; when the
    fit fails it is None and has to be supplied with h.
    """

    route: Route
    central: Realization
    coefficients: ComplexMatrix
    carrier: Optional[Realization] = None
    parameter: Optional[Realization] = None
    kernel_dim: int
    central_norm: float
    norm_budget: float
    unique: bool
    range_chain_trivial: Optional[bool] = None


class StructuredFunction(Immutable):
    """
    f = F^S x + carrier * h in the coordinates of a solution set.
    """

    coefficients: ComplexMatrix
    h: Optional[KernelCombination] = None


# solvability


def hs_solvable(pick_matrix: Any, y: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> PsdCertificate:
    """
    A solution of norm at most one exists exactly when P - y* y is positive semidefinite.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    y = np.atleast_2d(as_matrix(y, "y"))
    return psd_certificate(pick_matrix - y.conj().T @ y, cfg)


def unconstrained_solvable(pick_matrix: Any, y: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Check:
    """
    Without the norm constraint a solution exists exactly when y* lies in the range of P.
    """
    pick_matrix = as_matrix(pick_matrix, "P")
    column = as_matrix(y, "y").conj().T
    residual = op_norm(pick_matrix @ pinv(pick_matrix, cfg) @ column - column)
    return Check.at_most("range_membership", residual, cfg.residual_tol * max(1.0, op_norm(column)))


def check_admissible(prob: HSProblemData, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> VerificationReport:
    """
    The resolvent (I - zT)^-1 must be analytic on the open disk (rho(T) <= 1) and P must satisfy the Stein identity.
    When rho(T) < 1 the stored P is also compared with the series sum_k T*^k (E*E - N*N) T^k.
    """
    rho = spectral_radius(prob.data.T)
    checks = [
        Check.at_most("resolvent_analytic", rho, 1.0 + cfg.psd_tol),
        Check.at_most(
            "pick_hermitian", op_norm(prob.P - prob.P.conj().T), cfg.residual_tol * max(1.0, op_norm(prob.P))
        ),
        Check.at_most("stein_identity", stein_residual(prob.data, prob.P), cfg.residual_tol),
    ]
    if rho < 1.0:
        try:
            series = build_pick(prob.data, "series", cfg).P
            mismatch = op_norm(series - prob.P) / max(1.0, op_norm(series))
            checks.append(Check.at_most("pick_series_mismatch", mismatch, cfg.residual_tol))
        except UnboundedTruncation as exc:
            logger.debug("series cross-check of P skipped: %s", exc)
    return VerificationReport(subject="H(S) admissibility", checks=tuple(checks))


# Douglas factorization


def douglas_factors(a_matrix: Any, b_matrix: Any, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    X1 = (AA*)^(1/2)+ B and X2 = (AA*)^(1/2)+ A. X2 is a partial isometry and X1 a contraction when AA* >= BB*.
    """
    a_matrix, b_matrix = as_matrix(a_matrix, "A"), as_matrix(b_matrix, "B")
    if a_matrix.shape[0] != b_matrix.shape[0]:
        raise DimensionMismatch(f"A and B must have the same number of rows, got {a_matrix.shape}, {b_matrix.shape}")
    certificate = psd_certificate(a_matrix @ a_matrix.conj().T - b_matrix @ b_matrix.conj().T, cfg)
    if not certificate:
        raise InfeasibleProblem(
            f"AA* - BB* is not positive semidefinite (min eigenvalue {certificate.min_eigenvalue:.3e})",
            certificate=certificate,
        )
    root_pinv = pinv(sqrt_psd(a_matrix @ a_matrix.conj().T, cfg), cfg)
    return root_pinv @ b_matrix, root_pinv @ a_matrix


def douglas_solve(
    a_matrix: Any, b_matrix: Any, k_matrix: Any = None, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    A contraction X with AX = B: X = X2* X1 + (I - X2* X2)^(1/2) K (I - X1* X1)^(1/2). Without K the result is the
    minimal-norm solution X2* X1. I - X2* X2 is the orthogonal projector onto ker A; it is built from a null-space
    basis of A, so the K term lies in ker A to working precision.
    """
    x1, x2 = douglas_factors(a_matrix, b_matrix, cfg)
    a_matrix, b_matrix = as_matrix(a_matrix), as_matrix(b_matrix)
    solution = x2.conj().T @ x1
    if k_matrix is not None:
        k_matrix = as_matrix(k_matrix, "K")
        if k_matrix.shape != solution.shape:
            raise DimensionMismatch(f"K must be {solution.shape[0]}x{solution.shape[1]}, got {k_matrix.shape}")
        if op_norm(k_matrix) > 1.0 + cfg.psd_tol:
            raise BudgetExceeded(f"K must be a contraction, got norm {op_norm(k_matrix):.6f}")
        kernel = null_basis(a_matrix, cfg)
        left = kernel @ kernel.conj().T
        right = sqrt_psd(np.eye(x1.shape[1]) - x1.conj().T @ x1, cfg)
        solution = solution + left @ k_matrix @ right

    residual = op_norm(a_matrix @ solution - b_matrix)
    if residual > cfg.residual_tol * max(1.0, op_norm(b_matrix)):
        raise NumericalFailure(
            f"the Douglas solution misses AX = B by {residual:.3e}", residual=residual, norm=op_norm(solution)
        )
    if op_norm(solution) > 1.0 + cfg.residual_tol:
        logger.warning("Douglas solution norm %.12f exceeds one", op_norm(solution))
    return solution


def douglas_block_matrix(a_matrix: Any, b_matrix: Any, x_matrix: Any) -> np.ndarray:
    """
    [[AA*, B, A], [B*, I, X*], [A*, X, I]], which is positive semidefinite exactly when AX = B and ||X|| <= 1.
    """
    a_matrix, b_matrix, x_matrix = as_matrix(a_matrix), as_matrix(b_matrix), as_matrix(x_matrix)
    return np.block(
        [
            [a_matrix @ a_matrix.conj().T, b_matrix, a_matrix],
            [b_matrix.conj().T, np.eye(b_matrix.shape[1]), x_matrix.conj().T],
            [a_matrix.conj().T, x_matrix, np.eye(a_matrix.shape[1])],
        ]
    )


# solutions


def _kernel_vanishes(param: Realization, cfg: ToleranceConfig) -> bool:
    """
    K_E vanishes identically only for a constant coisometry.
    """
    eye = np.eye(param.output_dim)
    return all(
        op_norm(eye - evaluate(param, z, 0, cfg) @ evaluate(param, z, 0, cfg).conj().T) <= cfg.residual_tol
        for z in CONSISTENCY_POINTS
    )


def solve_min_norm(prob: HSProblemData, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> HSSolution:
    """
    The minimal-norm solution F^S P^-1 y* (F^S P^+ y* when P is singular, which equals Gamma y~* for the minimal
    preimage y~ of y under the factor of P) together with the description of all other solutions.
    """
    certificate = hs_solvable(prob.P, prob.y, cfg)
    if not certificate:
        raise InfeasibleProblem(
            f"P - y* y is not positive semidefinite (min eigenvalue {certificate.min_eigenvalue:.3e})",
            certificate=certificate,
        )
    try:
        require_strict(prob.P)
        route: Route = "strict"
        coefficients = scipy.linalg.solve(prob.P, prob.y.conj().T, assume_a="her")
    except DegeneratePickMatrix:
        route = "redheffer"
        coefficients = pinv(prob.P, cfg) @ prob.y.conj().T

    central = prune(fs_function(prob.data, prob.S) @ constant(coefficients))
    norm_squared = max(0.0, float(np.real(prob.y @ coefficients)[0, 0]))
    budget = float(np.sqrt(max(0.0, 1.0 - norm_squared)))
    budget_zero = 1.0 - norm_squared <= cfg.residual_tol
    q = prob.data.q

    chain = None
    if route == "strict":
        theta = build_theta_explicit(prob.data, prob.P, cfg=cfg)
        carrier = prune(theta.theta11 - prob.S @ theta.theta21)
        try:
            parameter = recover_param(theta, prob.S, cfg)
        except (NumericalFailure, np.linalg.LinAlgError) as exc:
            logger.warning("the parameter of S could not be recovered: %s", exc)
            parameter = None
        kernel_dim = q
        no_free_part = parameter is not None and _kernel_vanishes(parameter, cfg)
    else:
        colligation = build_colligation(prob.data, prob.P, cfg)
        sig = sigma(colligation)
        chain = colligation.range_chain_trivial
        parameter = None
        kernel_dim = sig.codefect_dim
        if sig.codefect_dim == 0:
            carrier, no_free_part = None, True
        elif sig.defect_dim == 0:
            carrier, no_free_part = maps_g_gamma(sig, None, cfg)[0], False
        else:
            if not parameter_determined(prob.data.T, cfg):
                logger.warning("the Redheffer transform is not injective here; the fitted parameter is one of several")
            try:
                parameter = fit_redheffer_param(sig, prob.S, cfg)
            except StructureError as exc:
                logger.warning("the parameter of S could not be fitted: %s", exc)
                carrier, no_free_part = None, False
            else:
                carrier = maps_g_gamma(sig, parameter, cfg)[0]
                no_free_part = _kernel_vanishes(parameter, cfg)

    logger.debug("H(S) solution (%s route): central norm %.6f, budget %.6f", route, np.sqrt(norm_squared), budget)
    return HSSolution(
        route=route,
        central=central,
        coefficients=coefficients,
        carrier=carrier,
        parameter=parameter,
        kernel_dim=kernel_dim,
        central_norm=float(np.sqrt(norm_squared)),
        norm_budget=budget,
        unique=bool(budget_zero or no_free_part),
        range_chain_trivial=chain,
    )


def _scalar_kernel(w: complex, dim: int) -> Realization:
    """
    I / (1 - z conj(w)) of size dim.
    """
    eye = np.eye(dim)
    return Realization(A=np.conj(w) * eye, B=eye, C=np.conj(w) * eye, D=eye)


def _parameter_kernel(base: Optional[Realization], dim: int, z: complex, w: complex, cfg=DEFAULT_TOLERANCES):
    """
    K_E(z, w); without a parameter the kernel is the Szego kernel of size dim.
    """
    if base is None:
        return np.eye(dim) / (1.0 - z * np.conj(w))
    return dbr_kernel_value(base, z, w, cfg)


def kernel_function(h: KernelCombination, base: Optional[Realization], dim: int, cfg=DEFAULT_TOLERANCES):
    """
    The realization of h(z) = sum_k (c_k - E(z) E(w_k)* c_k) / (1 - z conj(w_k)).
    """
    total = None
    for w, c in zip(h.nodes, h.columns):
        if c.shape[0] != dim:
            raise DimensionMismatch(f"kernel coefficients must have length {dim}, got {c.shape[0]}")
        numerator = constant(c)
        if base is not None:
            numerator = numerator - base @ constant(evaluate(base, w, 0, cfg).conj().T @ c)
        term = _scalar_kernel(w, dim) @ numerator
        total = term if total is None else total + term
    if total is None:
        return constant(np.zeros((dim, 1)))
    return prune(total)


def kernel_gram(
    first: KernelCombination, second: KernelCombination, base: Optional[Realization], dim: int, cfg=DEFAULT_TOLERANCES
) -> complex:
    """
    <h1, h2> in H(E) = sum_{k,l} c2_l* K_E(w2_l, w1_k) c1_k.
    """
    total = 0j
    for w1, c1 in zip(first.nodes, first.columns):
        for w2, c2 in zip(second.nodes, second.columns):
            total += complex((c2.conj().T @ _parameter_kernel(base, dim, w2, w1, cfg) @ c1)[0, 0])
    return total


def _resolve_base(
    prob: HSProblemData, sol: HSSolution, h: KernelCombination, cfg: ToleranceConfig
) -> tuple[Optional[Realization], Optional[Realization]]:
    """
    The parameter and the carrier to use with h. A user-supplied parameter must reproduce S.
    """
    if h.base is None:
        if sol.carrier is None and not sol.unique:
            raise StructureError("the parameter of S is not known on this route; supply it as the base of h")
        return sol.parameter, sol.carrier

    if sol.route == "strict":
        theta = build_theta_explicit(prob.data, prob.P, cfg=cfg)
        reproduced = lft(theta, h.base, cfg)
        carrier = sol.carrier
    else:
        sig = sigma(build_colligation(prob.data, prob.P, cfg))
        reproduced = redheffer_apply(sig, h.base, cfg)
        carrier = maps_g_gamma(sig, h.base, cfg)[0]
    mismatch = max(
        op_norm(evaluate(reproduced, z, 0, cfg) - evaluate(prob.S, z, 0, cfg)) for z in CONSISTENCY_POINTS
    )
    if mismatch > cfg.residual_tol:
        raise StructureError(f"the supplied parameter does not reproduce S (mismatch {mismatch:.3e})")
    return h.base, carrier


def hs_norm_structured(prob: HSProblemData, sol: HSSolution, h: KernelCombination, cfg=DEFAULT_TOLERANCES) -> float:
    """
    ||central + carrier * h||^2 = x* P x + ||h||^2 in H(E).
    """
    base = h.base if h.base is not None else sol.parameter
    central = float(np.real(sol.coefficients.conj().T @ prob.P @ sol.coefficients)[0, 0])
    return central + float(np.real(kernel_gram(h, h, base, sol.kernel_dim, cfg)))


def parametrize_solutions(
    prob: HSProblemData,
    h: KernelCombination,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
    sol: Optional[HSSolution] = None,
) -> Realization:
    """
    The solution f = central + carrier * h. The parameter norm ||h|| is computed exactly from the kernel Gram matrix
    and must fit into the norm budget. The result is checked against the interpolation conditions and, when S is
    inner, against the norm identity ||f||^2 = ||central||^2 + ||h||^2.
    """
    sol = sol or solve_min_norm(prob, cfg)
    if h.empty:
        return sol.central
    base, carrier = _resolve_base(prob, sol, h, cfg)
    if carrier is None:
        raise StructureError("the solution is unique, the only admissible h is zero")

    h_norm = float(np.sqrt(max(0.0, np.real(kernel_gram(h, h, base, sol.kernel_dim, cfg)))))
    if h_norm > sol.norm_budget + cfg.psd_tol:
        raise BudgetExceeded(
            f"||h|| = {h_norm:.6f} exceeds the norm budget {sol.norm_budget:.6f}",
            h_norm=h_norm,
            budget=sol.norm_budget,
        )
    solution = prune(sol.central + carrier @ kernel_function(h, base, sol.kernel_dim, cfg))

    checks = []
    residual = interpolation_residual(prob, solution, cfg)
    if residual is not None:
        checks.append(Check.at_most("interpolation_condition", residual, cfg.residual_tol))
    if is_h2_isometric(prob.S, cfg):
        expected = sol.central_norm**2 + h_norm**2
        defect = abs(h2_norm_squared(prob, solution, cfg) - expected)
        checks.append(Check.at_most("norm_identity", defect, cfg.residual_tol))
    report = VerificationReport(subject="parametrized H(S) solution", checks=tuple(checks))
    if not report.passed:
        raise VerificationFailure("the parametrized solution failed its checks", report=report)
    return solution


def hs_inner(
    prob: HSProblemData,
    first: StructuredFunction,
    second: StructuredFunction,
    sol: Optional[HSSolution] = None,
    cfg: ToleranceConfig = DEFAULT_TOLERANCES,
) -> complex:
    """
    <f1, f2> in H(S) for f = F^S x + carrier * h: x2* P x1 plus the H(E) inner product of the parameter parts. The two
    parts are orthogonal and the carrier is isometric.
    """
    n = prob.data.n
    for function in (first, second):
        if function.coefficients.shape != (n, 1):
            raise StructureError(f"F^S coordinates must be a column of length {n}, got {function.coefficients.shape}")
    total = complex((second.coefficients.conj().T @ prob.P @ first.coefficients)[0, 0])
    if first.h is None or second.h is None or first.h.empty or second.h.empty:
        return total
    if first.h.base is not None and second.h.base is not None and first.h.base != second.h.base:
        raise StructureError("the two functions use different parameters")
    sol = sol or solve_min_norm(prob, cfg)
    base = first.h.base or second.h.base or sol.parameter
    return total + kernel_gram(first.h, second.h, base, sol.kernel_dim, cfg)


# verification


def is_h2_isometric(schur: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """
    Whether H(S) sits isometrically in H^2: S is inner (isometric on the circle) or identically zero.
    """
    points = circle_points(cfg.grid_boundary_points, 1.0)
    try:
        values = [evaluate(schur, t, 0, cfg) for t in points]
    except NumericalFailure:
        return False
    if max(op_norm(value) for value in values) <= cfg.residual_tol:
        return True
    eye = np.eye(schur.input_dim)
    return max(op_norm(value.conj().T @ value - eye) for value in values) <= cfg.residual_tol


def h2_norm_squared(prob: HSProblemData, function: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """
    ||f||^2 in H(S) computed as an H^2 norm; only valid when S is inner or zero.
    """
    if not is_h2_isometric(prob.S, cfg):
        raise StructureError("H(S) norms are H^2 norms only for inner S; use the structured norm")
    return float(np.real(h2_gram(prune(function), prune(function), cfg)[0, 0]))


def h2_norm_check(prob: HSProblemData, function: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Check:
    """
    ||f|| <= 1 through the H^2 norm.
    """
    return Check.at_most("h2_norm", np.sqrt(h2_norm_squared(prob, function, cfg)), 1.0 + cfg.residual_tol)


def _columns_are_kernels(prob: HSProblemData, cfg: ToleranceConfig) -> bool:
    """
    F^S e_i = K_S(., z_i) E_i holds when S meets the conditions S(z_i)* E_i = N_i.
    """
    data = prob.data
    return all(
        op_norm(evaluate(prob.S, z, 0, cfg).conj().T @ data.E[:, [i]] - data.N[:, [i]]) <= cfg.residual_tol
        for i, z in enumerate(data.nodes)
    )


def interpolation_residual(
    prob: HSProblemData, function: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> Optional[float]:
    """
    ||(F^S)^[*] f - y*|| computed independently of the structured form where possible: by point evaluation when T is
    diagonal (the columns of F^S are then kernel functions), or by H^2 pairings when S is inner. None when neither
    applies.
    """
    data = prob.data
    target = prob.y.conj().T
    if data.is_diagonal(cfg) and spectral_radius(data.T) < 1.0 and _columns_are_kernels(prob, cfg):
        values = np.array(
            [[(data.E[:, [i]].conj().T @ evaluate(function, z, 0, cfg))[0, 0]] for i, z in enumerate(data.nodes)]
        )
        return op_norm(values - target)
    if is_h2_isometric(prob.S, cfg):
        try:
            pairing = h2_gram(prune(function), prune(fs_function(data, prob.S)), cfg)
        except UnboundedTruncation as exc:
            logger.debug("no H^2 path for the interpolation residual: %s", exc)
            return None
        return op_norm(pairing - target)
    return None


def kernel_form_matrix(prob: HSProblemData, function: Realization, points: Sequence[complex], cfg=DEFAULT_TOLERANCES):
    """
    [[1, y, f(w)*], [y*, P, F^S(w)*], [f(z), F^S(z), K_S(z, w)]] on a point tuple.
    """
    inner = pick_kernel_matrix(prob.P, prob.data, prob.S, points, cfg)
    border = np.concatenate([prob.y[0]] + [evaluate(function, z, 0, cfg)[:, 0].conj() for z in points])
    matrix = np.zeros((inner.shape[0] + 1, inner.shape[0] + 1), dtype=np.complex128)
    matrix[0, 0] = 1.0
    matrix[0, 1:] = border
    matrix[1:, 0] = border.conj()
    matrix[1:, 1:] = inner
    return matrix


def kernel_form_certificate(
    prob: HSProblemData, function: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES, seed: int = 0
) -> PsdCertificate:
    """
    Sampled positivity of the bordered kernel: f is a solution of norm at most one exactly when the kernel is positive.
    The certificate of the worst random tuple is returned.
    """
    if function.shape != (prob.data.q, 1):
        raise DimensionMismatch(f"an H(S) element must be {prob.data.q}x1, got {function.shape}")
    rng = np.random.default_rng(seed)
    worst: Optional[PsdCertificate] = None
    for _ in range(cfg.sample_tuples):
        points = random_disk_points(rng, cfg.tuple_size, KERNEL_FORM_RADIUS)
        certificate = psd_certificate(kernel_form_matrix(prob, function, points, cfg), cfg)
        if worst is None or certificate.min_eigenvalue / certificate.scale < worst.min_eigenvalue / worst.scale:
            worst = certificate
    return worst


def verify_hs_solution(
    prob: HSProblemData, function: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES, seed: int = 0
) -> VerificationReport:
    """
    Verify a candidate f: sampled positivity of the bordered kernel, the interpolation conditions where an independent
    path exists, and ||f|| <= 1 through H^2 when S is inner.
    """
    certificate = kernel_form_certificate(prob, function, cfg, seed)
    checks = [Check.at_least("kernel_form_positivity", certificate.min_eigenvalue / certificate.scale, -cfg.psd_tol)]
    residual = interpolation_residual(prob, function, cfg)
    if residual is not None:
        checks.append(Check.at_most("interpolation_condition", residual, cfg.residual_tol))
    if is_h2_isometric(prob.S, cfg):
        try:
            checks.append(h2_norm_check(prob, function, cfg))
        except UnboundedTruncation as exc:
            logger.debug("H^2 norm check skipped: %s", exc)

    rng = np.random.default_rng(seed)
    samples = []
    for z in random_disk_points(rng, cfg.sample_tuples, KERNEL_FORM_RADIUS):
        pointwise = psd_certificate(kernel_form_matrix(prob, function, [z], cfg), cfg)
        samples.append(KernelSample(z_re=float(np.real(z)), z_im=float(np.imag(z)), min_eig=pointwise.min_eigenvalue))
    return VerificationReport(subject="H(S) solution", checks=tuple(checks), samples=tuple(samples))
