# pylint: disable=invalid-name
"""
Rational matrix functions in state-space form F(z) = D + zC(I - zA)^-1 B, the single function representation of
PickForge. Solutions, parameters, J-inner functions, characteristic functions and kernels are all Realizations.
"""

import logging
import math
from typing import Any, Literal, Optional, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.stats import qmc
from pydantic import model_validator

from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.errors import DimensionMismatch, SingularFactor, SingularResolvent, UnboundedTruncation
from pickforge.models import ComplexMatrix, Immutable, as_complex_matrix
from pickforge.numerics import as_matrix, geometric_tail, op_norm, spectral_radius, truncation_length

logger = logging.getLogger(__name__)

CombineOp = Literal["add", "multiply", "invert", "backward_shift"]

SCHUR_SAMPLING_RADIUS = 1.0 - 1e-6
PRUNE_TOL = 1e-9


class Realization(Immutable):
    """
    A finite state-space quadruple (A, B, C, D) representing F(z) = D + zC(I - zA)^-1 B with A n x n, B n x p,
    C q x n and D q x p. The state dimension n may be zero (a constant function).
    """

    A: ComplexMatrix
    B: ComplexMatrix
    C: ComplexMatrix
    D: ComplexMatrix

    # noinspection PyNestedDecorators
    @model_validator(mode="before")
    @classmethod
    def _validate_dimensions(cls, values: Any) -> Any:
        """
        Convert the four matrices and restore the shapes of empty blocks, which the JSON encoding cannot express.
        """
        if not isinstance(values, dict):
            return values
        missing = {"A", "B", "C", "D"} - set(values)
        if missing:
            raise ValueError(f"a realization needs the fields A, B, C and D (missing: {', '.join(sorted(missing))})")

        a, b, c, d = (as_complex_matrix(values[key]) for key in ("A", "B", "C", "D"))
        if d.size == 0:
            raise DimensionMismatch("D must have at least one row and one column")
        q, p = d.shape
        n = a.shape[0] if a.size else 0
        if a.size == 0:
            a = np.zeros((0, 0), dtype=np.complex128)
        if b.size == 0:
            b = np.zeros((n, p), dtype=np.complex128)
        if c.size == 0:
            c = np.zeros((q, n), dtype=np.complex128)

        if a.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got shape {a.shape}")
        if b.shape != (n, p):
            raise DimensionMismatch(f"B must be {n}x{p}, got shape {b.shape}")
        if c.shape != (q, n):
            raise DimensionMismatch(f"C must be {q}x{n}, got shape {c.shape}")
        return {**values, "A": a, "B": b, "C": c, "D": d}

    @property
    def state_dim(self) -> int:
        """
        Size of the state space.
        """
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        """
        Number of columns of F(z).
        """
        return self.D.shape[1]

    @property
    def output_dim(self) -> int:
        """
        Number of rows of F(z).
        """
        return self.D.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """
        (rows, columns) of F(z).
        """
        return self.D.shape

    def __call__(self, z: complex, order: int = 0) -> np.ndarray:
        return evaluate(self, z, order)

    def __add__(self, other: "Realization") -> "Realization":
        return combine("add", self, other)

    def __sub__(self, other: "Realization") -> "Realization":
        return combine("add", self, -other)

    def __neg__(self) -> "Realization":
        return Realization(A=self.A, B=self.B, C=-self.C, D=-self.D)

    def __matmul__(self, other: "Realization") -> "Realization":
        return combine("multiply", self, other)

    def to_json_dict(self) -> dict[str, Any]:
        """
        The JSON encoding {"A": [[[re, im], ...]], "B": ..., "C": ..., "D": ...}.
        """
        return self.as_dict()

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> "Realization":
        """
        Decode the JSON encoding produced by `to_json_dict`.
        """
        return cls(**data)


class SchurCertificate(Immutable):
    """
    Sampled Schur-class certificate: the largest singular value found on an interior quasi-random grid and on a circle
    just inside the boundary. Passing is a necessary condition only.
    """

    passed: bool
    sup_singular_value: float
    worst_point: tuple[float, float]

    @property
    def worst_z(self) -> complex:
        """
        The sample point where the largest singular value was attained.
        """
        return complex(*self.worst_point)

    def __bool__(self) -> bool:
        return self.passed


class TaylorExpansion(Immutable):
    """
    Leading Taylor coefficients at the origin together with a bound on the norm of the neglected tail.
    """

    coefficients: tuple[ComplexMatrix, ...]
    tail_bound: float

    def resum(self, z: complex) -> np.ndarray:
        """
        Evaluate the truncated series at z.
        """
        total = np.zeros_like(self.coefficients[0])
        for coefficient in reversed(self.coefficients):
            total = total * z + coefficient
        return total


# constructors


def constant(value: Any) -> Realization:
    """
    The constant function F(z) = value.
    """
    value = as_matrix(value)
    return Realization(A=np.zeros((0, 0)), B=np.zeros((0, value.shape[1])), C=np.zeros((value.shape[0], 0)), D=value)


def identity(dim: int) -> Realization:
    """
    The constant identity function of size dim.
    """
    return constant(np.eye(dim))


def shift(dim: int = 1) -> Realization:
    """
    The function F(z) = z * I_dim.
    """
    eye = np.eye(dim)
    return Realization(A=np.zeros((dim, dim)), B=eye, C=eye, D=np.zeros((dim, dim)))


def polynomial(coefficients: Sequence[Any]) -> Realization:
    """
    The polynomial F(z) = c_0 + c_1 z + ... + c_d z^d with matrix (or scalar) coefficients, realized on a block shift
    register of d blocks.
    """
    coefficients = [as_matrix(coefficient) for coefficient in coefficients]
    if not coefficients:
        raise DimensionMismatch("a polynomial needs at least one coefficient")
    q, p = coefficients[0].shape
    if any(coefficient.shape != (q, p) for coefficient in coefficients):
        raise DimensionMismatch("all polynomial coefficients must have the same shape")
    degree = len(coefficients) - 1
    if degree == 0:
        return constant(coefficients[0])

    n = degree * p
    a = np.zeros((n, n), dtype=np.complex128)
    for k in range(1, degree):
        a[k * p : (k + 1) * p, (k - 1) * p : k * p] = np.eye(p)
    b = np.zeros((n, p), dtype=np.complex128)
    b[:p, :] = np.eye(p)
    c = np.hstack(coefficients[1:])
    return Realization(A=a, B=b, C=c, D=coefficients[0])


def kernel_column(c0: Any, t_matrix: Any) -> Realization:
    """
    The function C0 (I - zT)^-1, realized as (A=T, B=I, C=C0 T, D=C0).
    """
    c0 = as_matrix(c0)
    t_matrix = as_matrix(t_matrix)
    if c0.shape[1] != t_matrix.shape[0]:
        raise DimensionMismatch(f"C0 has {c0.shape[1]} columns but T is {t_matrix.shape[0]}x{t_matrix.shape[1]}")
    return Realization(A=t_matrix, B=np.eye(t_matrix.shape[0]), C=c0 @ t_matrix, D=c0)


def random_schur(state_dim: int, out_dim: int, in_dim: int, seed: int) -> Realization:
    """
    A random Schur-class function: a complex Gaussian colligation of size (n+q) x (n+p) scaled to operator norm
    1 - 1e-3, read off as (A, B; C, D). Contractive colligations have contractive transfer functions.
    """
    rng = np.random.default_rng(seed)
    rows, cols = state_dim + out_dim, state_dim + in_dim
    colligation = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    colligation *= (1.0 - 1e-3) / op_norm(colligation)
    return Realization(
        A=colligation[:state_dim, :state_dim],
        B=colligation[:state_dim, state_dim:],
        C=colligation[state_dim:, :state_dim],
        D=colligation[state_dim:, state_dim:],
    )


def blaschke(zeros: Sequence[complex], unimodular: complex = 1.0) -> Realization:
    """
    The scalar finite Blaschke product c * prod (z - a) / (1 - conj(a) z). Each factor is realized by
    (A=conj(a), B=1, C=1-|a|^2, D=-a).
    """
    product = constant(unimodular)
    for zero in zeros:
        zero = complex(zero)
        if abs(zero) >= 1.0:
            raise ValueError(f"Blaschke zeros must lie in the open disk, got {zero}")
        product = product @ Realization(A=np.conj(zero), B=1.0, C=1.0 - abs(zero) ** 2, D=-zero)
    return product


# evaluation


def resolvent_lu(realization: Realization, z: complex, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Optional[tuple]:
    """
    LU factors of I - zA, or None for a constant realization. Raises SingularResolvent when the condition number
    exceeds 1 / psd_tol.
    """
    n = realization.state_dim
    if n == 0:
        return None
    resolvent = np.eye(n) - z * realization.A
    condition = np.linalg.cond(resolvent)
    if not np.isfinite(condition) or condition > 1.0 / cfg.psd_tol:
        raise SingularResolvent(f"I - zA is singular at z={z} (condition number {condition:.3e})", z=z)
    return scipy.linalg.lu_factor(resolvent)


def evaluate(realization: Realization, z: complex, order: int = 0, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """
    The order-th derivative of F at z, from F^(k)(z) = k! C (I - zA)^-(k+1) A^(k-1) B for k >= 1.
    """
    if order < 0:
        raise ValueError(f"derivative order must be nonnegative, got {order}")
    lu = resolvent_lu(realization, z, cfg)
    if lu is None:
        return np.array(realization.D) if order == 0 else np.zeros(realization.shape, dtype=np.complex128)
    if order == 0:
        return realization.D + z * realization.C @ scipy.linalg.lu_solve(lu, realization.B)

    state = realization.B
    for _ in range(order - 1):
        state = realization.A @ state
    for _ in range(order + 1):
        state = scipy.linalg.lu_solve(lu, state)
    return math.factorial(order) * realization.C @ state


def evaluate_many(
    realization: Realization, points: Sequence[complex], cfg: ToleranceConfig = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    Values at several points, stacked into an array of shape (len(points), q, p).
    """
    if len(points) == 0:
        return np.zeros((0,) + realization.shape, dtype=np.complex128)
    return np.stack([evaluate(realization, z, 0, cfg) for z in points])


# arithmetic


def combine(op: CombineOp, first: Realization, second: Optional[Realization] = None) -> Realization:
    """
    Sum, product, inverse or backward shift of realizations. No state reduction is performed (see `prune`).
    """
    if op in ("add", "multiply") and second is None:
        raise ValueError(f"`{op}` needs two realizations")
    if op == "add":
        return _add(first, second)
    if op == "multiply":
        return _multiply(first, second)
    if op == "invert":
        return _invert(first)
    if op == "backward_shift":
        return Realization(A=first.A, B=first.B, C=first.C @ first.A, D=first.C @ first.B)
    raise ValueError(f"unknown operation: {op}")


def _add(first: Realization, second: Realization) -> Realization:
    if first.shape != second.shape:
        raise DimensionMismatch(f"cannot add functions of shapes {first.shape} and {second.shape}")
    return Realization(
        A=scipy.linalg.block_diag(first.A, second.A),
        B=np.vstack([first.B, second.B]),
        C=np.hstack([first.C, second.C]),
        D=first.D + second.D,
    )


def _multiply(first: Realization, second: Realization) -> Realization:
    if first.input_dim != second.output_dim:
        raise DimensionMismatch(f"cannot multiply functions of shapes {first.shape} and {second.shape}")
    n1, n2 = first.state_dim, second.state_dim
    a = np.zeros((n1 + n2, n1 + n2), dtype=np.complex128)
    a[:n1, :n1] = first.A
    a[:n1, n1:] = first.B @ second.C
    a[n1:, n1:] = second.A
    return Realization(
        A=a,
        B=np.vstack([first.B @ second.D, second.B]),
        C=np.hstack([first.C, first.D @ second.C]),
        D=first.D @ second.D,
    )


def _invert(realization: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Realization:
    q, p = realization.shape
    if q != p:
        raise DimensionMismatch(f"only square functions can be inverted, got shape {realization.shape}")
    condition = np.linalg.cond(realization.D)
    if not np.isfinite(condition) or condition > 1.0 / cfg.psd_tol:
        raise SingularFactor(f"the value at the origin is singular (condition number {condition:.3e})")
    d_inv = np.linalg.inv(realization.D)
    return Realization(
        A=realization.A - realization.B @ d_inv @ realization.C,
        B=realization.B @ d_inv,
        C=-d_inv @ realization.C,
        D=d_inv,
    )


def scale(realization: Realization, left: Any = None, right: Any = None) -> Realization:
    """
    The function L F(z) R for constant matrices L and R (either may be omitted).
    """
    b, c, d = realization.B, realization.C, realization.D
    if left is not None:
        left = as_matrix(left)
        if left.shape[1] != realization.output_dim:
            raise DimensionMismatch(f"left factor {left.shape} does not fit a function of shape {realization.shape}")
        c, d = left @ c, left @ d
    if right is not None:
        right = as_matrix(right)
        if right.shape[0] != realization.input_dim:
            raise DimensionMismatch(f"right factor {right.shape} does not fit a function of shape {realization.shape}")
        b, d = b @ right, d @ right
    return Realization(A=realization.A, B=b, C=c, D=d)


def select(realization: Realization, rows: Union[slice, Sequence[int]], cols: Union[slice, Sequence[int]]):
    """
    A sub-block of F(z). The state space is kept as is.
    """
    row_index = np.arange(realization.output_dim)[rows]
    col_index = np.arange(realization.input_dim)[cols]
    return Realization(
        A=realization.A,
        B=realization.B[:, col_index],
        C=realization.C[row_index, :],
        D=realization.D[np.ix_(row_index, col_index)],
    )


def hstack(realizations: Sequence[Realization]) -> Realization:
    """
    [F_1(z), F_2(z), ...] for functions with the same number of rows.
    """
    if len({realization.output_dim for realization in realizations}) != 1:
        raise DimensionMismatch("horizontally stacked functions must have the same number of rows")
    return Realization(
        A=scipy.linalg.block_diag(*[realization.A for realization in realizations]),
        B=scipy.linalg.block_diag(*[realization.B for realization in realizations]),
        C=np.hstack([realization.C for realization in realizations]),
        D=np.hstack([realization.D for realization in realizations]),
    )


def vstack(realizations: Sequence[Realization]) -> Realization:
    """
    [F_1(z); F_2(z); ...] for functions with the same number of columns.
    """
    if len({realization.input_dim for realization in realizations}) != 1:
        raise DimensionMismatch("vertically stacked functions must have the same number of columns")
    return Realization(
        A=scipy.linalg.block_diag(*[realization.A for realization in realizations]),
        B=np.vstack([realization.B for realization in realizations]),
        C=scipy.linalg.block_diag(*[realization.C for realization in realizations]),
        D=np.vstack([realization.D for realization in realizations]),
    )


def block(grid: Sequence[Sequence[Realization]]) -> Realization:
    """
    The block function [[F_11, F_12, ...], [F_21, ...], ...].
    """
    return vstack([hstack(row) for row in grid])


def moebius(realization: Realization, w: complex, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Realization:
    """
    The function G(s) = F((s + w) / (1 + conj(w) s)) for |w| < 1. With M = I - wA it is realized by
    A' = M^-1 (A - conj(w) I), B' = M^-1 B, C' = C (I + w A') and D' = D + w C M^-1 B.
    """
    if abs(w) >= 1.0:
        raise ValueError(f"the automorphism parameter must lie in the open disk, got {w}")
    n = realization.state_dim
    if n == 0:
        return realization
    lu = resolvent_lu(realization, w, cfg)
    a_new = scipy.linalg.lu_solve(lu, realization.A - np.conj(w) * np.eye(n))
    b_new = scipy.linalg.lu_solve(lu, realization.B)
    return Realization(
        A=a_new,
        B=b_new,
        C=realization.C @ (np.eye(n) + w * a_new),
        D=realization.D + w * realization.C @ b_new,
    )


def _krylov_basis(a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """
    Orthonormal basis of span{B, AB, A^2 B, ...} grown one block at a time with re-orthogonalization.
    """
    n = a.shape[0]
    threshold = tol * max(1.0, op_norm(a), op_norm(b))

    def _orth(matrix: np.ndarray) -> np.ndarray:
        if matrix.size == 0:
            return np.zeros((n, 0), dtype=np.complex128)
        u, s, _ = scipy.linalg.svd(matrix, full_matrices=False)
        return u[:, s > threshold]

    basis = _orth(b)
    while 0 < basis.shape[1] < n:
        grown = _orth(np.hstack([basis, a @ basis]))
        if grown.shape[1] <= basis.shape[1]:
            break
        basis = grown
    return basis


def prune(realization: Realization, tol: float = PRUNE_TOL) -> Realization:
    """
    Remove uncontrollable and then unobservable states. Used after products and inversions where poles and zeros
    cancel; it is not meant as a general minimal-realization routine.
    """
    n = realization.state_dim
    if n == 0:
        return realization

    controllable = _krylov_basis(realization.A, realization.B, tol)
    a = controllable.conj().T @ realization.A @ controllable
    b = controllable.conj().T @ realization.B
    c = realization.C @ controllable

    observable = _krylov_basis(a.conj().T, c.conj().T, tol)
    a = observable.conj().T @ a @ observable
    b = observable.conj().T @ b
    c = c @ observable

    if a.shape[0] < n:
        logger.debug("pruned a realization from %d to %d states", n, a.shape[0])
    return Realization(A=a, B=b, C=c, D=realization.D)


# Schur class, Taylor coefficients, H^2


def interior_points(count: int) -> np.ndarray:
    """
    Quasi-random points of the disk of radius 1 - 1e-6 (an unscrambled Halton sequence mapped to the disk so that the
    points are area-uniform).
    """
    unit_square = qmc.Halton(d=2, scramble=False).random(count)
    return SCHUR_SAMPLING_RADIUS * np.sqrt(unit_square[:, 0]) * np.exp(2j * np.pi * unit_square[:, 1])


def circle_points(count: int, radius: float = SCHUR_SAMPLING_RADIUS) -> np.ndarray:
    """
    Equally spaced points on the circle of the given radius.
    """
    return radius * np.exp(2j * np.pi * np.arange(count) / count)


def random_disk_points(rng: np.random.Generator, count: int, radius: float = 0.9) -> np.ndarray:
    """
    Area-uniform random points of the disk of the given radius.
    """
    return radius * np.sqrt(rng.uniform(size=count)) * np.exp(2j * np.pi * rng.uniform(size=count))


def certify_schur(realization: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> SchurCertificate:
    """
    Sample the largest singular value of F on cfg.grid_interior_points quasi-random interior points and
    cfg.grid_boundary_points points of the circle of radius 1 - 1e-6. This is a necessary condition only.
    """
    points = np.concatenate([interior_points(cfg.grid_interior_points), circle_points(cfg.grid_boundary_points)])
    sup_value, worst = -1.0, 0j
    for z in points:
        value = op_norm(evaluate(realization, z, 0, cfg))
        if value > sup_value:
            sup_value, worst = value, z
    return SchurCertificate(
        passed=bool(sup_value <= 1.0 + cfg.residual_tol),
        sup_singular_value=float(sup_value),
        worst_point=(float(np.real(worst)), float(np.imag(worst))),
    )


def taylor_coeffs(realization: Realization, count: int, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> TaylorExpansion:
    """
    Taylor coefficients D, CB, CAB, CA^2B, ... (count of them) with the tail bound ||C|| ||B|| rho^count / (1 - rho).
    """
    if count < 1:
        raise ValueError(f"at least one coefficient must be requested, got {count}")
    rho = spectral_radius(realization.A)
    if rho >= 1.0:
        raise UnboundedTruncation(f"Taylor series tail cannot be bounded: spectral radius {rho:.6f} >= 1")

    coefficients = [np.array(realization.D)]
    state = realization.B
    for _ in range(count - 1):
        coefficients.append(realization.C @ state)
        state = realization.A @ state
    tail_bound = geometric_tail(rho, op_norm(realization.C) * op_norm(realization.B), count)
    return TaylorExpansion(coefficients=tuple(coefficients), tail_bound=tail_bound)


def realize_taylor(coefficients: Sequence[Any], tol: float = PRUNE_TOL) -> Realization:
    """
    A minimal realization with the given leading Taylor coefficients c_0, c_1, ..., built from the SVD of the block
    Hankel matrix [c_{i+j+1}] (Ho-Kalman). Exact when the function has McMillan degree at most half the number of
    coefficients after c_0; singular values below tol * max(1, sigma_max) are dropped.
    """
    coefficients = [as_matrix(coefficient) for coefficient in coefficients]
    if not coefficients:
        raise DimensionMismatch("a realization needs at least one Taylor coefficient")
    q, p = coefficients[0].shape
    blocks = (len(coefficients) - 1) // 2
    if blocks == 0:
        return constant(coefficients[0])

    def _hankel(offset: int) -> np.ndarray:
        return np.block([[coefficients[i + j + offset] for j in range(blocks)] for i in range(blocks)])

    hankel = _hankel(1)
    u, singular_values, vh = np.linalg.svd(hankel)
    order = int(np.sum(singular_values > tol * max(1.0, singular_values[0] if singular_values.size else 0.0)))
    logger.debug("Hankel singular values %s, order %d", singular_values[: order + 1], order)
    if order == 0:
        return constant(coefficients[0])

    root = np.sqrt(singular_values[:order])
    observability = u[:, :order] * root
    controllability = root[:, None] * vh[:order]
    a = (u[:, :order].conj().T @ _hankel(2) @ vh[:order].conj().T) / np.outer(root, root)
    return Realization(A=a, B=controllability[:, :p], C=observability[:q], D=coefficients[0])


def h2_gram(f: Realization, g: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    The matrix sum_k g_k* f_k of H^2 pairings between the columns of f and the columns of g (f_k, g_k are Taylor
    coefficients), truncated per truncation_tol.
    """
    if f.output_dim != g.output_dim:
        raise DimensionMismatch(f"H^2 pairing needs functions with the same number of rows, got {f.shape}, {g.shape}")
    rho = max(spectral_radius(f.A), spectral_radius(g.A))
    bound = (op_norm(f.C) * op_norm(f.B) + op_norm(f.D)) * (op_norm(g.C) * op_norm(g.B) + op_norm(g.D))
    # nilpotent parts are not seen by rho
    terms = truncation_length(rho, bound, cfg) + f.state_dim + g.state_dim

    gram = g.D.conj().T @ f.D
    state_f, state_g = f.B, g.B
    for _ in range(terms):
        gram = gram + (g.C @ state_g).conj().T @ (f.C @ state_f)
        state_f, state_g = f.A @ state_f, g.A @ state_g
    return gram


def h2_inner(f: Realization, g: Realization, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> complex:
    """
    <f, g> in H^2 for single-column functions (linear in f, conjugate-linear in g).
    """
    if f.input_dim != 1 or g.input_dim != 1:
        raise DimensionMismatch("h2_inner pairs single-column functions; use h2_gram for matrix-valued ones")
    return complex(h2_gram(f, g, cfg)[0, 0])
