# pylint: disable=redefined-outer-name
"""
Tests for the pickforge.boundary module.
"""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from pickforge.boundary import (
    BoundaryProblem,
    boundary_jet,
    boundary_kernels,
    boundary_pick,
    boundary_values,
    cj_check,
    extrapolate,
    jordan_data,
    kernel_coefficients,
    lower_order_limits,
    lower_toeplitz,
    psi_matrix,
    radial_ladder,
    radial_limit,
    richardson_limit,
    to_hs_problem,
    verify_boundary_solution,
)
from pickforge.config import ToleranceConfig
from pickforge.errors import CaratheodoryJuliaFailure, DimensionMismatch, InvalidNodes
from pickforge.hs_interp import solve_min_norm
from pickforge.realizations import Realization, blaschke, constant, h2_inner, polynomial, scale

FAST = ToleranceConfig(grid_boundary_points=64, grid_interior_points=64, sample_tuples=8)
SQRT2 = math.sqrt(2.0)
POINTS = (0.0, 0.4, -0.3 + 0.5j)


@pytest.fixture
def half_affine() -> Realization:
    """S(z) = (1 + z) / 2, unimodular at t0 = 1 with angular derivative 1/2."""
    return polynomial([0.5, 0.5])


def test_radial_ladder() -> None:
    """Eight radii, halving the distance to the circle each time."""
    ladder = radial_ladder()
    assert len(ladder) == 8
    assert ladder[0] == pytest.approx(0.5)
    assert ladder[-1] == pytest.approx(1.0 - 0.5 / 128)
    assert np.all(np.diff(1.0 - ladder) < 0)


def test_richardson_limit() -> None:
    """Samples of a polynomial in the step extrapolate exactly."""
    steps = [0.5, 0.25, 0.125, 0.0625]
    values = [np.array([[1.0 + 3.0 * h - h**2]]) for h in steps]
    assert richardson_limit(values)[0, 0] == pytest.approx(1.0)
    assert richardson_limit(values[:1])[0, 0] == pytest.approx(values[0][0, 0])


def test_extrapolate_converges_and_diverges() -> None:
    """A bounded sampler converges; 1 / (1 - r) blows up."""
    bounded = extrapolate(lambda r: 2.0 - r**2)
    assert bounded.converged
    assert bounded.value[0, 0] == pytest.approx(1.0)

    unbounded = extrapolate(lambda r: 1.0 / (1.0 - r))
    assert not unbounded.converged
    assert unbounded.growth_ratio == pytest.approx(2.0)


def test_radial_limits(square_schur: Realization) -> None:
    """Radial limits of the Taylor coefficients of z^2 at t0 = 1 are 1, 2 and 1."""
    limits = lower_order_limits(square_schur, 1.0, 2)
    assert all(limit.converged for limit in limits)
    np.testing.assert_allclose([limit.value[0, 0] for limit in limits], [1.0, 2.0, 1.0], atol=1e-8)
    pole = Realization(A=[[1.0]], B=[[1.0]], C=[[1.0]], D=[[1.0]])
    assert not radial_limit(pole, 1.0).converged


def test_boundary_point_must_be_unimodular(square_schur: Realization) -> None:
    """Points off the circle are rejected."""
    with pytest.raises(InvalidNodes):
        boundary_jet(square_schur, 0.5, 1)
    with pytest.raises(InvalidNodes):
        radial_limit(square_schur, 1.5)
    with pytest.raises(ValueError):
        boundary_jet(square_schur, 1.0, -1)


def test_jet_of_square(square_schur: Realization) -> None:
    """z^2 at t0 = 1: S_0 = 1, S_1 = 2, S_2 = 1, S_3 = 0 and the angular derivative is 2."""
    jet = boundary_jet(square_schur, 1.0, 3)
    np.testing.assert_allclose([d[0, 0] for d in jet.derivatives], [1.0, 2.0, 1.0, 0.0], atol=1e-12)
    assert jet.order == 3
    assert not jet.extrapolated
    assert jet.cj_holds
    assert jet.cj_value == pytest.approx(2.0)


def test_jet_at_another_point(square_schur: Realization) -> None:
    """At t0 = i: S_0 = -1 and S_1 = 2i; the angular derivative is still 2."""
    jet = boundary_jet(square_schur, 1j, 1)
    np.testing.assert_allclose(jet.derivatives[0], [[-1.0]], atol=1e-12)
    np.testing.assert_allclose(jet.derivatives[1], [[2j]], atol=1e-12)
    assert jet.cj_value == pytest.approx(2.0)


def test_cj_of_affine_function(half_affine: Realization) -> None:
    """(1 + z) / 2 has angular derivative 1/2 at t0 = 1."""
    jet = boundary_jet(half_affine, 1.0, 1)
    assert jet.cj_value == pytest.approx(0.5)


def test_cj_fails_for_strict_contraction() -> None:
    """S = 1/2 is not unimodular anywhere on the circle."""
    jet = boundary_jet(constant(0.5), 1.0, 0)
    assert not jet.cj_holds
    assert jet.cj_value == math.inf
    result = cj_check(constant(0.5), 1.0, 0)
    assert not result.holds
    assert result.limit is None


def test_kernel_coefficients(square_schur: Realization) -> None:
    """For z^2 the kernel is 1 + z conj(w), so around w0 the coefficients are [[1 + |w0|^2, w0], [conj(w0), 1]]."""
    np.testing.assert_allclose(kernel_coefficients(square_schur, 0.0, 1), np.eye(2), atol=1e-12)
    w0 = 0.5 + 0.25j
    np.testing.assert_allclose(
        kernel_coefficients(square_schur, w0, 1),
        [[1.0 + abs(w0) ** 2, w0], [np.conj(w0), 1.0]],
        atol=1e-12,
    )


def test_cj_check_of_order_one(square_schur: Realization) -> None:
    """The weighted quotient converges to the boundary Pick matrix [[2, 1], [1, 1]]."""
    result = cj_check(square_schur, 1.0, 1)
    assert result.holds
    np.testing.assert_allclose(result.limit, [[2.0, 1.0], [1.0, 1.0]], atol=1e-6)
    np.testing.assert_allclose([b[0, 0] for b in result.b_jets], [1.0, 2.0], atol=1e-12)


def test_psi_matrix() -> None:
    """Entries (-1)^l binom(l, j) t0^(l + j + 1) on and above the diagonal."""
    np.testing.assert_allclose(psi_matrix(1.0, 1), [[1.0, -1.0], [0.0, -1.0]])
    np.testing.assert_allclose(psi_matrix(1j, 0), [[1j]])
    t0 = -1.0
    psi = psi_matrix(t0, 2)
    for j in range(3):
        for ell in range(3):
            expected = (-1) ** ell * math.comb(ell, j) * t0 ** (ell + j + 1) if j <= ell else 0.0
            assert psi[j, ell] == pytest.approx(expected)
    # (-1)^2 * binom(2, 1) * (-1)^4
    assert psi[1, 2] == pytest.approx(2.0)
    assert psi[0, 2] == pytest.approx(-1.0)
    assert psi[2, 2] == pytest.approx(-1.0)


def test_boundary_pick(square_schur: Realization) -> None:
    """The boundary Pick matrix of z^2 at 1 is [[2, 1], [1, 1]] for order one and 2 for order zero."""
    jet = boundary_jet(square_schur, 1.0, 3)
    pick = boundary_pick(jet, 1)
    np.testing.assert_allclose(pick.P, [[2.0, 1.0], [1.0, 1.0]], atol=1e-12)
    np.testing.assert_allclose(pick.hankel, [[2.0, 1.0], [1.0, 0.0]], atol=1e-12)
    np.testing.assert_allclose(pick.toeplitz, [[1.0, 2.0], [0.0, 1.0]], atol=1e-12)
    assert pick.asymmetry < 1e-12
    np.testing.assert_allclose(boundary_pick(jet, 0).P, [[2.0]], atol=1e-12)
    with pytest.raises(DimensionMismatch):
        boundary_pick(boundary_jet(square_schur, 1.0, 2), 1)


def test_jordan_data(square_schur: Realization) -> None:
    """T is a Jordan block at conj(t0), E = [1, 0] and N = [S_0*, S_1*]."""
    jet = boundary_jet(square_schur, 1.0, 1)
    data = jordan_data(jet, 1)
    np.testing.assert_allclose(data.T, [[1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(data.E, [[1.0, 0.0]])
    np.testing.assert_allclose(data.N, [[1.0, 2.0]])

    weighted = jordan_data(jet, 1, weight=[[[2.0]]])
    np.testing.assert_allclose(weighted.E, [[2.0, 0.0]])
    np.testing.assert_allclose(weighted.N, [[2.0, 4.0]])


def test_lower_toeplitz() -> None:
    """[A_(i-j)] for scalar coefficients."""
    matrix = lower_toeplitz([np.array([[1.0]]), np.array([[2.0]]), np.array([[3.0]])])
    np.testing.assert_allclose(matrix, [[1.0, 0.0, 0.0], [2.0, 1.0, 0.0], [3.0, 2.0, 1.0]])


def test_boundary_kernels(square_schur: Realization, half_affine: Realization) -> None:
    """The boundary kernels of z^2 at 1 are 1 + z and z; that of (1 + z) / 2 is 1/2."""
    jet = boundary_jet(square_schur, 1.0, 1)
    first, second = boundary_kernels(square_schur, jet, 0), boundary_kernels(square_schur, jet, 1)
    for z in POINTS:
        assert first(z)[0, 0] == pytest.approx(1.0 + z)
        assert second(z)[0, 0] == pytest.approx(z)
    # the pole at t0 has cancelled, so the kernels can be evaluated there
    assert first(1.0)[0, 0] == pytest.approx(2.0)

    affine_kernel = boundary_kernels(half_affine, boundary_jet(half_affine, 1.0, 0), 0)
    assert affine_kernel(0.3)[0, 0] == pytest.approx(0.5)


def test_boundary_kernel_norm_is_angular_derivative() -> None:
    """For an inner S the H^2 norm of the order-zero boundary kernel is the angular derivative."""
    factor = blaschke([0.5])
    jet = boundary_jet(factor, 1.0, 1)
    kernel = boundary_kernels(factor, jet, 0)
    assert h2_inner(kernel, kernel).real == pytest.approx(3.0)
    assert boundary_pick(jet, 0).P[0, 0].real == pytest.approx(3.0)
    assert jet.cj_value == pytest.approx(3.0)


def test_boundary_problem_from_json(problems_dir: Path) -> None:
    """The shipped boundary problem decodes to the targets of (1 + z) / sqrt(2)."""
    payload = json.loads((problems_dir / "boundary.json").read_text(encoding="utf-8"))
    problem = BoundaryProblem.from_json_dict(payload["problem"])
    assert problem.point == 1.0
    assert problem.n == 1
    np.testing.assert_allclose(problem.target_row(), [[SQRT2, 1.0 / SQRT2]])
    with pytest.raises(ValueError):
        BoundaryProblem.from_json_dict({**payload["problem"], "extra": 0})


def test_target_count(boundary_problem: BoundaryProblem) -> None:
    """One target per derivative order."""
    short = boundary_problem.model_copy(update={"targets": boundary_problem.targets[:1]})
    with pytest.raises(DimensionMismatch):
        short.target_row()


def test_to_hs_problem(boundary_problem: BoundaryProblem) -> None:
    """The reduced problem has Jordan data and P = [[2, 1], [1, 1]]; the target uses the whole budget."""
    prob = to_hs_problem(boundary_problem, FAST)
    np.testing.assert_allclose(prob.P, [[2.0, 1.0], [1.0, 1.0]], atol=1e-10)
    np.testing.assert_allclose(prob.data.T, [[1.0, 1.0], [0.0, 1.0]])

    sol = solve_min_norm(prob, FAST)
    np.testing.assert_allclose(sol.coefficients, [[1.0 / SQRT2], [0.0]], atol=1e-10)
    assert sol.central_norm == pytest.approx(1.0)
    assert sol.norm_budget == pytest.approx(0.0, abs=1e-6)
    assert sol.unique
    for z in POINTS:
        assert sol.central(z)[0, 0] == pytest.approx((1.0 + z) / SQRT2)


def test_to_hs_problem_rejects_cj_failure() -> None:
    """A strictly contractive S has no boundary interpolation problem."""
    problem = BoundaryProblem(S=constant(0.5), t0=(1.0, 0.0), n=0, targets=(np.array([[0.1]]),))
    with pytest.raises(CaratheodoryJuliaFailure):
        to_hs_problem(problem)


def test_boundary_values(square_schur: Realization) -> None:
    """Taylor coefficients at t0 of a regular function."""
    values = boundary_values(scale(square_schur, left=[[0.5]]), 1.0, 2)
    np.testing.assert_allclose([v[0, 0] for v in values], [0.5, 1.0, 0.5], atol=1e-12)


def test_verify_boundary_solution(boundary_problem: BoundaryProblem) -> None:
    """(1 + z) / sqrt(2) passes; (1 + z) / 2 misses the targets."""
    prob = to_hs_problem(boundary_problem, FAST)
    solution = polynomial([1.0 / SQRT2, 1.0 / SQRT2])
    report = verify_boundary_solution(boundary_problem, solution, FAST, seed=1, prob=prob)
    assert report.passed, report.failed_checks()
    assert report["h2_norm"].value == pytest.approx(1.0)

    wrong = verify_boundary_solution(boundary_problem, polynomial([0.5, 0.5]), FAST, seed=1, prob=prob)
    assert not wrong["boundary_interpolation"].passed


@pytest.mark.parametrize("n", [0, 1, 2])
def test_boundary_pick_is_gram_of_boundary_kernels(n: int) -> None:
    """For finite Blaschke products the boundary Pick matrix is the H^2 Gram matrix of the boundary kernels."""
    rng = np.random.default_rng(40 + n)
    for _ in range(10):
        zeros = 0.7 * np.sqrt(rng.uniform(size=3)) * np.exp(2j * np.pi * rng.uniform(size=3))
        schur = blaschke(list(zeros))
        jet = boundary_jet(schur, 1.0, 2 * n + 1)
        pick_matrix = boundary_pick(jet, n).P
        kernels = [boundary_kernels(schur, jet, j) for j in range(n + 1)]
        gram = np.array([[h2_inner(kernels[j], kernels[i]) for j in range(n + 1)] for i in range(n + 1)])
        np.testing.assert_allclose(pick_matrix, gram, atol=1e-8 * max(1.0, np.linalg.norm(pick_matrix, 2)))
