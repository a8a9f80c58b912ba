# pylint: disable=redefined-outer-name
"""
Pytest configuration for PickForge. It is loaded by pytest automatically.
"""
from pathlib import Path

import numpy as np
import pytest

import pickforge
from pickforge.boundary import BoundaryProblem
from pickforge.config import DEFAULT_TOLERANCES, ToleranceConfig
from pickforge.hs_interp import HSProblemData
from pickforge.pick import InterpolationData
from pickforge.realizations import Realization, constant, polynomial, shift

SQRT2 = float(np.sqrt(2.0))


@pytest.fixture
def cfg() -> ToleranceConfig:
    """
    The default tolerances.
    """
    return DEFAULT_TOLERANCES


@pytest.fixture
def rng() -> np.random.Generator:
    """
    A seeded random generator, so that randomized tests are reproducible.
    """
    return np.random.default_rng(20240607)


@pytest.fixture
def problems_dir() -> Path:
    """
    The directory of the golden problem files shipped with the package.
    """
    return Path(pickforge.__file__).parent / "problems"


@pytest.fixture
def one_point_data() -> InterpolationData:
    """
    A single scalar condition at the origin: T = [0], E = [1], N = [0], so S(0) = 0 and P = [1].
    """
    return InterpolationData(T=[[0.0]], E=[[1.0]], N=[[0.0]])


@pytest.fixture
def shift_data() -> InterpolationData:
    """
    Data sampled from S(z) = z at the points 0 and 1/2. The Pick matrix [[1, 1], [1, 1]] is singular and S(z) = z is
    the only solution.
    """
    return InterpolationData.from_points([0.0, 0.5], [1.0, 1.0], [0.0, 0.5])


@pytest.fixture
def zero_schur() -> Realization:
    """
    S = 0, whose de Branges-Rovnyak space is H^2.
    """
    return constant([[0.0]])


@pytest.fixture
def hardy_problem(one_point_data: InterpolationData, zero_schur: Realization) -> HSProblemData:
    """
    Find f in H^2 with f(0) = 1/2 and ||f|| <= 1.
    """
    return HSProblemData.from_interpolation(zero_schur, one_point_data, [0.5])


@pytest.fixture
def square_schur() -> Realization:
    """
    S(z) = z^2, an inner function with a unimodular boundary value at t0 = 1.
    """
    return polynomial([0.0, 0.0, 1.0])


@pytest.fixture
def identity_schur() -> Realization:
    """
    S(z) = z.
    """
    return shift(1)


@pytest.fixture
def boundary_problem(square_schur: Realization) -> BoundaryProblem:
    """
    Boundary interpolation of order one at t0 = 1 in H(z^2) with the jets of f = (1 + z) / sqrt(2): f(1) = sqrt(2),
    f'(1) = 1 / sqrt(2). The target has norm one, so the solution is unique.
    """
    return BoundaryProblem(
        S=square_schur,
        t0=(1.0, 0.0),
        n=1,
        targets=(np.array([[SQRT2]]), np.array([[1.0 / SQRT2]])),
    )
