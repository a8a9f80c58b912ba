"""
Numerical tolerances and seed resolution.
"""

import os
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt

SEED_ENV_VAR = "PICKFORGE_SEED"


class ToleranceConfig(BaseModel):
    """
    Tolerances shared by every construction and verifier. PSD thresholds are relative: a matrix M counts as PSD when
    its smallest eigenvalue is at least -psd_tol * max(1, ||M||).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    psd_tol: PositiveFloat = 1e-10
    residual_tol: PositiveFloat = 1e-8
    truncation_tol: PositiveFloat = 1e-12
    grid_boundary_points: PositiveInt = 200
    grid_interior_points: PositiveInt = 200
    sample_tuples: PositiveInt = 20
    tuple_size: PositiveInt = 3
    truncation_cap: PositiveInt = 100_000

    def merged(self, **overrides: Any) -> "ToleranceConfig":
        """
        Get a copy of this config with the given fields overridden. `None` values are ignored, which lets callers
        pass optional CLI flags straight through.
        """
        overrides = {key: value for key, value in overrides.items() if value is not None}
        if not overrides:
            return self
        return ToleranceConfig(**{**self.model_dump(), **overrides})


DEFAULT_TOLERANCES = ToleranceConfig()


def resolve_seed(*candidates: Optional[int]) -> int:
    """
    Return the first candidate that is not None, falling back to the PICKFORGE_SEED environment variable and then to
    zero. The CLI loads `.env` before calling this.
    """
    for candidate in candidates:
        if candidate is not None:
            return int(candidate)
    env_value = os.environ.get(SEED_ENV_VAR)
    if env_value:
        return int(env_value)
    return 0
