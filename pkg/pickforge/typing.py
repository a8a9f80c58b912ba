"""
Typing definitions shared across PickForge.
"""
from typing import Protocol

import numpy as np


class KernelEvaluator(Protocol):
    """
    A positive kernel on the disk, evaluated pointwise: K(z, w) is a square matrix.
    """

    def __call__(self, z: complex, w: complex) -> np.ndarray:
        ...
