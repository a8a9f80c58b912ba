"""
Immutable value models shared by all the PickForge modules.
"""

import hashlib
import json
from functools import cached_property
from typing import Annotated, Any, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def as_complex_matrix(value: Any) -> np.ndarray:
    """
    Convert a value into a read-only two-dimensional complex128 array. Accepts numpy arrays, nested lists of numbers
    and nested lists of [re, im] pairs (the JSON encoding). Scalars become 1x1 matrices, one-dimensional input becomes
    a single row and an empty list becomes a 0x0 matrix.
    """
    if isinstance(value, np.ndarray):
        array = value
    else:
        array = np.asarray(value)
        if array.ndim == 3 and array.shape[-1] == 2 and not np.iscomplexobj(array):
            array = array[..., 0] + 1j * array[..., 1]

    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(0, 0) if array.size == 0 else array.reshape(1, -1)
    elif array.ndim != 2:
        raise ValueError(f"expected a matrix, got an array with {array.ndim} dimensions")

    try:
        array = np.array(array, dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"matrix entries must be numbers: {exc}") from exc
    if not np.all(np.isfinite(array)):
        raise ValueError("matrix entries must be finite (no NaN or Inf)")
    array.flags.writeable = False
    return array


def encode_matrix(matrix: np.ndarray) -> list:
    """
    Encode a matrix as nested [re, im] pairs, row by row. Signed zeros are folded into +0.0 so that equal matrices
    encode (and hash) identically.
    """
    return [[[float(entry.real) + 0.0, float(entry.imag) + 0.0] for entry in row] for row in np.asarray(matrix)]


def encode_complex(value: complex) -> list[float]:
    """
    Encode a complex scalar as an [re, im] pair.
    """
    return [float(np.real(value)) + 0.0, float(np.imag(value)) + 0.0]


def decode_complex(value: Any) -> complex:
    """
    Decode a complex scalar from an [re, im] pair or a plain number.
    """
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"expected an [re, im] pair, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def decode_vector(value: Any) -> np.ndarray:
    """
    Decode a vector given as a number, a list of numbers or a list of [re, im] pairs into a one-dimensional complex
    array.
    """
    array = np.asarray(value)
    if array.ndim == 2 and array.shape[-1] == 2 and not np.iscomplexobj(array):
        array = array[:, 0] + 1j * array[:, 1]
    if array.ndim > 1:
        raise ValueError(f"expected a vector, got an array of shape {array.shape}")
    return np.atleast_1d(np.array(array, dtype=np.complex128))


ComplexMatrix = Annotated[
    np.ndarray,
    BeforeValidator(as_complex_matrix),
    PlainSerializer(encode_matrix, return_type=list),
]


class Immutable(BaseModel):
    """
    A base class for immutable pydantic objects. It is frozen and has a git-style hash key that is calculated from the
    JSON representation of the object. Two Immutables are equal when they are of the same type and their hash keys
    match (matrix fields make the default field-by-field comparison ambiguous).
    """

    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    @cached_property
    def hash_key(self) -> str:
        """
        Get the hash key for this object. It is a hash of the JSON representation of the object.
        """
        return hashlib.sha256(
            json.dumps(self.as_dict(), ensure_ascii=False, sort_keys=True).encode("utf-8")
        ).hexdigest()

    def as_dict(self) -> dict[str, Any]:
        """
        Get the fields of the object as a JSON-compatible dictionary (matrices become nested [re, im] pairs).
        """
        return self.model_dump(mode="json", exclude=self._exclude_from_dict())

    # noinspection PyMethodMayBeStatic
    def _exclude_from_dict(self) -> set[str]:
        return set()

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Immutable):
            return NotImplemented
        return type(self) is type(other) and self.hash_key == other.hash_key

    def __hash__(self) -> int:
        return hash(self.hash_key)


class PsdCertificate(Immutable):
    """
    Result of a positive-semidefiniteness test. `min_eigenvalue` is the smallest eigenvalue of the Hermitian part of
    the tested matrix and `scale` is max(1, ||M||), the reference for the relative thresholds.
    """

    is_psd: bool
    min_eigenvalue: float
    hermitian_defect: float
    scale: float = 1.0

    def __bool__(self) -> bool:
        return self.is_psd


class Check(Immutable):
    """
    A single named numerical check: a measured value, the tolerance it was held to and the outcome.
    """

    name: str
    value: float
    tolerance: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, value: float, tolerance: float) -> "Check":
        """
        A check that passes when `value` does not exceed `tolerance` (residuals, defects).
        """
        value = float(value)
        return cls(name=name, value=value, tolerance=float(tolerance), passed=bool(value <= tolerance))

    @classmethod
    def at_least(cls, name: str, value: float, threshold: float) -> "Check":
        """
        A check that passes when `value` is not below `threshold` (minimal eigenvalues, margins).
        """
        value = float(value)
        return cls(name=name, value=value, tolerance=float(threshold), passed=bool(value >= threshold))

    @classmethod
    def flag(cls, name: str, passed: bool) -> "Check":
        """
        A boolean check without a numerical value.
        """
        return cls(name=name, value=1.0 if passed else 0.0, tolerance=1.0, passed=bool(passed))


class KernelSample(Immutable):
    """
    The minimal eigenvalue of a pointwise kernel matrix at one sample point. These feed the CSV plot data.
    """

    z_re: float
    z_im: float
    min_eig: float


class VerificationReport(Immutable):
    """
    The outcome of a verifier: a subject line and a tuple of named checks. The report passes when every check passes.
    """

    subject: str
    checks: tuple[Check, ...] = ()
    samples: tuple[KernelSample, ...] = ()

    @property
    def passed(self) -> bool:
        """
        Whether every check passed.
        """
        return all(check.passed for check in self.checks)

    def __getitem__(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def failed_checks(self) -> list[Check]:
        """
        Get the checks that did not pass.
        """
        return [check for check in self.checks if not check.passed]

    def merged_with(self, other: "VerificationReport", subject: Optional[str] = None) -> "VerificationReport":
        """
        Combine two reports into one (checks and samples are concatenated).
        """
        return VerificationReport(
            subject=subject or self.subject,
            checks=self.checks + other.checks,
            samples=self.samples + other.samples,
        )
