from pathlib import Path
from typing import Any, Generic, Optional, TypeVar, Union

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import ConfigError, ValidationError, ValidatorInitError

F = TypeVar("F")


class ArgumentValidator(Generic[F]):
    def __call__(self, value: F, **kwargs: Any) -> Any:
        # kwargs are runtime arguments (e.g. the expected dimension) supplied by the caller
        if hasattr(self, "validator"):
            return self.validator(value, **kwargs)


class ShapeValidator(ArgumentValidator[ArrayLike]):
    def validator(self, value: ArrayLike, n: Optional[int] = None) -> None:
        array = np.asarray(value)
        if array.ndim != self.ndim:
            raise ValidationError(f"expected {self.ndim}-d array, found shape {array.shape}", validator=self)
        if n is not None and any(size != n for size in array.shape):
            raise ValidationError(f"expected dimension {n}, found shape {array.shape}", validator=self)
        if self.ndim == 2 and array.shape[0] != array.shape[1]:
            raise ValidationError(f"matrix must be square, found shape {array.shape}", validator=self)

    def __init__(self, ndim: int) -> None:
        if ndim not in (1, 2):
            raise ValidatorInitError("only vectors (1) and matrices (2) are supported", validator=self)
        self.ndim = ndim


class FiniteValidator(ArgumentValidator[ArrayLike]):
    def validator(self, value: ArrayLike) -> None:
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise ValidationError("entries must be finite", validator=self)


class SymmetricValidator(ArgumentValidator[ArrayLike]):
    def validator(self, value: ArrayLike) -> None:
        matrix = np.asarray(value, dtype=float)
        scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
        if not np.allclose(matrix, matrix.T, rtol=0.0, atol=self.tol * scale):
            raise ValidationError("matrix is not symmetric", validator=self)

    def __init__(self, tol: float = 1e-12) -> None:
        if tol < 0:
            raise ValidatorInitError("tolerance must be non-negative", validator=self)
        self.tol = tol


class DefiniteValidator(ArgumentValidator[ArrayLike]):
    def validator(self, value: ArrayLike) -> None:
        matrix = np.asarray(value, dtype=float)
        SymmetricValidator()(matrix)
        smallest = float(np.min(np.linalg.eigvalsh(matrix)))
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if self.strict and smallest <= 0.0:
            raise ValidationError("matrix is not positive definite", validator=self)
        if not self.strict and smallest < -1e-12 * scale:
            raise ValidationError("matrix is not positive semi-definite", validator=self)

    def __init__(self, strict: bool = True) -> None:
        self.strict = strict


class DiagonalValidator(ArgumentValidator[ArrayLike]):
    def validator(self, value: ArrayLike) -> None:
        matrix = np.asarray(value, dtype=float)
        diagonal = np.diag(matrix)
        if np.any(matrix - np.diag(diagonal) != 0.0):
            raise ValidationError("matrix is not diagonal", validator=self)
        if self.positive and np.any(diagonal <= 0.0):
            raise ValidationError("diagonal entries must be positive", validator=self)
        if self.nonzero and np.any(diagonal == 0.0):
            raise ValidationError("diagonal entries must be nonzero", validator=self)

    def __init__(self, positive: bool = False, nonzero: bool = False) -> None:
        if positive and nonzero:
            raise ValidatorInitError("only one of positive, nonzero can be True", validator=self)
        self.positive = positive
        self.nonzero = nonzero


class RangeValidator(ArgumentValidator[Union[int, float, ArrayLike]]):
    def validator(self, value: Union[int, float, ArrayLike]) -> None:
        array = np.asarray(value, dtype=float)
        if self.min is not None:
            below = array <= self.min if self.exclusive else array < self.min
            if np.any(below):
                relation = "greater than" if self.exclusive else "at least"
                raise ValidationError(f"value should be {relation} {self.min}", validator=self)
        if self.max is not None:
            above = array >= self.max if self.exclusive else array > self.max
            if np.any(above):
                relation = "less than" if self.exclusive else "at most"
                raise ValidationError(f"value should be {relation} {self.max}", validator=self)

    def __init__(
        self, min: Optional[float] = None, max: Optional[float] = None, exclusive: bool = False
    ) -> None:
        if (min is None and max is None) or (min is not None and max is not None and min >= max):
            raise ValidatorInitError("invalid range provided", validator=self)
        self.min = min
        self.max = max
        self.exclusive = exclusive


class PathValidator(ArgumentValidator[Union[Path, str]]):
    def validator(self, value: Union[Path, str]) -> None:
        path = Path(value)
        if self.is_dir and not path.is_dir():
            raise ValidationError(f"'{path}' is not a valid directory", validator=self)
        if self.is_file and not path.is_file():
            raise ValidationError(f"'{path}' is not a valid file", validator=self)

    def __init__(self, is_dir: bool = False, is_file: bool = False) -> None:
        if is_dir and is_file:
            raise ValidatorInitError("only one of is_dir, is_file can be True", validator=self)
        self.is_dir = is_dir
        self.is_file = is_file


VECTOR = ShapeValidator(1)
MATRIX = ShapeValidator(2)
FINITE = FiniteValidator()
SYMMETRIC = SymmetricValidator()
POSITIVE_DEFINITE = DefiniteValidator(strict=True)
POSITIVE_SEMIDEFINITE = DefiniteValidator(strict=False)
POSITIVE_DIAGONAL = DiagonalValidator(positive=True)
NONZERO_DIAGONAL = DiagonalValidator(nonzero=True)


def checked(
    value: ArrayLike, key: str, *validators: ArgumentValidator[Any], n: Optional[int] = None
) -> np.ndarray:
    """Run `validators` over `value` and return it as a float array.

    Shape validators receive the expected dimension `n`. Any `ValidationError` is re-raised as a
    `ConfigError` naming `key`, so callers report which parameter was rejected.
    """
    array = np.array(value, dtype=float)
    try:
        for validator in validators:
            if isinstance(validator, ShapeValidator):
                validator(array, n=n)
            else:
                validator(array)
    except ValidationError as exc:
        raise ConfigError(exc.message, key=key) from None
    return array


def as_matrix(value: ArrayLike, key: str, n: int) -> np.ndarray:
    # A scalar, the diagonal entries, or a full row-major matrix
    array = np.array(value, dtype=float)
    if array.ndim == 0:
        return np.eye(n) * float(array)
    if array.ndim == 1:
        return np.diag(checked(array, key, VECTOR, FINITE, n=n))
    return checked(array, key, MATRIX, FINITE, n=n)
