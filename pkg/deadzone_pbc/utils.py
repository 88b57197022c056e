import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, TextIO, Union

import numpy as np
from numpy.typing import ArrayLike

from .constants import LN_COSH_BRANCH
from .exceptions import DimensionError


def ln_cosh(z: ArrayLike) -> np.ndarray:
    """Element-wise ln(cosh(z)) that does not overflow for large |z|.

    Beyond |z| = 20 the identity ln(cosh z) = |z| + ln((1 + e^{-2|z|}) / 2) is used.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    far = a > LN_COSH_BRANCH
    near_value = np.log(np.cosh(np.where(far, 0.0, a)))
    far_value = a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)
    return np.where(far, far_value, near_value)


def as_vector(value: ArrayLike, n: int, name: str) -> np.ndarray:
    # Scalars broadcast to n entries
    array = np.array(value, dtype=float)
    if array.ndim == 0:
        return np.full(n, float(array))
    if array.shape != (n,):
        raise DimensionError(f"expected vector of length {n}, found shape {array.shape}", name=name)
    return array


def check_dimension(value: np.ndarray, n: int, name: str) -> np.ndarray:
    if value.shape != (n,):
        raise DimensionError(f"expected vector of length {n}, found shape {value.shape}", name=name)
    return value


def fmt17(value: float) -> str:
    return format(float(value), ".17g")


def transform_label(label: str) -> str:
    # File-system safe label: runs of anything but [A-Za-z0-9_.-] collapse to '_'
    safe = []
    for ch in label.strip():
        safe.append(ch if ch.isalnum() or ch in "_.-" else "_")
    collapsed = "".join(safe)
    while "__" in collapsed:
        collapsed = collapsed.replace("__", "_")
    return collapsed.strip("_") or "scenario"


@contextmanager
def atomic_open(path: Union[str, Path], newline: Optional[str] = "") -> Iterator[TextIO]:
    """Open a sibling temporary file for writing and move it over `path` on a clean exit.

    An exception inside the block removes the temporary file and leaves `path` untouched.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as handle:
            yield handle
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def qualified_name(name: str, qual: Optional[str] = None) -> str:
    return "{}__{}".format(qual, name) if qual and name else str(name)
