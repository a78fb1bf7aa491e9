"""Input validation helpers shared by the data model and the estimators.

Checks raise typed errors from :mod:`netfuse.errors` and always name the
first offending entry.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import (
    AsymmetricMatrix,
    EmptyInput,
    NonFiniteEntry,
    RangeError,
    ValidationError,
)


def as_float_matrix(values, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array without copying when possible."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    return arr


def check_square(arr: np.ndarray, name: str = "matrix") -> None:
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")


def check_finite(arr: np.ndarray, name: str = "matrix") -> None:
    if np.isfinite(arr).all():
        return
    idx = np.argwhere(~np.isfinite(arr))[0]
    pos = tuple(int(i) for i in idx)
    raise NonFiniteEntry(f"{name} has non-finite entry {arr[tuple(idx)]!r} at {pos}")


def check_symmetric(arr: np.ndarray, name: str = "matrix", tol: float = 1e-12) -> None:
    delta = np.abs(arr - arr.T)
    if delta.max(initial=0.0) <= tol:
        return
    idx = np.argwhere(delta > tol)[0]
    i, j = (int(k) for k in idx)
    raise AsymmetricMatrix(
        f"{name} is asymmetric at ({i}, {j}): "
        f"{arr[i, j]!r} vs {arr[j, i]!r} (tol {tol})"
    )


def check_in_range(
    arr: np.ndarray,
    lo: float,
    hi: float,
    name: str = "matrix",
    tol: float = 1e-12,
) -> None:
    bad = (arr < lo - tol) | (arr > hi + tol)
    if not bad.any():
        return
    idx = np.argwhere(bad)[0]
    pos = tuple(int(i) for i in idx)
    raise RangeError(
        f"{name} entry {arr[tuple(idx)]!r} at {pos} outside [{lo}, {hi}] (tol {tol})"
    )


def check_unit_diagonal(arr: np.ndarray, name: str = "matrix", tol: float = 1e-12) -> None:
    diag = np.diagonal(arr)
    bad = np.abs(diag - 1.0) > tol
    if not bad.any():
        return
    i = int(np.argwhere(bad)[0][0])
    raise RangeError(f"{name} diagonal entry {diag[i]!r} at node {i} differs from 1 (tol {tol})")


def check_nonempty(seq: Sequence, name: str = "input") -> None:
    if len(seq) == 0:
        raise EmptyInput(f"{name} is empty")


def check_unique(ids: Sequence[str], name: str = "ids") -> None:
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            raise ValidationError(f"{name} contains duplicate entry {i!r}")
        seen.add(i)


def readonly(arr: np.ndarray) -> np.ndarray:
    """Return a C-contiguous copy-on-need array that refuses writes."""
    out = np.ascontiguousarray(arr)
    if out is arr:
        out = arr.copy()
    out.flags.writeable = False
    return out
