"""Dense 2D/3D grids, adjacency and thresholding.

Scalar fields are float64 numpy arrays with values in [0, 1]; binary masks are
bool arrays.  Both use numpy's default C (row-major, last axis fastest) order,
which every module relies on.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Sequence

import numpy as np

VALID_CONNECTIVITY = {2: (4, 8), 3: (6, 18, 26)}


def _check_ndim(ndim: int) -> None:
    if ndim not in VALID_CONNECTIVITY:
        raise ValueError(f"only 2D and 3D grids are supported, got ndim={ndim}")


def scalar_field(data, dtype=np.float64) -> np.ndarray:
    """Return `data` as a validated scalar field (values in [0, 1])."""
    arr = np.asarray(data, dtype=dtype)
    _check_ndim(arr.ndim)
    if 0 in arr.shape:
        raise ValueError(f"every axis needs extent >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("scalar field contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"scalar field values must lie in [0, 1], got [{arr.min()}, {arr.max()}]"
        )
    return arr


def binary_mask(data) -> np.ndarray:
    """Return `data` as a bool mask. Non-bool input must only contain 0 and 1."""
    arr = np.asarray(data)
    _check_ndim(arr.ndim)
    if arr.dtype != bool:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("binary mask may only contain 0 and 1")
        arr = arr.astype(bool)
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def threshold(field, t: float = 0.5) -> np.ndarray:
    """Binarize: a voxel is foreground iff its value is >= t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return np.asarray(field) >= t


def default_foreground_connectivity(ndim: int) -> int:
    _check_ndim(ndim)
    return 8 if ndim == 2 else 26


def default_background_connectivity(ndim: int) -> int:
    _check_ndim(ndim)
    return 4 if ndim == 2 else 6


def dual_connectivity(conn: int, ndim: int) -> int:
    """Complementary adjacency used for the other phase (8<->4, 26<->6)."""
    pairs = {2: {8: 4, 4: 8}, 3: {26: 6, 6: 26}}
    check_connectivity(conn, ndim)
    try:
        return pairs[ndim][conn]
    except KeyError:
        raise ValueError(f"connectivity {conn} has no dual in {ndim}D") from None


def check_connectivity(conn: int, ndim: int) -> None:
    _check_ndim(ndim)
    if conn not in VALID_CONNECTIVITY[ndim]:
        raise ValueError(
            f"connectivity {conn} invalid in {ndim}D, expected one of {VALID_CONNECTIVITY[ndim]}"
        )


@lru_cache(maxsize=None)
def offsets(ndim: int, conn: int) -> tuple[tuple[int, ...], ...]:
    """Neighbor offsets for `conn`, in lexicographic order, center excluded.

    An offset belongs to the neighborhood when its number of nonzero entries
    is at most 1 (4/6), 2 (8 in 2D; 18 in 3D) or 3 (26).
    """
    check_connectivity(conn, ndim)
    max_nonzero = {4: 1, 6: 1, 8: 2, 18: 2, 26: 3}[conn]
    out = []
    for off in itertools.product((-1, 0, 1), repeat=ndim):
        nz = sum(1 for o in off if o != 0)
        if 0 < nz <= max_nonzero:
            out.append(off)
    return tuple(out)


def footprint(ndim: int, conn: int) -> np.ndarray:
    """3**ndim structuring element (center included) for `conn`."""
    fp = np.zeros((3,) * ndim, dtype=bool)
    fp[(1,) * ndim] = True
    for off in offsets(ndim, conn):
        fp[tuple(o + 1 for o in off)] = True
    return fp


def neighbors(idx: Sequence[int], conn: int, dims: Sequence[int]) -> list[tuple[int, ...]]:
    """In-bounds neighbors of `idx` under `conn`, lexicographically ordered."""
    dims = tuple(int(d) for d in dims)
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(dims):
        raise ValueError(f"index {idx} does not match grid dims {dims}")
    if any(not 0 <= i < d for i, d in zip(idx, dims)):
        raise IndexError(f"index {idx} out of bounds for dims {dims}")
    result = []
    for off in offsets(len(dims), conn):
        q = tuple(i + o for i, o in zip(idx, off))
        if all(0 <= c < d for c, d in zip(q, dims)):
            result.append(q)
    return result
