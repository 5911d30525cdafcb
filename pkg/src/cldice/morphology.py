"""Soft (min/max pooling) morphology, soft skeleton and simple-point thinning.

The soft operators accept either numpy arrays or autodiff `Var`s, so the same
code produces plain values and differentiable graphs.  Pooling windows are
clipped at the grid boundary: out-of-bounds cells never take part in a min or
max.
"""
from __future__ import annotations

import numpy as np

from . import _simple
from .autodiff import Var, max_pool, min_pool, relu
from .grid import (
    binary_mask,
    check_connectivity,
    default_foreground_connectivity,
    footprint,
)


def _ndim(f) -> int:
    return f.ndim if isinstance(f, Var) else np.ndim(f)


def _as_input(f):
    return f if isinstance(f, Var) else np.asarray(f, dtype=np.float64)


def cross_footprint(ndim: int) -> np.ndarray:
    return footprint(ndim, 4 if ndim == 2 else 6)


def soft_erode(f):
    """Pointwise min of the axis-aligned 3-cell min-pools.

    Computed as one min-pool over the cross-shaped union of those windows,
    which gives identical values.
    """
    f = _as_input(f)
    return min_pool(f, cross_footprint(_ndim(f)))


def soft_dilate(f):
    """Full 3x3 (2D) or 3x3x3 (3D) max-pool."""
    f = _as_input(f)
    return max_pool(f, np.ones((3,) * _ndim(f), dtype=bool))


def soft_dilate_cross(f):
    """Max-pool over the same cross used by `soft_erode` (its dual)."""
    f = _as_input(f)
    return max_pool(f, cross_footprint(_ndim(f)))


def soft_open(f):
    return soft_dilate(soft_erode(f))


def soft_skeleton(f, k: int):
    """Iterative soft skeleton with `k` erosion steps.

    Each step adds the part of the current erosion that an opening removes:
    S <- S + (1 - S) * relu(I - open(I)).  For values in [0, 1] this equals
    the alternative update S + relu(delta - S * delta).
    """
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    img = _as_input(f)
    skel = relu(img - soft_open(img))
    for _ in range(k):
        img = soft_erode(img)
        delta = relu(img - soft_open(img))
        skel = skel + (1.0 - skel) * delta
    return skel


def soft_skeleton_relu_form(f, k: int):
    """Same skeleton written with the relu(delta - skel*delta) update."""
    img = _as_input(f)
    skel = relu(img - soft_open(img))
    for _ in range(k):
        img = soft_erode(img)
        delta = relu(img - soft_open(img))
        skel = skel + relu(delta - skel * delta)
    return skel


def inscribed_radius(mask) -> int:
    """Number of cross erosions a binary mask survives, minus one.

    A straight tube of width 2r+1 has radius r.  With k >= this value the
    soft skeleton of the mask no longer changes.  Empty masks give 0.
    """
    m = np.asarray(mask) > 0
    fp = cross_footprint(m.ndim)
    r = -1
    cur = m.astype(np.float64)
    while cur.any():
        cur = min_pool(cur, fp)
        r += 1
    return max(r, 0)


def _directions(ndim: int) -> list[tuple[int, ...]]:
    dirs = []
    for axis in range(ndim):
        for sign in (-1, 1):
            d = [0] * ndim
            d[axis] = sign
            dirs.append(tuple(d))
    return dirs


def thin_skeletonize(mask, conn: int | None = None, keep_endpoints: bool = True) -> np.ndarray:
    """Topology-preserving thinning by sequential simple-point deletion.

    Sub-iterations visit one border direction at a time (-/+ along each axis).
    Border points of that direction are tested in raster order against the
    current state; a point is deleted when it is simple and has more than one
    object neighbor.  The loop stops when a full pass deletes nothing.

    `conn` is the object adjacency (default 8 in 2D, 26 in 3D; 4/6 thins an
    object seen with the dual pairing, as needed for background skeletons).
    Out-of-bounds cells count as not-object.  With `keep_endpoints=False`
    every simple point is removed, leaving a minimal homotopic kernel (a
    point per contractible component, a loop per annulus).
    """
    m = binary_mask(mask)
    ndim = m.ndim
    conn = default_foreground_connectivity(ndim) if conn is None else conn
    check_connectivity(conn, ndim)
    if conn == 18:
        raise ValueError("thinning supports 4/8 in 2D and 6/26 in 3D")
    arr = np.pad(m, 1).astype(np.uint8)
    nb_offsets = [tuple(o) for o in zip(*np.nonzero(footprint(ndim, conn)))]
    center = (1,) * ndim
    nb_offsets = [tuple(a - c for a, c in zip(o, center)) for o in nb_offsets if o != center]
    changed = True
    while changed:
        changed = False
        for d in _directions(ndim):
            shifted = np.zeros_like(arr)
            src = tuple(slice(max(0, s), arr.shape[i] + min(0, s)) for i, s in enumerate(d))
            dst = tuple(slice(max(0, -s), arr.shape[i] + min(0, -s)) for i, s in enumerate(d))
            shifted[dst] = arr[src]  # shifted[p] = arr[p + d]
            border = (arr == 1) & (shifted == 0)
            for idx in zip(*np.nonzero(border)):
                idx = tuple(int(i) for i in idx)
                n_obj = sum(arr[tuple(i + o for i, o in zip(idx, off))] for off in nb_offsets)
                if keep_endpoints and n_obj <= 1:
                    continue
                if _simple.is_simple(arr, idx, conn):
                    arr[idx] = 0
                    changed = True
    inner = tuple(slice(1, -1) for _ in range(ndim))
    return arr[inner].astype(bool)


def soft_skeleton_mask(mask, k: int | None = None) -> np.ndarray:
    """Binary skeleton from the soft skeleton of a binary mask."""
    m = np.asarray(mask, dtype=np.float64)
    if k is None:
        k = inscribed_radius(m)
    return np.asarray(soft_skeleton(m, k)) > 0.5
