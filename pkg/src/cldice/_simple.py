"""Local simple-point characterization on the 3**d neighborhood.

A neighborhood is encoded as an int whose bit i is set when the i-th
non-center cell (raster order over the 3**d cube) belongs to the object.
For object adjacency 8/26 a point is simple iff the punctured neighborhood
holds exactly one object component and exactly one complement component
(4/6-adjacent, inside the 8/18 neighborhood) touching the center.  The
4/6 object case is the mirror image.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .grid import offsets


@lru_cache(maxsize=None)
def _cells(ndim: int) -> tuple[tuple[int, ...], ...]:
    return tuple(o for o in itertools.product((-1, 0, 1), repeat=ndim) if any(o))


@lru_cache(maxsize=None)
def _adjacency(ndim: int, conn: int) -> tuple[tuple[int, ...], ...]:
    """For each punctured cell, indices of cells adjacent to it under `conn`."""
    cells = _cells(ndim)
    steps = set(offsets(ndim, conn))
    pos = {c: i for i, c in enumerate(cells)}
    out = []
    for c in cells:
        nb = []
        for s in steps:
            q = tuple(a + b for a, b in zip(c, s))
            if q in pos:
                nb.append(pos[q])
        out.append(tuple(sorted(nb)))
    return tuple(out)


def _count_components(bits: int, ndim: int, conn: int, region: int, touch: int) -> int:
    """Components of `bits & region` under `conn` that intersect `touch`."""
    adj = _adjacency(ndim, conn)
    todo = bits & region
    count = 0
    while todo:
        start = (todo & -todo).bit_length() - 1
        comp = 0
        stack = [start]
        todo &= ~(1 << start)
        while stack:
            i = stack.pop()
            comp |= 1 << i
            for j in adj[i]:
                if todo >> j & 1:
                    todo &= ~(1 << j)
                    stack.append(j)
        if comp & touch:
            count += 1
    return count


@lru_cache(maxsize=None)
def _masks(ndim: int) -> dict[int, int]:
    """Bit masks of the punctured 4/6, 8/18 and full neighborhoods."""
    cells = _cells(ndim)
    by_nz: dict[int, int] = {}
    for i, c in enumerate(cells):
        nz = sum(1 for v in c if v)
        for k in range(nz, ndim + 1):
            by_nz[k] = by_nz.get(k, 0) | (1 << i)
    return by_nz


def topo_numbers(bits: int, ndim: int, obj_conn: int) -> tuple[int, int]:
    """(object number, complement number) of the neighborhood `bits`."""
    m = _masks(ndim)
    full = m[ndim]
    direct = m[1]
    mid = m[2] if ndim == 3 else full
    comp_bits = full & ~bits
    if obj_conn in (8, 26):
        t_obj = _count_components(bits, ndim, obj_conn, full, full)
        t_bg = _count_components(comp_bits, ndim, 4 if ndim == 2 else 6, mid, direct)
    elif obj_conn in (4, 6):
        t_obj = _count_components(bits, ndim, obj_conn, mid, direct)
        t_bg = _count_components(comp_bits, ndim, 8 if ndim == 2 else 26, full, full)
    else:
        raise ValueError(f"simple-point test needs 4/8 (2D) or 6/26 (3D), got {obj_conn}")
    return t_obj, t_bg


@lru_cache(maxsize=1 << 20)
def is_simple_bits(bits: int, ndim: int, obj_conn: int) -> bool:
    t_obj, t_bg = topo_numbers(bits, ndim, obj_conn)
    return t_obj == 1 and t_bg == 1


@lru_cache(maxsize=None)
def lut_2d(obj_conn: int) -> np.ndarray:
    return np.array([is_simple_bits(b, 2, obj_conn) for b in range(256)], dtype=bool)


@lru_cache(maxsize=None)
def bit_weights(ndim: int) -> np.ndarray:
    """Weights turning a raveled 3**d neighborhood (center dropped) into bits."""
    n = 3 ** ndim
    w = np.zeros(n, dtype=np.int64)
    center = n // 2
    k = 0
    for i in range(n):
        if i == center:
            continue
        w[i] = 1 << k
        k += 1
    return w


def neighborhood_bits(padded: np.ndarray, idx: tuple[int, ...]) -> int:
    """Bits of the 3**d block around `idx` in an array padded by one cell."""
    sl = tuple(slice(i - 1, i + 2) for i in idx)
    return int(padded[sl].ravel().astype(np.int64) @ bit_weights(padded.ndim))


def is_simple(padded: np.ndarray, idx: tuple[int, ...], obj_conn: int) -> bool:
    bits = neighborhood_bits(padded, idx)
    if padded.ndim == 2:
        return bool(lut_2d(obj_conn)[bits])
    return is_simple_bits(bits, 3, obj_conn)
