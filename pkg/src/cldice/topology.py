"""Digital topology of binary masks.

Foreground voxels are treated as closed unit cubes (8/26-adjacency), the
background as their complement (4/6-adjacency) inside a grid padded with one
background layer, so that the unbounded exterior is a single component.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _simple
from .grid import (
    binary_mask,
    check_connectivity,
    check_same_shape,
    default_background_connectivity,
    default_foreground_connectivity,
    dual_connectivity,
    footprint,
)

ORACLE_MAX_VOXELS = 20 ** 3


@dataclass(frozen=True)
class CubicalComplexCounts:
    n0: int
    n1: int
    n2: int
    n3: int = 0

    @property
    def euler(self) -> int:
        return self.n0 - self.n1 + self.n2 - self.n3


@dataclass(frozen=True)
class BettiTriple:
    b0: int
    b1: int
    b2: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.b0, self.b1, self.b2)

    def as_dict(self) -> dict[str, int]:
        return {"b0": self.b0, "b1": self.b1, "b2": self.b2}


def connected_components(mask, conn: int | None = None) -> tuple[np.ndarray, int]:
    """Label components 1..count in order of first raster-scan encounter."""
    m = binary_mask(mask)
    conn = default_foreground_connectivity(m.ndim) if conn is None else conn
    check_connectivity(conn, m.ndim)
    labels, count = ndimage.label(m, structure=footprint(m.ndim, conn))
    return labels, int(count)


def _khalimsky(mask: np.ndarray) -> np.ndarray:
    """Cell indicator on the doubled grid: index parity encodes cell dimension."""
    shape = tuple(2 * s + 1 for s in mask.shape)
    grid = np.zeros(shape, dtype=bool)
    for off in itertools.product((0, 1, 2), repeat=mask.ndim):
        sl = tuple(slice(o, o + 2 * s, 2) for o, s in zip(off, mask.shape))
        grid[sl] |= mask
    return grid


def _cell_dims(shape: tuple[int, ...]) -> np.ndarray:
    parity = np.zeros(shape, dtype=np.int64)
    for axis, n in enumerate(shape):
        idx = [np.newaxis] * len(shape)
        idx[axis] = slice(None)
        parity = parity + (np.arange(n) % 2)[tuple(idx)]
    return parity


def cubical_counts(mask) -> CubicalComplexCounts:
    m = binary_mask(mask)
    grid = _khalimsky(m)
    dims = _cell_dims(grid.shape)
    counts = [int(np.count_nonzero(grid & (dims == d))) for d in range(4)]
    return CubicalComplexCounts(*counts)


def euler_characteristic(mask) -> int:
    """Alternating cell count of the union of closed unit cubes."""
    return cubical_counts(mask).euler


def background_components(mask, conn: int | None = None) -> int:
    """Background components in the one-voxel padded grid (exterior included)."""
    m = binary_mask(mask)
    conn = default_background_connectivity(m.ndim) if conn is None else conn
    padded = np.pad(~m, 1, constant_values=True)
    return connected_components(padded, conn)[1]


def betti_numbers(mask) -> BettiTriple:
    """b0 from foreground components, b2 from enclosed background, b1 by Euler."""
    m = binary_mask(mask)
    b0 = connected_components(m)[1]
    b2 = background_components(m) - 1 if m.ndim == 3 else 0
    b1 = b0 + b2 - euler_characteristic(m)
    return BettiTriple(b0, b1, b2)


def background_betti(mask) -> BettiTriple:
    """Betti numbers of the background inside the sphere closing the grid.

    b0 is counted directly; the remaining numbers follow from Alexander
    duality with the foreground.
    """
    m = binary_mask(mask)
    fg = betti_numbers(m)
    b0 = background_components(m)
    if not m.any():
        return BettiTriple(b0, 0, 0)
    if m.ndim == 2:
        return BettiTriple(b0, fg.b0 - 1, 0)
    return BettiTriple(b0, fg.b1, fg.b0 - 1)


def _gf2_rank(columns: list[int]) -> int:
    basis: dict[int, int] = {}
    for v in columns:
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                basis[top] = v
                break
            v ^= basis[top]
    return len(basis)


def betti_oracle(mask) -> BettiTriple:
    """Betti numbers from boundary-matrix ranks of the cubical chain complex (mod 2).

    Dense and slow by design; limited to 8000 voxels.
    """
    m = binary_mask(mask)
    if m.size > ORACLE_MAX_VOXELS:
        raise ValueError(f"betti_oracle is limited to {ORACLE_MAX_VOXELS} voxels, got {m.size}")
    grid = _khalimsky(m)
    dims = _cell_dims(grid.shape)
    index: list[dict[tuple[int, ...], int]] = []
    for d in range(m.ndim + 1):
        cells = [tuple(int(c) for c in p) for p in zip(*np.nonzero(grid & (dims == d)))]
        index.append({c: i for i, c in enumerate(cells)})
    ranks = [0] * (m.ndim + 2)
    for d in range(1, m.ndim + 1):
        cols = []
        for cell in index[d]:
            v = 0
            for axis, c in enumerate(cell):
                if c % 2:
                    for s in (-1, 1):
                        face = cell[:axis] + (c + s,) + cell[axis + 1:]
                        v ^= 1 << index[d - 1][face]
            cols.append(v)
        ranks[d] = _gf2_rank(cols)
    betti = [len(index[d]) - ranks[d] - ranks[d + 1] for d in range(m.ndim + 1)]
    betti += [0] * (3 - len(betti))
    return BettiTriple(betti[0], betti[1], betti[2])


def is_simple_point(mask, idx, conn: int | None = None) -> bool:
    """Whether deleting foreground voxel `idx` leaves the topology unchanged."""
    m = binary_mask(mask)
    idx = tuple(int(i) for i in idx)
    if len(idx) != m.ndim or any(not 0 <= i < n for i, n in zip(idx, m.shape)):
        raise IndexError(f"index {idx} out of bounds for {m.shape}")
    if not m[idx]:
        raise ValueError(f"voxel {idx} is not foreground")
    conn = default_foreground_connectivity(m.ndim) if conn is None else conn
    padded = np.pad(m, 1).astype(np.uint8)
    return _simple.is_simple(padded, tuple(i + 1 for i in idx), conn)


def component_list(mask) -> list[np.ndarray]:
    """Voxel coordinate arrays, one per foreground component (raster order)."""
    labels, count = connected_components(mask)
    return [np.argwhere(labels == i) for i in range(1, count + 1)]


def detect_ghosts(pred_skel, label) -> list[np.ndarray]:
    """Components of the predicted skeleton lying outside the label mask."""
    s, v = binary_mask(pred_skel), binary_mask(label)
    check_same_shape(s, v)
    return component_list(s & ~v)


def detect_misses(label_skel, pred) -> list[np.ndarray]:
    """Components of the label skeleton lying outside the predicted mask."""
    s, v = binary_mask(label_skel), binary_mask(pred)
    check_same_shape(s, v)
    return component_list(s & ~v)


@dataclass
class TopologyReport:
    ghosts: list[np.ndarray] = field(default_factory=list)
    misses: list[np.ndarray] = field(default_factory=list)
    cldice_consistent: bool = True


def topology_report(pred, label) -> TopologyReport:
    """Ghosts and misses of the thinning skeleta of a prediction/label pair."""
    from .morphology import thin_skeletonize

    p, l = binary_mask(pred), binary_mask(label)
    check_same_shape(p, l)
    ghosts = detect_ghosts(thin_skeletonize(p), l)
    misses = detect_misses(thin_skeletonize(l), p)
    from .metrics import cl_dice

    perfect = cl_dice(p, l) == 1.0
    return TopologyReport(ghosts, misses, perfect == (not ghosts and not misses))


@dataclass(frozen=True)
class HomotopyCertificate:
    fg_skel_in_pred: bool
    pred_skel_in_fg: bool
    bg_skel_in_pred_bg: bool
    pred_bg_skel_in_bg: bool
    betti_fg_equal: bool
    betti_bg_equal: bool

    @property
    def certified(self) -> bool:
        return (self.fg_skel_in_pred and self.pred_skel_in_fg
                and self.bg_skel_in_pred_bg and self.pred_bg_skel_in_bg)

    def as_dict(self) -> dict[str, bool]:
        return {
            "fg_skel_in_pred": self.fg_skel_in_pred,
            "pred_skel_in_fg": self.pred_skel_in_fg,
            "bg_skel_in_pred_bg": self.bg_skel_in_pred_bg,
            "pred_bg_skel_in_bg": self.pred_bg_skel_in_bg,
            "betti_fg_equal": self.betti_fg_equal,
            "betti_bg_equal": self.betti_bg_equal,
            "certified": self.certified,
        }


def background_skeleton(mask) -> np.ndarray:
    """Homotopic kernel of the background of the one-voxel padded grid.

    The background is thinned under the dual adjacency without keeping
    endpoints: spurs would otherwise run into every convex corner of a hole
    or of the frame, where a slightly grown prediction no longer has
    background.  Returned in padded coordinates (each axis 2 longer).
    """
    from .morphology import thin_skeletonize

    m = binary_mask(mask)
    bg = np.pad(~m, 1, constant_values=True)
    conn = dual_connectivity(default_foreground_connectivity(m.ndim), m.ndim)
    return thin_skeletonize(bg, conn=conn, keep_endpoints=False)


def homotopy_certificate(pred, label) -> HomotopyCertificate:
    """Check mutual inclusion of foreground and background skeleta."""
    from .morphology import thin_skeletonize

    p, l = binary_mask(pred), binary_mask(label)
    check_same_shape(p, l)
    p_bg = np.pad(~p, 1, constant_values=True)
    l_bg = np.pad(~l, 1, constant_values=True)
    return HomotopyCertificate(
        fg_skel_in_pred=not np.any(thin_skeletonize(l) & ~p),
        pred_skel_in_fg=not np.any(thin_skeletonize(p) & ~l),
        bg_skel_in_pred_bg=not np.any(background_skeleton(l) & ~p_bg),
        pred_bg_skel_in_bg=not np.any(background_skeleton(p) & ~l_bg),
        betti_fg_equal=betti_numbers(p) == betti_numbers(l),
        betti_bg_equal=background_betti(p) == background_betti(l),
    )
