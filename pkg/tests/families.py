"""Constructed (pred, label) pair families shared by unit and acceptance tests."""
import numpy as np
from scipy import ndimage

from cldice.morphology import thin_skeletonize
from cldice.trainer import gen_synthetic_tubes

from conftest import disk

SQ3 = np.ones((3, 3), bool)
CUBE3 = np.ones((3, 3, 3), bool)


def thick_band(shape=(20, 30), rows=(9, 12), cols=(0, 30)):
    m = np.zeros(shape, bool)
    m[rows[0]:rows[1], cols[0]:cols[1]] = True
    return m


def tube3d():
    m = np.zeros((12, 12, 16), bool)
    m[4:7, 4:7, 2:14] = True
    return m


def shell3d():
    m = np.zeros((14, 14, 14), bool)
    m[2:12, 2:12, 2:12] = True
    m[5:9, 5:9, 5:9] = False
    return m


def padded_tubes(seed, pad=4):
    return np.pad(gen_synthetic_tubes(seed).label, pad)


def with_gap(mask, col, width=1):
    """Cut every foreground pixel in a column band (2D) or z-slab (3D)."""
    out = mask.copy()
    out[..., col:col + width] = False
    return out


def certificate_positives():
    """Pairs that are expected to certify; (name, pred, label)."""
    out = []
    band = thick_band()
    out.append(("band-dilated", ndimage.binary_dilation(band, SQ3), band))
    inner = thick_band(rows=(8, 11), cols=(6, 24), shape=(20, 30))
    out.append(("tube-dilated", ndimage.binary_dilation(inner, SQ3), inner))
    for r_out, r_in in ((9, 4), (10, 5), (11, 4), (12, 6)):
        ann = disk(30, r_out, inner=r_in)
        out.append((f"annulus-{r_out}-{r_in}", ndimage.binary_dilation(ann, SQ3), ann))
        out.append((f"annulus-{r_out}-{r_in}-rev", ann, ndimage.binary_dilation(ann, SQ3)))
    t = tube3d()
    out.append(("tube3d-dilated", ndimage.binary_dilation(t, CUBE3), t))
    s = shell3d()
    out.append(("shell3d-dilated", ndimage.binary_dilation(s, CUBE3), s))
    return out


def certificate_family(n_tubes=30):
    """Dilate-by-one pairs in both directions, positives plus generator tubes."""
    out = list(certificate_positives())
    for seed in range(n_tubes):
        l = padded_tubes(seed)
        d = ndimage.binary_dilation(l, SQ3)
        out.append((f"tubes-{seed}", d, l))
        out.append((f"tubes-{seed}-rev", l, d))
    return out


def certificate_negatives():
    """Broken connections: the prediction drops a slice across a tube."""
    out = []
    inner = thick_band(rows=(8, 11), cols=(6, 24), shape=(20, 30))
    out.append(("tube-gap", with_gap(inner, 14), inner))
    out.append(("tube-gap-dilated", with_gap(ndimage.binary_dilation(inner, SQ3), 14), inner))
    t = tube3d()
    out.append(("tube3d-gap", with_gap(t, 8), t))
    return out


def ghost_miss_family():
    """At least 30 pairs with and without ghosts or misses."""
    out = []
    for seed in range(6):
        l = padded_tubes(seed)
        skel = thin_skeletonize(l)
        cols = np.nonzero(skel.any(axis=0))[0]
        mid = int(cols[len(cols) // 2])
        stray = l.copy()
        free = np.argwhere(~ndimage.binary_dilation(l, np.ones((5, 5), bool)))
        stray[tuple(free[len(free) // 2])] = True
        out += [
            (f"same-{seed}", l, l),
            (f"dilated-{seed}", ndimage.binary_dilation(l, SQ3), l),
            (f"gap-{seed}", with_gap(l, mid), l),
            (f"stray-{seed}", stray, l),
            (f"shifted-{seed}", np.roll(l, 3, axis=0), l),
            (f"empty-pred-{seed}", np.zeros_like(l), l),
        ]
    return out
