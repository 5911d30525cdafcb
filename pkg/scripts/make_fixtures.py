"""Regenerate the small volumes bundled in tests/fixtures/."""
import argparse
from pathlib import Path

import numpy as np
from scipy import ndimage

from cldice.grid import threshold
from cldice.trainer import gen_synthetic_tubes
from cldice.volio import encode_pgm, save_volume


def ring():
    m = np.zeros((7, 7), bool)
    m[1:6, 1:6] = True
    m[2:5, 2:5] = False
    return m


def equal_dice_pair():
    label = np.zeros((11, 30), bool)
    label[4:7, 3:27] = True
    frayed = label.copy()
    frayed[4, 10:19] = False
    cut = label.copy()
    cut[4:7, 14:17] = False
    return label, frayed, cut


def tube_pair(seed=0, pad=4):
    s = gen_synthetic_tubes(seed)
    return np.pad(s.label, pad), np.pad(s.image, pad)


def tube3d_pair():
    label = np.zeros((12, 12, 16), bool)
    label[4:7, 4:7, 2:14] = True
    pred = ndimage.binary_dilation(label, np.ones((3, 3, 3), bool))
    pred[:, :, 8] = False
    return label, pred


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "tests" / "fixtures"))
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_volume(out / "ring.ctv", ring())
    label, frayed, cut = equal_dice_pair()
    save_volume(out / "tube_label.ctv", label)
    save_volume(out / "tube_frayed.ctv", frayed)
    save_volume(out / "tube_cut.ctv", cut)
    label, image = tube_pair()
    save_volume(out / "tubes_label.ctv", label)
    save_volume(out / "tubes_prob.ctv", image)
    (out / "tubes_prob.pgm").write_bytes(encode_pgm(image))
    label, pred = tube3d_pair()
    save_volume(out / "tube3d_label.ctv", label)
    save_volume(out / "tube3d_pred.ctv", pred)
    print(f"wrote fixtures to {out}")


if __name__ == "__main__":
    main()
