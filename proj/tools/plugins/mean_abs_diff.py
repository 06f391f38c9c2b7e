#!/usr/bin/env python3
"""Example scorer plugin: mean absolute difference of two 8-bit PNGs in [0,1] units.

Contract: argv holds two image paths, stdout gets one number, exit status 0.
Register with: vqe metrics ... --plugin mad=tools/plugins/mean_abs_diff.py --score mad
"""

import sys

import numpy as np
from PIL import Image


def main():
    if len(sys.argv) != 3:
        print("usage: mean_abs_diff.py reference.png distorted.png", file=sys.stderr)
        return 2
    a, b = (np.asarray(Image.open(p).convert("L"), dtype=np.float64) / 255 for p in sys.argv[1:])
    if a.shape != b.shape:
        print(f"size mismatch {a.shape} vs {b.shape}", file=sys.stderr)
        return 1
    print(f"{np.abs(a - b).mean():.9g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
