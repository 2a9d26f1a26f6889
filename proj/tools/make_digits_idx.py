#!/usr/bin/env python3
"""Build IDX image/label fixtures from scikit-learn's bundled digits set.

Emits MNIST-compatible files (28x28 uint8 images, magic 0x803/0x801) so the
trainer can run without downloading anything. The 8x8 source images are
upscaled with bilinear interpolation.
"""
import argparse
import struct
import sys

import numpy as np
from sklearn.datasets import load_digits


def upscale28(img8: np.ndarray) -> np.ndarray:
    src = img8.astype(np.float64) / 16.0  # load_digits intensities are 0..16
    ys = (np.arange(28) + 0.5) * (8 / 28) - 0.5
    xs = ys
    y0 = np.clip(np.floor(ys).astype(int), 0, 7)
    x0 = np.clip(np.floor(xs).astype(int), 0, 7)
    y1 = np.minimum(y0 + 1, 7)
    x1 = np.minimum(x0 + 1, 7)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]
    out = (
        (1 - fy) * ((1 - fx) * src[np.ix_(y0, x0)] + fx * src[np.ix_(y0, x1)])
        + fy * ((1 - fx) * src[np.ix_(y1, x0)] + fx * src[np.ix_(y1, x1)])
    )
    return np.round(np.clip(out, 0.0, 1.0) * 255.0).astype(np.uint8)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", required=True, help="output IDX image path")
    ap.add_argument("--labels", required=True, help="output IDX label path")
    args = ap.parse_args()

    digits = load_digits()
    images = np.stack([upscale28(img) for img in digits.images])
    labels = digits.target.astype(np.uint8)

    with open(args.images, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())
    with open(args.labels, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())
    counts = np.bincount(labels, minlength=10)
    print(f"wrote {len(images)} images; per-class counts: {counts.tolist()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
