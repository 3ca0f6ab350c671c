#!/usr/bin/env python3
"""Convert mlxtend's bundled 5000-image MNIST subset (mnist_5k.csv.gz) to IDX files.

Usage: mnist_subset_to_idx.py <mnist_5k.csv.gz> <out_dir>

The CSV holds one image per row: 784 pixel values followed by the label.
Writes <out_dir>/train-images-idx3-ubyte and <out_dir>/train-labels-idx1-ubyte.
"""
import gzip
import os
import struct
import sys


def main():
    src, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    pixels, labels = bytearray(), bytearray()
    count = 0
    with gzip.open(src, "rt") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            vals = [int(float(v)) for v in line.split(",")]
            assert len(vals) == 785, len(vals)
            pixels.extend(vals[:784])
            labels.append(vals[784])
            count += 1
    with open(os.path.join(out, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, count, 28, 28))
        f.write(pixels)
    with open(os.path.join(out, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, count))
        f.write(labels)
    print(f"wrote {count} images to {out}")


if __name__ == "__main__":
    main()
