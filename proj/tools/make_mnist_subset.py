#!/usr/bin/env python3
"""Write a class-balanced MNIST subset in IDX format.

The source is the 5000-sample MNIST CSV shipped inside the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz: 784 pixel columns then the label).

    python3 tools/make_mnist_subset.py mlxtend-*.whl tests/data --per-class 200
"""
import argparse
import gzip
import struct
import zipfile
from pathlib import Path

import numpy as np


def read_source(path: Path) -> np.ndarray:
    if path.suffix == ".whl":
        with zipfile.ZipFile(path) as z:
            raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    elif path.suffix == ".gz":
        raw = gzip.decompress(path.read_bytes())
    else:
        raw = path.read_bytes()
    return np.loadtxt(raw.decode().splitlines(), delimiter=",").astype(np.int64)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("source", type=Path)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--per-class", type=int, default=200)
    args = ap.parse_args()

    table = read_source(args.source)
    pixels, labels = table[:, :784], table[:, 784]
    picks = [np.flatnonzero(labels == c)[: args.per_class] for c in range(10)]
    # interleave classes so any prefix stays balanced
    order = np.stack(picks, axis=1).reshape(-1)

    args.out_dir.mkdir(parents=True, exist_ok=True)
    n = len(order)
    img = args.out_dir / "mnist-subset-images-idx3-ubyte"
    lab = args.out_dir / "mnist-subset-labels-idx1-ubyte"
    img.write_bytes(struct.pack(">IIII", 0x803, n, 28, 28) + pixels[order].astype(np.uint8).tobytes())
    lab.write_bytes(struct.pack(">II", 0x801, n) + labels[order].astype(np.uint8).tobytes())
    print(f"wrote {n} samples to {args.out_dir}")


if __name__ == "__main__":
    main()
