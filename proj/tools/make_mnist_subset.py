#!/usr/bin/env python3
# Copyright 2026 The mpc3 Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Write a small MNIST subset in IDX format.

Input is the 5000-row csv shipped with mlxtend (784 pixels then label per
row). Rows are shuffled with a fixed seed and split 4000/1000.
"""
import argparse
import gzip
import struct
from pathlib import Path

import numpy as np


def write_images(path, imgs):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(imgs), 28, 28))
        f.write(imgs.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", help="mnist_5k.csv.gz from mlxtend")
    ap.add_argument("out", help="output directory")
    ap.add_argument("--train", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    opener = gzip.open if args.csv.endswith(".gz") else open
    with opener(args.csv, "rt") as f:
        rows = np.loadtxt(f, delimiter=",").astype(np.int64)
    perm = np.random.RandomState(args.seed).permutation(len(rows))
    rows = rows[perm]
    imgs, labels = rows[:, :784], rows[:, 784]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = args.train
    write_images(out / "train-images-idx3-ubyte", imgs[:n])
    write_labels(out / "train-labels-idx1-ubyte", labels[:n])
    write_images(out / "t10k-images-idx3-ubyte", imgs[n:])
    write_labels(out / "t10k-labels-idx1-ubyte", labels[n:])


if __name__ == "__main__":
    main()
