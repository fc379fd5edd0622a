"""Write a 1000-image MNIST subset as IDX files for the test fixtures.

The source is the 5000-sample MNIST extract shipped inside the mlxtend wheel
(BSD-3), fetched with `pip download --no-deps mlxtend`.

    python3 scripts/make_mnist_fixture.py mlxtend-*.whl crates/core/tests/data
"""

import gzip
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np

COUNT = 1000


def main(wheel: str, out_dir: str) -> None:
    with zipfile.ZipFile(wheel) as z:
        raw = z.open("mlxtend/data/data/mnist_5k.csv.gz")
        table = np.loadtxt(gzip.open(raw), delimiter=",", dtype=np.uint8)
    # the extract is sorted by label
    order = np.random.default_rng(20240101).permutation(len(table))[:COUNT]
    images = table[order, :-1]
    labels = table[order, -1]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "mnist-1k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, COUNT, 28, 28))
        f.write(images.tobytes())
    with open(out / "mnist-1k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, COUNT))
        f.write(labels.tobytes())


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
