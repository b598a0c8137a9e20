#!/usr/bin/env python3
"""Build the 2000-image MNIST subset used by the benchmark and acceptance suite.

The mlxtend wheel on PyPI bundles a 5000-image MNIST sample (500 per class,
28x28, 8-bit). This script downloads that wheel with pip, keeps the first
200 images of every class in file order, and writes them as binary PGM (P5)
files plus an index in the `relative/path.pgm,label` format.

MNIST digits are light ink on a dark background: use `--polarity light`.
"""

import argparse
import csv
import glob
import gzip
import io
import os
import subprocess
import sys
import tempfile
import zipfile

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
SIDE = 28


def read_rows(wheel_path):
    with zipfile.ZipFile(wheel_path) as wheel:
        raw = gzip.decompress(wheel.read(CSV_MEMBER))
    for row in csv.reader(io.StringIO(raw.decode("ascii"))):
        values = [int(float(v)) for v in row]
        yield values[:-1], values[-1]


def fetch_wheel(workdir, version):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q",
         "-d", workdir, f"mlxtend=={version}"],
        check=True)
    return glob.glob(os.path.join(workdir, "mlxtend-*.whl"))[0]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="tests/data/mnist2000")
    parser.add_argument("--per-class", type=int, default=200)
    parser.add_argument("--wheel", help="use an already downloaded mlxtend wheel")
    parser.add_argument("--mlxtend-version", default="0.24.0")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp, args.mlxtend_version)
        counts = [0] * 10
        index_lines = ["# MNIST subset (mlxtend mnist_5k), first %d per class"
                       % args.per_class]
        for pixels, label in read_rows(wheel):
            if counts[label] >= args.per_class:
                continue
            rel = f"{label}/{label}_{counts[label]:03d}.pgm"
            path = os.path.join(args.out, rel)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "wb") as f:
                f.write(b"P5\n%d %d\n255\n" % (SIDE, SIDE))
                f.write(bytes(pixels))
            index_lines.append(f"{rel},{label}")
            counts[label] += 1

    with open(os.path.join(args.out, "index.csv"), "w") as f:
        f.write("\n".join(index_lines) + "\n")
    print(f"wrote {sum(counts)} images to {args.out}")


if __name__ == "__main__":
    main()
