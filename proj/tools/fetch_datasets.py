#!/usr/bin/env python3
"""Fetch the Seeds and Yeast reference datasets into data/.

Both come from the UCI repository and are converted to the header+CSV
layout the CLI and the acceptance suite expect (features first, class
label last). Iris ships with the repository already. Needs network
access; run once before the full acceptance suite.
"""

import csv
import io
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
SOURCES = {
    "seeds": f"{UCI}/00236/seeds_dataset.txt",
    "yeast": f"{UCI}/yeast/yeast.data",
}

SEEDS_HEADER = [
    "area", "perimeter", "compactness", "kernel_length",
    "kernel_width", "asymmetry", "groove_length", "variety",
]
YEAST_HEADER = ["mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc", "site"]


def fetch(url: str) -> str:
    with urllib.request.urlopen(url, timeout=60) as response:
        return response.read().decode("utf-8")


def write_seeds(raw: str, path: Path) -> int:
    rows = []
    for line in raw.splitlines():
        cells = line.split()
        if len(cells) == 8:
            rows.append(cells)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SEEDS_HEADER)
        writer.writerows(rows)
    return len(rows)


def write_yeast(raw: str, path: Path) -> int:
    rows = []
    for line in raw.splitlines():
        cells = line.split()
        if len(cells) == 10:
            rows.append(cells[1:])  # drop the sequence-name column
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(YEAST_HEADER)
        writer.writerows(rows)
    return len(rows)


def main() -> int:
    data_dir = Path(__file__).resolve().parent.parent / "data"
    data_dir.mkdir(exist_ok=True)
    try:
        n = write_seeds(fetch(SOURCES["seeds"]), data_dir / "seeds.csv")
        print(f"seeds.csv: {n} rows")
        n = write_yeast(fetch(SOURCES["yeast"]), data_dir / "yeast.csv")
        print(f"yeast.csv: {n} rows")
    except Exception as error:  # noqa: BLE001
        print(f"fetch failed: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
