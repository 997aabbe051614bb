#!/usr/bin/env python3
"""Export the scikit-learn Wine dataset to data/wine.csv."""
import csv
import sys

from sklearn.datasets import load_wine


def main() -> None:
    out = sys.argv[1] if len(sys.argv) > 1 else "data/wine.csv"
    d = load_wine()
    names = [n.replace(" ", "_").replace("/", "_") for n in d.feature_names]
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(names + ["class"])
        for row, y in zip(d.data, d.target):
            w.writerow([repr(float(v)) for v in row] + [int(y)])
    print(f"wrote {out}: {len(d.data)} rows")


if __name__ == "__main__":
    main()
