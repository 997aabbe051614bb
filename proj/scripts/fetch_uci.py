#!/usr/bin/env python3
"""Fetch the Pima Indians Diabetes and Dermatology datasets from UCI.

Needs network access. Rows with missing values are dropped (the engine
rejects missing data at load time).
"""
import csv
import io
import sys
import urllib.request

PIMA_URLS = [
    # the original UCI hosting was retired; these mirrors carry the same file
    "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv",
    "https://raw.githubusercontent.com/plotly/datasets/master/diabetes.csv",
]
DERMATOLOGY_URL = (
    "https://archive.ics.uci.edu/ml/machine-learning-databases/dermatology/dermatology.data"
)

PIMA_COLUMNS = [
    "pregnancies", "glucose", "blood_pressure", "skin_thickness", "insulin",
    "bmi", "diabetes_pedigree", "age",
]
DERMATOLOGY_COLUMNS = [f"attr_{i}" for i in range(1, 34)] + ["age"]


def fetch(url: str) -> str:
    with urllib.request.urlopen(url, timeout=60) as r:
        return r.read().decode("utf-8")


def write_pima(out_dir: str) -> None:
    text = None
    for url in PIMA_URLS:
        try:
            text = fetch(url)
            break
        except Exception as e:  # try the next mirror
            print(f"  {url}: {e}")
    if text is None:
        raise SystemExit("could not fetch the Pima dataset from any mirror")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not all(cell.replace(".", "", 1).isdigit() for cell in rows[0]):
        rows = rows[1:]  # mirror with a header row
    path = f"{out_dir}/pima_indians_diabetes.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(PIMA_COLUMNS + ["class"])
        for r in rows:
            w.writerow(r[:9])
    print(f"wrote {path}: {len(rows)} rows")


def write_dermatology(out_dir: str) -> None:
    text = fetch(DERMATOLOGY_URL)
    kept, dropped = [], 0
    for line in text.strip().splitlines():
        fields = line.strip().split(",")
        if "?" in fields:
            dropped += 1
            continue
        # classes arrive as 1..6; shift to 0..5
        fields[-1] = str(int(fields[-1]) - 1)
        kept.append(fields)
    path = f"{out_dir}/dermatology.csv"
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(DERMATOLOGY_COLUMNS + ["class"])
        w.writerows(kept)
    print(f"wrote {path}: {len(kept)} rows ({dropped} dropped for missing values)")


def main() -> None:
    out_dir = sys.argv[1].rstrip("/") if len(sys.argv) > 1 else "data"
    write_pima(out_dir)
    write_dermatology(out_dir)


if __name__ == "__main__":
    main()
