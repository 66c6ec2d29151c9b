"""Write the Boston housing data as a clean CSV for the fit and diagnose commands.

The 506-tract table is the public StatLib ``boston`` dataset (Harrison and
Rubinfeld, 1978). scikit-learn shipped a copy up to release 1.1, which this
helper downloads from PyPI and unpacks; nothing is installed.

    python3 scripts/fetch_boston.py data/boston.csv

Columns are lower-cased and ``B`` is renamed ``black``.
"""

import argparse
import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "sklearn/datasets/data/boston_house_prices.csv"


def _from_wheel(wheel):
    with zipfile.ZipFile(wheel) as zf:
        return zf.read(MEMBER).decode("utf-8")


def fetch_raw():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "scikit-learn==1.1.3", "--no-deps",
             "--only-binary", ":all:", "-d", tmp, "-q"],
            check=True,
        )
        wheels = glob.glob(os.path.join(tmp, "*.whl"))
        if not wheels:
            raise SystemExit("no scikit-learn wheel was downloaded")
        return _from_wheel(wheels[0])


def clean(raw):
    rows = list(csv.reader(io.StringIO(raw)))
    # first line holds "506,13,..." counts, second the column names
    header = [("black" if h.strip() == "B" else h.strip().lower()) for h in rows[1]]
    body = [r for r in rows[2:] if r]
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(body)
    return out.getvalue(), len(body)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("output", nargs="?", default=os.path.join("data", "boston.csv"))
    p.add_argument("--raw", help="use an already downloaded boston_house_prices.csv instead")
    args = p.parse_args(argv)
    if args.raw:
        with open(args.raw, encoding="utf-8") as fh:
            raw = fh.read()
    else:
        raw = fetch_raw()
    text, n = clean(raw)
    os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
    with open(args.output, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    print(f"wrote {n} rows to {args.output}")


if __name__ == "__main__":
    main()
