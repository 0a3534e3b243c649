"""Write a synthetic monthly arrivals CSV for the example config.

    python3 scripts/make_example_data.py --seed 0 --out scripts/data/arrivals.csv
"""

import argparse
from pathlib import Path

from namemd.series import write_csv
from namemd.synthetic import benchmark_series


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--length", type=int, default=240)
    ap.add_argument("--out", default=str(Path(__file__).parent / "data" / "arrivals.csv"))
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(benchmark_series(args.seed, length=args.length), out)
    print(out)


if __name__ == "__main__":
    main()
