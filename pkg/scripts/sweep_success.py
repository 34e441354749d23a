#!/usr/bin/env python3
"""
Doubling n-sweep of the sampling success rate for corpus sentences; writes one CSV.
Run from repo root: python scripts/sweep_success.py --out sweep.csv [--names edge-out,serial]
"""
from __future__ import annotations

import argparse
import asyncio
import csv
import os
import sys

# Allow importing gforge when run as scripts/sweep_success.py
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dotenv import load_dotenv

load_dotenv()

# Import after path is set
from gforge.cli import first_witness, prepare
from gforge.corpus import entry, normal_form_entries
from gforge.model_builder import SAMPLERS, sweep_success
from gforge.witness_engine import NoWitnessFound


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--names", help="comma-separated corpus names (default: every satisfiable width-2 entry)")
    parser.add_argument("--algo", choices=SAMPLERS, default="independent")
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--max-n", type=int, default=128)
    parser.add_argument("--seed", type=int, default=int(os.environ.get("GFORGE_SEED", "0")))
    args = parser.parse_args()

    if args.names:
        entries = [entry(name.strip()) for name in args.names.split(",") if name.strip()]
    else:
        entries = [e for e in normal_form_entries() if e.sentence().signature.width == 2]

    rows = []
    for e in entries:
        try:
            _, nf, w = asyncio.run(first_witness(prepare(e.sentence(), "gf"), "auto", True))
        except NoWitnessFound as exc:
            print(f"{e.name}: {exc}")
            continue
        sizes, n = [], w.width + 1
        while n <= args.max_n:
            sizes.append(n)
            n *= 2
        for estimate in sweep_success(w, nf, sizes, args.trials, args.seed, args.algo):
            rows.append({"sentence": e.name, "algo": args.algo, **estimate.row()})
            print(f"{e.name} n={estimate.n} rate={estimate.rate:.3f}")

    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=["sentence", "algo", "n", "trials", "successes", "rate"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"Wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
