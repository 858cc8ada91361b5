#!/usr/bin/env python3
"""Regenerate the bound-constant table for the asymmetric two-state family.

Writes CSV (or JSON with --json) to stdout or --out.  With --branching the
JSON form also carries the per-bound verdicts at that branching number.
"""

import argparse
import sys

from treerecon import reports_to_json, table1, table_to_csv

DEFAULT_GRID = "0.1,0.2,0.4,0.5,0.6,0.7,0.8,0.9"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--delta1", type=float, default=0.3)
    ap.add_argument("--delta2-list", default=DEFAULT_GRID, metavar="P1,P2,...")
    ap.add_argument("--branching", type=float, default=None,
                    help="branching number for verdicts (JSON output only)")
    ap.add_argument("--json", action="store_true",
                    help="emit the full JSON report instead of CSV")
    ap.add_argument("--threads", type=int, default=0,
                    help="worker threads, 0 = one per CPU")
    ap.add_argument("--out", default="-", metavar="PATH")
    args = ap.parse_args(argv)

    delta2_list = tuple(float(x) for x in args.delta2_list.split(","))
    threads = None if args.threads == 0 else args.threads
    reports = table1(args.delta1, delta2_list, args.branching, threads=threads)
    if args.json:
        text = reports_to_json(reports, command="table1",
                               delta1=float(args.delta1))
    else:
        text = table_to_csv(reports)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
