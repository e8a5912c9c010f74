"""Run the acceptance criteria and print one line per criterion.

    python3 scripts/run_acceptance.py --only 1 2 3 --json out.json
"""
import argparse
import sys

from stochevol import acceptance
from stochevol.artifacts import json_bytes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=acceptance.DEFAULT_SEED)
    ap.add_argument("--only", type=int, nargs="+", help="criterion numbers 1-13")
    ap.add_argument("--determinism", action="store_true", help="rerun and compare CSV bytes (criterion 14)")
    ap.add_argument("--json", help="write a summary report here")
    args = ap.parse_args(argv)

    results = acceptance.run_suite(args.seed, args.only)
    if args.determinism:
        again = acceptance.run_suite(args.seed, args.only, log=None)
        results.append(acceptance.determinism(acceptance.table_bytes(results), acceptance.table_bytes(again)))
        print(results[-1].line())
    if args.json:
        with open(args.json, "wb") as fh:
            fh.write(json_bytes([r.to_dict() for r in results]))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed" + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
