#!/usr/bin/env python3
"""Regenerate every desk-scale experiment report.

Equivalent to `wiq reproduce-all`; kept as a script for people who prefer
editing the roster inline.
"""

import argparse

from wiq.harness import reproduce_all


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="reports", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    manifest = reproduce_all(args.out, seed=args.seed)
    print(f"wrote {len(manifest['experiments'])} experiment reports under {args.out}")


if __name__ == "__main__":
    main()
