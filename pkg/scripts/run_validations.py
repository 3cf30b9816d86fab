#!/usr/bin/env python3
"""Run every seeded property suite and print the measured statistics."""

import argparse
import sys

from ellipsopt.validation import SUITE_NAMES, run_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite", choices=sorted(SUITE_NAMES), default=None,
                        help="run one suite instead of all")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    names = [args.suite] if args.suite else list(SUITE_NAMES)
    all_ok = True
    for name in names:
        result = run_suite(name, seed=args.seed)
        status = "pass" if result.passed else "FAIL"
        stats = "  ".join(f"{k}={v:.6g}" for k, v in result.metrics.items())
        print(f"[{status}] {name} ({result.runtime_s:.1f}s): {stats}")
        all_ok = all_ok and result.passed
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
