"""Run the bundled task suite and print one line per check, plus timings."""

import argparse
import sys
import time

from qcrm.tasks import load_cases, run_case, run_suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--filter", help="fnmatch pattern over case names")
    args = ap.parse_args()

    for case in load_cases(args.filter):
        t0 = time.perf_counter()
        _, trace, _ = run_case(case)
        dt = time.perf_counter() - t0
        if trace is not None:
            print(f"# {case.name}: {trace.epochs_run} epochs, loss {trace.initial_loss:.4f} -> "
                  f"{trace.final_loss:.6f}, {dt:.3f}s")
    report = run_suite(args.filter)
    for r in report.results:
        print(r.line())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
