"""Run the eleven acceptance checks and print one line per check.

    python scripts/run_acceptance.py            # all of them
    python scripts/run_acceptance.py 1 4 11     # a subset
"""
import sys

from parisi.acceptance import CRITERIA, run_criterion


def main(argv):
    numbers = [int(a) for a in argv] or [c[0] for c in CRITERIA]
    failed = 0
    for n in numbers:
        res = run_criterion(n)
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{len(numbers) - failed}/{len(numbers)} passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
