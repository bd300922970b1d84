"""Temperature scan for the SK model: value, slope and overlap moment of the minimizer.

Writes CSV to stdout.  Above gamma = 1 the minimizer leaves alpha == 1 and the
overlap moment int xi d alpha starts to grow.
"""
import argparse
import sys

import numpy as np

from parisi.minimize import scan_csv, temperature_scan
from parisi.model import sk

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--gmin", type=float, default=0.25)
    ap.add_argument("--gmax", type=float, default=4.0)
    ap.add_argument("--num", type=int, default=8)
    args = ap.parse_args()
    rows = temperature_scan(sk(), np.linspace(args.gmin, args.gmax, args.num), k=args.k)
    sys.stdout.write(scan_csv(rows))
