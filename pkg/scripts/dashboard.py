"""Residuals of the smooth-locus expectations along a prime ladder.

    python3 scripts/dashboard.py --form diag:d=3;1,1,1,7 --primes 5-23
"""
import argparse

from ptlab.config import parse_primes
from ptlab.moments import corollary_dashboard, dashboard_json


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--form", default="fermat:m=4")
    ap.add_argument("--primes", default="5-23")
    ap.add_argument("--ext", type=int, default=2)
    args = ap.parse_args()
    print(dashboard_json(corollary_dashboard(args.form, parse_primes(args.primes), ext=args.ext)))


if __name__ == "__main__":
    main()
