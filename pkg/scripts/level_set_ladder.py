"""Moment exponents and level-set ratios along a ladder of primes (bounded ladder, no limits).

    python3 scripts/level_set_ladder.py --form fermat:m=4 --primes 11-61
"""
import argparse

from ptlab.config import parse_primes
from ptlab.moments import exponent_ladder


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--form", default="fermat:m=4")
    ap.add_argument("--primes", default="11-61")
    ap.add_argument("--eps", type=float, default=0.25)
    args = ap.parse_args()
    print("p      e(2)    e(4)    #S/q^(m-2)   p mod 3")
    for row in exponent_ladder(args.form, parse_primes(args.primes), sigmas=(2, 4), epsilons=(args.eps,)):
        print(f"{row.p:<6d} {row.e[0]:<7.3f} {row.e[1]:<7.3f} {row.S_ratio[args.eps]:<12.3f} {row.p % 3}")


if __name__ == "__main__":
    main()
