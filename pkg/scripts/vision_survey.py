"""Singular-point counts of tangential visions: formula against brute force on random Fermat points.

    python3 scripts/vision_survey.py --p 13 --points 10
"""
import argparse

import numpy as np

from ptlab.fermat import fermat_points, scroll_screen, vision_sing_bruteforce, vision_sing_count
from ptlab.field import field_make


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--p", type=int, default=13)
    ap.add_argument("--points", type=int, default=10)
    ap.add_argument("--s-max", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fld = field_make(args.p)
    done = 0
    for a in fermat_points(fld, rng=np.random.default_rng(args.seed)):
        if done == args.points:
            break
        vc = vision_sing_count(a, fld)
        if vc.sing_count is None:
            continue
        brute = vision_sing_bruteforce(a, fld, s_max=args.s_max)
        screen = scroll_screen(a, fld)
        print(a, f"n={vc.n}", f"formula={vc.sing_count}", f"brute={brute.counts}", screen.pattern, screen.verdict)
        done += 1


if __name__ == "__main__":
    main()
