"""Verdict-vs-prediction table for diagonal cubic hyperplane sections.

    python3 scripts/dichotomy.py --form fermat:m=4 --p 31 --rmax 3
    python3 scripts/dichotomy.py --form fermat:m=6 --p 11 --rmax 2 --samples 2000 --strategy reduce
"""
import argparse
from collections import Counter

from ptlab.scan import ScanSpec, scan_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--form", default="fermat:m=4")
    ap.add_argument("--p", type=int, default=13)
    ap.add_argument("--rmax", type=int, default=3)
    ap.add_argument("--samples", type=int, default=0, help="0 scans every projective class")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--strategy", default="direct", choices=("direct", "auto", "reduce"))
    args = ap.parse_args()
    classes = ("uniform", "pairing") if args.samples else ("uniform",)
    for cls in classes:
        spec = ScanSpec(form=args.form, p=args.p, R=args.rmax, strategy=args.strategy, seed=args.seed,
                        mode="sample" if args.samples else "projective", samples=args.samples, sample_class=cls)
        table = Counter()
        for _, res in scan_rows(spec):
            kind = "pairing" if res.pairing else ("singular" if res.disc_zero else "smooth")
            table[(kind, res.verdict, res.agree)] += 1
        print(f"# {args.form} p={args.p} R={args.rmax} class={cls if args.samples else 'all'}")
        for (kind, verdict, agree), n in sorted(table.items()):
            print(f"{kind:10s} {verdict:16s} {agree or '-':13s} {n}")


if __name__ == "__main__":
    main()
