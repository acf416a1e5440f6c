"""Command-line entry point: one subcommand per module operation.

Exit status: 0 on success, 2 when a precondition refuses the run (work
budget, malformed input, unknown flag), 1 on an internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path

from .config import ExperimentConfig, parse_float_list, parse_int_list, parse_primes
from .counting import (BudgetExceeded, CountSeries, Thresholds, VarietySpec, count_projective, error_E,
                       hyperplane_section_series, quadric_count, sqrt_cancellation_verdict)
from .field import field_make
from .forms import as_form, parse_form

log = logging.getLogger("ptlab")

SUBCOMMANDS = ("count", "series", "scan", "moments", "identities", "dashboard", "rich-configs",
               "vision", "screen", "quadric", "audit")


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def rational_repr(x) -> str:
    """Nested lists printed with rationals as a/b and strings quoted, e.g. [[-1/2, 1], '---']."""
    if isinstance(x, list):
        return "[" + ", ".join(rational_repr(v) for v in x) + "]"
    if isinstance(x, str):
        return repr(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(x)


class Emitter:
    """Writes documents to --out (or stdout), each tagged with the resolved config."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.fh = open(cfg.out, "w") if cfg.out else sys.stdout

    def header(self) -> dict:
        return {"command": self.command, "config_sha256": self.cfg.sha256(), "config": self.cfg.to_dict()}

    def doc(self, payload: dict):
        self.fh.write(json.dumps(_jsonable({**self.header(), **payload}), sort_keys=True) + "\n")

    def text(self, s: str):
        self.fh.write(s + "\n")

    def close(self):
        if self.fh is not sys.stdout:
            self.fh.close()


def _need(cfg, *names):
    for n in names:
        v = getattr(cfg, n)
        if v is None or v == []:
            raise ValueError(f"--{n.replace('_', '-')} is required for this subcommand")


def _form(cfg):
    _need(cfg, "form")
    return parse_form(cfg.form)


# ----------------------------------------------------------------------------
# subcommands

def cmd_count(cfg, em):
    F = as_form(_form(cfg))
    _need(cfg, "primes")
    for p in cfg.primes:
        spec = VarietySpec(F.m - 1, (F.over(field_make(p)),), F.m - 2)
        N = [count_projective(spec, field_make(p, r), int(cfg.budget)) for r in range(1, cfg.R + 1)]
        E = [error_E(n, p ** r, F.m - 2) for r, n in enumerate(N, start=1)]
        em.doc({"p": p, "N": N, "E": E, "dim": F.m - 2})


def cmd_series(cfg, em):
    F = _form(cfg)
    _need(cfg, "primes", "c")
    th = Thresholds(cfg.tau_bound, cfg.tau_growth, cfg.delta)
    for p in cfg.primes:
        s = hyperplane_section_series(F, cfg.c, field_make(p), cfg.R, int(cfg.budget), cfg.strategy)
        v = sqrt_cancellation_verdict(s, th)
        em.doc({"p": p, "c": cfg.c, "N": s.N, "E": s.E, "rho": s.rho, "notes": s.notes,
                "verdict": v.label, "slope": v.slope, "max_rho": v.max_rho})


def scan_spec(cfg, p):
    from .scan import ScanSpec
    return ScanSpec(form=cfg.form, p=p, R=cfg.R, mode=cfg.mode, samples=cfg.samples,
                    sample_class=cfg.sample_class, seed=cfg.seed, strategy=cfg.strategy, disc=cfg.disc,
                    s_max=cfg.s_max, tau_bound=cfg.tau_bound, tau_growth=cfg.tau_growth, delta=cfg.delta,
                    budget=cfg.budget, symmetry_cache=cfg.symmetry_cache)


def cmd_scan(cfg, em):
    from .scan import ScanRun, run_scan
    _form(cfg)
    _need(cfg, "primes", "out")
    if len(cfg.primes) > 1 and "{p}" not in cfg.out:
        raise ValueError("several primes need an --out path containing {p}")
    for p in cfg.primes:
        out = cfg.out.replace("{p}", str(p))
        ck = cfg.checkpoint_dir.replace("{p}", str(p)) if cfg.checkpoint_dir else None
        run = ScanRun(out=out, workers=cfg.workers, chunk_size=cfg.chunk_size, checkpoint_dir=ck,
                      resume=cfg.resume, meta={"experiment_config": cfg.to_dict()})
        path = run_scan(scan_spec(cfg, p), run)
        print(f"wrote {path}", file=sys.stderr)


def cmd_moments(cfg, em):
    from .moments import moment_report, scan_E_table
    _form(cfg)
    _need(cfg, "primes")
    mode = "sample" if cfg.mode == "sample" else "projective"
    for p in cfg.primes:
        t = scan_E_table(cfg.form, p, mode, ext=cfg.ext, samples=cfg.samples, seed=cfg.seed, disc=cfg.disc,
                         strategy=cfg.strategy, symmetry_cache=cfg.symmetry_cache, budget=cfg.budget)
        rep = moment_report(t, cfg.sigmas, cfg.epsilons)
        em.doc({"report": json.loads(rep.to_json())})


def cmd_identities(cfg, em):
    from .moments import identity_first_moment, identity_qsquare, identity_second_moment
    F = _form(cfg)
    _need(cfg, "primes")
    ok = True
    for p in cfg.primes:
        for fn in (identity_first_moment, identity_second_moment, identity_qsquare):
            rep = fn(F, p, cfg.budget)
            ok &= rep.equal
            em.doc({"report": json.loads(rep.to_json())})
    if not ok:
        raise RuntimeError("an exact identity failed")


def cmd_dashboard(cfg, em):
    from .moments import corollary_dashboard, dashboard_json
    _form(cfg)
    _need(cfg, "primes")
    dash = corollary_dashboard(cfg.form, cfg.primes, ext=max(cfg.ext, 2), disc=cfg.disc,
                               symmetry_cache=cfg.symmetry_cache, budget=cfg.budget)
    em.doc({"dashboard": json.loads(dashboard_json(dash))})


def cmd_rich(cfg, em):
    from .fermat import rich_configurations
    _need(cfg, "n", "r")
    res = rich_configurations(cfg.n, cfg.r, cfg.char)
    em.text(rational_repr(res.as_list()))


def cmd_vision(cfg, em):
    from .fermat import vision_sing_bruteforce, vision_sing_count
    _need(cfg, "primes", "a")
    for p in cfg.primes:
        F = field_make(p)
        a = [v % p for v in cfg.a]
        vc = vision_sing_count(a, F)
        doc = {"p": p, "a": a, "n": vc.n, "zero_subset_count": vc.zero_subsets, "sing_count": vc.sing_count}
        if cfg.s_max:
            b = vision_sing_bruteforce(a, F, min(cfg.s_max, 4), budget=int(cfg.budget))
            doc.update({"bruteforce": b.counts, "methods": b.methods, "stabilized": b.stabilized,
                        "agree": vc.sing_count == b.stabilized if vc.sing_count is not None else None})
        em.doc(doc)


def cmd_screen(cfg, em):
    import numpy as np
    from .fermat import fermat_points, scroll_screen
    _need(cfg, "primes")
    for p in cfg.primes:
        F = field_make(p)
        if cfg.a:
            pts = [[v % p for v in cfg.a]]
        else:
            rng = np.random.Generator(np.random.Philox(key=cfg.seed))
            pts = fermat_points(F, limit=cfg.samples or 100, rng=rng)
        for a in pts:
            em.text(scroll_screen(a, F).to_json())


def cmd_quadric(cfg, em):
    from .criteria import quadric_dichotomy
    Q = as_form(_form(cfg))
    _need(cfg, "primes")
    th = Thresholds(cfg.tau_bound, cfg.tau_growth, cfg.delta)
    for p in cfg.primes:
        closed, direct = [], []
        for r in range(1, cfg.R + 1):
            fr = field_make(p, r)
            Qr = Q.over(field_make(p)).over(fr)
            closed.append(quadric_count(Qr, fr))
            direct.append(count_projective(VarietySpec(Q.m - 1, (Qr,), Q.m - 2), fr, int(cfg.budget)))
        series = CountSeries.from_counts(p, Q.m - 2, direct)
        v = sqrt_cancellation_verdict(series, th)
        pred = quadric_dichotomy(Q, field_make(p))
        em.doc({"p": p, "closed_form": closed, "direct": direct, "match": closed == direct, "E": series.E,
                "rank": pred.witness, "predicted_bad": pred.predicted_bad, "verdict": v.label})


def cmd_audit(cfg, em):
    from collections import Counter
    from .scan import read_scan
    _need(cfg, "config")
    h, rows = read_scan(cfg.config)
    by = Counter()
    for row in rows:
        cls = "pairing" if row["pairing"] else ("singular" if row["disc_zero"] == "1" else "smooth")
        by[(cls, row["verdict"], row["agree"])] += 1
    em.doc({"scan": cfg.config, "scan_config_sha256": h, "rows": len(rows),
            "table": [{"class": k[0], "verdict": k[1], "agree": k[2], "count": v} for k, v in sorted(by.items())],
            "disagreements": sum(v for k, v in by.items() if k[2] == "disagree")})


HANDLERS = {"count": cmd_count, "series": cmd_series, "scan": cmd_scan, "moments": cmd_moments,
            "identities": cmd_identities, "dashboard": cmd_dashboard, "rich-configs": cmd_rich,
            "vision": cmd_vision, "screen": cmd_screen, "quadric": cmd_quadric, "audit": cmd_audit}


# ----------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ptlab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file (flags override its values); for audit, the scan CSV")
    ap.add_argument("--form", help='"diag:d=3;1,1,1,1", "poly:d=3;m=4;x1^3+...", "fermat:m=4"')
    ap.add_argument("--p", dest="primes", help='"31", "11,13" or a range "11-61"')
    ap.add_argument("--rmax", dest="R", type=int)
    ap.add_argument("--mode", choices=("full", "projective", "sample"))
    ap.add_argument("--samples", type=int)
    ap.add_argument("--sample-class", choices=("uniform", "pairing"))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--strategy", choices=("direct", "auto", "reduce"))
    ap.add_argument("--no-disc", dest="disc", action="store_const", const=False)
    ap.add_argument("--s-max", type=int)
    ap.add_argument("--tau-bound", type=float)
    ap.add_argument("--tau-growth", type=float)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--budget", type=float)
    ap.add_argument("--no-symmetry-cache", dest="symmetry_cache", action="store_const", const=False)
    ap.add_argument("--ext", type=int, choices=(1, 2))
    ap.add_argument("--c", help="hyperplane coefficients, comma separated")
    ap.add_argument("--a", help="point of the Fermat cubic fourfold, comma separated")
    ap.add_argument("--n", type=int)
    ap.add_argument("--r", type=int)
    ap.add_argument("--char", type=int)
    ap.add_argument("--sigma", dest="sigmas")
    ap.add_argument("--eps", dest="epsilons")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--chunk-size", type=int)
    ap.add_argument("--out")
    ap.add_argument("--checkpoint-dir")
    ap.add_argument("--resume", action="store_const", const=True)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config and args.command != "audit":
        cfg = ExperimentConfig.load(args.config)
    over = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    over["primes"] = parse_primes(args.primes) if args.primes is not None else None
    over["c"] = parse_int_list(args.c)
    over["a"] = parse_int_list(args.a)
    over["sigmas"] = parse_float_list(args.sigmas)
    over["epsilons"] = parse_float_list(args.epsilons)
    return cfg.override(**over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ValueError, OSError) as exc:
        print(f"ptlab: {exc}", file=sys.stderr)
        return 2
    em = Emitter(cfg, args.command) if args.command != "scan" else None
    try:
        HANDLERS[args.command](cfg, em)
    except BudgetExceeded as exc:
        print(f"ptlab: refused: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ptlab: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the exit status is the interface
        log.exception("internal error")
        print(f"ptlab: internal error: {exc}", file=sys.stderr)
        return 1
    finally:
        if em is not None:
            em.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
