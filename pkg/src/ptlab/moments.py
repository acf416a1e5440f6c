"""Moments and super-level sets of E_c over c-space, and the exact double-counting identities."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .counting import DEFAULT_BUDGET, count_forms, error_E, find_points
from .field import Field, decode_projective, field_make, projective_count
from .forms import HomogeneousForm, as_form, parse_form
from .scan import ScanSpec, scan_rows

SCHEMA = "v1"


def _form_text(G) -> str:
    return G if isinstance(G, str) else G.to_string()


def _form(G) -> HomogeneousForm:
    return as_form(parse_form(G) if isinstance(G, str) else G)


@dataclass
class ETable:
    """E_c(p) (and E_c(p^2) when ext = 2) for c in F_p^m minus 0.

    Rows are projective classes of c carrying weight p - 1 (full and
    projective modes; E_c is invariant under c -> lambda c), or sampled c
    carrying weight (p^m - 1) / N (sample mode, so sums are estimates).
    """
    form: str
    p: int
    m: int
    d: int
    mode: str
    ext: int
    cs: np.ndarray
    E1: list
    E2: list
    disc_zero: list
    pairing: list
    weight: Fraction

    @property
    def n_rows(self) -> int:
        return len(self.E1)

    @property
    def raw_count(self) -> int:
        """Number of c in F_p^m minus 0 represented (p^m - 1 unless sampled)."""
        if self.mode == "sample":
            return self.n_rows
        return self.n_rows * (self.p - 1)

    def iter_raw(self):
        """Every c != 0 with its entry index (full and projective modes)."""
        if self.mode == "sample":
            raise ValueError("a sampled table does not cover c-space")
        for i, c in enumerate(self.cs):
            for lam in range(1, self.p):
                yield tuple(int(lam * v % self.p) for v in c), i


def scan_E_table(G, p: int, mode: str = "projective", ext: int = 1, samples: int = 0, seed: int = 0,
                 disc: bool = True, strategy: str = "direct", symmetry_cache: bool = True,
                 budget: float = DEFAULT_BUDGET) -> ETable:
    """Tabulate E_c over c-space through the section counter (in process)."""
    if ext not in (1, 2):
        raise ValueError("ext must be 1 or 2")
    text = _form_text(G)
    F = as_form(parse_form(text))
    spec = ScanSpec(form=text, p=p, R=ext, mode="sample" if mode == "sample" else "projective",
                    samples=samples, seed=seed, strategy=strategy, disc=disc, budget=budget,
                    symmetry_cache=symmetry_cache)
    cs, E1, E2, dz, pr = [], [], [], [], []
    for c, res in scan_rows(spec):
        cs.append(c)
        E1.append(res.E[0])
        E2.append(res.E[1] if ext == 2 else None)
        dz.append(res.disc_zero)
        pr.append(bool(res.pairing))
    if mode == "sample":
        weight = Fraction(p ** F.m - 1, samples)
    else:
        weight = Fraction(p - 1)
    return ETable(text, p, F.m, F.d, mode, ext, np.array(cs, dtype=np.int64), E1, E2, dz, pr, weight)


def moment_M(table: ETable, sigma, level: int = 1):
    """M(q, sigma) = sum over c != 0 of |E_c(q) / q^{(m-3)/2}|^sigma, q = p^level.

    Exact (Fraction) for even integer sigma, float with compensated
    summation otherwise.  0^0 counts as 1, so M(q, 0) = p^m - 1.
    """
    Es = table.E1 if level == 1 else table.E2
    if any(e is None for e in Es):
        raise ValueError(f"table has no E values at level {level}")
    q = table.p ** level
    m = table.m
    if isinstance(sigma, int) or (isinstance(sigma, float) and sigma.is_integer()):
        s = int(sigma)
        if s % 2 == 0 and s >= 0:
            den = q ** (s * (m - 3) // 2) if m >= 3 else Fraction(1, q ** (s * (3 - m) // 2))
            total = sum(Fraction(abs(e) ** s) for e in Es)
            return table.weight * total / den
    scale = q ** ((m - 3) / 2)
    vals = [(abs(e) / scale) ** sigma if (e != 0 or sigma != 0) else 1.0 for e in Es]
    return float(table.weight) * math.fsum(vals)


def superlevel_S(table: ETable, epsilon, level: int = 1):
    """#{c != 0 : |E_c(q)| >= q^{epsilon + (m-3)/2}}, compared exactly for rational epsilon."""
    Es = table.E1 if level == 1 else table.E2
    q = table.p ** level
    eps = Fraction(str(epsilon)) if not isinstance(epsilon, Fraction) else epsilon
    a, b = eps.numerator, eps.denominator
    # |E|^{2b} >= q^{2a + b(m-3)}
    expo = 2 * a + b * (table.m - 3)
    hits = 0
    for e in Es:
        lhs = abs(e) ** (2 * b)
        if expo >= 0:
            ok = lhs >= q ** expo
        else:
            ok = lhs * q ** (-expo) >= 1
        hits += ok
    total = table.weight * hits
    return int(total) if total.denominator == 1 else total


def exponent_estimate(M, q: int) -> float:
    return math.log(1 + float(M)) / math.log(q)


@dataclass
class MomentReport:
    form: str
    p: int
    q: int
    mode: str
    sigmas: list
    M: list
    epsilons: list
    S: list
    e: list
    convention: str = "sums over c != 0"
    schema: str = SCHEMA

    def to_json(self) -> str:
        d = asdict(self)
        d["M"] = [str(v) if isinstance(v, Fraction) else v for v in self.M]
        d["S"] = [str(v) if isinstance(v, Fraction) else v for v in self.S]
        return json.dumps(d, sort_keys=True)


def moment_report(table: ETable, sigmas=(0, 2, 4), epsilons=(0, 0.25, 0.5)) -> MomentReport:
    Ms = [moment_M(table, s) for s in sigmas]
    Ss = [superlevel_S(table, e) for e in epsilons]
    es = [exponent_estimate(M, table.p) for M in Ms]
    return MomentReport(table.form, table.p, table.p, table.mode, list(sigmas), Ms, list(epsilons), Ss, es)


# ----------------------------------------------------------------------------
# exact identities

@dataclass
class IdentityReport:
    identity: str
    form: str
    p: int
    lhs: Fraction
    rhs: Fraction
    equal: bool
    details: dict = dc_field(default_factory=dict)
    convention: str = "expectation over all c in F_p^m, c = 0 included"
    schema: str = SCHEMA

    def to_json(self) -> str:
        d = asdict(self)
        d["lhs"] = str(self.lhs)
        d["rhs"] = str(self.rhs)
        return json.dumps(d, sort_keys=True)


def _linear(c: Sequence[int], field: Field) -> HomogeneousForm:
    m = len(c)
    terms = {}
    for i, v in enumerate(c):
        if v:
            e = [0] * m
            e[i] = 1
            terms[tuple(e)] = int(v)
    return HomogeneousForm(m, 1, terms, field)


def section_counts(G, p: int, level: int = 1, budget: float = DEFAULT_BUDGET):
    """#W_c(F_{p^level}) for every projective class of c in F_p^m, with #W (the c = 0 term).

    Each count is an independent point count of V(G, c.x); c -> lambda c
    does not change the section, so a class stands for p - 1 vectors c.
    """
    base = field_make(p)
    big = field_make(p, level)
    G0 = _form(G).over(base)
    Gb = G0.over(big)
    m = G0.m
    W = count_forms([Gb], m, big, int(budget))
    per_class = []
    for idx in range(projective_count(p, m - 1)):
        c = decode_projective(p, m - 1, idx)
        lin = _linear([big.embed(base, v) for v in c], big)
        per_class.append(count_forms([Gb, lin], m, big, int(budget)))
    return W, per_class


def identity_first_moment(G, p: int, budget: float = DEFAULT_BUDGET) -> IdentityReport:
    """sum_{c in F_p^m} #W_c(F_p) = p^{m-1} |W(F_p)|."""
    m = _form(G).m
    W, per = section_counts(G, p, 1, budget)
    lhs = W + (p - 1) * sum(per)
    rhs = p ** (m - 1) * W
    return IdentityReport("first_moment", _form_text(G), p, Fraction(lhs), Fraction(rhs), lhs == rhs,
                          {"W": W, "convention_sum": "sum over c, not expectation"})


def identity_second_moment(G, p: int, budget: float = DEFAULT_BUDGET) -> IdentityReport:
    """E_c[#W_c(F_p)^2] = p^{-1}|W| + p^{-2}(|W|^2 - |W|)."""
    m = _form(G).m
    W, per = section_counts(G, p, 1, budget)
    lhs = Fraction(W * W + (p - 1) * sum(n * n for n in per), p ** m)
    rhs = Fraction(W, p) + Fraction(W * W - W, p * p)
    return IdentityReport("second_moment", _form_text(G), p, lhs, rhs, lhs == rhs, {"W": W})


def rank_two_check(G, p: int, max_points: int = 100000) -> dict:
    """For x in W(F_{p^2}) not defined over F_p, c -> c.x is F_p-linear of rank 2 on F_p^m.

    Returns the number of points checked by kind; raises on a violation.
    """
    big = field_make(p, 2)
    Gb = _form(G).over(field_make(p)).over(big)
    m = Gb.m
    total = projective_count(big.q, m - 1)
    n, pts = find_points([Gb], big, 0, total, max_points)
    rational = 0
    checked = 0
    for x in pts:
        cols = [big.coeffs(v) for v in x]
        a = [cc[0] for cc in cols]
        b = [cc[1] if len(cc) > 1 else 0 for cc in cols]
        # rank of the 2 x m matrix (a; b) over F_p
        rank = 0 if not any(a) and not any(b) else (
            1 if all((a[i] * b[j] - a[j] * b[i]) % p == 0 for i in range(m) for j in range(m)) else 2)
        is_rational = not any(b)
        if is_rational:
            rational += 1
            continue
        # canonical x (first nonzero coordinate 1) is rational iff b = 0
        if rank != 2:
            raise AssertionError(f"point {x} is not rational but c -> c.x has rank {rank}")
        checked += 1
    return {"points": n, "recorded": len(pts), "rational": rational, "rank_two_checked": checked}


def identity_qsquare(G, p: int, budget: float = DEFAULT_BUDGET) -> IdentityReport:
    """E_{c in F_p^m}[#W_c(F_{p^2})] = p^{-1}|W(F_p)| + p^{-2}(|W(F_{p^2})| - |W(F_p)|)."""
    m = _form(G).m
    W1 = count_forms([_form(G).over(field_make(p))], m, field_make(p), int(budget))
    W2, per = section_counts(G, p, 2, budget)
    lhs = Fraction(W2 + (p - 1) * sum(per), p ** m)
    rhs = Fraction(W1, p) + Fraction(W2 - W1, p * p)
    details = {"W_p": W1, "W_p2": W2, "rank_two": rank_two_check(G, p)}
    return IdentityReport("qsquare", _form_text(G), p, lhs, rhs, lhs == rhs, details)


# ----------------------------------------------------------------------------
# asymptotic dashboard and exponent ladder

@dataclass
class DashboardRow:
    p: int
    stat1: Fraction              # E_c[E_c(p) 1_smooth]
    main1: Fraction              # p^{-1} E(W)
    r1: float                    # (stat1 - main1) / p^{(m-3)/2}
    stat2: Optional[Fraction]    # E_c[E_c(p^2) 1_smooth]
    r2: Optional[float]          # stat2 / p^{m-3} - 1
    stat3: Fraction              # E_c[E_c(p)^2 1_smooth]
    r3: float                    # stat3 / p^{m-3} - 1
    smooth_fraction: float
    note: str = ""


def dashboard_row(table: ETable) -> DashboardRow:
    """The three smooth-locus expectations for one prime (c = 0 has disc 0 and drops out)."""
    if table.mode == "sample":
        raise ValueError("the dashboard needs a full or projective table")
    p, m = table.p, table.m
    if any(z is None for z in table.disc_zero):
        raise ValueError("table lacks discriminant flags")
    smooth = [i for i, z in enumerate(table.disc_zero) if not z]
    w = table.weight
    N = p ** m
    s1 = w * sum(table.E1[i] for i in smooth) / N
    s3 = w * sum(table.E1[i] ** 2 for i in smooth) / N
    s2 = None
    if table.ext == 2:
        s2 = w * sum(table.E2[i] for i in smooth) / N
    G = as_form(parse_form(table.form))
    W = count_forms([G.over(field_make(p))], m, field_make(p))
    main1 = Fraction(error_E(W, p, m - 2), p)
    norm = p ** ((m - 3) / 2)
    r1 = float(s1 - main1) / norm
    r2 = None if s2 is None else float(s2 / p ** (m - 3)) - 1.0
    r3 = float(s3 / p ** (m - 3)) - 1.0
    note = "m=3: expected rate O(p^-1/2)" if m == 3 else "expected rate O(p^-1)"
    return DashboardRow(p, s1, main1, r1, s2, r2, s3, r3, len(smooth) / table.n_rows, note)


def corollary_dashboard(G, primes: Sequence[int], ext: int = 2, **kw) -> dict:
    """Residual table along a prime ladder plus a trend summary (no pass/fail).

    Primes where the form degenerates (a coefficient vanishes mod p, or p
    divides 3) are skipped with a notice.
    """
    rows, skipped = [], []
    text = _form_text(G)
    for p in primes:
        try:
            G0 = _form(text)
            if p == 3:
                raise ValueError("p = 3 divides d(d-1)")
            if len(G0.over(field_make(p)).terms) < len(G0.terms):
                raise ValueError(f"a coefficient vanishes mod {p}")
            table = scan_E_table(text, p, "projective", ext=ext, **kw)
        except ValueError as exc:
            skipped.append({"p": p, "reason": str(exc)})
            continue
        rows.append(dashboard_row(table))

    def trend(vals):
        vals = [abs(v) for v in vals if v is not None]
        if len(vals) < 2:
            return "n/a"
        dec = sum(1 for a, b in zip(vals, vals[1:]) if b <= a)
        return f"{dec}/{len(vals) - 1} steps non-increasing"

    summary = {"r1": trend([r.r1 for r in rows]), "r2": trend([r.r2 for r in rows]),
               "r3": trend([r.r3 for r in rows])}
    return {"schema": SCHEMA, "form": text, "rows": rows, "skipped": skipped, "trend": summary,
            "label": "bounded-ladder residuals; asymptotic claims are not tested"}


def dashboard_json(dash: dict) -> str:
    rows = []
    for r in dash["rows"]:
        d = asdict(r)
        for k in ("stat1", "main1", "stat2", "stat3"):
            d[k] = None if d[k] is None else str(d[k])
        rows.append(d)
    return json.dumps({**dash, "rows": rows}, sort_keys=True, indent=1)


@dataclass
class LadderRow:
    p: int
    sigma: list
    M: list
    e: list
    S_ratio: dict          # epsilon -> #S(q, eps) / q^{m-2}
    bound: float           # m, the expected bound for the exponents


def exponent_ladder(G, primes: Sequence[int], sigmas=(2, 4), epsilons=(0.25,), **kw) -> list[LadderRow]:
    """e_G(sigma) = log_q(1 + M(q, sigma)) and level-set ratios along a ladder of primes (bounded ladder only)."""
    out = []
    text = _form_text(G)
    m = as_form(parse_form(text)).m
    for p in primes:
        table = scan_E_table(text, p, "projective", ext=1, **kw)
        Ms = [moment_M(table, s) for s in sigmas]
        es = [exponent_estimate(M, p) for M in Ms]
        S = {eps: float(Fraction(superlevel_S(table, eps)) / p ** (m - 2)) for eps in epsilons}
        out.append(LadderRow(p, list(sigmas), Ms, es, S, float(m)))
    return out
