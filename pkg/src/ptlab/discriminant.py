"""The diagonal-cubic discriminant as a product of square-root sign combinations."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

from .field import Field, field_make
from .forms import DiagonalForm, as_form


def exponent_e_m(m: int) -> int:
    """Exponent of 3 in the discriminant of the Fermat cubic in m variables."""
    if m < 2:
        raise ValueError("m must be at least 2")
    num = (-1) ** (m - 1) - 2 ** (m - 1)
    return num // 3 + (m - 1) * 2 ** (m - 2)


def disc_bidegree(d: int, m: int) -> tuple[int, int]:
    """Bidegree (in coefficients of F, in c) of the hyperplane-section discriminant."""
    if m < 2 or d < 1:
        raise ValueError("need m >= 2 and d >= 1")
    return ((m - 1) * (d - 1) ** (m - 2), d * (d - 1) ** (m - 2))


def diag_disc_total_degree(m: int) -> int:
    """Total degree (m + 2) 2^{m-2} of the diagonal-cubic discriminant."""
    a, b = disc_bidegree(3, m)
    return a + b


def sign_vectors(m: int):
    """epsilon in {1} x {+1,-1}^{m-1}, with +1 before -1 in each slot."""
    for tail in itertools.product((1, -1), repeat=m - 1):
        yield (1,) + tail


def sign_string(eps: Sequence[int]) -> str:
    return "".join("+" if e > 0 else "-" for e in eps)


@dataclass
class DiagDiscResult:
    """Value of the discriminant in F_p with its factor table over F_{p^2}."""
    defined: bool
    value: Optional[int] = None
    factors: dict[tuple[int, ...], int] = dc_field(default_factory=dict)
    vanishing_count: int = 0
    p: int = 0
    roots: tuple[int, ...] = ()

    def factor_table_json(self) -> str:
        F2 = field_make(self.p, 2)
        rows = [{"epsilon": sign_string(e), "value": F2.format(v)} for e, v in self.factors.items()]
        return json.dumps(rows)


def eval_diag_disc(P, c: Sequence[int], field: Field) -> DiagDiscResult:
    """Discriminant of the diagonal cubic P restricted to c.x = 0, over F_p.

    t_i = c_i^3 / P_i; s_i is the canonical square root of t_i in F_{p^2}
    (smallest encoding, i.e. least second then first coordinate).  The value
    is 3^{e_m} (prod P_i)^{2^{m-2}} prod_eps (sum_i eps_i s_i), which is fixed
    by Frobenius and therefore lies in F_p.  Undefined when p divides
    3 prod P_i.
    """
    if field.r != 1:
        raise ValueError("eval_diag_disc works over a prime field")
    p = field.p
    coeffs = P.coeffs if isinstance(P, DiagonalForm) else None
    if coeffs is None:
        coeffs = as_form(P).diagonal_coeffs()
    raw = [int(v) % p for v in coeffs]
    if any(v == 0 for v in raw):
        return DiagDiscResult(defined=False, p=p)
    m = len(raw)
    if len(c) != m:
        raise ValueError("c has the wrong length")
    F2 = field_make(p, 2)
    roots = []
    for ci, Pi in zip(c, raw):
        t = field.div(field.pow(int(ci) % p, 3), Pi)
        s = F2.sqrt(t)
        assert s is not None  # every element of F_p is a square in F_{p^2}
        roots.append(s)
    factors = {}
    prod = 1
    vanishing = 0
    for eps in sign_vectors(m):
        acc = 0
        for e, s in zip(eps, roots):
            acc = F2.add(acc, s if e > 0 else F2.neg(s))
        factors[eps] = acc
        if acc == 0:
            vanishing += 1
        prod = F2.mul(prod, acc)
    scale = F2.mul(F2.pow(3, exponent_e_m(m)), F2.pow(field.prod(raw), 2 ** (m - 2)))
    value = F2.mul(prod, scale)
    if F2.frobenius(value) != value:
        raise AssertionError("discriminant value is not Frobenius-invariant")
    return DiagDiscResult(defined=True, value=value, factors=factors, vanishing_count=vanishing,
                          p=p, roots=tuple(roots))


def count_vanishing_factors(result: DiagDiscResult) -> int:
    return result.vanishing_count


def perfect_matchings(m: int):
    """Perfect matchings of {0..m-1}: pair the first free index with each later one in turn."""
    def rec(free):
        if not free:
            yield ()
            return
        a = free[0]
        for i in range(1, len(free)):
            b = free[i]
            rest = free[1:i] + free[i + 1:]
            for tail in rec(rest):
                yield ((a, b),) + tail
    if m % 2:
        return []
    return list(rec(tuple(range(m))))


def pairing_criterion(P, c: Sequence[int], field: Field) -> Optional[tuple[tuple[int, int], ...]]:
    """A perfect matching with c_i^3 P_j = c_j^3 P_i on every pair, or None.

    Defined for m in {4, 6}; matchings are tried in the order of
    perfect_matchings and the first one that works is returned.
    """
    coeffs = [int(v) % field.p for v in (P.coeffs if isinstance(P, DiagonalForm) else as_form(P).diagonal_coeffs())]
    m = len(coeffs)
    if m not in (4, 6):
        raise ValueError("pairing criterion is defined for m = 4 or 6")
    cubes = [field.pow(int(v) % field.p, 3) for v in c]
    for match in perfect_matchings(m):
        if all(field.mul(cubes[i], coeffs[j]) == field.mul(cubes[j], coeffs[i]) for i, j in match):
            return match
    return None


def disc_vanish_geometric(F, c: Sequence[int], field: Field, s_max: int = 6,
                          budget: Optional[int] = None, method: str = "auto") -> bool:
    """Whether V(F) cap {c.x = 0} has a singular point over F_{q^s} for some s <= s_max.

    For a diagonal cubic (p not dividing 3 prod F_i) every singular point
    has x_i^2 proportional to c_i / (3 F_i), so its coordinates lie in
    F_{q^2}; a point over F_{q^s} is then already defined over
    F_{q^gcd(s,2)} and the search over s <= s_max reduces to s in {1, 2}
    (s = 1 only when s_max = 1).  Other forms are searched exhaustively
    over each F_{q^s} with q^s inside the supported range.  method="search"
    forces the exhaustive search at every level, diagonal or not.
    """
    from .counting import DEFAULT_BUDGET, find_rational_singular_points
    G = as_form(F)
    base = field
    if method != "search" and G.d == 3 and G.diagonal_coeffs() is not None:
        levels = [s for s in (1, 2) if s <= s_max]
    else:
        levels = [s for s in range(1, s_max + 1) if base.r * s <= 4]
    for s in levels:
        big = field_make(base.p, base.r * s)
        cc = tuple(big.embed(base, int(v)) for v in c)
        pts = find_rational_singular_points(G.over(big), cc, big, method=method,
                                            budget=budget or DEFAULT_BUDGET)
        if pts:
            return True
    return False
