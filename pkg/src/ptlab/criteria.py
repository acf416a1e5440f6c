"""Predictions of square-root-cancellation failure and their audit against counts."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

from .counting import quadric_rank
from .discriminant import pairing_criterion, perfect_matchings
from .field import Field, field_make
from .forms import DiagonalForm, HomogeneousForm, as_form

AGREE, DISAGREE, INCONCLUSIVE = "agree", "disagree", "inconclusive"


@dataclass(frozen=True)
class CriterionVerdict:
    predicted_bad: bool
    witness: object
    source: str
    caveat: str = ""


def quadric_dichotomy(Q: HomogeneousForm, field: Optional[Field] = None) -> CriterionVerdict:
    """X = V(Q) in P^n (n = m - 1) is predicted bad iff rank Q is even and 2 <= rank <= dim X + 1.

    The rank is the rank of the Gram matrix over the field of definition;
    it is invariant under field extension.
    """
    if field is not None:
        Q = Q.over(field)
    if Q.d != 2:
        raise ValueError("expected a quadric")
    if Q.is_zero():
        raise ValueError("the zero form does not define a quadric")
    rank = quadric_rank(Q)
    dim_x = Q.m - 2
    bad = rank % 2 == 0 and 2 <= rank <= dim_x + 1
    return CriterionVerdict(bad, rank, "quadric-rank-parity")


def diagonal_cubic_dichotomy(F, c: Sequence[int], field: Field) -> CriterionVerdict:
    """Bad iff the pairing criterion holds (m in {4, 6}); asserted for p large enough."""
    match = pairing_criterion(F, c, field)
    return CriterionVerdict(match is not None, match, "diagonal-pairing",
                            caveat="asserted for sufficiently large p")


@dataclass(frozen=True)
class PlaneWitness:
    s: int
    matching: tuple[tuple[int, int], ...]
    mus: tuple[int, ...]      # x_i = mu x_j on each pair, encoded in F_{q^s}


def plane_search(F, c: Sequence[int], field: Field, s_max: int = 3) -> Optional[PlaneWitness]:
    """Search for a linear space {x_i = mu x_j on the pairs of a matching} in V(F) cap {c.x = 0}.

    On such a space F_i x_i^3 + F_j x_j^3 vanishes iff F_i mu^3 + F_j = 0, and
    c.x vanishes iff c_i mu + c_j = 0 on every pair.  All cube roots are tried
    over F_{q^s}, s = 1..s_max (degree capped at 4).
    """
    G = as_form(F)
    coeffs = G.diagonal_coeffs()
    if coeffs is None or G.d != 3:
        raise ValueError("plane search needs a diagonal cubic")
    m = len(coeffs)
    for s in range(1, s_max + 1):
        if field.r * s > 4:
            break
        big = field_make(field.p, field.r * s)
        co = G.over(big).diagonal_coeffs()
        if co is None:
            raise ValueError("a diagonal coefficient vanishes in this characteristic")
        cc = [big.embed(field, int(v)) for v in c]
        for match in perfect_matchings(m):
            mus = []
            for i, j in match:
                target = big.neg(big.div(co[j], co[i]))
                ok = [mu for mu in big.cube_roots(target)
                      if big.add(big.mul(cc[i], mu), cc[j]) == 0]
                if not ok:
                    break
                mus.append(ok[0])
            else:
                return PlaneWitness(s, match, tuple(mus))
    return None


def consistency_audit(predicted: CriterionVerdict, label: str) -> str:
    """Compare a prediction with an empirical verdict label."""
    if label == "inconclusive":
        return INCONCLUSIVE
    empirical_bad = label == "bad-suspected"
    return AGREE if empirical_bad == predicted.predicted_bad else DISAGREE


AUDIT_COLUMNS = ["pairing", "vanishing_factors", "verdict", "agree"]


def write_audit_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else AUDIT_COLUMNS)
        w.writeheader()
        w.writerows(rows)
