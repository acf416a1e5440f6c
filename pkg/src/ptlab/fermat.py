"""Lines through a point of the Fermat cubic fourfold and rich subset configurations."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .counting import DEFAULT_BUDGET, BudgetExceeded
from .field import Field, canonicalize, field_make, projective_count
from .forms import HomogeneousForm, restrict_to_hyperplane

M_FERMAT = 6


# ----------------------------------------------------------------------------
# the cone of lines through a point

@dataclass(frozen=True)
class VisionTriple:
    """f1 = 3 sum a_i^2 y_i, f2 = 3 sum a_i y_i^2, f3 = sum y_i^3 on P^4 (i = 1..5).

    F(s a + t (y, 0)) = s^2 t f1 + s t^2 f2 + t^3 f3 when F(a) = 0.
    """
    a: tuple[int, ...]
    f1: HomogeneousForm
    f2: HomogeneousForm
    f3: HomogeneousForm


def _check_point(a: Sequence[int], field: Field) -> tuple[int, ...]:
    a = tuple(int(v) for v in a)
    if len(a) != M_FERMAT:
        raise ValueError("a must have 6 coordinates")
    if field.sum(field.pow(v, 3) for v in a) != 0:
        raise ValueError("a does not lie on the Fermat cubic")
    if a[5] == 0:
        raise ValueError("a_6 must be nonzero")
    return a


def tangential_vision(a: Sequence[int], field: Field) -> VisionTriple:
    a = _check_point(a, field)
    three = field.from_int(3)
    f1, f2, f3 = {}, {}, {}
    for i in range(5):
        e1 = [0] * 5
        e1[i] = 1
        e2 = [0] * 5
        e2[i] = 2
        e3 = [0] * 5
        e3[i] = 3
        v1 = field.mul(three, field.mul(a[i], a[i]))
        if v1:
            f1[tuple(e1)] = v1
        v2 = field.mul(three, a[i])
        if v2:
            f2[tuple(e2)] = v2
        f3[tuple(e3)] = 1
    return VisionTriple(a, HomogeneousForm(5, 1, f1, field), HomogeneousForm(5, 2, f2, field),
                        HomogeneousForm(5, 3, f3, field))


def zero_subset_count(values: Sequence, add=None, zero=0) -> int:
    """Number of subsets I (empty set included) with sum_{i in I} values_i = 0."""
    if add is None:
        add = lambda x, y: x + y
    count = 0
    for mask in range(1 << len(values)):
        s = zero
        for i, v in enumerate(values):
            if mask >> i & 1:
                s = add(s, v)
        if s == zero:
            count += 1
    return count


@dataclass(frozen=True)
class VisionCount:
    n: int
    zero_subsets: int
    sing_count: Optional[int]       # None when the formula does not apply


def vision_sing_count(a: Sequence[int], field: Field) -> VisionCount:
    """Number of singular points of Y_a = V(f1, f2, f3) from the cube profile of a.

    n = #{i : a_i != 0} - 1; for n in {4, 5} the count is
    -1 + 2^{n-6} #{I subset of {1..6} : sum_{i in I} a_i^3 = 0}.
    """
    a = _check_point(a, field)
    cubes = [field.pow(v, 3) for v in a]
    n = sum(1 for v in a if v != 0) - 1
    zs = zero_subset_count(cubes, field.add, 0)
    if n not in (4, 5):
        return VisionCount(n, zs, None)
    return VisionCount(n, zs, -1 + (zs * 2 ** n) // 2 ** 6)


@dataclass
class VisionBrute:
    counts: list[int]
    methods: list[str]
    stabilized: int


def _vision_logs(a, field):
    lg = field.tables.log
    alog = np.array([lg[v] for v in a[:5]], dtype=np.int64)
    alog2 = np.array([lg[field.mul(v, v)] for v in a[:5]], dtype=np.int64)
    return alog, alog2


def minors_vanish(a: Sequence[int], y: Sequence[int], field: Field) -> bool:
    """All 3 x 3 minors of the Jacobian rows (3a_i^2), (6 a_i y_i), (3 y_i^2) vanish (i = 1..5)."""
    rows = [[field.mul(field.from_int(3), field.mul(ai, ai)) for ai in a[:5]],
            [field.mul(field.from_int(6), field.mul(ai, yi)) for ai, yi in zip(a[:5], y)],
            [field.mul(field.from_int(3), field.mul(yi, yi)) for yi in y]]
    f = field

    def det3(M):
        t0 = f.mul(M[0][0], f.sub(f.mul(M[1][1], M[2][2]), f.mul(M[1][2], M[2][1])))
        t1 = f.mul(M[0][1], f.sub(f.mul(M[1][0], M[2][2]), f.mul(M[1][2], M[2][0])))
        t2 = f.mul(M[0][2], f.sub(f.mul(M[1][0], M[2][1]), f.mul(M[1][1], M[2][0])))
        return f.add(f.sub(t0, t1), t2)

    for cols in itertools.combinations(range(5), 3):
        if det3([[rows[r][c] for c in cols] for r in range(3)]) != 0:
            return False
    return True


def vision_singular_points_curve(a: Sequence[int], field: Field, budget: int = DEFAULT_BUDGET) -> int:
    """#Y_sing(F_q) by enumerating every point of the curve Y = V(f1, f2, f3).

    f1 is eliminated by restriction (pivot: last i with a_i != 0), the
    remaining quadric/cubic pair is swept row by row over P^2 prefixes and
    every point found is tested with the Jacobian minors.
    """
    vt = tangential_vision(a, field)
    c = [0] * 5
    for e, v in vt.f1.terms.items():
        c[e.index(1)] = v
    res2 = restrict_to_hyperplane(vt.f2, c, field)
    res3 = restrict_to_hyperplane(vt.f3, c, field)
    g, h = res2.form, res3.form
    rows = projective_count(field.q, 2)
    cost = rows * (len(g.terms) + len(h.terms) + 1)
    if cost > budget:
        raise BudgetExceeded(cost, budget, what="curve enumeration")
    lg = field.tables.log
    n = field.q - 1
    # lift matrix: y = L y' with y' the four free coordinates
    lift = np.full((5, 4), n, dtype=np.int64)
    free = [i for i in range(5) if i != res2.pivot]
    for col, i in enumerate(free):
        lift[i, col] = 0
        lift[res2.pivot, col] = lg[field.neg(field.div(c[i], c[res2.pivot]))]
    alog, alog2 = _vision_logs(a, field)
    ge, gcl = g.arrays(field)
    he, hcl = h.arrays(field)
    t = field.tables
    K = kernels.constants(field)
    total = int(kernels.vision_curve_singular(ge, gcl, he, hcl, lift, alog2, alog, 0, rows, t.log, t.zech, K))
    e4 = (0, 0, 0, 1)
    if g.eval(e4) == 0 and h.eval(e4) == 0:
        y = res2.lift(e4)
        if minors_vanish(a, y, field):
            total += 1
    return total


def vision_singular_points_locus(a: Sequence[int], field: Field) -> list[tuple[int, ...]]:
    """Y_sing(F_q) by enumerating the rank-deficiency locus of the Jacobian (see kernels)."""
    a = _check_point(a, field)
    free = [i for i in range(5) if a[i] == 0]
    if len(free) > 1:
        raise ValueError("locus enumeration needs at most one vanishing a_i among i = 1..5")
    alog, alog2 = _vision_logs(a, field)
    t = field.tables
    K = kernels.constants(field)
    rows = kernels.vision_locus_points(alog, alog2, free[0] if free else -1, t.log, t.zech, K, 4096)
    n = field.q - 1
    return sorted(tuple(0 if v == n else int(t.exp[v]) for v in row) for row in rows)


def vision_sing_bruteforce(a: Sequence[int], field: Field, s_max: int = 4, method: str = "auto",
                           budget: int = DEFAULT_BUDGET) -> VisionBrute:
    """#Y_sing over F_{q^s}, s = 1..s_max, with a stabilization check.

    method "curve" sweeps all points of Y (budget permitting), "locus"
    enumerates the Jacobian rank-deficiency locus, "auto" uses the curve
    sweep whenever it fits in the budget.  Raises if the counts at s_max-1
    and s_max differ.
    """
    a = _check_point(a, field)
    counts, methods = [], []
    for s in range(1, s_max + 1):
        if field.r * s > 4:
            raise ValueError(f"F_{field.p}^{field.r * s} is beyond the supported degree; lower s_max")
        big = field_make(field.p, field.r * s)
        aa = [big.embed(field, v) for v in a]
        use = method
        if method == "auto":
            cost = projective_count(big.q, 2) * 40
            use = "curve" if cost <= budget else "locus"
        if use == "curve":
            counts.append(vision_singular_points_curve(aa, big, budget))
        else:
            counts.append(len(vision_singular_points_locus(aa, big)))
        methods.append(use)
    if s_max >= 2 and counts[-1] != counts[-2]:
        raise RuntimeError(f"singular-point count did not stabilize: {counts}")
    return VisionBrute(counts, methods, counts[-1])


# ----------------------------------------------------------------------------
# rich configurations

class _RowSpace:
    """Echelon basis of a row space, for rank and membership tests."""

    def __init__(self, rows, char: int):
        self.char = char
        self.basis: list[tuple[int, list[int]]] = []
        for r in rows:
            self.add(r)

    def _reduce(self, v) -> list[int]:
        ch = self.char
        v = [int(x) % ch if ch else int(x) for x in v]
        for c, row in self.basis:
            f = v[c]
            if f:
                pv = row[c]
                if ch:
                    g = f * pow(pv, ch - 2, ch)
                    v = [(a - g * b) % ch for a, b in zip(v, row)]
                else:
                    v = [pv * a - f * b for a, b in zip(v, row)]
        return v

    def contains(self, v) -> bool:
        return not any(self._reduce(v))

    def add(self, v) -> bool:
        v = self._reduce(v)
        c = next((i for i, x in enumerate(v) if x), None)
        if c is None:
            return False
        self.basis.append((c, v))
        return True

    @property
    def rank(self) -> int:
        return len(self.basis)


def _solve(rows: list[list], rhs: list, char: int) -> list:
    """Unique solution of a consistent full-column-rank system."""
    ncols = len(rows[0])
    if char == 0:
        M = [[Fraction(v) for v in r] + [Fraction(b)] for r, b in zip(rows, rhs)]
        inv_of = lambda x: 1 / x
        red = lambda x: x
    else:
        M = [[v % char for v in r] + [b % char] for r, b in zip(rows, rhs)]
        inv_of = lambda x: pow(x, char - 2, char)
        red = lambda x: x % char
    rank = 0
    pivots = []
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = inv_of(M[rank][col])
        M[rank] = [red(v * inv) for v in M[rank]]
        for i in range(len(M)):
            if i != rank and M[i][col] != 0:
                f = M[i][col]
                M[i] = [red(a - f * b) for a, b in zip(M[i], M[rank])]
        pivots.append(col)
        rank += 1
    sol = [0] * ncols
    for r, col in enumerate(pivots):
        sol[col] = M[r][-1]
    return sol


def perm_equivalent(N: int, S1: Sequence[Sequence[int]], S2: Sequence[Sequence[int]]) -> bool:
    """Whether some permutation of range(N) maps the set family S1 onto S2."""
    S2 = [list(x) for x in S2]
    for P in itertools.permutations(range(N)):
        test = True
        for I in S1:
            PI = sorted(P[i] for i in I)
            test = test and (PI in S2)
        if test and len(S1) == len(S2):
            return True
    return False


@dataclass
class RichResult:
    simple: list[list]              # sorted solution vectors
    degenerate: list[list[list[int]]]

    def as_list(self) -> list:
        return [list(v) for v in self.simple] + ["---"] + [list(map(list, S)) for S in self.degenerate]


def rich_configurations(n: int, r: int, char: int = 0) -> RichResult:
    """Families of r nonempty subsets of {0..n-1} whose zero-sum conditions are rich.

    For each family S (in lexicographic order over the subsets ordered by
    size) the r subset-sum conditions are stacked into a 0/1 matrix.  The
    family is discarded if the conditions force some x_j = 0 or force
    x_1 + ... + x_n = 0.  If together with sum x = -1 they determine x,
    the sorted solution is recorded once; otherwise the family is kept
    unless it is a relabelling of one already kept.
    char = 0 works over Q, char = p over F_p (entries then sort as residues).
    """
    C = [list(c) for k in range(1, n + 1) for c in itertools.combinations(range(n), k)]
    simple: list[list] = []
    other: list[list[list[int]]] = []
    for S in itertools.combinations(C, r):
        A = [[1 if j in S[i] else 0 for j in range(n)] for i in range(r)]
        space = _RowSpace(A, char)
        bad = any(space.contains([1 if t == j else 0 for t in range(n)]) for j in range(n))
        if bad or space.contains([1] * n):
            continue
        rkA = space.rank + 1
        A.append([1] * n)
        if rkA == n:
            v = _solve(A, [0] * r + [-1], char)
            v.sort()
            if v not in simple:
                simple.append(v)
        elif all(not perm_equivalent(n, S, U) for U in other):
            other.append([list(x) for x in S])
    return RichResult(simple, other)


def reduce_mod(result: RichResult, p: int) -> list:
    """Characteristic-0 output mapped to F_p with each solution re-sorted, for comparison."""
    simple = []
    for v in result.simple:
        w = sorted((x.numerator * pow(x.denominator, p - 2, p)) % p for x in map(Fraction, v))
        simple.append(w)
    return simple + ["---"] + [list(map(list, S)) for S in result.degenerate]


# ----------------------------------------------------------------------------
# profiles and screening

PATTERN_P1 = (-2, -1, 1, 1, 0, 1)
PATTERN_P2 = (-2, -2, 1, 1, 1, 1)


class _QQ:
    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return Fraction(a) / b

    def from_int(self, k):
        return Fraction(k)

    def key(self, a):
        return Fraction(a)


class _FF:
    def __init__(self, field: Field):
        self.f = field

    def add(self, a, b):
        return self.f.add(a, b)

    def neg(self, a):
        return self.f.neg(a)

    def mul(self, a, b):
        return self.f.mul(a, b)

    def div(self, a, b):
        return self.f.div(a, b)

    def from_int(self, k):
        return self.f.from_int(k)

    def key(self, a):
        return a


@dataclass(frozen=True)
class ProfileMatch:
    pattern: str               # P1, P2, P3 or none
    t: Optional[object] = None


def classify_rich_profile(x: Sequence, field: Optional[Field] = None) -> ProfileMatch:
    """Match a nonzero 6-vector with sum 0 against the three rich profiles.

    P1 = [-2:-1:1:1:0:1], P2 = [-2:-2:1:1:1:1], P3 = [t:-t:-t:t:-1:1] (t != 0),
    each up to permutation and scaling.  x lives in F_q (field given) or in Q.
    For P3, t is only defined up to sign; the reported t is |t| over Q and
    the smaller encoding of t, -t over F_q.
    """
    R = _QQ() if field is None else _FF(field)
    xs = [Fraction(v) for v in x] if field is None else [int(v) for v in x]
    if len(xs) != 6:
        raise ValueError("expected 6 values")
    zero = R.from_int(0)
    s = zero
    for v in xs:
        s = R.add(s, v)
    if s != zero:
        raise ValueError("profile must sum to zero")
    if all(v == zero for v in xs):
        raise ValueError("profile must be nonzero")
    target_sorted = lambda vals: sorted(R.key(v) for v in vals)
    xkey = target_sorted(xs)
    for name, pat in (("P1", PATTERN_P1), ("P2", PATTERN_P2)):
        pv = [R.from_int(v) for v in pat]
        for xi in xs:
            if xi == zero:
                continue
            for v in set(pv):
                if v == zero:
                    continue
                lam = R.div(xi, v)
                if target_sorted(R.mul(lam, u) for u in pv) == xkey:
                    return ProfileMatch(name)
    one, mone = R.from_int(1), R.from_int(-1)
    for xi in xs:
        if xi == zero:
            continue
        y = [R.div(v, xi) for v in xs]
        rest = list(y)
        # drop the last occurrence of 1 and of -1
        for val in (mone, one):
            idx = max((i for i, v in enumerate(rest) if v == val), default=None)
            if idx is None:
                rest = None
                break
            rest.pop(idx)
        if rest is None:
            continue
        t = rest[0]
        if t == zero:
            continue
        if target_sorted(rest) == target_sorted([t, t, R.neg(t), R.neg(t)]):
            t = abs(t) if field is None else min(t, R.neg(t))
            return ProfileMatch("P3", t)
    return ProfileMatch("none")


@dataclass
class ScreenResult:
    a: tuple[int, ...]
    n: int
    zero_subset_count: int
    sing_count: Optional[int]
    pattern: str
    verdict: str
    span: tuple[int, ...]      # hyperplane [grad F(a)] containing the span of lines through a

    def to_json(self) -> str:
        return json.dumps({"a": list(self.a), "n": self.n, "zero_subset_count": self.zero_subset_count,
                           "sing_count": self.sing_count, "pattern": self.pattern,
                           "verdict": self.verdict, "span": list(self.span)})


SING_THRESHOLD = {4: 3, 5: 5}


def scroll_screen(a: Sequence[int], field: Field) -> ScreenResult:
    """Screen a point a of the Fermat cubic fourfold for cubic scrolls through it.

    Verdict "scroll-impossible" when n is not in {1, 4, 5}, or when n is
    in {4, 5}, Y_a has fewer singular points than needed (3 for n = 4,
    5 for n = 5) and the cube profile is none of P1/P2/P3.  Otherwise
    "scroll-unexcluded".  The span of lines through a lies in the
    hyperplane with coefficients grad F(a) = (3 a_i^2).
    """
    a = _check_point(a, field)
    vc = vision_sing_count(a, field)
    cubes = [field.pow(v, 3) for v in a]
    pattern = classify_rich_profile(cubes, field).pattern
    n = vc.n
    if n not in (1, 4, 5):
        verdict = "scroll-impossible"
    elif n in (4, 5) and vc.sing_count < SING_THRESHOLD[n] and pattern == "none":
        verdict = "scroll-impossible"
    else:
        verdict = "scroll-unexcluded"
    span = canonicalize(field, [field.mul(field.from_int(3), field.mul(v, v)) for v in a])
    return ScreenResult(a, n, vc.zero_subsets, vc.sing_count, pattern, verdict, span)


def fermat_points(field: Field, limit: Optional[int] = None, rng=None):
    """Canonical points of the Fermat cubic fourfold with a_6 != 0 (a_6 = 1)."""
    q = field.q
    cubes = [field.pow(v, 3) for v in range(q)]
    by_cube: dict[int, list[int]] = {}
    for v, c in enumerate(cubes):
        by_cube.setdefault(c, []).append(v)
    count = 0
    if rng is None:
        it = itertools.product(range(q), repeat=4)
    else:
        it = (tuple(int(v) for v in rng.integers(0, q, 4)) for _ in itertools.count())
    for head in it:
        s = field.add(field.sum(cubes[v] for v in head), 1)
        for last in by_cube.get(field.neg(s), []):
            yield head + (last, 1)
            count += 1
            if limit is not None and count >= limit:
                return
