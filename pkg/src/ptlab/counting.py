"""Point counts, error terms and hyperplane-section series over finite fields."""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .field import Field, canonicalize, decode_projective, field_make, projective_count
from .forms import (DiagonalForm, HomogeneousForm, Restriction, as_form, divide, matrix_rank,
                    restrict_to_hyperplane)

# upper limit on monomial evaluations a single count may spend
DEFAULT_BUDGET = 2_000_000_000


class BudgetExceeded(RuntimeError):
    """A count would exceed the work budget."""

    def __init__(self, cost: int, budget: int, r: Optional[int] = None, what: str = "count"):
        self.cost, self.budget, self.r = cost, budget, r
        where = f" at r={r}" if r is not None else ""
        super().__init__(f"{what}{where} needs ~{cost:.3g} monomial evaluations, budget is {budget:.3g}")


@dataclass(frozen=True)
class VarietySpec:
    """V(forms) inside P^n with the dimension used for the error term."""
    n: int
    forms: tuple[HomogeneousForm, ...]
    declared_dim: int

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(as_form(f) for f in self.forms))
        for f in self.forms:
            if f.m != self.n + 1:
                raise ValueError(f"form in {f.m} variables does not live on P^{self.n}")

    def cone(self) -> "VarietySpec":
        """The projective cone: same equations with one extra unused variable."""
        forms = []
        for f in self.forms:
            forms.append(HomogeneousForm(f.m + 1, f.d, {e + (0,): c for e, c in f.terms.items()}, f.field))
        return VarietySpec(self.n + 1, tuple(forms), self.declared_dim + 1)


def error_E(N: int, q: int, dim: int) -> int:
    """E = N - #P^dim(F_q)."""
    return N - projective_count(q, dim)


# ----------------------------------------------------------------------------
# counting V(forms) in P^{k-1}

def _reduce_linear(forms: list[HomogeneousForm], field: Field) -> Optional[list[HomogeneousForm]]:
    """Eliminate linear forms by restriction; the ambient space shrinks accordingly.

    Returns the remaining forms (all of degree >= 2, or of degree 0 and
    nonzero meaning an empty variety), or None for the empty set.
    """
    forms = [f.over(field) for f in forms]
    while True:
        forms = [f for f in forms if not f.is_zero()]
        lin = next((f for f in forms if f.d == 1), None)
        if lin is None:
            return forms
        if lin.m == 1:
            return None  # a nonzero linear form on P^0 has no zero
        c = [0] * lin.m
        for e, v in lin.terms.items():
            c[e.index(1)] = v
        rest = []
        for f in forms:
            if f is lin:
                continue
            rest.append(restrict_to_hyperplane(f, c, field).form)
        if not rest:
            return [HomogeneousForm.zero(lin.m - 1, 2, field)]
        forms = rest


def count_cost(forms: Sequence[HomogeneousForm], q: int) -> int:
    """Rough number of monomial evaluations count_forms will spend."""
    if not forms:
        return 0
    k = forms[0].m
    terms = sum(max(len(f.terms), 1) for f in forms)
    if len(forms) == 1 and forms[0].d <= 3:
        return projective_count(q, k - 2) * terms
    if len(forms) == 2 and min(f.d for f in forms) <= 2:
        return projective_count(q, k - 2) * terms
    return projective_count(q, k - 1) * terms


def count_forms(forms: Sequence[HomogeneousForm], k: int, field: Field,
                budget: int = DEFAULT_BUDGET) -> int:
    """#{x in P^{k-1}(F_q) : f(x) = 0 for all f}."""
    forms = [as_form(f) for f in forms]
    if not forms:
        return projective_count(field.q, k - 1)
    reduced = _reduce_linear(forms, field)
    if reduced is None:
        return 0
    reduced = [f for f in reduced if not f.is_zero()]
    if not reduced:
        # only linear conditions (possibly dependent) remained
        kk = _ambient_after(forms, field)
        return projective_count(field.q, kk - 1)
    k = reduced[0].m
    if k == 1:
        return 0  # nonzero forms on P^0 never vanish at the single point
    cost = count_cost(reduced, field.q)
    if cost > budget:
        raise BudgetExceeded(cost, budget)
    t = field.tables
    K = kernels.constants(field)
    rows = projective_count(field.q, k - 2)
    ek = (0,) * (k - 1) + (1,)
    if len(reduced) == 1 and reduced[0].d <= 3:
        f = reduced[0]
        exps, clog = f.arrays(field)
        n = kernels.count_hypersurface_rows(exps, clog, k, 0, rows, t.log, t.zech, t.cube1, t.cubeg, K)
        return int(n) + (1 if f.eval(ek) == 0 else 0)
    if len(reduced) == 2 and min(f.d for f in reduced) <= 2 and max(f.d for f in reduced) <= 8:
        f, g = sorted(reduced, key=lambda h: h.d)
        fe, fc = f.arrays(field)
        ge, gc = g.arrays(field)
        n = kernels.count_pair_rows(fe, fc, ge, gc, k, 0, rows, t.log, t.zech, t.cube1, t.cubeg, K)
        return int(n) + (1 if f.eval(ek) == 0 and g.eval(ek) == 0 else 0)
    total = projective_count(field.q, k - 1)
    count, _ = find_points(reduced, field, 0, total, 0)
    return count


def _ambient_after(forms, field) -> int:
    # number of variables left after imposing the linear forms among `forms`
    lin = [f.over(field) for f in forms if f.d == 1 and not f.over(field).is_zero()]
    m = forms[0].m
    if not lin:
        return m
    rows = []
    for f in lin:
        c = [0] * m
        for e, v in f.terms.items():
            c[e.index(1)] = v
        rows.append(c)
    return m - matrix_rank(rows, field)


def find_points(forms: Sequence[HomogeneousForm], field: Field, start: int, stop: int, max_record: int):
    """Brute-force common zeros among canonical points with index in [start, stop)."""
    k = forms[0].m
    ex, cl, offsets = [], [], [0]
    for f in forms:
        e, c = f.arrays(field)
        ex.append(e)
        cl.append(c)
        offsets.append(offsets[-1] + len(c))
    exps = np.concatenate(ex) if ex else np.zeros((0, k), dtype=np.int64)
    clog = np.concatenate(cl) if cl else np.zeros(0, dtype=np.int64)
    t = field.tables
    K = kernels.constants(field)
    count, rec = kernels.find_common_zeros(exps, clog, np.array(offsets, dtype=np.int64), k, start, stop,
                                           t.log, K, t.zech, max_record)
    return int(count), [decode_projective(field.q, k - 1, int(i)) for i in rec]


def count_projective(spec: VarietySpec, field: Field, budget: int = DEFAULT_BUDGET) -> int:
    """#V(F_q) for a variety given by forms on P^n."""
    return count_forms(spec.forms, spec.n + 1, field, budget)


def error_of(spec: VarietySpec, field: Field, budget: int = DEFAULT_BUDGET) -> int:
    return error_E(count_projective(spec, field, budget), field.q, spec.declared_dim)


# ----------------------------------------------------------------------------
# hyperplane sections

@dataclass
class CountSeries:
    """N_r, E_r and rho_r = |E_r| / q^{r dim/2} for r = 1..R (None where skipped)."""
    q: int
    R: int
    dim: int
    N: list[Optional[int]]
    E: list[Optional[int]]
    rho: list[Optional[float]]
    notes: list[str] = dc_field(default_factory=list)

    @classmethod
    def from_counts(cls, q: int, dim: int, N: Sequence[Optional[int]], notes=None, E=None) -> "CountSeries":
        R = len(N)
        if E is None:
            E = [None if n is None else error_E(n, q ** (r + 1), dim) for r, n in enumerate(N)]
        rho = [None if e is None else abs(e) / (q ** ((r + 1) * dim / 2)) for r, e in enumerate(E)]
        return cls(q, R, dim, list(N), list(E), rho, list(notes or []))


def hyperplane_section_series(F, c: Sequence[int], base: Field, R: int,
                              budget: int = DEFAULT_BUDGET, strategy: str = "direct") -> CountSeries:
    """Counts of V(F) cap {c.x = 0} inside P^{m-2} over F_{q^r}, r = 1..R.

    strategy:
      "direct"  every level counted directly; a level over budget raises BudgetExceeded.
      "auto"    levels over budget go through the singular-point reduction when a
                singular point of the section is rational over that level, else they
                are skipped (None) with a note.
      "reduce"  levels r >= 2 always use the reduction when possible, else skipped.
    Dimension m-3 is used for the error terms.
    """
    G = as_form(F).over(base)
    m = G.m
    c = tuple(int(v) for v in c)
    if all(v == 0 for v in c):
        raise ValueError("c must be nonzero")
    res = restrict_to_hyperplane(G, c, base)
    dim = m - 3
    N: list[Optional[int]] = []
    E: list[Optional[int]] = []
    notes: list[str] = []
    for r in range(1, R + 1):
        if base.r * r > 4:
            raise ValueError(f"level r={r} needs F_{base.p}^{base.r * r}, beyond degree 4")
        fr = field_make(base.p, base.r * r)
        Gr = res.form.over(fr)
        q = fr.q
        use_reduction = strategy == "reduce" and r >= 2
        if not use_reduction:
            cost = count_cost([Gr], q) if not Gr.is_zero() else 0
            if cost > budget:
                if strategy == "direct":
                    raise BudgetExceeded(cost, budget, r=r, what="hyperplane section count")
                use_reduction = True
        if use_reduction:
            val = reduced_section_error(G, c, fr, budget, cfield=base)
            if val is None:
                N.append(None)
                E.append(None)
                notes.append(f"r={r}: skipped (no rational singular point over F_{q})")
            else:
                E.append(val)
                N.append(val + projective_count(q, dim))
                notes.append(f"r={r}: via singular-point reduction")
            continue
        n_r = count_forms([Gr], m - 1, fr, budget) if not Gr.is_zero() else projective_count(q, m - 2)
        N.append(n_r)
        E.append(error_E(n_r, q, dim))
    if res.is_zero():
        notes.append("hyperplane contained in V(F)")
    rho = [None if e is None else abs(e) / (base.q ** (r * dim / 2)) for r, e in enumerate(E, start=1)]
    return CountSeries(base.q, R, dim, N, E, rho, notes)


def reduced_section_error(F, c: Sequence[int], field: Field, budget: int = DEFAULT_BUDGET,
                          cfield: Optional[Field] = None) -> Optional[int]:
    """E of the cubic section V(F, c.x) over `field` via a rational singular point, or None.

    c has entries in cfield (default: the prime field), a subfield of `field`.
    """
    G = as_form(F).over(field)
    cfield = cfield or field_make(field.p, 1)
    cc = tuple(field.embed(cfield, v) for v in c)
    pts = find_rational_singular_points(G, cc, field)
    if not pts:
        return None
    res = restrict_to_hyperplane(G, cc, field)
    # coordinates of the singular point in the restricted variables
    s = tuple(v for i, v in enumerate(pts[0]) if i != res.pivot)
    s = canonicalize(field, s)
    f2, f3, _ = move_singularity_to_pole(res.form, s)
    return rationality_reduced_E(f2, f3, field, res.form.m - 1, budget)


# ----------------------------------------------------------------------------
# singular points

def _is_diagonal_cubic(F) -> Optional[tuple[int, ...]]:
    if isinstance(F, DiagonalForm):
        return F.coeffs if F.d == 3 else None
    G = as_form(F)
    if G.d == 3:
        return G.diagonal_coeffs()
    return None


def is_singular_point(F: HomogeneousForm, c: Sequence[int], x: Sequence[int]) -> bool:
    """F(x) = 0, c.x = 0 and grad F(x) parallel to c (all 2 x 2 minors vanish)."""
    fld = F.field
    if F.eval(x) != 0:
        return False
    if fld.sum(fld.mul(a, b) for a, b in zip(c, x)) != 0:
        return False
    g = F.gradient(x)
    m = len(c)
    for i in range(m):
        for j in range(i + 1, m):
            if fld.sub(fld.mul(g[i], c[j]), fld.mul(g[j], c[i])) != 0:
                return False
    return True


def diagonal_singular_points(F, c: Sequence[int], field: Field) -> list[tuple[int, ...]]:
    """Singular points of V(F) cap {c.x = 0} over F_q for a diagonal cubic F, p not 3.

    At such a point 3 F_i x_i^2 = lam c_i for a common lam != 0; scaling x
    moves lam within its square class, so x_i^2 = lam c_i / (3 F_i) with
    lam in {1, non-square}.  Candidates are verified with is_singular_point.
    """
    G = as_form(F).over(field)
    coeffs = G.diagonal_coeffs()
    m = len(c)
    fld = field
    three = fld.from_int(3)
    found = set()
    for lam in (1, fld.nonresidue()):
        roots = []
        ok = True
        for i in range(m):
            t = fld.div(fld.mul(lam, c[i]), fld.mul(three, coeffs[i]))
            s = fld.sqrt(t)
            if s is None:
                ok = False
                break
            roots.append(s)
        if not ok or all(s == 0 for s in roots):
            continue
        nz = [i for i in range(m) if roots[i] != 0]
        for signs in range(1 << (len(nz) - 1)):
            x = list(roots)
            for b, i in enumerate(nz[1:]):
                if signs >> b & 1:
                    x[i] = fld.neg(x[i])
            x = canonicalize(fld, x)
            if x not in found and is_singular_point(G, c, x):
                found.add(x)
    return sorted(found)


def find_rational_singular_points(F, c: Sequence[int], field: Field, method: str = "auto",
                                  budget: int = DEFAULT_BUDGET) -> list[tuple[int, ...]]:
    """Canonical points of P^{m-1}(F_q) where V(F) cap {c.x = 0} is singular.

    method "diagonal" uses the square-root fibre description (diagonal cubics),
    "search" enumerates the section exhaustively; "auto" picks the former
    when it applies.
    """
    G = as_form(F).over(field)
    c = tuple(int(v) for v in c)
    if method == "auto":
        method = "diagonal" if _is_diagonal_cubic(G) is not None else "search"
    if method == "diagonal":
        return diagonal_singular_points(G, c, field)
    res = restrict_to_hyperplane(G, c, field)
    g = res.form
    k = g.m
    if g.is_zero():
        raise ValueError("hyperplane lies in V(F): the section is not a hypersurface")
    eqs = [g] + [g.partial(i) for i in range(k)]
    eqs = [e for e in eqs if not e.is_zero()]
    total = projective_count(field.q, k - 1)
    cost = total * sum(len(e.terms) for e in eqs)
    if cost > budget:
        raise BudgetExceeded(cost, budget, what="singular point search")
    if not eqs:
        return []
    _, pts = find_points(eqs, field, 0, total, 10_000)
    return sorted(canonicalize(field, res.lift(y)) for y in pts)


def move_singularity_to_pole(C: HomogeneousForm, s: Sequence[int]):
    """Move a singular point s of the cubic V(C) to [0:...:0:1].

    Returns (f2, f3, M) with C o M = x_{n+1} f2(x_1..x_n) + f3(x_1..x_n)
    and M e_{n+1} = s.  The columns of M other than the last are the
    standard basis vectors e_i, i != pivot (pivot = last nonzero entry of s).
    """
    fld = C.field
    N = C.m
    s = tuple(s)
    if C.d != 3:
        raise ValueError("expected a cubic")
    piv = max(i for i in range(N) if s[i] != 0)
    others = [i for i in range(N) if i != piv]
    M = [[0] * N for _ in range(N)]
    for col, i in enumerate(others):
        M[i][col] = 1
    for i in range(N):
        M[i][N - 1] = s[i]
    D = C.compose(M)
    f2t, f3t = {}, {}
    for e, v in D.terms.items():
        if e[-1] >= 2:
            raise ValueError("point is not a singular point of the cubic (pole terms survive)")
        (f2t if e[-1] == 1 else f3t)[e[:-1]] = v
    n = N - 1
    return (HomogeneousForm(n, 2, f2t, fld), HomogeneousForm(n, 3, f3t, fld), M)


# ----------------------------------------------------------------------------
# quadrics

def gram_matrix(Q: HomogeneousForm) -> list[list[int]]:
    fld = Q.field
    n = Q.m
    half = fld.inv(fld.from_int(2))
    B = [[0] * n for _ in range(n)]
    for e, v in Q.terms.items():
        idx = [i for i, a in enumerate(e) for _ in range(a)]
        i, j = idx
        if i == j:
            B[i][i] = fld.add(B[i][i], v)
        else:
            h = fld.mul(v, half)
            B[i][j] = fld.add(B[i][j], h)
            B[j][i] = fld.add(B[j][i], h)
    return B


def diagonalize_quadric(Q: HomogeneousForm):
    """Congruence diagonalization Q(P y) = sum d_i y_i^2.

    Returns (d, P) where d lists the diagonal entries (nonzero ones first)
    and P is the change of variables as a list of rows.
    """
    fld = Q.field
    n = Q.m
    B = gram_matrix(Q)
    P = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def add_col(dst, src, f):
        # basis change e_dst <- e_dst + f e_src applied to B (congruence) and P
        for i in range(n):
            B[i][dst] = fld.add(B[i][dst], fld.mul(f, B[i][src]))
        for j in range(n):
            B[dst][j] = fld.add(B[dst][j], fld.mul(f, B[src][j]))
        for i in range(n):
            P[i][dst] = fld.add(P[i][dst], fld.mul(f, P[i][src]))

    def swap(a, b):
        for row in B:
            row[a], row[b] = row[b], row[a]
        B[a], B[b] = B[b], B[a]
        for row in P:
            row[a], row[b] = row[b], row[a]

    for k in range(n):
        piv = next((i for i in range(k, n) if B[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in range(k, n) for j in range(i + 1, n) if B[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            add_col(i, j, 1)
            piv = i
        swap(k, piv)
        inv = fld.inv(B[k][k])
        for j in range(k + 1, n):
            if B[k][j] != 0:
                add_col(j, k, fld.neg(fld.mul(B[k][j], inv)))
    d = [B[i][i] for i in range(n)]
    return d, P


def quadric_rank(Q: HomogeneousForm) -> int:
    return matrix_rank(gram_matrix(Q), Q.field)


def quadric_count(Q: HomogeneousForm, field: Optional[Field] = None, n: Optional[int] = None) -> int:
    """#V(Q)(F_q) in P^n (n = m-1) from rank and discriminant square class.

    For a nondegenerate diagonal quadric in rho variables the affine zero
    count is q^{rho-1} when rho is odd and
    q^{rho-1} + eta((-1)^{rho/2} disc) (q^{rho/2} - q^{rho/2-1}) when rho is even.
    """
    if field is not None:
        Q = Q.over(field)
    fld = Q.field
    q = fld.q
    N = Q.m
    if n is not None and n != N - 1:
        raise ValueError("n must equal m - 1")
    d, _ = diagonalize_quadric(Q)
    nz = [x for x in d if x != 0]
    rho = len(nz)
    if rho == 0:
        affine = q ** N
    elif rho % 2 == 1:
        affine = q ** (N - rho) * q ** (rho - 1)
    else:
        disc = fld.prod(nz)
        if (rho // 2) % 2 == 1:
            disc = fld.neg(disc)
        eta = 1 if fld.is_square(disc) else -1
        affine = q ** (N - rho) * (q ** (rho - 1) + eta * (q ** (rho // 2) - q ** (rho // 2 - 1)))
    return (affine - 1) // (q - 1)


# ----------------------------------------------------------------------------
# rationality reduction

def _linear_divides(l: Sequence[int], f: HomogeneousForm) -> bool:
    """Whether the linear form l.x divides f."""
    if f.is_zero():
        return True
    return restrict_to_hyperplane(f, l, f.field).form.is_zero()


def common_component(f2: HomogeneousForm, f3: HomogeneousForm) -> bool:
    """Whether dim V(f2) = dim V(f2, f3) in P^{n-1}, i.e. f3 vanishes on a component of V(f2)."""
    fld = f2.field
    if f2.is_zero():
        return False
    if f3.is_zero():
        return True
    d, P = diagonalize_quadric(f2)
    rank = sum(1 for x in d if x != 0)
    if rank >= 3:
        return divide(f3, f2) is not None
    Pinv = _inverse(P, fld)
    if rank == 1:
        return _linear_divides(Pinv[0], f3)
    # rank 2: d0 y0^2 + d1 y1^2 splits over F_q iff -d1/d0 is a square
    s = fld.sqrt(fld.neg(fld.div(d[1], d[0])))
    if s is None:
        return divide(f3, f2) is not None
    lp = [fld.add(a, fld.mul(s, b)) for a, b in zip(Pinv[0], Pinv[1])]
    lm = [fld.sub(a, fld.mul(s, b)) for a, b in zip(Pinv[0], Pinv[1])]
    return _linear_divides(lp, f3) or _linear_divides(lm, f3)


def _inverse(P, fld: Field):
    n = len(P)
    A = [list(P[i]) + [1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if A[i][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        inv = fld.inv(A[col][col])
        A[col] = [fld.mul(inv, v) for v in A[col]]
        for i in range(n):
            if i != col and A[i][col] != 0:
                f = A[i][col]
                A[i] = [fld.sub(a, fld.mul(f, b)) for a, b in zip(A[i], A[col])]
    return [row[n:] for row in A]


def rationality_reduced_E(f2: HomogeneousForm, f3: HomogeneousForm, field: Field, n: int,
                          budget: int = DEFAULT_BUDGET) -> int:
    """E(X) for X = V(x_{n+1} f2 + f3) in P^n, computed one dimension lower.

    E(X) = q E(V(f2, f3)) - E(V(f2)) + q^{n-1} [dim V(f2) = dim V(f2, f3)],
    where V(f2), V(f2, f3) live in P^{n-1} with dimensions n-2 (n-1 if
    f2 = 0) and n-3 (n-2 on a common component).
    """
    f2 = f2.over(field)
    f3 = f3.over(field)
    q = field.q
    if f2.m != n or f3.m != n:
        raise ValueError("f2, f3 must be forms in n variables")
    if f2.is_zero() and f3.is_zero():
        raise ValueError("x_{n+1} f2 + f3 is the zero form")
    same_dim = common_component(f2, f3)
    dim_f2 = n - 1 if f2.is_zero() else n - 2
    dim_y = n - 2 if (same_dim or f2.is_zero()) else n - 3
    if f2.is_zero():
        n_f2 = projective_count(q, n - 1)
    else:
        n_f2 = quadric_count(f2)
    n_y = count_forms([f for f in (f2, f3) if not f.is_zero()], n, field, budget)
    E_y = error_E(n_y, q, dim_y)
    E_f2 = error_E(n_f2, q, dim_f2)
    return q * E_y - E_f2 + (q ** (n - 1) if same_dim else 0)


# ----------------------------------------------------------------------------
# verdicts

@dataclass(frozen=True)
class Thresholds:
    tau_bound: float = 20.0
    tau_growth: float = 5.0
    delta: float = 0.25


@dataclass(frozen=True)
class Verdict:
    label: str            # good-consistent | bad-suspected | inconclusive
    slope: Optional[float]
    max_rho: Optional[float]


def sqrt_cancellation_verdict(series: CountSeries, thresholds: Thresholds = Thresholds()) -> Verdict:
    """Label a series by its normalized error ratios.

    The slope is the least-squares slope of log_q |E_r| against r over the
    levels with E_r != 0.  good-consistent: every rho_r <= tau_bound.
    bad-suspected: slope >= dim/2 + delta and the last available rho >= tau_growth.
    Anything else is inconclusive.
    """
    pts = [(r, e) for r, e in enumerate(series.E, start=1) if e is not None]
    rhos = [series.rho[r - 1] for r, _ in pts]
    if not pts:
        return Verdict("inconclusive", None, None)
    max_rho = max(rhos)
    nz = [(r, math.log(abs(e)) / math.log(series.q)) for r, e in pts if e != 0]
    slope = None
    if len(nz) >= 2:
        rs = np.array([r for r, _ in nz], dtype=float)
        ys = np.array([y for _, y in nz])
        slope = float(np.polyfit(rs, ys, 1)[0])
    if max_rho <= thresholds.tau_bound:
        return Verdict("good-consistent", slope, max_rho)
    if slope is not None and slope >= series.dim / 2 + thresholds.delta and rhos[-1] >= thresholds.tau_growth:
        return Verdict("bad-suspected", slope, max_rho)
    return Verdict("inconclusive", slope, max_rho)
