"""Homogeneous forms over Z or over a finite field.

A form stores a sparse map from exponent vectors to nonzero coefficients.
Coefficients are Python ints: plain integers for forms over Z, encoded
field elements (see ptlab.field) for forms over F_q.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .field import Field

Exps = tuple[int, ...]


class _IntRing:
    """Integer arithmetic with the Field method names."""

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def pow(self, a, e):
        return a ** e


ZZ = _IntRing()


def _ring(field: Optional[Field]):
    return ZZ if field is None else field


class HomogeneousForm:
    """A homogeneous polynomial of degree d in m variables.

    field=None means integer coefficients; such a form is reduced to a
    given prime field (or extension) with `over`.
    """

    __slots__ = ("m", "d", "terms", "field")

    def __init__(self, m: int, d: int, terms: Mapping[Exps, int], field: Optional[Field] = None):
        self.m = int(m)
        self.d = int(d)
        self.field = field
        clean: dict[Exps, int] = {}
        for e, c in terms.items():
            e = tuple(int(x) for x in e)
            if len(e) != self.m or min(e, default=0) < 0 or sum(e) != self.d:
                raise ValueError(f"exponent vector {e} does not match m={m}, d={d}")
            if field is not None:
                if not 0 <= c < field.q:
                    raise ValueError(f"coefficient {c} is not an element of {field!r}")
            if c != 0:
                clean[e] = int(c)
        self.terms = clean

    # construction helpers
    @classmethod
    def zero(cls, m: int, d: int, field: Optional[Field] = None) -> "HomogeneousForm":
        return cls(m, d, {}, field)

    @classmethod
    def linear(cls, coeffs: Sequence[int], field: Optional[Field] = None) -> "HomogeneousForm":
        m = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            if c:
                e = [0] * m
                e[i] = 1
                terms[tuple(e)] = c
        return cls(m, 1, terms, field)

    @classmethod
    def fermat(cls, m: int, d: int = 3) -> "HomogeneousForm":
        return DiagonalForm((1,) * m, d).as_form()

    def __repr__(self) -> str:
        return f"HomogeneousForm(m={self.m}, d={self.d}, terms={len(self.terms)}, field={self.field!r})"

    def __eq__(self, other) -> bool:
        return (isinstance(other, HomogeneousForm) and self.m == other.m and self.d == other.d
                and self.field == other.field and self.terms == other.terms)

    def __hash__(self):
        return hash((self.m, self.d, frozenset(self.terms.items())))

    @property
    def ring(self):
        return _ring(self.field)

    def is_zero(self) -> bool:
        return not self.terms

    def is_diagonal(self) -> bool:
        return all(max(e) == self.d for e in self.terms) and len(self.terms) == self.m

    def diagonal_coeffs(self) -> Optional[tuple[int, ...]]:
        if not self.is_diagonal():
            return None
        out = [0] * self.m
        for e, c in self.terms.items():
            out[e.index(self.d)] = c
        return tuple(out)

    # change of coefficient ring
    def over(self, field: Field) -> "HomogeneousForm":
        """Reduce an integer form mod p, or embed a form over a subfield."""
        if self.field is None:
            terms = {e: c % field.p for e, c in self.terms.items()}
        elif self.field == field:
            return self
        else:
            if self.field.p != field.p:
                raise ValueError("characteristic mismatch")
            terms = {e: field.embed(self.field, c) for e, c in self.terms.items()}
        return HomogeneousForm(self.m, self.d, terms, field)

    # evaluation
    def eval(self, x: Sequence[int]) -> int:
        R = self.ring
        if len(x) != self.m:
            raise ValueError("point has wrong length")
        acc = 0
        for e, c in self.terms.items():
            t = c
            for xi, ei in zip(x, e):
                if ei:
                    t = R.mul(t, R.pow(xi, ei))
                    if t == 0:
                        break
            acc = R.add(acc, t)
        return acc

    __call__ = eval

    def partial(self, i: int) -> "HomogeneousForm":
        R = self.ring
        terms: dict[Exps, int] = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            k = e[i] if self.field is None else e[i] % self.field.p
            if k == 0:
                continue
            ne = list(e)
            ne[i] -= 1
            ne = tuple(ne)
            v = R.mul(c, k)
            terms[ne] = R.add(terms.get(ne, 0), v)
        return HomogeneousForm(self.m, self.d - 1, terms, self.field)

    def gradient(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.partial(i).eval(x) for i in range(self.m))

    # algebra
    def __add__(self, other: "HomogeneousForm") -> "HomogeneousForm":
        self._check_compatible(other, same_degree=True)
        R = self.ring
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = R.add(terms.get(e, 0), c)
        return HomogeneousForm(self.m, self.d, terms, self.field)

    def __neg__(self) -> "HomogeneousForm":
        R = self.ring
        return HomogeneousForm(self.m, self.d, {e: R.neg(c) for e, c in self.terms.items()}, self.field)

    def __sub__(self, other: "HomogeneousForm") -> "HomogeneousForm":
        return self + (-other)

    def scale(self, s: int) -> "HomogeneousForm":
        R = self.ring
        return HomogeneousForm(self.m, self.d, {e: R.mul(s, c) for e, c in self.terms.items()}, self.field)

    def __mul__(self, other: "HomogeneousForm") -> "HomogeneousForm":
        self._check_compatible(other, same_degree=False)
        R = self.ring
        terms: dict[Exps, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = R.add(terms.get(e, 0), R.mul(c1, c2))
        return HomogeneousForm(self.m, self.d + other.d, terms, self.field)

    def _check_compatible(self, other, same_degree):
        if self.m != other.m or self.field != other.field or (same_degree and self.d != other.d):
            raise ValueError("incompatible forms")

    def compose(self, M: Sequence[Sequence[int]]) -> "HomogeneousForm":
        """(F o M)(y) = F(M y) for an m x k matrix M; the result has k variables."""
        R = self.ring
        k = len(M[0]) if M else 0
        if len(M) != self.m:
            raise ValueError("matrix row count must equal the number of variables")
        # x_i as a sparse linear form in y, and a cache of its powers
        rows = []
        for i in range(self.m):
            lin = {}
            for jj in range(k):
                if M[i][jj] != 0:
                    e = [0] * k
                    e[jj] = 1
                    lin[tuple(e)] = M[i][jj]
            rows.append(lin)
        power_cache: dict[tuple[int, int], dict] = {}

        def pmul(a, b):
            out: dict = {}
            for e1, c1 in a.items():
                for e2, c2 in b.items():
                    e = tuple(x + y for x, y in zip(e1, e2))
                    out[e] = R.add(out.get(e, 0), R.mul(c1, c2))
            return {e: c for e, c in out.items() if c != 0}

        def power(i, e):
            key = (i, e)
            if key not in power_cache:
                if e == 0:
                    power_cache[key] = {(0,) * k: 1}
                elif e == 1:
                    power_cache[key] = rows[i]
                else:
                    power_cache[key] = pmul(power(i, e - 1), rows[i])
            return power_cache[key]

        terms: dict[Exps, int] = {}
        for e, c in self.terms.items():
            prod = {(0,) * k: c}
            for i, ei in enumerate(e):
                if ei:
                    prod = pmul(prod, power(i, ei))
                    if not prod:
                        break
            for ee, cc in prod.items():
                terms[ee] = R.add(terms.get(ee, 0), cc)
        return HomogeneousForm(k, self.d, terms, self.field)

    def to_string(self) -> str:
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            mono = "*".join(f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(e) if a)
            parts.append(f"{c}*{mono}" if mono else str(c))
        body = "+".join(parts) if parts else "0"
        return f"poly:d={self.d};m={self.m};{body.replace('+-', '-')}"

    def arrays(self, field: Optional[Field] = None):
        """(exponent matrix, log-domain coefficients) for the compiled kernels."""
        field = field or self.field
        f = self if self.field == field else self.over(field)
        items = sorted(f.terms.items())
        exps = np.array([e for e, _ in items], dtype=np.int64).reshape(len(items), self.m)
        logs = field.tables.log
        clog = np.array([logs[c] for _, c in items], dtype=np.int64)
        return exps, clog


@dataclass(frozen=True)
class DiagonalForm:
    """F_1 x_1^d + ... + F_m x_m^d with all F_i nonzero."""
    coeffs: tuple[int, ...]
    d: int = 3
    field: Optional[Field] = None

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if any(c == 0 for c in self.coeffs):
            raise ValueError("diagonal coefficients must be nonzero")
        if len(self.coeffs) < 1 or self.d < 1:
            raise ValueError("bad diagonal form")

    @property
    def m(self) -> int:
        return len(self.coeffs)

    def over(self, field: Field) -> "DiagonalForm":
        if self.field is None:
            red = tuple(c % field.p for c in self.coeffs)
            if any(c == 0 for c in red):
                raise ValueError(f"a diagonal coefficient vanishes mod {field.p}")
            return DiagonalForm(red, self.d, field)
        if self.field == field:
            return self
        return DiagonalForm(tuple(field.embed(self.field, c) for c in self.coeffs), self.d, field)

    def as_form(self) -> HomogeneousForm:
        terms = {}
        for i, c in enumerate(self.coeffs):
            e = [0] * self.m
            e[i] = self.d
            terms[tuple(e)] = c
        return HomogeneousForm(self.m, self.d, terms, self.field)

    def eval(self, x: Sequence[int]) -> int:
        return self.as_form().eval(x)

    def to_string(self) -> str:
        return f"diag:d={self.d};" + ",".join(str(c) for c in self.coeffs)


def as_form(F) -> HomogeneousForm:
    return F.as_form() if isinstance(F, DiagonalForm) else F


@dataclass(frozen=True)
class LinearChange:
    """An invertible m x m matrix acting on forms by F -> F o M."""
    matrix: tuple[tuple[int, ...], ...]
    field: Field

    def __post_init__(self):
        M = tuple(tuple(int(v) for v in row) for row in self.matrix)
        object.__setattr__(self, "matrix", M)
        if any(len(row) != len(M) for row in M):
            raise ValueError("matrix must be square")
        if matrix_rank(M, self.field) != len(M):
            raise ValueError("linear change is not invertible")

    def __matmul__(self, other: "LinearChange") -> "LinearChange":
        return LinearChange(matmul(self.matrix, other.matrix, self.field), self.field)

    def apply(self, x: Sequence[int]) -> tuple[int, ...]:
        F = self.field
        return tuple(F.sum(F.mul(a, b) for a, b in zip(row, x)) for row in self.matrix)


def matmul(A, B, field: Field):
    F = field
    return tuple(tuple(F.sum(F.mul(A[i][t], B[t][j]) for t in range(len(B)))
                       for j in range(len(B[0]))) for i in range(len(A)))


def matrix_rank(M, field: Field) -> int:
    F = field
    rows = [list(r) for r in M]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = F.inv(rows[rank][col])
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = F.mul(rows[i][col], inv)
                rows[i] = [F.sub(a, F.mul(f, b)) for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def eval_form(F, x: Sequence[int]) -> int:
    return as_form(F).eval(x)


def gradient(F, x: Sequence[int]) -> tuple[int, ...]:
    return as_form(F).gradient(x)


def apply_linear_change(F, M) -> HomogeneousForm:
    mat = M.matrix if isinstance(M, LinearChange) else M
    return as_form(F).compose(mat)


@dataclass(frozen=True)
class Restriction:
    """F restricted to c.x = 0, in the variables x_i (i != pivot), original order."""
    form: HomogeneousForm
    pivot: int
    c: tuple[int, ...]

    def is_zero(self) -> bool:
        return self.form.is_zero()

    def lift(self, y: Sequence[int]) -> tuple[int, ...]:
        """The point of c.x = 0 whose free coordinates are y."""
        F = self.form.field
        j = self.pivot
        inv = F.inv(self.c[j])
        others = [i for i in range(len(self.c)) if i != j]
        s = F.sum(F.mul(self.c[i], yi) for i, yi in zip(others, y))
        x = [0] * len(self.c)
        for i, yi in zip(others, y):
            x[i] = yi
        x[j] = F.neg(F.mul(s, inv))
        return tuple(x)


def substitution_matrix(c: Sequence[int], field: Field) -> tuple[int, list[list[int]]]:
    """Pivot j (last nonzero c_j) and the m x (m-1) matrix with x = M y on c.x = 0."""
    F = field
    m = len(c)
    j = max((i for i in range(m) if c[i] != 0), default=None)
    if j is None:
        raise ValueError("c must be nonzero")
    inv = F.inv(c[j])
    others = [i for i in range(m) if i != j]
    M = [[0] * (m - 1) for _ in range(m)]
    for col, i in enumerate(others):
        M[i][col] = 1
        M[j][col] = F.neg(F.mul(c[i], inv))
    return j, M


def restrict_to_hyperplane(F, c: Sequence[int], field: Optional[Field] = None) -> Restriction:
    """Restriction of F to the hyperplane c.x = 0.

    The pivot is the last index j with c_j != 0; x_j is eliminated via
    x_j = -(sum_{i != j} c_i x_i) / c_j.  A zero result means the
    hyperplane lies inside V(F).
    """
    G = as_form(F)
    if field is None:
        field = G.field
    if field is None:
        raise ValueError("restriction needs a field")
    G = G.over(field)
    c = tuple(int(v) for v in c)
    j, M = substitution_matrix(c, field)
    return Restriction(G.compose(M), j, c)


# --- text grammar -----------------------------------------------------------

_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*((?:x\d+(?:\^\d+)?\s*\*?\s*)*)")


def parse_form(text: str):
    """Parse the command-line form grammar.

    diag:d=<d>;F1,F2,...,Fm
    poly:d=<d>;m=<m>;<term>(+|-)<term>...   term = [coef*]x<i>[^e]*x<j>[^e]...
    fermat:m=<m>[;d=<d>]
    Variables are numbered from 1.  Coefficients are integers.
    """
    text = text.strip()
    kind, _, rest = text.partition(":")
    fields = [s.strip() for s in rest.split(";")]
    if kind == "diag":
        d = _kv(fields[0], "d")
        coeffs = tuple(int(v) for v in fields[1].split(","))
        return DiagonalForm(coeffs, d)
    if kind == "fermat":
        opts = dict(f.split("=") for f in fields if f)
        m = int(opts["m"])
        return DiagonalForm((1,) * m, int(opts.get("d", 3)))
    if kind == "poly":
        d = _kv(fields[0], "d")
        m = _kv(fields[1], "m")
        body = ";".join(fields[2:]).replace(" ", "")
        terms: dict[Exps, int] = {}
        pos = 0
        while pos < len(body):
            mt = _TERM.match(body, pos)
            if not mt or mt.end() == pos:
                raise ValueError(f"cannot parse form near {body[pos:]!r}")
            sign, coef, mono = mt.groups()
            c = int(coef) if coef else 1
            if sign == "-":
                c = -c
            e = [0] * m
            for var, exp in re.findall(r"x(\d+)(?:\^(\d+))?", mono):
                i = int(var) - 1
                if not 0 <= i < m:
                    raise ValueError(f"variable x{var} out of range")
                e[i] += int(exp) if exp else 1
            e = tuple(e)
            terms[e] = terms.get(e, 0) + c
            pos = mt.end()
        return HomogeneousForm(m, d, {e: c for e, c in terms.items() if c}, None)
    raise ValueError(f"unknown form kind {kind!r}")


def _kv(s: str, key: str) -> int:
    k, _, v = s.partition("=")
    if k.strip() != key:
        raise ValueError(f"expected {key}=..., got {s!r}")
    return int(v)


def form_to_string(F) -> str:
    return F.to_string()


def monomials(m: int, d: int):
    """All exponent vectors of degree d in m variables (lexicographic)."""
    for combo in itertools.combinations_with_replacement(range(m), d):
        e = [0] * m
        for i in combo:
            e[i] += 1
        yield tuple(e)


def random_form(m: int, d: int, field: Field, rng, density: float = 1.0) -> HomogeneousForm:
    terms = {}
    for e in monomials(m, d):
        if density >= 1.0 or rng.random() < density:
            terms[e] = int(rng.integers(0, field.q))
    return HomogeneousForm(m, d, terms, field)


def divide(a: HomogeneousForm, b: HomogeneousForm) -> Optional[HomogeneousForm]:
    """Exact quotient a / b, or None if b does not divide a.

    Division by a single polynomial with respect to lex order; the
    remainder is zero exactly when b divides a.
    """
    if b.is_zero():
        raise ZeroDivisionError("division by the zero form")
    F = a.field
    if a.is_zero():
        return HomogeneousForm.zero(a.m, max(a.d - b.d, 0), F)
    if a.d < b.d:
        return None
    lead_e = max(b.terms)
    lead_inv = F.inv(b.terms[lead_e])
    rem = dict(a.terms)
    quot: dict[Exps, int] = {}
    while rem:
        e = max(rem)
        shift = tuple(x - y for x, y in zip(e, lead_e))
        if min(shift) < 0:
            return None
        coef = F.mul(rem[e], lead_inv)
        quot[shift] = coef
        for eb, cb in b.terms.items():
            ee = tuple(x + y for x, y in zip(eb, shift))
            v = F.sub(rem.get(ee, 0), F.mul(coef, cb))
            if v:
                rem[ee] = v
            else:
                rem.pop(ee, None)
    return HomogeneousForm(a.m, a.d - b.d, quot, F)
