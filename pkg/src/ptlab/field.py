"""Finite fields F_{p^r} (p >= 5 prime, r <= 4) with integer-encoded elements.

An element is stored as the integer sum(c_i * p**i) of its coefficient
vector in the power basis 1, u, ..., u^{r-1} where u is a root of the
field modulus.  Prime-subfield elements therefore encode as themselves,
so an integer coefficient reduced mod p is a valid element of every
extension of F_p.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field as dc_field
from typing import Iterator, Optional, Sequence

import numpy as np

MAX_DEGREE = 4


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


# --- polynomials over F_p as coefficient lists, low degree first -------------

def _ptrim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], m: list[int], p: int) -> list[int]:
    a = _ptrim([x % p for x in a])
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _ptrim(a)
    return a


def _pmulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pmod(out, m, p)


def _ppowmod(a: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = _pmod(list(a), m, p)
    while e:
        if e & 1:
            result = _pmulmod(result, base, m, p)
        base = _pmulmod(base, base, m, p)
        e >>= 1
    return result


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    a = _ptrim([x % p for x in a])
    b = _ptrim([x % p for x in b])
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Irreducibility of a monic polynomial (low-first coefficients) of degree <= 4.

    Degree <= 3: no root in F_p.  Degree 4: additionally no common factor
    with x^{p^2} - x, which rules out a product of two quadratics.
    """
    f = [int(c) % p for c in poly]
    r = len(f) - 1
    if r == 1:
        return True
    for k in range(1, r // 2 + 1):
        xp = _ppowmod([0, 1], p ** k, f, p)
        diff = list(xp) + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        if len(_pgcd(f, diff, p)) > 1:
            return False
    return True


def least_irreducible(p: int, r: int) -> tuple[int, ...]:
    """Least monic irreducible of degree r over F_p.

    Candidates x^r + a_{r-1} x^{r-1} + ... + a_0 are ordered by the integer
    sum(a_i p^i), i.e. lexicographically on (a_{r-1}, ..., a_0).
    """
    if r == 1:
        return (0, 1)
    for code in range(p ** r):
        coeffs = [(code // p ** i) % p for i in range(r)] + [1]
        if coeffs[0] == 0:
            continue
        if is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise RuntimeError("no irreducible polynomial found")  # unreachable


@dataclass(frozen=True)
class FieldTables:
    """Discrete-log tables for the compiled kernels.

    Log-domain convention: a nonzero element g^k is represented by k in
    [0, q-2]; zero is represented by the sentinel Z = q - 1.
    """
    q: int
    exp: np.ndarray      # exp[k] = encoding of g^k, length q-1
    log: np.ndarray      # log[enc], log[0] = Z, length q
    zech: np.ndarray     # zech[k] = log(1 + g^k), length q-1
    cube1: np.ndarray    # cube1[L] = #{u : u^3 + u + x = 0}, x = element with log L
    cubeg: np.ndarray    # same for u^3 + g u + x
    gen: int             # encoding of the primitive element g

    @property
    def Z(self) -> int:
        return self.q - 1


class Field:
    """F_q with q = p^r; elements are ints in [0, q)."""

    def __init__(self, p: int, r: int, modulus: tuple[int, ...]):
        self.p = p
        self.r = r
        self.q = p ** r
        self.modulus = modulus
        self._mod_list = list(modulus)
        self._nonresidue: Optional[int] = None

    def __repr__(self) -> str:
        return f"Field(p={self.p}, r={self.r})"

    def __reduce__(self):
        return (field_make, (self.p, self.r))

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and (self.p, self.r) == (other.p, other.r)

    def __hash__(self) -> int:
        return hash((self.p, self.r))

    # encoding helpers
    def coeffs(self, a: int) -> list[int]:
        p = self.p
        out = []
        for _ in range(self.r):
            a, c = divmod(a, p)
            out.append(c)
        return out

    def from_coeffs(self, cs: Sequence[int]) -> int:
        p = self.p
        cs = list(cs)
        if len(cs) > self.r:
            cs = _pmod(cs, self._mod_list, p)
        val = 0
        for c in reversed(cs):
            val = val * p + (c % p)
        return val

    def from_int(self, n: int) -> int:
        """Image of an integer in the prime subfield."""
        return n % self.p

    def elements(self) -> range:
        return range(self.q)

    def in_prime_field(self, a: int) -> bool:
        return a < self.p

    def format(self, a: int) -> str:
        if self.r == 1:
            return str(a)
        return "(" + ",".join(str(c) for c in self.coeffs(a)) + ")"

    # arithmetic
    def add(self, a: int, b: int) -> int:
        if self.r == 1:
            return (a + b) % self.p
        p = self.p
        out, scale = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            out += ((x + y) % p) * scale
            scale *= p
        return out

    def neg(self, a: int) -> int:
        if self.r == 1:
            return (-a) % self.p
        p = self.p
        out, scale = 0, 1
        while a:
            a, x = divmod(a, p)
            out += ((-x) % p) * scale
            scale *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.r == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        tabs = self.__dict__.get("tables")
        if tabs is not None:
            lg = tabs.log
            return int(tabs.exp[(int(lg[a]) + int(lg[b])) % (self.q - 1)])
        return self.mul_schoolbook(a, b)

    def mul_schoolbook(self, a: int, b: int) -> int:
        """Schoolbook product of coefficient vectors reduced by the modulus."""
        if self.r == 1:
            return a * b % self.p
        return self.from_coeffs(_pmulmod(self.coeffs(a), self.coeffs(b), self._mod_list, self.p))

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.r == 1:
            return pow(a, e, self.p)
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in " + repr(self))
        if self.r == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def frobenius(self, a: int) -> int:
        return self.pow(a, self.p)

    def sum(self, values) -> int:
        s = 0
        for v in values:
            s = self.add(s, v)
        return s

    def prod(self, values) -> int:
        s = 1
        for v in values:
            s = self.mul(s, v)
        return s

    # squares
    def is_square(self, t: int) -> bool:
        if t == 0:
            return True
        return self.pow(t, (self.q - 1) // 2) == 1

    def nonresidue(self) -> int:
        if self._nonresidue is None:
            for z in range(2, self.q):
                if not self.is_square(z):
                    self._nonresidue = z
                    break
        return self._nonresidue

    def _tonelli_shanks(self, t: int) -> int:
        q = self.q
        s, Q = 0, q - 1
        while Q % 2 == 0:
            Q //= 2
            s += 1
        z = self.nonresidue()
        M = s
        c = self.pow(z, Q)
        x = self.pow(t, (Q + 1) // 2)
        b = self.pow(t, Q)
        while b != 1:
            i, b2 = 0, b
            while b2 != 1:
                b2 = self.mul(b2, b2)
                i += 1
            g = c
            for _ in range(M - i - 1):
                g = self.mul(g, g)
            x = self.mul(x, g)
            c = self.mul(g, g)
            b = self.mul(b, c)
            M = i
        return x

    def _sqrt_quadratic(self, t: int) -> int:
        # the modulus is x^2 - nu with nu a non-residue of F_p, so
        # (x0 + x1 u)^2 = (x0^2 + nu x1^2) + 2 x0 x1 u
        p = self.p
        fp = field_make(p, 1)
        nu = (-self.modulus[0]) % p
        a0, a1 = self.coeffs(t)
        if a1 == 0:
            if fp.is_square(a0):
                return self.from_coeffs([fp._tonelli_shanks(a0) if a0 else 0, 0])
            return self.from_coeffs([0, fp._tonelli_shanks(a0 * pow(nu, p - 2, p) % p)])
        norm = (a0 * a0 - nu * a1 * a1) % p
        s = fp._tonelli_shanks(norm) if norm else 0
        half = pow(2, p - 2, p)
        delta = (a0 + s) * half % p
        if not fp.is_square(delta):
            delta = (a0 - s) * half % p
        x0 = fp._tonelli_shanks(delta)
        x1 = a1 * pow(2 * x0, p - 2, p) % p
        return self.from_coeffs([x0, x1])

    def sqrt(self, t: int) -> Optional[int]:
        """Square root of t, or None when t is not a square.

        Of the two roots +-s the one with the smaller encoding is returned,
        i.e. the least by (last coordinate, ..., first coordinate).
        """
        if t == 0:
            return 0
        if not self.is_square(t):
            return None
        if self.r == 2 and self.modulus[1] == 0:
            s = self._sqrt_quadratic(t)
        else:
            s = self._tonelli_shanks(t)
        return min(s, self.neg(s))

    def roots_of_unity_power(self, a: int, k: int) -> list[int]:
        """All x in F_q with x^k = a, sorted by encoding."""
        if a == 0:
            return [0]
        t = self.tables
        n = self.q - 1
        L = int(t.log[a])
        from math import gcd
        g = gcd(k, n)
        if L % g:
            return []
        # solve k x = L (mod n)
        k1, L1, n1 = k // g, L // g, n // g
        x0 = L1 * pow(k1, -1, n1) % n1 if n1 > 1 else 0
        return sorted(int(t.exp[(x0 + j * n1) % n]) for j in range(g))

    def cube_roots(self, a: int) -> list[int]:
        return self.roots_of_unity_power(a, 3)

    # lazily built log tables for the compiled kernels
    @functools.cached_property
    def tables(self) -> FieldTables:
        from . import kernels
        return kernels.build_tables(self)

    def primitive_element(self) -> int:
        order = self.q - 1
        ps = prime_factors(order)
        for g in range(2 if self.r == 1 else self.p, self.q):
            if all(self.pow_schoolbook(g, order // l) != 1 for l in ps):
                return g
        raise RuntimeError("no primitive element")  # unreachable

    def pow_schoolbook(self, a: int, e: int) -> int:
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul_schoolbook(result, base)
            base = self.mul_schoolbook(base, base)
            e >>= 1
        return result

    # subfields
    def embedding(self, sub: "Field") -> list[int]:
        """Images of the elements of a subfield F_{p^s} (s | r), indexed by encoding."""
        return _embedding(sub.p, sub.r, self.r)

    def embed(self, sub: "Field", a: int) -> int:
        if sub.r == self.r:
            return a
        if sub.r == 1:
            return a
        return self.embedding(sub)[a]

    def random(self, rng) -> int:
        return int(rng.integers(0, self.q))


@functools.lru_cache(maxsize=None)
def _embedding(p: int, s: int, r: int) -> list[int]:
    if r % s:
        raise ValueError(f"F_{p}^{s} is not a subfield of F_{p}^{r}")
    sub = field_make(p, s)
    big = field_make(p, r)
    if s == 1:
        return list(range(p))
    # image of the generator u of the subfield: a root of its modulus in the big field
    mod = sub.modulus
    root = None
    for x in range(big.q):
        acc = 0
        for c in reversed(mod):
            acc = big.add(big.mul(acc, x), c)
        if acc == 0:
            root = x
            break
    powers = [1]
    for _ in range(s - 1):
        powers.append(big.mul(powers[-1], root))
    out = []
    for a in range(sub.q):
        cs = sub.coeffs(a)
        val = 0
        for c, pw in zip(cs, powers):
            val = big.add(val, big.mul(c, pw))
        out.append(val)
    return out


@functools.lru_cache(maxsize=None)
def field_make(p: int, r: int = 1) -> Field:
    """The field F_{p^r}; the modulus is the least monic irreducible of degree r."""
    if not isinstance(p, int) or not isinstance(r, int):
        raise TypeError("p and r must be integers")
    if p in (2, 3):
        raise ValueError(f"characteristic {p} is not supported (need p >= 5)")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if not 1 <= r <= MAX_DEGREE:
        raise ValueError(f"extension degree {r} outside [1, {MAX_DEGREE}]")
    return Field(p, r, least_irreducible(p, r))


def projective_count(q: int, n: int) -> int:
    """#P^n(F_q); #P^{-1} = 0 by convention."""
    if n < 0:
        return 0
    return (q ** (n + 1) - 1) // (q - 1)


def decode_projective(q: int, n: int, idx: int) -> tuple[int, ...]:
    """The idx-th canonical point of P^n(F_q).

    Points are grouped by the position j of the leading coordinate 1
    (j = 0 first); within a group the trailing n - j coordinates run through
    F_q^{n-j} lexicographically by encoding, last coordinate fastest.
    """
    total = projective_count(q, n)
    if not 0 <= idx < total:
        raise IndexError(idx)
    for j in range(n + 1):
        block = q ** (n - j)
        if idx < block:
            tail = []
            for _ in range(n - j):
                idx, c = divmod(idx, q)
                tail.append(c)
            return (0,) * j + (1,) + tuple(reversed(tail))
        idx -= block
    raise AssertionError("unreachable")


def encode_projective(q: int, x: Sequence[int]) -> int:
    """Inverse of decode_projective for a canonical representative."""
    n = len(x) - 1
    j = next(i for i, v in enumerate(x) if v != 0)
    if x[j] != 1:
        raise ValueError("not a canonical representative")
    idx = sum(q ** (n - i) for i in range(j))
    off = 0
    for v in x[j + 1:]:
        off = off * q + v
    return idx + off


def enumerate_projective(desc: Field, n: int, start: int = 0, stop: Optional[int] = None) -> Iterator[tuple[int, ...]]:
    """Canonical representatives of P^n(F_q) with index in [start, stop)."""
    q = desc.q
    total = projective_count(q, n)
    stop = total if stop is None else min(stop, total)
    if start >= stop:
        return
    first = decode_projective(q, n, start)
    j = first.index(1)
    tail = list(first[j + 1:])
    for _ in range(start, stop):
        yield (0,) * j + (1,) + tuple(tail)
        # odometer step on the tail; roll over into the next block
        k = len(tail) - 1
        while k >= 0 and tail[k] == q - 1:
            tail[k] = 0
            k -= 1
        if k >= 0:
            tail[k] += 1
        else:
            j += 1
            tail = [0] * (n - j)


def canonicalize(field: Field, x: Sequence[int]) -> tuple[int, ...]:
    """Scale a nonzero vector so its first nonzero coordinate is 1."""
    lead = next((v for v in x if v != 0), None)
    if lead is None:
        raise ValueError("zero vector has no projective class")
    if lead == 1:
        return tuple(x)
    inv = field.inv(lead)
    return tuple(field.mul(inv, v) for v in x)


def enumerate_affine(desc: Field, n: int) -> Iterator[tuple[int, ...]]:
    return itertools.product(range(desc.q), repeat=n)
