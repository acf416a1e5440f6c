import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ptlab.field import enumerate_projective, field_make
from ptlab.forms import (DiagonalForm, HomogeneousForm, LinearChange, apply_linear_change, divide, eval_form,
                         gradient, parse_form, random_form, restrict_to_hyperplane)

F7, F11 = field_make(7), field_make(11)


def naive_eval(F: HomogeneousForm, x, field):
    # term-by-term with Python integers, independent of the form's own evaluator
    total = 0
    for e, c in F.terms.items():
        t = c
        for xi, ei in zip(x, e):
            t = field.mul(t, field.pow(xi, ei))
        total = field.add(total, t)
    return total


def test_eval_examples():
    fermat3 = parse_form("fermat:m=3").as_form().over(F7)
    assert eval_form(fermat3, (1, 1, 1)) == 3
    assert eval_form(fermat3, (0, 0, 0)) == 0
    assert eval_form(DiagonalForm((1, 2, 3, 4)).over(field_make(5)), (1, 1, 1, 1)) == 0


def test_gradient_examples():
    G = parse_form("poly:d=3;m=3;x1*x2*x3").over(F7)
    assert gradient(G, (1, 1, 0)) == (0, 0, 1)
    D = DiagonalForm((2, 3, 5, 6)).over(F11)
    x = (1, 4, 7, 9)
    assert gradient(D, x) == tuple(F11.mul(3 * f % 11, F11.mul(v, v)) for f, v in zip((2, 3, 5, 6), x))


@given(seed=st.integers(0, 10 ** 6))
def test_euler_identity_and_homogeneity(seed):
    rng = np.random.default_rng(seed)
    G = random_form(4, 3, F11, rng, 0.6)
    x = tuple(int(v) for v in rng.integers(0, 11, 4))
    lam = int(rng.integers(1, 11))
    assert F11.mul(3, G.eval(x)) == F11.sum(F11.mul(a, b) for a, b in zip(x, G.gradient(x)))
    assert G.eval(tuple(F11.mul(lam, v) for v in x)) == F11.mul(F11.pow(lam, 3), G.eval(x))
    assert G.eval(x) == naive_eval(G, x, F11)


@given(seed=st.integers(0, 10 ** 6))
def test_gradient_matches_symbolic_partials(seed):
    rng = np.random.default_rng(seed)
    G = random_form(3, 3, F11, rng, 0.7)
    x = tuple(int(v) for v in rng.integers(0, 11, 3))
    # independent oracle: differentiate each term by hand
    for i in range(3):
        want = 0
        for e, c in G.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                t = F11.mul(c, e[i] % 11)
                for xj, ej in zip(x, e2):
                    t = F11.mul(t, F11.pow(xj, ej))
                want = F11.add(want, t)
        assert G.gradient(x)[i] == want


def _random_invertible(rng, m, field):
    while True:
        M = [[int(v) for v in rng.integers(0, field.q, m)] for _ in range(m)]
        try:
            return LinearChange(M, field)
        except ValueError:
            continue


@given(seed=st.integers(0, 10 ** 6))
def test_linear_change_composition(seed):
    rng = np.random.default_rng(seed)
    G = random_form(3, 3, F7, rng, 0.7)
    M, N = _random_invertible(rng, 3, F7), _random_invertible(rng, 3, F7)
    x = tuple(int(v) for v in rng.integers(0, 7, 3))
    GM = apply_linear_change(G, M)
    assert GM.eval(x) == G.eval(M.apply(x))
    assert apply_linear_change(GM, N) == apply_linear_change(G, M @ N)


def test_identity_and_permutation_changes():
    D = DiagonalForm((1, 2, 3)).as_form().over(F7)
    I = LinearChange([[1, 0, 0], [0, 1, 0], [0, 0, 1]], F7)
    assert apply_linear_change(D, I) == D
    P = LinearChange([[0, 1, 0], [0, 0, 1], [1, 0, 0]], F7)
    assert apply_linear_change(D, P).diagonal_coeffs() == (3, 1, 2)
    with pytest.raises(ValueError):
        LinearChange([[1, 1], [1, 1]], F7)


def test_restriction_examples():
    Q = parse_form("poly:d=2;m=3;x1^2+x2^2+x3^2").over(F7)
    res = restrict_to_hyperplane(Q, (0, 0, 1), F7)
    assert res.pivot == 2
    assert res.form == parse_form("poly:d=2;m=2;x1^2+x2^2").over(F7)
    with pytest.raises(ValueError):
        restrict_to_hyperplane(Q, (0, 0, 0), F7)


@pytest.mark.parametrize("p,r", [(7, 1), (5, 2)])
def test_restriction_zero_sets(p, r):
    # V(F, c.x) in P^3 against the zeros of the restricted form on P^2
    fld = field_make(p, r)
    G = parse_form("fermat:m=4").as_form().over(fld)
    for c in [(1, 1, 1, 1), (1, 2, 0, 3), (0, 1, 0, 0)]:
        res = restrict_to_hyperplane(G, c, fld)
        direct = [x for x in enumerate_projective(fld, 3)
                  if G.eval(x) == 0 and fld.sum(fld.mul(a, b) for a, b in zip(c, x)) == 0]
        via = [y for y in enumerate_projective(fld, 2) if res.form.eval(y) == 0]
        assert len(direct) == len(via)
        for y in via:
            x = res.lift(y)
            assert G.eval(x) == 0


def test_hyperplane_inside_variety_gives_zero_form():
    G = parse_form("poly:d=3;m=3;x1*x2*x3").over(F7)
    assert restrict_to_hyperplane(G, (1, 0, 0), F7).is_zero()


def test_diagonal_reduction_must_keep_coefficients():
    with pytest.raises(ValueError):
        DiagonalForm((1, 7, 1)).over(F7)


@pytest.mark.parametrize("text", ["diag:d=3;1,2,3,4", "fermat:m=6", "poly:d=3;m=4;x1^3+2*x1*x2*x3-x4^3+5*x2^2*x4"])
def test_parse_roundtrip(text):
    G = parse_form(text)
    assert parse_form(G.to_string()) == G


def test_parse_errors():
    for bad in ["cubic:1,2", "poly:d=3;m=2;x3^3", "diag:e=3;1,1"]:
        with pytest.raises(ValueError):
            parse_form(bad)


@given(seed=st.integers(0, 10 ** 6))
def test_exact_division(seed):
    rng = np.random.default_rng(seed)
    a = random_form(3, 2, F7, rng, 0.8)
    b = random_form(3, 1, F7, rng, 1.0)
    if b.is_zero():
        return
    q = divide(a * b, b)
    assert q is not None and q == a
