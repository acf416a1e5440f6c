import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptlab.counting import find_rational_singular_points
from ptlab.discriminant import (diag_disc_total_degree, disc_bidegree, disc_vanish_geometric, eval_diag_disc,
                                exponent_e_m, pairing_criterion, perfect_matchings)
from ptlab.field import field_make
from ptlab.forms import DiagonalForm, parse_form

F5, F7 = field_make(5), field_make(7)


def test_exponent_table():
    assert [exponent_e_m(m) for m in range(3, 7)] == [3, 9, 27, 69]
    assert exponent_e_m(7) == ((-1) ** 6 - 2 ** 6) // 3 + 6 * 2 ** 5 == 171


@pytest.mark.parametrize("m", range(2, 16))
def test_exponent_integral(m):
    assert ((-1) ** (m - 1) - 2 ** (m - 1)) % 3 == 0
    assert exponent_e_m(m) >= 0


def test_bidegrees():
    assert disc_bidegree(3, 6) == (80, 48)
    assert disc_bidegree(2, 3) == (2, 2)
    assert disc_bidegree(3, 4) == (12, 12)
    assert diag_disc_total_degree(4) == 24 == (4 + 2) * 2 ** 2


@pytest.mark.parametrize("m", [3, 4, 5, 6])
@pytest.mark.parametrize("p", [7, 11, 13])
def test_coordinate_hyperplane_value(m, p):
    # P extends m-1 unit cubes by an arbitrary last coefficient; c = e_m gives 3^{e_m} up to sign
    fld = field_make(p)
    for last in (1, 2, p - 1):
        r = eval_diag_disc(DiagonalForm((1,) * (m - 1) + (last,)), (0,) * (m - 1) + (1,), fld)
        want = pow(3, exponent_e_m(m), p)
        assert r.value in (want, (-want) % p)


def test_zero_c_and_undefined():
    r = eval_diag_disc(DiagonalForm((1, 1, 1, 1)), (0, 0, 0, 0), F7)
    assert r.value == 0 and r.vanishing_count == 8
    assert not eval_diag_disc(DiagonalForm((1, 7, 1, 1)), (1, 1, 1, 1), F7).defined


def test_vanishing_factor_counts():
    r = eval_diag_disc(DiagonalForm((1, 1, 1, 1)), (1, 1, 1, 1), F7)
    assert r.vanishing_count >= 2
    assert r.factors[(1, -1, 1, -1)] == 0 and r.factors[(1, -1, -1, 1)] == 0
    # a single equal pair t_1 = t_2 leaves s_3 +- s_4 in every factor, so nothing vanishes;
    # completing it to a matching (t_3 = t_4) makes two factors vanish
    F13 = field_make(13)
    r = eval_diag_disc(DiagonalForm((1, 1, 1, 1)), (2, 2, 3, 5), F13)
    assert r.vanishing_count == 0
    r = eval_diag_disc(DiagonalForm((1, 1, 1, 1)), (2, 2, 3, 3), F13)
    assert r.vanishing_count == 2


@given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([7, 11, 13, 31]))
@settings(max_examples=40)
def test_bihomogeneity(seed, p):
    fld = field_make(p)
    rng = np.random.default_rng(seed)
    m = int(rng.choice([3, 4, 5]))
    P = tuple(int(v) for v in rng.integers(1, p, m))
    c = tuple(int(v) for v in rng.integers(0, p, m))
    lam, mu = (int(v) for v in rng.integers(1, p, 2))
    a, b = disc_bidegree(3, m)
    base = eval_diag_disc(DiagonalForm(P), c, fld).value
    scaled = eval_diag_disc(DiagonalForm(tuple(lam * v % p for v in P)), tuple(mu * v % p for v in c), fld).value
    # any sign convention is fine: compare up to +-1
    want = fld.mul(base, fld.mul(fld.pow(lam, a), fld.pow(mu, b)))
    assert scaled in (want, fld.neg(want))


def test_pairing_examples():
    one = DiagonalForm((1, 1, 1, 1))
    assert pairing_criterion(one, (1, 1, 1, 1), F7) == ((0, 1), (2, 3))
    assert pairing_criterion(one, (1, 2, 0, 0), F7) == ((0, 1), (2, 3))
    assert pairing_criterion(one, (1, 2, 0, 0), F5) is None
    assert pairing_criterion(one, (1, 0, 0, 0), F7) is None
    six = DiagonalForm((1,) * 6)
    assert pairing_criterion(six, (1,) * 6, field_make(101)) == ((0, 1), (2, 3), (4, 5))
    with pytest.raises(ValueError):
        pairing_criterion(DiagonalForm((1, 1, 1)), (1, 1, 1), F7)


def test_pairing_m6_against_matching_scan():
    p = 101
    fld = field_make(p)
    c = (1, 2, 3, 4, 5, 6)
    cubes = [pow(v, 3, p) for v in c]
    want = any(all(cubes[i] == cubes[j] for i, j in mt) for mt in perfect_matchings(6))
    assert (pairing_criterion(DiagonalForm((1,) * 6), c, fld) is not None) == want


def test_perfect_matchings():
    assert len(perfect_matchings(4)) == 3 and len(perfect_matchings(6)) == 15
    assert perfect_matchings(4)[0] == ((0, 1), (2, 3))
    for mt in perfect_matchings(6):
        assert sorted(itertools.chain(*mt)) == list(range(6))


def test_geometric_examples():
    fermat = parse_form("fermat:m=4")
    assert not disc_vanish_geometric(fermat, (1, 2, 3, 4), F7)
    assert disc_vanish_geometric(fermat, (1, 1, 0, 0), F7, s_max=2)
    # over F_7 the section already has rational singular points
    assert find_rational_singular_points(fermat, (1, 1, 0, 0), F7)


@given(seed=st.integers(0, 10 ** 6), p=st.sampled_from([5, 7, 11, 13]))
@settings(max_examples=60)
def test_vanishing_matches_geometry(seed, p):
    fld = field_make(p)
    rng = np.random.default_rng(seed)
    P = tuple(int(v) for v in rng.integers(1, p, 4))
    c = tuple(int(v) for v in rng.integers(0, p, 4))
    if not any(c):
        return
    zero = eval_diag_disc(DiagonalForm(P), c, fld).value == 0
    assert zero == disc_vanish_geometric(DiagonalForm(P), c, fld)
    if p <= 7:
        # exhaustive search over F_q and F_{q^2} without the diagonal shortcut
        assert zero == disc_vanish_geometric(DiagonalForm(P), c, fld, s_max=2, method="search")


@given(seed=st.integers(0, 10 ** 6))
@settings(max_examples=30)
def test_pairing_implies_vanishing(seed):
    p = 31
    fld = field_make(p)
    rng = np.random.default_rng(seed)
    P = tuple(int(v) for v in rng.integers(1, p, 4))
    c = tuple(int(v) for v in rng.integers(0, p, 4))
    if pairing_criterion(DiagonalForm(P), c, fld) is not None:
        assert eval_diag_disc(DiagonalForm(P), c, fld).value == 0


def test_factor_table_json():
    r = eval_diag_disc(DiagonalForm((1, 1, 1, 1)), (1, 1, 1, 1), F7)
    import json
    rows = json.loads(r.factor_table_json())
    assert len(rows) == 8 and rows[0]["epsilon"] == "++++"
