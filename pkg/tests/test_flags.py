import random

import pytest

from gsp4kit.errors import NotRegular
from gsp4kit.flags import (
    GF,
    char_poly_field,
    embed_matrix,
    enumerate_flag,
    first_order_rigidity,
    fixed_flag_points,
    fixed_points_over_splitting_field,
    is_regular_semisimple,
    lagrangian_count_formula,
    random_regular,
    random_split_regular,
    random_symplectic,
    splitting_degree,
    _inverse_matrix,
    _mat_mul,
    _mat_vec,
    _rref_cols,
)


def diag(field, entries):
    return tuple(
        tuple(field.embed(entries[i]) if i == j else 0 for j in range(len(entries)))
        for i in range(len(entries))
    )


def test_field_tables():
    f9 = GF(3, 2)
    els = f9.elements()
    assert len(els) == 9
    for a in els:
        if a:
            assert f9.mul(a, f9.inv(a)) == 1
        assert f9.add(a, f9.neg(a)) == 0
    # Frobenius fixes exactly the prime field
    fixed = [a for a in els if f9.power(a, 3) == a]
    assert sorted(fixed) == [0, 1, 2]


def test_enumerate_flag_counts():
    for q, d, expected in ((2, 2, 15), (3, 2, 40), (2, 1, 3)):
        f = GF(q)
        assert len(enumerate_flag(f, d)) == expected
        assert lagrangian_count_formula(q, d) == expected


def test_enumerate_flag_counts_larger():
    assert len(enumerate_flag(GF(5), 2)) == 156
    assert len(enumerate_flag(GF(7), 2)) == 400


def test_fixed_count_spec_example():
    f7 = GF(7)
    g = diag(f7, (2, 3, 4, 6))
    assert fixed_flag_points(f7, g) == 4


def test_identity_fixes_everything_but_is_not_regular():
    f2 = GF(2)
    ident = diag(f2, (1, 1, 1, 1))
    with pytest.raises(NotRegular):
        fixed_flag_points(f2, ident)
    pts = enumerate_flag(f2, 2)
    assert fixed_flag_points(f2, ident, require_regular=False, points=pts) == 15


def test_random_split_regular_count_is_four():
    rng = random.Random(5)
    for q in (5, 7):
        f = GF(q)
        pts = enumerate_flag(f, 2)
        for _ in range(15):
            g = random_split_regular(f, rng)
            assert fixed_flag_points(f, g, points=pts) == 4


def test_no_split_regular_over_f3():
    # four distinct eigenvalues cannot fit inside the two units of F_3
    rng = random.Random(5)
    with pytest.raises(NotRegular):
        random_split_regular(GF(3), rng)


def test_splitting_field_count_q3():
    rng = random.Random(6)
    f3 = GF(3)
    cache = {}
    for _ in range(8):
        g = random_regular(f3, rng)
        assert fixed_points_over_splitting_field(f3, g, cache=cache) == 4


def test_nonsplit_element_fewer_rational_points():
    # eigenvalues in F_{q^2} \ F_q: fewer than 4 rational fixed flags,
    # exactly 4 over the splitting field
    rng = random.Random(7)
    f3 = GF(3)
    pts = enumerate_flag(f3, 2)
    cache = {}
    found = False
    for _ in range(60):
        g = random_regular(f3, rng)
        if splitting_degree(f3, g) != 2:
            continue
        rational = fixed_flag_points(f3, g, points=pts)
        full = fixed_points_over_splitting_field(f3, g, cache=cache)
        assert full == 4
        if rational < 4:
            found = True
            break
    assert found


def test_fixed_count_conjugation_invariant():
    rng = random.Random(8)
    f5 = GF(5)
    pts = enumerate_flag(f5, 2)
    for _ in range(10):
        g = random_split_regular(f5, rng)
        h = random_symplectic(f5, rng)
        conj = _mat_mul(f5, _inverse_matrix(f5, h), _mat_mul(f5, g, h))
        assert fixed_flag_points(f5, conj, points=pts) == fixed_flag_points(f5, g, points=pts)


def test_char_poly_and_regularity():
    f5 = GF(5)
    g = diag(f5, (1, 2, 4, 3))
    coeffs = char_poly_field(f5, g)
    # (x-1)(x-2)(x-4)(x-3) over F_5
    assert len(coeffs) == 5 and coeffs[-1] == 1
    assert is_regular_semisimple(f5, g)
    assert not is_regular_semisimple(f5, diag(f5, (1, 1, 2, 3)))


def test_rigidity_of_regular_fixed_points():
    rng = random.Random(9)
    f5 = GF(5)
    pts = enumerate_flag(f5, 2)
    g = random_split_regular(f5, rng)
    fixed = [
        pt
        for pt in pts
        if _rref_cols(f5, [_mat_vec(f5, g, c) for c in pt.cols], 4) == pt.cols
    ]
    assert len(fixed) == 4
    assert all(first_order_rigidity(f5, g, pt) for pt in fixed)
    # the identity fixes flags non-rigidly
    ident = diag(f5, (1, 1, 1, 1))
    assert not first_order_rigidity(f5, ident, fixed[0])


def test_parabolic_shadow_rational_fixed_implies_reducible():
    # a rational fixed flag forces a rational invariant Lagrangian, so the
    # char poly cannot be irreducible over F_q (one-directional shadow)
    rng = random.Random(10)
    f3 = GF(3)
    pts = enumerate_flag(f3, 2)
    from gsp4kit.padic import fp_factor

    for _ in range(40):
        g = random_symplectic(f3, rng, length=6)
        if not is_regular_semisimple(f3, g):
            continue
        rational = fixed_flag_points(f3, g, points=pts)
        if rational > 0:
            coeffs = char_poly_field(f3, g)
            assert len(fp_factor(list(coeffs), 3)) > 1


def test_embed_matrix_roundtrip():
    f3, f9 = GF(3), GF(3, 2)
    g = diag(f3, (1, 2, 2, 1))
    big = embed_matrix(f3, f9, g)
    assert all(big[i][i] in (1, 2) for i in range(4))
