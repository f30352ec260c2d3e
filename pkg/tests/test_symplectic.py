import random

import pytest

from gsp4kit.errors import NotSimilitude
from gsp4kit.linalg import Mat
from gsp4kit.padic import PScalar, ppoly_from_int_coeffs
from gsp4kit.symplectic import (
    GroupElement,
    SympSpace,
    char_poly,
    char_poly_leibniz,
    generator_pool,
    gsp_check,
    random_element,
    symplectic_realization,
    torus_element,
    transvection,
    weyl_elements,
)

SP2 = SympSpace(2)
SP3 = SympSpace(3)


def test_pairing_on_basis():
    e = [SP2.basis_vector(i) for i in range(4)]
    assert SP2.pairing(e[0], e[3]) == 1
    assert SP2.pairing(e[2], e[1]) == -1
    assert SP2.pairing(e[1], e[2]) == 1
    assert SP2.pairing(e[0], e[1]).is_zero()


def test_pairing_alternating():
    rng = random.Random(0)
    for _ in range(50):
        x = tuple(PScalar(rng.randint(-9, 9), 2) for _ in range(4))
        assert SP2.pairing(x, x).is_zero()


def test_gsp_check_identity():
    g = gsp_check(Mat.identity(4, 2), SP2)
    assert g.simil == 1


def test_gsp_check_torus_similitude():
    p = 3
    sp = SympSpace(p)
    u = 1 + p
    g = gsp_check(Mat.diag([PScalar(u, p)] * 2 + [PScalar(1, p)] * 2, p), sp)
    assert g.simil == u


def test_gsp_check_rejects_non_similitude():
    p = 3
    sp = SympSpace(p)
    bad = Mat.diag([PScalar(1 + p, p), PScalar(1, p), PScalar(1, p), PScalar(1, p)], p)
    with pytest.raises(NotSimilitude):
        gsp_check(bad, sp)


def test_char_poly_identity():
    g = gsp_check(Mat.identity(4, 2), SP2)
    # (x-1)^4 = x^4 - 4x^3 + 6x^2 - 4x + 1
    assert g.char_poly == ppoly_from_int_coeffs([1, -4, 6, -4, 1], 2)


def test_char_poly_diagonal():
    p = 7
    sp = SympSpace(p)
    g = gsp_check(Mat.diag([PScalar(c, p) for c in (2, 3, 4, 6)], p), sp)
    assert g.simil == 12
    # (x-2)(x-3)(x-4)(x-6)
    poly = ppoly_from_int_coeffs([-2, 1], p)
    for c in (3, 4, 6):
        poly = poly * ppoly_from_int_coeffs([-c, 1], p)
    assert g.char_poly == poly


def test_char_poly_against_leibniz_oracle():
    rng = random.Random(5)
    for p in (2, 3):
        sp = SympSpace(p)
        pool = generator_pool(sp)
        for _ in range(20):
            g = random_element(sp, rng, length=5, pool=pool)
            assert g.char_poly == char_poly_leibniz(g.mat)


def test_simil_multiplicative_and_inverse():
    rng = random.Random(6)
    for p in (2, 3):
        sp = SympSpace(p)
        pool = generator_pool(sp)
        for _ in range(500):
            g = random_element(sp, rng, length=4, pool=pool)
            h = random_element(sp, rng, length=4, pool=pool)
            assert (g * h).simil == g.simil * h.simil
            assert g.inv().simil == g.simil.inv()
            assert (g * g.inv()).mat == Mat.identity(4, p)


def test_char_poly_conjugation_invariant():
    rng = random.Random(7)
    p = 3
    sp = SympSpace(p)
    pool = generator_pool(sp)
    for _ in range(500):
        g = random_element(sp, rng, length=4, pool=pool)
        h = random_element(sp, rng, length=4, pool=pool)
        assert (h.inv() * g * h).char_poly == g.char_poly


def test_spectrum_self_dual_mod_p():
    # roots of the reduction come in pairs (lam, c/lam)
    rng = random.Random(8)
    p = 5
    sp = SympSpace(p)
    pool = generator_pool(sp)
    checked = 0
    for _ in range(200):
        g = random_element(sp, rng, length=4, pool=pool)
        f = g.char_poly
        if not (f.is_p_integral() and g.simil.is_unit()):
            continue
        coeffs = f.reduce_coeffs(1)
        c = g.simil.residue(1)
        roots = [t for t in range(p) if sum(a * t**k for k, a in enumerate(coeffs)) % p == 0]
        for lam in roots:
            if lam == 0:
                continue
            dual = (c * pow(lam, -1, p)) % p
            assert dual in roots
        checked += 1
    assert checked > 50


def test_transvection_and_weyl_are_symplectic():
    p = 2
    sp = SympSpace(p)
    v = tuple(PScalar(c, p) for c in (1, 2, 0, 3))
    t = transvection(sp, v, PScalar(1, p))
    assert gsp_check(t.mat, sp).simil == 1
    for w in weyl_elements(sp):
        assert gsp_check(w.mat, sp).simil == 1
    tor = torus_element(sp, 2, 1, 2)
    assert gsp_check(tor.mat, sp).simil == 2


def test_symplectic_realization_cyclotomic():
    p = 2
    sp = SympSpace(p)
    f = ppoly_from_int_coeffs([1, 1, 1, 1, 1], p)  # x^4+x^3+x^2+x+1
    g = symplectic_realization(f, sp)
    assert g.char_poly == f
    assert g.simil == 1


def test_symplectic_realization_random_shapes():
    # realize char polys harvested from actual group elements
    rng = random.Random(9)
    for p in (2, 3):
        sp = SympSpace(p)
        pool = generator_pool(sp)
        done = 0
        for _ in range(60):
            g = random_element(sp, rng, length=5, pool=pool)
            f = g.char_poly
            if f.coeffs[0].is_zero():
                continue
            try:
                h = symplectic_realization(f, sp)
            except Exception:
                continue
            assert h.char_poly == f
            assert h.simil * h.simil == f.coeffs[0]
            done += 1
        assert done > 10


def test_element_text_roundtrip():
    p = 3
    sp = SympSpace(p)
    g = torus_element(sp, 3, 1, 3)
    text = g.format()
    h = GroupElement.parse(text, sp)
    assert h.mat == g.mat and h.simil == g.simil


def test_d3_pairing():
    sp = SympSpace(5, d=3)
    e = [sp.basis_vector(i) for i in range(6)]
    assert sp.pairing(e[0], e[5]) == 1
    assert sp.pairing(e[2], e[3]) == 1
    assert sp.pairing(e[3], e[2]) == -1
