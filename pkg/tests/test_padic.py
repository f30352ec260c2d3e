import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gsp4kit.errors import NotSquarefreeModP
from gsp4kit.padic import (
    INFINITY,
    PPoly,
    PScalar,
    TruncScalar,
    fp_factor,
    fp_is_irreducible,
    hensel_factor,
    is_irreducible_qp,
    ppoly_from_int_coeffs,
    val,
)


def test_val_reads_canonical_form():
    assert val(PScalar(12, 2)) == 2  # 12 = 3 * 2^2
    assert val(PScalar(1, 2)) == 0
    assert val(PScalar(0, 2)) == INFINITY


def test_canonical_form_zero_convention():
    z = PScalar(0, 5)
    assert z.num == 0 and z.exp == 0 and z.den == 1


def test_arithmetic_is_exact():
    p = 3
    a = PScalar(Fraction(7, 9), p)   # 7 * 3^-2
    b = PScalar(Fraction(5, 3), p)
    assert a.exp == -2 and a.num == 7
    assert (a + b).as_fraction() == Fraction(7, 9) + Fraction(5, 3)
    assert (a * b).as_fraction() == Fraction(35, 27)
    assert (a / b).as_fraction() == Fraction(7, 9) / Fraction(5, 3)
    assert (a - a).is_zero()


def test_inversion_total_on_nonzero():
    x = PScalar(Fraction(3, 10), 5)
    assert (x * x.inv()) == 1
    with pytest.raises(ZeroDivisionError):
        PScalar(0, 5).inv()


@settings(max_examples=300, deadline=None)
@given(
    st.integers(-(10**6), 10**6),
    st.integers(-(10**6), 10**6),
    st.sampled_from([2, 3, 5]),
)
def test_valuation_laws(a, b, p):
    x, y = PScalar(a, p), PScalar(b, p)
    prod = x * y
    if a and b:
        assert prod.val() == x.val() + y.val()
    s = x + y
    assert s.val() >= min(x.val(), y.val())
    if x.val() != y.val():
        assert s.val() == min(x.val(), y.val())


def test_valuation_laws_bulk_random():
    rng = random.Random(20240)
    for p in (2, 3, 5):
        for _ in range(10_000 // 3):
            a = rng.randint(-(10**4), 10**4)
            b = rng.randint(-(10**4), 10**4)
            x, y = PScalar(a, p), PScalar(b, p)
            assert (x + y).val() >= min(x.val(), y.val())
            if a and b:
                assert (x * y).val() == x.val() + y.val()


def test_reduction_is_ring_homomorphism():
    rng = random.Random(7)
    p, m = 3, 3
    for _ in range(10_000):
        a, b = rng.randint(0, 3**5), rng.randint(0, 3**5)
        x, y = PScalar(a, p), PScalar(b, p)
        assert (x + y).reduce(m) == x.reduce(m) + y.reduce(m)
        assert (x * y).reduce(m) == x.reduce(m) * y.reduce(m)


def test_trunc_scalar_ring_laws():
    x = TruncScalar(7, 2, 3)
    y = TruncScalar(5, 2, 3)
    assert (x + y).residue == 3
    assert (x * y).residue == 35 % 9
    assert (x - x).residue == 0
    assert (x.inv() * x).residue == 1


def test_scalar_text_roundtrip():
    cases = ["0", "7", "-3*2^4", "5/2^2", "9/7"]
    for text in cases:
        s = PScalar.parse(text, 2)
        assert PScalar.parse(s.format(), 2) == s


# ---------------------------------------------------------------------------
# polynomials, Hensel, irreducibility
# ---------------------------------------------------------------------------


def test_fp_factor_small():
    # x^2 - 1 = (x-1)(x+1) over F_3
    assert fp_factor([2, 0, 1], 3) == sorted([(2, 1), (1, 1)])
    assert fp_is_irreducible([1, 1, 0, 0, 1], 2)  # x^4 + x + 1
    assert not fp_is_irreducible([1, 0, 0, 0, 1], 2)  # x^4 + 1 = (x+1)^4


def test_hensel_factor_x2_minus_1_mod_9():
    f = ppoly_from_int_coeffs([-1, 0, 1], 3)
    factors = hensel_factor(f, 2)
    got = sorted(g.reduce_coeffs(2) for g in factors)
    # x - 1 and x + 1 = x - 8 mod 9
    assert got == sorted([(8, 1), (1, 1)])
    prod = factors[0] * factors[1]
    assert prod.reduce_coeffs(2) == f.reduce_coeffs(2)


def test_hensel_factor_linear_passthrough():
    f = ppoly_from_int_coeffs([-1, 1], 5)
    (g,) = hensel_factor(f, 3)
    assert g.reduce_coeffs(3) == f.reduce_coeffs(3)


def test_hensel_factor_irreducible_stays_single():
    f = ppoly_from_int_coeffs([1, 1, 0, 0, 1], 2)  # x^4+x+1 irreducible mod 2
    factors = hensel_factor(f, 3)
    assert len(factors) == 1
    assert factors[0].reduce_coeffs(3) == f.reduce_coeffs(3)


def test_hensel_factor_remultiplies_random():
    rng = random.Random(99)
    for p in (2, 3, 5):
        for _ in range(25):
            # random monic squarefree-mod-p quartic
            coeffs = [rng.randint(0, p**3) for _ in range(4)] + [1]
            f = ppoly_from_int_coeffs(coeffs, p)
            try:
                factors = hensel_factor(f, 4)
            except NotSquarefreeModP:
                continue
            prod = factors[0]
            for g in factors[1:]:
                prod = prod * g
            assert prod.reduce_coeffs(4) == f.reduce_coeffs(4)


def test_hensel_factor_rejects_non_squarefree():
    f = ppoly_from_int_coeffs([0, 0, 1], 3)  # x^2
    with pytest.raises(NotSquarefreeModP):
        hensel_factor(f, 2)


def test_hensel_factor_perfect_power():
    # (x^2 - 1)^2 has non-squarefree reduction but is an exact square
    base = ppoly_from_int_coeffs([-1, 0, 1], 5)
    f = base * base
    factors = hensel_factor(f, 3)
    assert len(factors) == 4
    prod = factors[0]
    for g in factors[1:]:
        prod = prod * g
    assert prod.reduce_coeffs(3) == f.reduce_coeffs(3)


def test_irreducibility_yes_mod_p():
    f = ppoly_from_int_coeffs([1, 1, 0, 0, 1], 2)
    verdict = is_irreducible_qp(f)
    assert verdict == "yes"


def test_irreducibility_no_rational_witness():
    f = ppoly_from_int_coeffs([-1, 0, 1], 3)  # x^2 - 1
    verdict = is_irreducible_qp(f)
    assert verdict == "no"
    got = sorted(tuple(c.as_fraction() for c in w.coeffs) for w in verdict.witness)
    assert got == sorted([((Fraction(-1), Fraction(1))), ((Fraction(1), Fraction(1)))])


def test_irreducibility_no_hensel_witness():
    # x^2 - 7 is irreducible over Q but splits over Q_3 (7 = 1 mod 3);
    # the witness is a Hensel lift, certified by re-multiplication.
    f = ppoly_from_int_coeffs([-7, 0, 1], 3)
    verdict = is_irreducible_qp(f, witness_precision=4)
    assert verdict == "no"
    assert len(verdict.witness) == 2
    prod = verdict.witness[0] * verdict.witness[1]
    assert prod.reduce_coeffs(4) == f.reduce_coeffs(4)


def test_irreducibility_unknown_default_criteria():
    for p in (2, 3):
        f = ppoly_from_int_coeffs([p**4, p**2, 0, 0, 1], p)  # x^4 + p^2 x + p^4
        assert is_irreducible_qp(f) == "unknown"


def test_irreducibility_eisenstein():
    f = ppoly_from_int_coeffs([2, 2, 1], 2)  # Eisenstein at 2
    assert is_irreducible_qp(f) == "yes"


def test_irreducibility_newton_polygon():
    f = ppoly_from_int_coeffs([3, 0, 0, 0, 1], 3)  # x^4 + 3, slope 1/4
    assert is_irreducible_qp(f) == "yes"


def test_irreducibility_monic_rescale():
    # x^2 - 1/p^2 becomes x^2 - 1 after x -> x/p; reducible
    p = 5
    f = PPoly([PScalar(Fraction(-1, p * p), p), PScalar(0, p), PScalar(1, p)], p)
    assert is_irreducible_qp(f) == "no"


def test_poly_shift_and_eval():
    f = ppoly_from_int_coeffs([1, 2, 1], 7)  # (x+1)^2
    g = f.shift(PScalar(-1, 7))  # x^2
    assert g.reduce_coeffs(2) == (0, 0, 1)
    assert f(PScalar(2, 7)) == 9
