import random

import pytest

from gsp4kit.chains import (
    HYPERSPECIAL,
    IWAHORI,
    KLINGEN,
    PARAMODULAR,
    SIEGEL,
    STANDARD_TYPES,
    Lattice,
    chain_from_text,
    chain_to_text,
    classify_chain,
    dual,
    in_K,
    in_K_m,
    in_N,
    rotation_element,
    standard_chain,
    validate_chain,
)
from gsp4kit.errors import NotSelfDual, NotTotallyOrdered
from gsp4kit.linalg import Mat
from gsp4kit.padic import PScalar
from gsp4kit.symplectic import (
    SympSpace,
    generator_pool,
    gsp_check,
    random_element,
    torus_element,
)


def space(p=2):
    return SympSpace(p)


def rand_g(sp, rng, length=5, pool_cache={}):
    key = sp.p
    if key not in pool_cache:
        pool_cache[key] = generator_pool(sp)
    return random_element(sp, rng, length=length, pool=pool_cache[key])


# ---------------------------------------------------------------------------
# duals
# ---------------------------------------------------------------------------


def test_dual_standard_lattice_selfdual():
    sp = space(3)
    z4 = Lattice.standard(3)
    assert dual(z4, sp) == z4


def test_dual_paramodular_example():
    # dual(p^-1 Z + Z + Z + Z) = Z + Z + Z + pZ
    for p in (2, 3, 5):
        sp = space(p)
        lpara = Lattice.diagonal([-1, 0, 0, 0], p)
        expect = Lattice.diagonal([0, 0, 0, 1], p)
        assert dual(lpara, sp) == expect


def test_dual_scaling_and_involution():
    rng = random.Random(1)
    sp = space(2)
    for _ in range(200):
        g = rand_g(sp, rng)
        lat = Lattice.standard(2).transform(g)
        assert dual(dual(lat, sp), sp) == lat
        assert dual(lat.scale(1), sp) == dual(lat, sp).scale(-1)


def test_dual_reverses_inclusion():
    rng = random.Random(2)
    sp = space(3)
    for _ in range(100):
        g = rand_g(sp, rng)
        big = Lattice.standard(3).transform(g)
        small = big.scale(1)  # p * big
        assert big.contains(small)
        assert dual(small, sp).contains(dual(big, sp))


# ---------------------------------------------------------------------------
# chain validation
# ---------------------------------------------------------------------------


def test_standard_chain_shapes():
    sp = space(2)
    expected_classes = {
        HYPERSPECIAL: 1,
        PARAMODULAR: 2,
        SIEGEL: 2,
        KLINGEN: 3,
        IWAHORI: 4,
    }
    expected_sd = {HYPERSPECIAL: 1, PARAMODULAR: 0, SIEGEL: 2, KLINGEN: 1, IWAHORI: 2}
    for tag in STANDARD_TYPES:
        chain = standard_chain(tag, sp)
        assert len(chain.window) == expected_classes[tag]
        assert chain.type_tag == tag
        reps = [w.class_rep() for w in chain.window]
        sd = sum(1 for r in reps if r.dual(sp).class_rep() == r)
        assert sd == expected_sd[tag]


def test_validate_rejects_not_self_dual():
    p = 2
    sp = space(p)
    z4 = Lattice.standard(p)
    lpara = Lattice.diagonal([-1, 0, 0, 0], p)
    with pytest.raises(NotSelfDual):
        validate_chain([z4, lpara], sp)


def test_validate_rejects_incomparable():
    p = 2
    sp = space(p)
    a = Lattice.diagonal([1, 0, 0, 0], p)
    b = Lattice.diagonal([0, 1, 0, 0], p)
    with pytest.raises(NotTotallyOrdered):
        validate_chain([a, b], sp)


def test_validate_closes_under_scaling():
    p = 3
    sp = space(p)
    z4 = Lattice.standard(p)
    chain1 = validate_chain([z4], sp)
    chain2 = validate_chain([z4, z4.scale(2), z4.scale(-1)], sp)
    assert chain1 == chain2


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


def test_classify_standard_chains_identity_type():
    for p in (2, 3):
        sp = space(p)
        for tag in STANDARD_TYPES:
            chain = standard_chain(tag, sp)
            got, g = classify_chain(chain)
            assert got == tag
            assert chain.transform(g) == chain


def test_classify_roundtrip_random():
    rng = random.Random(42)
    for p in (2, 3):
        sp = space(p)
        for tag in STANDARD_TYPES:
            std = standard_chain(tag, sp)
            for _ in range(15):
                g0 = rand_g(sp, rng, length=5)
                moved = std.transform(g0)
                got, g = classify_chain(moved)
                assert got == tag
                assert moved.transform(g) == std


def test_classify_type_invariant_under_action():
    rng = random.Random(43)
    sp = space(2)
    for tag in STANDARD_TYPES:
        std = standard_chain(tag, sp)
        for _ in range(10):
            g0 = rand_g(sp, rng, length=6)
            assert std.transform(g0).type_tag == tag


# ---------------------------------------------------------------------------
# membership predicates
# ---------------------------------------------------------------------------


def test_identity_in_K_m_all_types():
    for p in (2, 3):
        sp = space(p)
        one = gsp_check(Mat.identity(4, p), sp)
        for tag in STANDARD_TYPES:
            chain = standard_chain(tag, sp)
            for m in (1, 2, 3):
                assert in_K_m(one, chain, m)


def test_unit_scalar_congruence_membership():
    for p in (2, 3):
        sp = space(p)
        chain = standard_chain(HYPERSPECIAL, sp)
        for m in (1, 2):
            u = 1 + p**m
            g = torus_element(sp, u, u, u * u)  # scalar u
            assert in_K_m(g, chain, m)
            if p**m > 2:
                assert not in_K_m(g, chain, m + 1)


def test_p_scalar_in_N_not_K():
    p = 2
    sp = space(p)
    chain = standard_chain(HYPERSPECIAL, sp)
    g = torus_element(sp, p, p, p * p)  # p * identity
    assert in_N(g, chain)
    assert not in_K(g, chain)


def test_rotation_elements_normalize():
    for p in (2, 3):
        sp = space(p)
        for tag in (HYPERSPECIAL, PARAMODULAR, SIEGEL, IWAHORI):
            chain = standard_chain(tag, sp)
            eta = rotation_element(tag, sp)
            assert in_N(eta, chain)
            if tag in (PARAMODULAR, SIEGEL, IWAHORI):
                assert not in_K(eta, chain)


def test_K_m_closure_and_normalization():
    # closure of K_m under product/inverse, and N normalizes K_m
    rng = random.Random(44)
    p, m = 2, 1
    sp = space(p)
    for tag in (HYPERSPECIAL, PARAMODULAR, SIEGEL):
        chain = standard_chain(tag, sp)
        members = []
        # harvest K_m elements: products of transvection-type perturbations
        from gsp4kit.symplectic import transvection

        candidates = []
        for i in range(4):
            v = sp.basis_vector(i)
            for k in (1, 2, 3):
                candidates.append(transvection(sp, v, PScalar.unit_power(p, k)))
        candidates = [c for c in candidates if in_K_m(c, chain, m)]
        assert candidates, tag
        for _ in range(60):
            a, b = rng.choice(candidates), rng.choice(candidates)
            assert in_K_m(a * b, chain, m)
            assert in_K_m(a.inv(), chain, m)
            members.append(a * b)
        eta = rotation_element(tag, sp)
        for k in members[:20]:
            assert in_K_m(eta * k * eta.inv(), chain, m)


def test_maximality_intersections():
    # N_Klingen = N_hyperspecial  ^ N_paramodular, N_Iwahori = N_Siegel ^ N_para
    rng = random.Random(45)
    p = 2
    sp = space(p)
    hs = standard_chain(HYPERSPECIAL, sp)
    para = standard_chain(PARAMODULAR, sp)
    sie = standard_chain(SIEGEL, sp)
    kli = standard_chain(KLINGEN, sp)
    iwa = standard_chain(IWAHORI, sp)
    pool = generator_pool(sp) + [rotation_element(PARAMODULAR, sp), rotation_element(SIEGEL, sp)]
    for _ in range(400):
        g = random_element(sp, rng, length=4, pool=pool)
        assert in_N(g, kli) == (in_N(g, hs) and in_N(g, para))
        assert in_N(g, iwa) == (in_N(g, sie) and in_N(g, para))


def test_chain_text_roundtrip():
    for p in (2, 3):
        sp = space(p)
        for tag in STANDARD_TYPES:
            chain = standard_chain(tag, sp)
            text = chain_to_text(chain)
            parsed, sp2 = chain_from_text(text)
            assert parsed == chain
