import random
from fractions import Fraction

import pytest

from bnc_engine.algebra import algebra_scalars
from bnc_engine.cumulants import (
    AlgebraMomentContext,
    ColouringError,
    SideMismatch,
    audit_ffb_word,
    bifree_moment_check,
    cumulant_table,
    e_pi,
    ffb_moment_formula,
    kappa_pi,
    moment_cumulant_roundtrip,
    moment_table,
)
from bnc_engine.fixtures import sample_side_element, space_diag2, space_m2_scalar
from bnc_engine.freeprod import (
    BimoduleWithProjection,
    FreeMomentContext,
    module_operator,
    reduced_free_product,
)
from bnc_engine.partitions import (
    ChiMap,
    EpsilonMap,
    SetPartition,
    build_context,
    enumerate_bnc,
    lr_replacement,
)

SP = space_m2_scalar()
MF = AlgebraMomentContext(SP)
RNG = random.Random(7)


def rand_elem(rng=RNG):
    return SP.A.element([Fraction(rng.randint(-3, 3)) for _ in range(4)])


def test_full_partition_is_plain_expectation():
    for n in (1, 2, 3):
        chi = ChiMap(tuple(RNG.choice("lr") for _ in range(n)))
        ctx = build_context(chi)
        Z = [rand_elem() for _ in range(n)]
        got = e_pi(SetPartition.full(n), ctx, Z, MF)
        want = SP.expect_word(Z)
        assert (got - want).is_zero()


def test_tail_collapse_example():
    ctx = build_context(ChiMap.parse("ll"))
    Z = [rand_elem(), rand_elem()]
    got = e_pi(SetPartition.singletons(2), ctx, Z, MF)
    want = SP.expect(Z[0] * SP.embed_left(SP.expect(Z[1])))
    assert (got - want).is_zero()


def test_kappa_two_letter_example():
    ctx = build_context(ChiMap.parse("ll"))
    Z = [rand_elem(), rand_elem()]
    kap = kappa_pi(SetPartition.full(2), ctx, Z, MF)
    want = SP.expect(Z[0] * Z[1]) - SP.expect(Z[0] * SP.embed_left(SP.expect(Z[1])))
    assert (kap - want).is_zero()
    single = build_context(ChiMap.parse("r"))
    kap1 = kappa_pi(SetPartition.full(1), single, [Z[0]], MF)
    assert (kap1 - SP.expect(Z[0])).is_zero()


def test_side_membership_is_verified():
    spd = space_diag2()
    mfd = AlgebraMomentContext(spd)
    off = spd.A.basis_element(1)  # commutes with neither embedding
    ctx = build_context(ChiMap.parse("l"))
    with pytest.raises(SideMismatch):
        e_pi(SetPartition.full(1), ctx, [off], mfd)
    diag = spd.embed_left(spd.B.basis_element(0))
    e_pi(SetPartition.full(1), ctx, [diag], mfd)


def test_roundtrip_random_words():
    for n in (1, 2, 3, 4):
        for _ in range(3):
            chi = ChiMap(tuple(RNG.choice("lr") for _ in range(n)))
            ctx = build_context(chi)
            Z = [rand_elem() for _ in range(n)]
            assert moment_cumulant_roundtrip(ctx, Z, MF)


def test_reduction_order_independence():
    for n in (3, 4):
        chi = ChiMap(tuple(RNG.choice("lr") for _ in range(n)))
        ctx = build_context(chi)
        Z = [rand_elem() for _ in range(n)]
        for pi in enumerate_bnc(ctx):
            base = e_pi(pi, ctx, Z, MF, verify_sides=False)
            for t in range(3):
                r2 = random.Random(61 + t)
                v = e_pi(
                    pi, ctx, Z, MF,
                    verify_sides=False, chooser=lambda c: r2.choice(c),
                )
                assert (v - base).is_zero()


def test_diag2_moment_tables():
    spd = space_diag2()
    mfd = AlgebraMomentContext(spd)
    rng = random.Random(4)
    chi = ChiMap.parse("lrl")
    ctx = build_context(chi)
    Z = [sample_side_element(spd, chi.side(i), rng) for i in (1, 2, 3)]
    moments = moment_table(ctx, Z, mfd)
    kappas = cumulant_table(ctx, Z, mfd)
    assert set(moments) == set(kappas)
    assert moment_cumulant_roundtrip(ctx, Z, mfd)


def _free_family(word_cap=4):
    B = algebra_scalars()
    ident2 = tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(3))
        for i in range(3)
    )
    mod = BimoduleWithProjection(B, 3, ("b", "x", "y"), (ident2,), (ident2,))
    fp = reduced_free_product({1: mod, 2: mod}, word_cap)
    return fp, mod


def test_bifree_criterion_on_represented_family():
    fp, mod = _free_family()
    mf = FreeMomentContext(fp)
    rng = random.Random(12)
    for _ in range(12):
        n = rng.randint(2, 4)
        sides = tuple(rng.choice("lr") for _ in range(n))
        colours = tuple(rng.choice([1, 2]) for _ in range(n))
        Z = []
        for s, k in zip(sides, colours):
            m = [
                [Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)
            ]
            Z.append((("lam" if s == "l" else "rho", k, module_operator(mod, m)),))
        rep = bifree_moment_check(ChiMap(sides), EpsilonMap(colours), Z, mf)
        assert rep.ok, rep.to_json()


def test_bifree_negative_control():
    # same-module operators tagged with different colours are not free
    fp, mod = _free_family()
    mf = FreeMomentContext(fp)
    rng = random.Random(3)
    found_violation = False
    for _ in range(12):
        m = [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
        op = module_operator(mod, m)
        # colour-2 slot filled with a colour-1 operator: a mixed word
        # whose representation no longer matches the colouring
        Z = [
            (("lam", 1, op),),
            (("lam", 1, op),),
        ]
        rep = bifree_moment_check(ChiMap.parse("ll"), EpsilonMap((1, 2)), Z, mf)
        if not rep.ok:
            found_violation = True
            break
    assert found_violation


def test_ffb_formula_requires_pair_colours():
    fctx = lr_replacement(ChiMap.parse("b"))
    fp, mod = _free_family(2)
    mf = FreeMomentContext(fp)
    ident = module_operator(
        mod,
        [[Fraction(i == j) for j in range(3)] for i in range(3)],
    )
    Z = [(("lam", 1, ident),), (("rho", 2, ident),)]
    with pytest.raises(ColouringError):
        ffb_moment_formula(fctx, EpsilonMap((1, 2)), Z, mf)


def test_ffb_formula_without_boolean_slots_is_bifree_formula():
    fp, mod = _free_family()
    mf = FreeMomentContext(fp)
    rng = random.Random(21)
    chi_hat = ChiMap("lr", three_letter=True)
    fctx = lr_replacement(chi_hat)
    m1 = module_operator(
        mod, [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
    )
    m2 = module_operator(
        mod, [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
    )
    Z = [(("lam", 1, m1),), (("rho", 2, m2),)]
    rep = audit_ffb_word(fctx, EpsilonMap((1, 2)), Z, mf)
    assert rep.ok, rep.to_json()


def test_mixed_cumulants_vanish_up_to_length_five():
    fp, mod = _free_family(word_cap=5)
    mf = FreeMomentContext(fp)
    rng = random.Random(31)
    sides = tuple(rng.choice("lr") for _ in range(5))
    colours = (1, 2, 1, 1, 2)
    Z = []
    for s, k in zip(sides, colours):
        m = [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
        Z.append((("lam" if s == "l" else "rho", k, module_operator(mod, m)),))
    ctx = build_context(ChiMap(sides))
    kap = kappa_pi(SetPartition.full(5), ctx, Z, mf)
    assert kap.is_zero()
