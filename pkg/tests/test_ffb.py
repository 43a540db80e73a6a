from dataclasses import replace
from itertools import product as iproduct

from bnc_engine.cumulants import audit_ffb_word
from bnc_engine.ffb import (
    OperatorHandle,
    check_ffb_independence,
    check_ffb_system,
    check_single_colour_moments,
    embed_ffb_family,
    verify_system_gives_ffb,
)
from bnc_engine.fixtures import family_dual, family_m2
from bnc_engine.freeprod import FreeMomentContext, apply_chain, module_operator
from bnc_engine.linalg import ZERO, identity
from bnc_engine.partitions import ChiMap, EpsilonMap, lr_replacement


def small_system(depth=6):
    return embed_ffb_family(family_m2(), depth)


SYS = small_system()


def test_construction_side_tags():
    # the shift piece is two-sided, the multiply piece left-sided
    shift = SYS.dprime[1][0].module_op
    assert shift.commutes_with_side("l") and shift.commutes_with_side("r")
    for h in SYS.cprime[1]:
        assert h.module_op.commutes_with_side("l")
    for h in SYS.faces_l[1]:
        assert h.module_op.commutes_with_side("l")
    for h in SYS.faces_r[1]:
        assert h.module_op.commutes_with_side("r")


def test_module_level_annihilation():
    # shift . diag(z) . shift and mult(z1) . diag(z) . mult(z2) vanish
    from bnc_engine.linalg import mat_mul

    shift = [list(r) for r in SYS.dprime[1][0].module_op.matrix]
    mult = [list(r) for r in SYS.cprime[1][0].module_op.matrix]
    diag = [list(r) for r in SYS.faces_l[1][0].module_op.matrix]
    assert mat_mul(mat_mul(shift, diag), shift) == [
        [ZERO] * len(shift) for _ in shift
    ]
    assert mat_mul(mat_mul(mult, diag), mult) == [[ZERO] * len(mult) for _ in mult]


def test_telescoping_word_lands_in_second_summand():
    # diag(z1) shift diag(z2) mult(a) ... applied to the unit has no
    # base component, so its expectation vanishes
    fp = SYS.fp
    word = (
        SYS.faces_l[1][0].chain
        + SYS.dprime[1][0].chain
        + SYS.faces_r[1][0].chain
        + SYS.cprime[1][0].chain
        + SYS.faces_l[1][0].chain
    )
    vec = apply_chain(fp, word, fp.unit())
    assert fp.p(vec).is_zero()


def test_system_axioms():
    rep = check_ffb_system(SYS, word_cap=4)
    assert rep.ok, rep.to_json()


def test_system_axioms_negative_control():
    # replace the shift by the identity: annihilation fails with witness
    dbl = SYS.doubled
    ident_op = module_operator(dbl, identity(dbl.dim))
    broken = replace(SYS)
    broken.dprime = {
        k: [OperatorHandle(f"d{k}", k, (("rho", k, ident_op),), ident_op, None)]
        for k in SYS.colours()
    }
    rep = check_ffb_system(broken, word_cap=2)
    failed = [c for c in rep.claims if c["status"] == "fail"]
    assert failed
    assert any("annihilation-d" in c["id"] for c in failed)
    assert all(c.get("witness") for c in failed)


def test_single_colour_moment_preservation():
    rep = check_single_colour_moments(SYS, word_cap=4)
    assert rep.ok, rep.to_json()


def test_independence_word_cap_four():
    rep = check_ffb_independence(SYS, word_cap=4)
    assert rep.ok, rep.claims[-1]


def test_independence_negative_control():
    # tamper with one boolean handle: pair it with a different source
    # element, so its represented word no longer matches the ambient one
    sp = SYS.base
    wrong = sp.A.basis_element(2)  # not the element the chain encodes
    tampered = replace(SYS)
    tampered.bool_handles = {
        k: [
            OperatorHandle(h.label, h.colour, h.chain, h.module_op, wrong)
            for h in SYS.bool_handles[k]
        ]
        for k in SYS.colours()
    }
    rep = check_ffb_independence(tampered, word_cap=2)
    assert not rep.ok
    failed = [c for c in rep.claims if c["status"] == "fail"]
    assert any(c.get("witness") for c in failed)


def test_proof_pipeline():
    rep = verify_system_gives_ffb(SYS, word_cap=3)
    assert rep.ok, [c for c in rep.claims if c["status"] == "fail"]


def test_dual_system_pipeline():
    sysd = embed_ffb_family(family_dual(), depth=6)
    assert check_ffb_system(sysd, word_cap=3).ok
    assert check_single_colour_moments(sysd, word_cap=3).ok
    assert check_ffb_independence(sysd, word_cap=3).ok


def test_ffb_word_audit_on_system_words():
    mf = FreeMomentContext(SYS.fp)
    for shape in (("b",), ("l", "b"), ("b", "r"), ("l", "b", "r")):
        fctx = lr_replacement(ChiMap(tuple(shape), three_letter=True))
        for eps_hat in iproduct(SYS.colours(), repeat=len(shape)):
            eps = fctx.expand_colours(EpsilonMap(tuple(eps_hat)))
            Z = []
            for s, k in zip(shape, eps_hat):
                if s == "l":
                    Z.append(SYS.faces_l[k][0].chain)
                elif s == "r":
                    Z.append(SYS.faces_r[k][0].chain)
                else:
                    Z.append(SYS.cprime[k][0].chain)
                    Z.append(SYS.dprime[k][0].chain)
            rep = audit_ffb_word(fctx, eps, Z, mf)
            assert rep.ok, (shape, eps_hat, rep.to_json())


def test_single_boolean_slot_cumulant_is_plain_expectation():
    # length-one boolean word: the only sublattice member is the pair
    # block, whose cumulant equals the word expectation
    from bnc_engine.cumulants import kappa_pi
    from bnc_engine.partitions import SetPartition, build_context

    mf = FreeMomentContext(SYS.fp)
    fctx = lr_replacement(ChiMap.parse("b"))
    ctx = build_context(fctx.chi)
    Z = [SYS.cprime[1][0].chain, SYS.dprime[1][0].chain]
    kap = kappa_pi(SetPartition.full(2), ctx, Z, mf)
    lhs = mf.expect(Z)
    assert (kap - lhs).is_zero()


def test_single_colour_family_is_trivially_independent():
    fam = family_m2(colours=(1,))
    sys1 = embed_ffb_family(fam, depth=4)
    assert check_ffb_independence(sys1, word_cap=2).ok


def test_fp_vector_serialization():
    fp = SYS.fp
    vec = apply_chain(fp, SYS.faces_l[1][0].chain, fp.unit())
    data = fp.vector_to_json(vec)
    assert data and all(isinstance(k, str) for k in data)
    summary = fp.describe()
    assert summary["base_dim"] == 1 and summary["depth"] == fp.depth
