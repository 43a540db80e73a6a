"""Free-free-Boolean systems: construction, axioms, and independence checks.

The embedding sends a family of face triples into operators on a free
product of doubled modules: left and right faces act diagonally through
the module representation, each boolean element factors into a
multiply-into-the-second-summand piece and a shift piece, and their
words telescope so that the annihilation and vanishing-moment axioms
hold on the nose.  The checkers verify those axioms, the word-by-word
preservation of single-colour moments, the projection calculus behind
the independence proof, and the independence comparison itself, all in
exact arithmetic with witnesses on failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iproduct
from typing import Optional

from .algebra import AlgebraElement, BBProbSpace, FaceAssignment
from .cumulants import CheckReport, kappa_pi
from .diagrams import chi_extensions, enumerate_lr, filter_boolean, lateral_closure
from .freeprod import (
    BimoduleWithProjection,
    FreeMomentContext,
    ModuleOperator,
    Theta,
    TruncatedFreeProduct,
    apply_chain,
    build_bimodule_from_space,
    doubled_bimodule,
    lr_decompose,
    module_operator,
    reduced_free_product,
)
from .linalg import Mat, ONE, ZERO, mat_zero
from .partitions import ChiMap, EpsilonMap, SetPartition, build_context, lr_replacement


@dataclass(frozen=True)
class OperatorHandle:
    """Operator on the ambient free product with its construction data.

    chain holds the ambient atoms; module_op the per-colour operator the
    chain represents (when it is a plain left/right representation), and
    source the original algebra element it came from.
    """

    label: str
    colour: int
    chain: tuple
    module_op: Optional[ModuleOperator] = None
    source: Optional[AlgebraElement] = None


@dataclass
class FfbFamily:
    """Face triples in a base space, as generator lists per colour."""

    space: BBProbSpace
    faces: dict[int, dict[str, list[AlgebraElement]]]

    def check(self) -> CheckReport:
        rep = FaceAssignment(self.space, self.faces).check()
        out = CheckReport()
        out.claims.extend(rep.claims)
        return out


@dataclass
class FfbSystem:
    """Quadruples (A^l, A^r, C', D') realized on a free product.

    The handles carry their module operators, which certify the
    bi-freeness hypothesis by construction (everything is a left or
    right representation of a module operator).
    """

    fp: TruncatedFreeProduct
    base: BBProbSpace
    theta: Theta
    module: BimoduleWithProjection
    doubled: BimoduleWithProjection
    faces_l: dict[int, list[OperatorHandle]]
    faces_r: dict[int, list[OperatorHandle]]
    cprime: dict[int, list[OperatorHandle]]
    dprime: dict[int, list[OperatorHandle]]
    bool_handles: dict[int, list[OperatorHandle]]

    def colours(self) -> list[int]:
        return sorted(self.faces_l)

    def expect_word(self, handles) -> AlgebraElement:
        chain = tuple(atom for h in handles for atom in h.chain)
        return self.fp.p(apply_chain(self.fp, chain, self.fp.unit()))


def _block_matrix(dim: int, blocks) -> Mat:
    out = mat_zero(2 * dim, 2 * dim)
    for (bi, bj), m in blocks.items():
        for r in range(dim):
            for c in range(dim):
                if m[r][c]:
                    out[bi * dim + r][bj * dim + c] = m[r][c]
    return out


def embed_ffb_family(fam: FfbFamily, depth: int) -> FfbSystem:
    """The doubled-module construction over the family's base space."""
    space = fam.space
    module, theta = build_bimodule_from_space(space)
    dbl = doubled_bimodule(module)
    dim = module.dim
    colours = sorted(fam.faces)
    fp = reduced_free_product({k: dbl for k in colours}, depth)
    ident = [[ONE if i == j else ZERO for j in range(dim)] for i in range(dim)]

    def diag_op(z: AlgebraElement, side: str) -> ModuleOperator:
        th = theta.matrix(z)
        return module_operator(dbl, _block_matrix(dim, {(0, 0): th, (1, 1): th}), side)

    def mult_shift_op(z: AlgebraElement) -> ModuleOperator:
        th = theta.matrix(z)
        return module_operator(dbl, _block_matrix(dim, {(0, 1): th}), "l")

    shift = module_operator(dbl, _block_matrix(dim, {(1, 0): ident}), "l")
    if not shift.commutes_with_side("r"):
        raise ValueError("shift operator must be two-sided")

    faces_l: dict[int, list[OperatorHandle]] = {}
    faces_r: dict[int, list[OperatorHandle]] = {}
    cprime: dict[int, list[OperatorHandle]] = {}
    dprime: dict[int, list[OperatorHandle]] = {}
    bool_handles: dict[int, list[OperatorHandle]] = {}
    for k in colours:
        slots = fam.faces[k]
        faces_l[k] = [
            OperatorHandle(
                f"l{k}.{i}", k, (("lam", k, diag_op(z, "l")),), diag_op(z, "l"), z
            )
            for i, z in enumerate(slots.get("l", []))
        ]
        faces_r[k] = [
            OperatorHandle(
                f"r{k}.{i}", k, (("rho", k, diag_op(z, "r")),), diag_op(z, "r"), z
            )
            for i, z in enumerate(slots.get("r", []))
        ]
        cprime[k] = [
            OperatorHandle(
                f"c{k}.{i}", k, (("lam", k, mult_shift_op(z)),), mult_shift_op(z), z
            )
            for i, z in enumerate(slots.get("b", []))
        ]
        dprime[k] = [OperatorHandle(f"d{k}", k, (("rho", k, shift),), shift, None)]
        bool_handles[k] = [
            OperatorHandle(
                f"b{k}.{i}",
                k,
                (("lam", k, mult_shift_op(z)), ("rho", k, shift)),
                None,
                z,
            )
            for i, z in enumerate(slots.get("b", []))
        ]
    return FfbSystem(
        fp, space, theta, module, dbl,
        faces_l, faces_r, cprime, dprime, bool_handles,
    )


def _a_words(sys: FfbSystem, k: int, max_len: int):
    """Words over the left/right face generators, identity included."""
    gens = sys.faces_l[k] + sys.faces_r[k]
    yield ()
    frontier = [(g,) for g in gens]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            yield w
            for g in gens:
                nxt.append(w + (g,))
        frontier = nxt


def _zero_operator(sys: FfbSystem, handles, probe_depth: int) -> bool:
    """Whether the composite annihilates every word of bounded depth."""
    fp = sys.fp
    chain = tuple(atom for h in handles for atom in h.chain)
    for vec in _basis_vectors(fp, probe_depth):
        if not fp.is_zero(apply_chain(fp, chain, vec)):
            return False
    return True


def _basis_vectors(fp: TruncatedFreeProduct, max_depth: int):
    yield fp.unit()
    for i in range(fp.B.dim):
        yield fp.embed_b(fp.B.basis_element(i))
    for seq, ws in sorted(fp.wordspaces.items()):
        if len(seq) > max_depth:
            continue
        for i in range(ws.dim):
            yield {seq: {i: ONE}}


def check_ffb_system(
    sys: FfbSystem, word_cap: int, pattern_reps: int = 1
) -> CheckReport:
    """The annihilation and vanishing-moment axioms on generator words.

    Middle words over the left/right faces run up to word_cap letters in
    single-sandwich patterns and one letter inside repeated patterns;
    repeated boolean patterns run up to pattern_reps rounds.
    """
    rep = CheckReport()
    fp = sys.fp
    for k in sys.colours():
        probe = max(0, fp.depth - (word_cap + 2))
        wit = None
        for c1 in sys.cprime[k]:
            for c2 in sys.cprime[k]:
                for w in _a_words(sys, k, word_cap):
                    if not _zero_operator(sys, (c1,) + w + (c2,), probe):
                        wit = [h.label for h in (c1,) + w + (c2,)]
                        break
                if wit:
                    break
            if wit:
                break
        rep.record(f"annihilation-c-{k}", wit is None, witness=wit)
        wit = None
        for d1 in sys.dprime[k]:
            for d2 in sys.dprime[k]:
                for w in _a_words(sys, k, word_cap):
                    if not _zero_operator(sys, (d1,) + w + (d2,), probe):
                        wit = [h.label for h in (d1,) + w + (d2,)]
                        break
                if wit:
                    break
        rep.record(f"annihilation-d-{k}", wit is None, witness=wit)

        for prop, first, second in (
            ("moments-c", sys.cprime[k], sys.dprime[k]),
            ("moments-d", sys.dprime[k], sys.cprime[k]),
        ):
            wit = None
            for reps_n in range(pattern_reps + 1):
                slot_cap = word_cap if reps_n == 0 else 1
                slots = 2 + 2 * reps_n
                for a_subst in iproduct(_a_words(sys, k, slot_cap), repeat=slots):
                    for mids in iproduct(first, *([second, first] * reps_n)):
                        word: tuple = ()
                        for idx, mid in enumerate(mids):
                            word += a_subst[idx] + (mid,)
                        word += a_subst[-1]
                        val = sys.expect_word(word)
                        if not val.is_zero():
                            wit = [h.label for h in word]
                            break
                    if wit:
                        break
                if wit:
                    break
            rep.record(f"{prop}-{k}", wit is None, witness=wit)
    return rep


def check_single_colour_moments(sys: FfbSystem, word_cap: int) -> CheckReport:
    """Joint moments of one colour's images match the base space."""
    rep = CheckReport()
    for k in sys.colours():
        pools = {
            "l": sys.faces_l[k],
            "r": sys.faces_r[k],
            "b": sys.bool_handles[k],
        }
        wit = None
        count = 0
        for n in range(1, word_cap + 1):
            for shape in iproduct("lrb", repeat=n):
                if any(not pools[s] for s in shape):
                    continue
                for handles in iproduct(*(pools[s] for s in shape)):
                    count += 1
                    lhs = sys.expect_word(handles)
                    word = [h.source for h in handles]
                    rhs = sys.base.expect_word(word)
                    if not (lhs - rhs).is_zero():
                        wit = {
                            "word": [h.label for h in handles],
                            "lhs": str(lhs),
                            "rhs": str(rhs),
                        }
                        break
                if wit:
                    break
            if wit:
                break
        rep.record(f"single-colour-moments-{k} ({count} words)", wit is None, witness=wit)
    return rep


def _rep_fp(sys: FfbSystem, depth: int) -> TruncatedFreeProduct:
    return reduced_free_product(
        {k: sys.module for k in sys.colours()}, depth
    )


def _mu_tilde_chain(sys: FfbSystem, shape, handles):
    """Representation word per the independence definition, over the
    base-space module: left and right faces through the module
    representation, boolean faces sandwiched between projections."""
    chain = []
    for s, h in zip(shape, handles):
        k = h.colour
        th = sys.theta
        if s == "l":
            chain.append(("lam", k, th.operator(h.source, "l")))
        elif s == "r":
            chain.append(("rho", k, th.operator(h.source, "r")))
        else:
            chain.append(("proj", k, None))
            chain.append(("lam", k, th.operator(h.source)))
            chain.append(("proj", k, None))
    return tuple(chain)


def check_ffb_independence(sys: FfbSystem, word_cap: int) -> CheckReport:
    """Joint distribution against the projected representation.

    Every word over the triples, all colourings and shapes up to the
    cap, is compared with its image word on the free product of
    base-space modules; residuals are exact.
    """
    rep = CheckReport()
    rfp = _rep_fp(sys, word_cap)
    colours = sys.colours()
    failures = []
    count = 0
    for n in range(1, word_cap + 1):
        for shape in iproduct("lrb", repeat=n):
            for eps in iproduct(colours, repeat=n):
                pools = []
                for s, k in zip(shape, eps):
                    pool = {
                        "l": sys.faces_l,
                        "r": sys.faces_r,
                        "b": sys.bool_handles,
                    }[s][k]
                    pools.append(pool)
                if any(not p for p in pools):
                    continue
                for handles in iproduct(*pools):
                    count += 1
                    lhs = sys.expect_word(handles)
                    chain = _mu_tilde_chain(sys, shape, handles)
                    rhs = rfp.p(apply_chain(rfp, chain, rfp.unit()))
                    if not (lhs - rhs).is_zero():
                        failures.append(
                            {
                                "word": [h.label for h in handles],
                                "shape": "".join(shape),
                                "colours": list(eps),
                                "lhs": str(lhs),
                                "rhs": str(rhs),
                            }
                        )
    for f in failures[:10]:
        rep.record(f"word-{f['shape']}-{f['word']}", False, witness=f)
    rep.record(
        f"ffb-independence ({count} words, {len(failures)} failures)",
        not failures,
    )
    return rep


def verify_system_gives_ffb(sys: FfbSystem, word_cap: int) -> CheckReport:
    """Instance check of the independence theorem via its proof pipeline.

    For every word over the induced triples: re-split boolean factors,
    decompose the unprimed word into diagram terms with projections at
    the split points, compare the projected word with the boolean-
    sandwich word, and confirm the removed terms carry no expectation
    and stay inside the predicted extension families.
    """
    rep = CheckReport()
    fp = sys.fp
    colours = sys.colours()
    ext_cache: dict = {}
    kappa_checked = 0
    mismatch = []
    for n in range(1, word_cap + 1):
        for shape in iproduct("lrb", repeat=n):
            chi_hat = ChiMap(tuple(shape), three_letter="b" in shape)
            fctx = lr_replacement(chi_hat)
            for eps_hat in iproduct(colours, repeat=n):
                pools = []
                for s, k in zip(shape, eps_hat):
                    pools.append(
                        {
                            "l": sys.faces_l,
                            "r": sys.faces_r,
                            "b": sys.bool_handles,
                        }[s][k]
                    )
                if any(not p for p in pools):
                    continue
                eps = fctx.expand_colours(EpsilonMap(tuple(eps_hat)))
                for handles in iproduct(*pools):
                    ok, info = _pipeline_word(
                        sys, fctx, eps, shape, handles, ext_cache
                    )
                    if not ok:
                        mismatch.append(info)
                kappa_checked += 1
    for f in mismatch[:10]:
        rep.record(f"pipeline-{f['stage']}", False, witness=f)
    rep.record(
        f"proof-pipeline ({kappa_checked} word shapes, {len(mismatch)} failures)",
        not mismatch,
    )
    rep.claims.extend(_mixed_cumulant_claims(sys, word_cap).claims)
    return rep


def _pipeline_word(sys, fctx, eps, shape, handles, ext_cache):
    fp = sys.fp
    chi = fctx.chi
    split_ops = []
    projected = []
    pos = 1
    for s, h in zip(shape, handles):
        k = h.colour
        if s == "b":
            tz = ModuleOperator(sys.doubled, h.chain[0][2].matrix, "l")
            sz = ModuleOperator(sys.doubled, h.chain[1][2].matrix, "r")
            split_ops.append(("l", k, tz))
            split_ops.append(("r", k, sz))
            projected.append(pos)
            pos += 2
        else:
            split_ops.append((s, k, h.module_op))
            pos += 1
    m = len(split_ops)
    # word splitting: the handle chains concatenate to the split word
    direct_chain = tuple(atom for h in handles for atom in h.chain)
    split_chain = tuple(
        ("lam" if s == "l" else "rho", k, op) for s, k, op in split_ops
    )
    v_direct = apply_chain(fp, direct_chain, fp.unit())
    v_split = apply_chain(fp, split_chain, fp.unit())
    if not fp.equal(v_direct, v_split):
        return False, {"stage": "word-splitting", "word": [h.label for h in handles]}
    dec = lr_decompose(split_ops, fp, projected_positions=projected, coefficients=False)
    if not fp.equal(dec.direct, v_split):
        return False, {"stage": "decompose-direct", "word": [h.label for h in handles]}
    resid_total = fp.add(*(v for _, _, v in dec.residual)) if dec.residual else {}
    if not fp.equal(fp.add(dec.primed, resid_total), dec.direct):
        return False, {"stage": "decompose-split", "word": [h.label for h in handles]}
    # the projected word equals the boolean-sandwich word
    mu_tilde = []
    for s, h in zip(shape, handles):
        k = h.colour
        if s == "b":
            comp_op = _compose_ops(sys.doubled, h.chain[0][2], h.chain[1][2])
            mu_tilde.append(("proj", k, None))
            mu_tilde.append(("lam", k, comp_op))
            mu_tilde.append(("proj", k, None))
        else:
            mu_tilde.append(h.chain[0])
    v_tilde = apply_chain(fp, tuple(mu_tilde), fp.unit())
    if not fp.equal(dec.primed, v_tilde):
        return False, {"stage": "projected-word", "word": [h.label for h in handles]}
    if not sys.fp.p(resid_total).is_zero():
        return False, {"stage": "residual-expectation", "word": [h.label for h in handles]}
    # removed diagrams stay inside the extension families of the cut points
    if dec.residual:
        union = set()
        for j in projected:
            key = (chi.sides, eps.colours, j)
            if key not in ext_cache:
                sub = lateral_closure(
                    enumerate_lr(
                        ChiMap(chi.sides[j - 1 :]),
                        EpsilonMap(eps.colours[j - 1 :]),
                    )
                )
                _, removed = filter_boolean(sub, eps.colour(j))
                ext_cache[key] = chi_extensions(removed, chi, eps).keys()
            union |= ext_cache[key]
        for d, _, _ in dec.residual:
            if d.key() not in union:
                return False, {
                    "stage": "residual-family",
                    "word": [h.label for h in handles],
                }
    return True, None


def _compose_ops(mod, a: ModuleOperator, b: ModuleOperator) -> ModuleOperator:
    from .linalg import mat_mul

    prod = mat_mul([list(r) for r in a.matrix], [list(r) for r in b.matrix])
    return ModuleOperator(mod, tuple(tuple(r) for r in prod), None)


def _mixed_cumulant_claims(sys: FfbSystem, word_cap: int) -> CheckReport:
    """Full-word cumulants of the split operators vanish for mixed
    colourings (the bi-freeness content of the construction)."""
    rep = CheckReport()
    mf = FreeMomentContext(sys.fp)
    colours = sys.colours()
    if len(colours) < 2:
        rep.record("mixed-cumulants (vacuous: one colour)", True)
        return rep
    failures = 0
    checked = 0
    pools = {}
    for k in colours:
        pools[("l", k)] = sys.faces_l[k] + sys.cprime[k]
        pools[("r", k)] = sys.faces_r[k] + sys.dprime[k]
    cap = min(word_cap, 4)
    for n in range(2, cap + 1):
        for shape in iproduct("lr", repeat=n):
            for eps in iproduct(colours, repeat=n):
                if len(set(eps)) < 2:
                    continue
                pool = [pools[(s, k)] for s, k in zip(shape, eps)]
                if any(not p for p in pool):
                    continue
                subst = [p[0] for p in pool]
                ctx = build_context(ChiMap(tuple(shape)))
                Z = [h.chain for h in subst]
                kap = kappa_pi(SetPartition.full(n), ctx, Z, mf)
                checked += 1
                if not kap.is_zero():
                    failures += 1
    rep.record(
        f"mixed-cumulants-vanish ({checked} words, {failures} failures)",
        failures == 0,
    )
    return rep
