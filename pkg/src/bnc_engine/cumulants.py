"""Partition-indexed moments, cumulants, and independence criteria.

Moments are evaluated through a MomentContext (elements of an ambient
algebra, or operator words on a free-product module); cumulants invert
them along the bi-non-crossing lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import AlgebraElement, BBProbSpace
from .bimult import MomentContext, blocks_from_partition, reduce_blocks
from .partitions import (
    BNCContext,
    ChiMap,
    EpsilonMap,
    FfbContext,
    NotBNC,
    SetPartition,
    SizeMismatch,
    build_context,
    enumerate_bnc,
    in_bnc_ffb,
    is_bnc,
    mobius_fast,
    refines,
)


class SideMismatch(ValueError):
    """Element fails the commutant test for its assigned side."""


class ColouringError(ValueError):
    """Colour map violates the boolean-pair constancy condition."""


class AlgebraMomentContext(MomentContext):
    """Moments of actual algebra elements under a space's expectation."""

    def __init__(self, space: BBProbSpace):
        self.space = space

    def expect(self, elems):
        return self.space.expect_word(elems)

    def unit_b(self):
        return self.space.B.one()

    def prepend_left(self, value, elem):
        return self.space.embed_left(value) * elem

    def prepend_right(self, value, elem):
        return self.space.embed_right(value) * elem

    def append_left(self, elem, value):
        return elem * self.space.embed_left(value)

    def verify_side(self, elem, side: str) -> bool:
        sp = self.space
        for i in range(sp.B.dim):
            b = sp.B.basis_element(i)
            other = sp.embed_right(b) if side == "l" else sp.embed_left(b)
            if (elem * other).coeffs != (other * elem).coeffs:
                return False
        return True


def e_pi(
    pi: SetPartition,
    ctx: BNCContext,
    Z: list,
    mf: MomentContext,
    verify_sides: bool = True,
    chooser=None,
    validate: bool = True,
) -> AlgebraElement:
    """The recursive partition moment; a B element."""
    if validate:
        if pi.n != ctx.n or len(Z) != ctx.n:
            raise SizeMismatch("partition, colouring, and operands disagree")
        if not is_bnc(pi, ctx):
            raise NotBNC(f"{pi} not bi-non-crossing for {ctx.chi}")
    if verify_sides and hasattr(mf, "verify_side"):
        for i, z in enumerate(Z, start=1):
            if not mf.verify_side(z, ctx.chi.side(i)):
                raise SideMismatch(f"operand {i} not in the {ctx.chi.side(i)} side")
    blocks = blocks_from_partition(pi)
    ops = {i: z for i, z in enumerate(Z, start=1)}
    side = {i: ctx.chi.side(i) for i in range(1, ctx.n + 1)}
    out = reduce_blocks(blocks, ops, side, mf, chooser=chooser)
    if out[0] != "scalar":
        raise ValueError("partition moments must collapse completely")
    return out[1]


def moment_table(ctx: BNCContext, Z: list, mf: MomentContext, partitions=None):
    """All partition moments, keyed by rgs."""
    partitions = enumerate_bnc(ctx) if partitions is None else partitions
    return {
        pi.rgs: e_pi(pi, ctx, Z, mf, verify_sides=False, validate=False)
        for pi in partitions
    }


def kappa_pi(
    pi: SetPartition,
    ctx: BNCContext,
    Z: list,
    mf: MomentContext,
    moments: dict | None = None,
) -> AlgebraElement:
    """Cumulant: moments weighted by the lattice's incidence inverse."""
    if not is_bnc(pi, ctx):
        raise NotBNC(f"{pi} not bi-non-crossing for {ctx.chi}")
    below = [s for s in enumerate_bnc(ctx) if refines(s, pi)]
    if moments is None:
        moments = moment_table(ctx, Z, mf, partitions=below)
    total = None
    for sigma in below:
        mu = mobius_fast(sigma, pi, ctx)
        if mu == 0:
            continue
        term = moments[sigma.rgs].scale(mu)
        total = term if total is None else total + term
    return total if total is not None else mf.unit_b()


def cumulant_table(ctx: BNCContext, Z: list, mf: MomentContext):
    moments = moment_table(ctx, Z, mf)
    return {
        pi.rgs: kappa_pi(pi, ctx, Z, mf, moments=moments)
        for pi in enumerate_bnc(ctx)
    }


def moment_cumulant_roundtrip(ctx: BNCContext, Z: list, mf: MomentContext) -> bool:
    """Sum of cumulants below pi re-assembles the pi moment, for every pi."""
    moments = moment_table(ctx, Z, mf)
    kappas = cumulant_table(ctx, Z, mf)
    for pi in enumerate_bnc(ctx):
        total = None
        for sigma in enumerate_bnc(ctx):
            if not refines(sigma, pi):
                continue
            total = (
                kappas[sigma.rgs]
                if total is None
                else total + kappas[sigma.rgs]
            )
        if not (total - moments[pi.rgs]).is_zero():
            return False
    return True


@dataclass
class CheckReport:
    claims: list[dict] = field(default_factory=list)

    def record(self, claim_id: str, ok: bool, witness=None):
        entry = {"id": claim_id, "status": "pass" if ok else "fail"}
        if not ok and witness is not None:
            entry["witness"] = witness
        self.claims.append(entry)

    @property
    def ok(self) -> bool:
        return all(c["status"] == "pass" for c in self.claims)

    def to_json(self):
        return {"claims": self.claims, "ok": self.ok}


def _colour_refines(pi: SetPartition, eps: EpsilonMap) -> bool:
    return refines(pi, eps.as_partition())


def bifree_moment_check(
    chi: ChiMap, eps: EpsilonMap, Z: list, mf: MomentContext
) -> CheckReport:
    """Both forms of the independence criterion on one word.

    The word expectation must equal the incidence-weighted sum of
    partition moments over colour-compatible partitions; equivalently
    the full-word cumulant vanishes for mixed colours.
    """
    ctx = build_context(chi)
    rep = CheckReport()
    lhs = mf.expect(list(Z))
    moments = moment_table(ctx, Z, mf)
    total = None
    all_parts = enumerate_bnc(ctx)
    for pi in all_parts:
        if not _colour_refines(pi, eps):
            continue
        weight = 0
        for sigma in all_parts:
            if refines(pi, sigma) and _colour_refines(sigma, eps):
                weight += mobius_fast(pi, sigma, ctx)
        if weight:
            term = moments[pi.rgs].scale(weight)
            total = term if total is None else total + term
    total = total if total is not None else mf.unit_b().scale(0)
    rep.record(
        "moment-formula",
        (lhs - total).is_zero(),
        witness={"lhs": str(lhs), "rhs": str(total)},
    )
    if len(set(eps.colours)) > 1:
        kap = kappa_pi(SetPartition.full(ctx.n), ctx, Z, mf, moments=moments)
        rep.record("mixed-cumulant-vanishes", kap.is_zero(), witness=str(kap))
    else:
        rep.record("mixed-cumulant-vanishes", True)
    return rep


def _expanded_eps_ok(fctx: FfbContext, eps: EpsilonMap) -> bool:
    return all(
        eps.colour(j) == eps.colour(j + 1) for j in fctx.boolean_pair_starts()
    )


def ffb_moment_formula(
    fctx: FfbContext,
    eps: EpsilonMap,
    Z: list,
    mf: MomentContext,
    moments: dict | None = None,
) -> CheckReport:
    """Word moments against the boolean-pair sublattice cumulant sum.

    Z is the expanded operand list (each boolean slot contributing its
    two factors); eps the expanded colour map.
    """
    if eps.n != fctx.n or len(Z) != fctx.n:
        raise SizeMismatch("expanded operands must match the expanded colouring")
    if not _expanded_eps_ok(fctx, eps):
        raise ColouringError("boolean pairs must be monochromatic")
    ctx = build_context(fctx.chi)
    rep = CheckReport()
    lhs = mf.expect(list(Z))
    if moments is None:
        moments = moment_table(ctx, Z, mf)
    total = None
    ffb_parts = [pi for pi in enumerate_bnc(ctx) if in_bnc_ffb(pi, fctx)]
    for pi in ffb_parts:
        term = kappa_pi(pi, ctx, Z, mf, moments=moments)
        total = term if total is None else total + term
    total = total if total is not None else mf.unit_b().scale(0)
    rep.record(
        "ffb-moment-formula",
        (lhs - total).is_zero(),
        witness={"lhs": str(lhs), "rhs": str(total)},
    )
    one = SetPartition.full(ctx.n)
    kap = kappa_pi(one, ctx, Z, mf, moments=moments)
    restricted = None
    for pi in ffb_parts:
        term = moments[pi.rgs].scale(mobius_fast(pi, one, ctx))
        restricted = term if restricted is None else restricted + term
    rep.record(
        "ffb-cumulant-restriction",
        (kap - restricted).is_zero(),
        witness={"full": str(kap), "restricted": str(restricted)},
    )
    return rep


def ffb_vanishing_check(
    fctx: FfbContext,
    eps: EpsilonMap,
    Z: list,
    mf: MomentContext,
    moments: dict | None = None,
) -> CheckReport:
    """Partition moments vanish off the boolean-pair sublattice."""
    if not _expanded_eps_ok(fctx, eps):
        raise ColouringError("boolean pairs must be monochromatic")
    ctx = build_context(fctx.chi)
    rep = CheckReport()
    for pi in enumerate_bnc(ctx):
        if in_bnc_ffb(pi, fctx) or not _colour_refines(pi, eps):
            continue
        if moments is not None:
            val = moments[pi.rgs]
        else:
            val = e_pi(pi, ctx, Z, mf, verify_sides=False, validate=False)
        rep.record(f"vanishes-{pi.rgs}", val.is_zero(), witness=str(val))
    return rep


def kappa_constancy_check(
    fctx: FfbContext,
    eps: EpsilonMap,
    Z: list,
    mf: MomentContext,
    moments: dict | None = None,
) -> CheckReport:
    """Full-word cumulant vanishes unless the colour map is constant."""
    if not _expanded_eps_ok(fctx, eps):
        raise ColouringError("boolean pairs must be monochromatic")
    ctx = build_context(fctx.chi)
    rep = CheckReport()
    kap = kappa_pi(SetPartition.full(ctx.n), ctx, Z, mf, moments=moments)
    if len(set(eps.colours)) > 1:
        rep.record("mixed-ffb-cumulant-vanishes", kap.is_zero(), witness=str(kap))
    else:
        rep.record("constant-colour-cumulant", True, witness=str(kap))
    return rep


def audit_ffb_word(
    fctx: FfbContext, eps: EpsilonMap, Z: list, mf: MomentContext
) -> CheckReport:
    """All word-level checks off one shared moment table."""
    ctx = build_context(fctx.chi)
    moments = moment_table(ctx, Z, mf)
    rep = CheckReport()
    rep.claims.extend(ffb_moment_formula(fctx, eps, Z, mf, moments=moments).claims)
    van = ffb_vanishing_check(fctx, eps, Z, mf, moments=moments)
    bad = [c for c in van.claims if c["status"] == "fail"]
    rep.record(
        f"off-lattice-vanishing ({len(van.claims)} partitions)",
        not bad,
        witness=bad[:5] or None,
    )
    rep.claims.extend(kappa_constancy_check(fctx, eps, Z, mf, moments=moments).claims)
    return rep
