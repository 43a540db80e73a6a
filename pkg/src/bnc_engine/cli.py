"""Command-line front end.

Subcommands: enumerate {bnc,lr,lrlat,bncffb}, mobius, moments,
cumulants, verify {bb-axioms,bifree,ffb-system,ffb-independence,
lr-decompose}, render.  Identical invocations produce identical bytes;
BNC_ENGINE_CAP overrides the enumeration caps.

Exit codes: 0 success, 2 argument or parse error, 3 cap exceeded,
4 fixture axiom failure, 5 failed verification claim.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from .algebra import check_bb_axioms
from .cumulants import (
    AlgebraMomentContext,
    bifree_moment_check,
    cumulant_table,
    moment_cumulant_roundtrip,
    moment_table,
)
from .diagrams import (
    LRDiagram,
    enumerate_lr,
    lateral_closure,
    lr_k,
)
from .ffb import (
    check_ffb_independence,
    check_ffb_system,
    check_single_colour_moments,
    verify_system_gives_ffb,
)
from .fixtures import load_space, load_system, sample_side_element
from .freeprod import (
    BimoduleWithProjection,
    lr_decompose,
    module_operator,
    reduced_free_product,
)
from .linalg import ONE
from .partitions import (
    CapExceeded,
    ChiMap,
    EpsilonMap,
    SetPartition,
    build_context,
    enumerate_bnc,
    enumerate_bnc_ffb,
    lr_replacement,
    mobius,
)
from .render import dot_bnc, dot_lr, tikz_bnc, tikz_lr, tikz_standalone


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _parse_chi(text: str) -> ChiMap:
    try:
        return ChiMap.parse(text)
    except ValueError as e:
        raise CliError(str(e), 2)


def _parse_eps(text: str) -> EpsilonMap:
    try:
        return EpsilonMap.parse(text)
    except ValueError as e:
        raise CliError(str(e), 2)


def _parse_partition(text: str, n: int) -> SetPartition:
    text = text.strip()
    try:
        if text.startswith("{"):
            blocks = []
            for chunk in text.replace("},{", "}|{").strip("{}").split("}|{"):
                blocks.append([int(t) for t in chunk.strip("{}").split(",")])
            return SetPartition.from_blocks(n, blocks)
        return SetPartition(tuple(int(t) for t in text.split(",")))
    except ValueError as e:
        raise CliError(f"cannot parse partition {text!r}: {e}", 2)


def _emit(payload, fmt: str):
    if fmt == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        if isinstance(payload, dict) and "lines" in payload:
            for line in payload["lines"]:
                print(line)
        else:
            print(payload)


def cmd_enumerate(args) -> int:
    kind = args.what
    if kind == "bnc":
        ctx = build_context(_parse_chi(args.chi))
        parts = enumerate_bnc(ctx)
        payload = {
            "chi": args.chi,
            "count": len(parts),
            "partitions": [list(p.rgs) for p in parts],
            "pretty": [p.pretty() for p in parts],
        }
    elif kind == "bncffb":
        fctx = lr_replacement(_parse_chi(args.chihat))
        parts = enumerate_bnc_ffb(fctx)
        payload = {
            "chihat": args.chihat,
            "chi": str(fctx.chi),
            "bottom": fctx.bottom.pretty(),
            "count": len(parts),
            "partitions": [list(p.rgs) for p in parts],
            "pretty": [p.pretty() for p in parts],
        }
    else:
        chi = _parse_chi(args.chi)
        eps = _parse_eps(args.eps)
        fam = enumerate_lr(chi, eps)
        if kind == "lrlat":
            fam = lateral_closure(fam)
        if args.k is not None:
            fam = lr_k(fam, args.k)
        payload = {
            "chi": args.chi,
            "eps": list(eps.colours),
            "closure": fam.closure_flag,
            "count": len(fam),
            "diagrams": [d.to_json() for d in fam.diagrams],
        }
    if args.format == "text":
        lines = [f"count: {payload['count']}"]
        lines.extend(payload.get("pretty", []))
        if "diagrams" in payload:
            for d in payload["diagrams"]:
                lines.append(json.dumps(d, sort_keys=True))
        _emit({"lines": lines}, "text")
    else:
        _emit(payload, "json")
    return 0


def cmd_mobius(args) -> int:
    ctx = build_context(_parse_chi(args.chi))
    pi = _parse_partition(args.pi, ctx.n)
    sigma = _parse_partition(args.sigma, ctx.n)
    value = mobius(pi, sigma, ctx)
    _emit({"chi": args.chi, "pi": list(pi.rgs), "sigma": list(sigma.rgs), "mu": value},
          args.format)
    return 0


def _sampled_word(space, chi: ChiMap, seed: int):
    rng = random.Random(seed)
    return [
        sample_side_element(space, chi.side(i), rng) for i in range(1, chi.n + 1)
    ]


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


def cmd_tables(args, cumulants: bool) -> int:
    space = load_space(args.fixture)
    rep = check_bb_axioms(space)
    if not rep.ok:
        raise CliError("fixture fails the compatibility axioms", 4)
    chi = _parse_chi(args.chi)
    ctx = build_context(chi)
    Z = _sampled_word(space, chi, args.seed)
    mf = AlgebraMomentContext(space)
    table = (
        cumulant_table(ctx, Z, mf) if cumulants else moment_table(ctx, Z, mf)
    )
    payload = {
        "chi": args.chi,
        "fixture": args.fixture,
        "seed": args.seed,
        "kind": "cumulants" if cumulants else "moments",
        "operands": [[_frac_str(c) for c in z.coeffs] for z in Z],
        "entries": [
            {"pi": list(rgs), "value": [_frac_str(c) for c in val.coeffs]}
            for rgs, val in sorted(table.items())
        ],
        "roundtrip_ok": moment_cumulant_roundtrip(ctx, Z, mf),
    }
    _emit(payload, args.format)
    return 0


def _report_exit(rep, fmt) -> int:
    _emit(rep.to_json(), fmt)
    return 0 if rep.ok else 5


def cmd_verify(args) -> int:
    what = args.what
    if what == "bb-axioms":
        space = load_space(args.fixture)
        rep = check_bb_axioms(space)
        _emit(rep.to_json(), args.format)
        return 0 if rep.ok else 4
    if what == "bifree":
        return _verify_bifree(args)
    depth = args.depth if args.depth is not None else 2 * args.word_cap
    system = load_system(args.fixture, depth)
    if what == "ffb-system":
        rep = check_ffb_system(system, args.word_cap)
        rep.claims.extend(check_single_colour_moments(system, args.word_cap).claims)
        return _report_exit(rep, args.format)
    if what == "ffb-independence":
        rep = check_ffb_independence(system, args.word_cap)
        rep.claims.extend(verify_system_gives_ffb(system, min(args.word_cap, 3)).claims)
        return _report_exit(rep, args.format)
    raise CliError(f"unknown verify target {what!r}", 2)


def _verify_bifree(args) -> int:
    """Mixed-colour moment criterion on a representation-built family."""
    from .algebra import algebra_scalars

    rng = random.Random(args.seed)
    B = algebra_scalars()
    dims = [int(t) for t in args.dims.split(",")]
    mods = {}
    for k, osc in enumerate(dims, start=1):
        dim = 1 + osc
        ident = tuple(
            tuple(ONE if i == j else Fraction(0) for j in range(dim))
            for i in range(dim)
        )
        mods[k] = BimoduleWithProjection(
            B, dim, tuple(f"c{i}" for i in range(dim)), (ident,), (ident,)
        )
    fp = reduced_free_product(mods, args.word_cap)
    from .freeprod import FreeMomentContext

    mf = FreeMomentContext(fp)
    rep = None
    from .cumulants import CheckReport

    rep = CheckReport()
    failures = 0
    for trial in range(args.trials):
        n = rng.randint(2, args.word_cap)
        sides = [rng.choice("lr") for _ in range(n)]
        colours = [rng.choice(sorted(mods)) for _ in range(n)]
        if len(set(colours)) < 2:
            colours[0] = 1
            colours[-1] = 2
        Z = []
        for s, k in zip(sides, colours):
            m = [
                [Fraction(rng.randint(-2, 2)) for _ in range(mods[k].dim)]
                for _ in range(mods[k].dim)
            ]
            op = module_operator(mods[k], m)
            Z.append((("lam" if s == "l" else "rho", k, op),))
        word_rep = bifree_moment_check(
            ChiMap(tuple(sides)), EpsilonMap(tuple(colours)), Z, mf
        )
        if not word_rep.ok:
            failures += 1
            for c in word_rep.claims:
                if c["status"] == "fail":
                    rep.claims.append(c)
    rep.record(f"bifree-criterion ({args.trials} sampled words)", failures == 0)
    return _report_exit(rep, args.format)


def cmd_verify_decompose(args) -> int:
    from .cumulants import CheckReport
    from .freeprod import FreeMomentContext  # noqa: F401

    rng = random.Random(args.seed)
    from .algebra import algebra_scalars

    B = algebra_scalars()
    dims = [int(t) for t in args.dims.split(",")]
    mods = {}
    for k, osc in enumerate(dims, start=1):
        dim = 1 + osc
        ident = tuple(
            tuple(ONE if i == j else Fraction(0) for j in range(dim))
            for i in range(dim)
        )
        mods[k] = BimoduleWithProjection(
            B, dim, tuple(f"c{i}" for i in range(dim)), (ident,), (ident,)
        )
    rep = CheckReport()
    ok_all = True
    for trial in range(args.trials):
        n = rng.randint(1, args.max_n)
        fp = reduced_free_product(mods, max(n, 1))
        ops = []
        for _ in range(n):
            s = rng.choice("lr")
            k = rng.choice(sorted(mods))
            m = [
                [Fraction(rng.randint(-2, 2)) for _ in range(mods[k].dim)]
                for _ in range(mods[k].dim)
            ]
            ops.append((s, k, module_operator(mods[k], m)))
        dec = lr_decompose(ops, fp)
        direct = fp.unit()
        for s, k, op in reversed(ops):
            direct = (
                fp.lambda_apply(op, k, direct)
                if s == "l"
                else fp.rho_apply(op, k, direct)
            )
        good = fp.equal(dec.direct, direct) and fp.equal(dec.reconstruction(), direct)
        if not good:
            ok_all = False
            rep.record(f"trial-{trial}", False, witness={"n": n})
    rep.record(f"lr-decompose ({args.trials} sampled words)", ok_all)
    return _report_exit(rep, args.format)


def cmd_render(args) -> int:
    if args.kind == "bnc":
        chi = _parse_chi(args.chi)
        pi = _parse_partition(args.pi, chi.n)
        ctx = build_context(chi)
        from .partitions import is_bnc

        if not is_bnc(pi, ctx):
            raise CliError("partition is not bi-non-crossing for this colouring", 2)
        body = tikz_bnc(chi, pi) if args.format == "tikz" else dot_bnc(chi, pi)
    else:
        if args.json:
            data = json.loads(args.json)
            diagram = LRDiagram.from_json(data)
        else:
            chi = _parse_chi(args.chi)
            eps = _parse_eps(args.eps)
            fam = enumerate_lr(chi, eps)
            if args.index is None or not 0 <= args.index < len(fam):
                raise CliError(
                    f"--index must select one of the {len(fam)} diagrams", 2
                )
            diagram = fam.diagrams[args.index]
        body = tikz_lr(diagram) if args.format == "tikz" else dot_lr(diagram)
    if args.format == "tikz" and args.standalone:
        body = tikz_standalone(body)
    sys.stdout.write(body)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bnc-engine", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("enumerate", help="list partitions or diagrams")
    pe.add_argument("what", choices=["bnc", "lr", "lrlat", "bncffb"])
    pe.add_argument("--chi", default=None)
    pe.add_argument("--chihat", default=None)
    pe.add_argument("--eps", default=None)
    pe.add_argument("--k", type=int, default=None, help="top-gap string count filter")
    pe.add_argument("--format", choices=["json", "text"], default="json")
    pe.set_defaults(func=cmd_enumerate)

    pm = sub.add_parser("mobius", help="incidence inverse on an interval")
    pm.add_argument("--chi", required=True)
    pm.add_argument("--pi", required=True)
    pm.add_argument("--sigma", required=True)
    pm.add_argument("--format", choices=["json", "text"], default="json")
    pm.set_defaults(func=cmd_mobius)

    for name in ("moments", "cumulants"):
        pt = sub.add_parser(name, help=f"{name} table on sampled operands")
        pt.add_argument("--chi", required=True)
        pt.add_argument("--fixture", default="m2-scalar")
        pt.add_argument("--seed", type=int, default=0)
        pt.add_argument("--format", choices=["json", "text"], default="json")
        pt.set_defaults(func=lambda a, c=(name == "cumulants"): cmd_tables(a, c))

    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument(
        "what",
        choices=["bb-axioms", "bifree", "ffb-system", "ffb-independence", "lr-decompose"],
    )
    pv.add_argument("--fixture", default="doubled-m2")
    pv.add_argument("--word-cap", type=int, default=4)
    pv.add_argument("--depth", type=int, default=None,
                    help="free-product truncation depth (default 2*word-cap)")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--trials", type=int, default=10)
    pv.add_argument("--max-n", type=int, default=4)
    pv.add_argument("--dims", default="2,3", help="complement dims per colour")
    pv.add_argument("--format", choices=["json", "text"], default="json")
    pv.set_defaults(
        func=lambda a: cmd_verify_decompose(a)
        if a.what == "lr-decompose"
        else cmd_verify(a)
    )

    pr = sub.add_parser("render", help="diagram markup")
    pr.add_argument("--kind", choices=["bnc", "lr"], required=True)
    pr.add_argument("--chi", default=None)
    pr.add_argument("--eps", default=None)
    pr.add_argument("--pi", default=None)
    pr.add_argument("--index", type=int, default=None)
    pr.add_argument("--json", default=None, help="inline diagram JSON")
    pr.add_argument("--format", choices=["tikz", "dot"], default="tikz")
    pr.add_argument("--standalone", action="store_true")
    pr.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except CapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
