#!/usr/bin/env python3
"""Emit a TikZ gallery of the small worked examples.

Writes standalone .tex files (one figure each) into the output
directory: the six-point partition pair, the complete three-node shaded
family, and the boolean-pair sublattice members for r-b-l.
"""

import argparse
from pathlib import Path

from bnc_engine.diagrams import enumerate_lr
from bnc_engine.partitions import (
    ChiMap,
    EpsilonMap,
    SetPartition,
    enumerate_bnc_ffb,
    lr_replacement,
)
from bnc_engine.render import tikz_bnc, tikz_lr, tikz_standalone


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="gallery", help="output directory")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    chi6 = ChiMap.parse("lrlllr")
    admitted = SetPartition.from_blocks(6, [[1, 2, 5, 6], [3, 4]])
    (out / "partition_admitted.tex").write_text(
        tikz_standalone(tikz_bnc(chi6, admitted))
    )

    fam = enumerate_lr(ChiMap.parse("lrl"), EpsilonMap((1, 1, 2)))
    for idx, diagram in enumerate(fam.diagrams):
        (out / f"shaded_{idx}.tex").write_text(tikz_standalone(tikz_lr(diagram)))

    fctx = lr_replacement(ChiMap.parse("rbl"))
    for idx, pi in enumerate(enumerate_bnc_ffb(fctx)):
        (out / f"sublattice_{idx}.tex").write_text(
            tikz_standalone(tikz_bnc(fctx.chi, pi))
        )
    count = len(list(out.glob("*.tex")))
    print(f"wrote {count} figures to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
