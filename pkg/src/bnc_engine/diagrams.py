"""Shaded two-sided string diagrams and their lateral-refinement calculus.

A diagram on n nodes assigns each node to exactly one string; strings
are monochromatic, and some of them reach the top gap, in a definite
left-to-right spine order.  Diagrams are built by a node-by-node
recursion that prepends node i to the diagrams on nodes i+1..n:

  * a left node joins the leftmost top string when that string carries
    the node's shade, otherwise it opens a fresh leftmost string; right
    nodes do the same at the right end;
  * either way the affected string then either extends to the new top
    gap or is closed off (two diagrams per predecessor, so the plain
    family has exactly 2^n members).

Cutting a string between two adjacent ribs splits it in two, the upper
part keeping any top flag; the closure of a family under such cuts is
its lateral closure.  Structural identity is (sides, shades, string
node-sets, top flags, spine order); geometric placement never enters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .partitions import (
    CapExceeded,
    ChiMap,
    EpsilonMap,
    SetPartition,
    SizeMismatch,
    enumeration_cap,
)

LR_CAP = 8


class HasTopSpine(ValueError):
    """Diagram has a string reaching the top gap where none is allowed."""


class SuffixMismatch(ValueError):
    """Family's colouring is not the expected restriction."""


@dataclass(frozen=True)
class LRDiagram:
    """Structural diagram: monochromatic strings over a two-sided word.

    strings: tuple of (nodes, reaches_top) sorted by smallest node;
    spine_order: node-sets of top strings, leftmost first.
    """

    chi: ChiMap
    eps: EpsilonMap
    strings: tuple[tuple[tuple[int, ...], bool], ...]
    spine_order: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return self.chi.n

    def key(self):
        return (self.chi.sides, self.eps.colours, self.strings, self.spine_order)

    def shade(self, nodes: tuple[int, ...]) -> int:
        return self.eps.colour(nodes[0])

    def top_count(self) -> int:
        return len(self.spine_order)

    def top_shades(self) -> tuple[int, ...]:
        return tuple(self.shade(s) for s in self.spine_order)

    def to_partition(self) -> SetPartition:
        return diagram_to_partition(self)

    def to_json(self) -> dict:
        return {
            "chi": str(self.chi),
            "eps": list(self.eps.colours),
            "strings": [
                {"nodes": list(nodes), "top": top} for nodes, top in self.strings
            ],
            "spine_order": [list(nodes) for nodes in self.spine_order],
        }

    @staticmethod
    def from_json(data: dict) -> "LRDiagram":
        return make_diagram(
            ChiMap.parse(data["chi"]),
            EpsilonMap(tuple(data["eps"])),
            [(tuple(s["nodes"]), s["top"]) for s in data["strings"]],
            [tuple(nodes) for nodes in data["spine_order"]],
        )


def make_diagram(chi, eps, strings, spine_order) -> LRDiagram:
    strings = tuple(
        sorted((tuple(sorted(nodes)), bool(top)) for nodes, top in strings)
    )
    return LRDiagram(chi, eps, strings, tuple(tuple(s) for s in spine_order))


@dataclass(frozen=True)
class DiagramFamily:
    chi: ChiMap
    eps: EpsilonMap
    diagrams: tuple[LRDiagram, ...]
    closure_flag: str = "plain"  # plain | lateral

    def __len__(self):
        return len(self.diagrams)

    def keys(self) -> set:
        return {d.key() for d in self.diagrams}

    def with_diagrams(self, diagrams, flag=None) -> "DiagramFamily":
        ordered = tuple(sorted(diagrams, key=lambda d: d.key()))
        return DiagramFamily(self.chi, self.eps, ordered, flag or self.closure_flag)


def _check_lengths(chi: ChiMap, eps: EpsilonMap):
    if chi.n != eps.n:
        raise SizeMismatch("colourings disagree on length")
    if chi.three_letter:
        raise SizeMismatch("diagrams need the two-letter alphabet")


def enumerate_lr(chi: ChiMap, eps: EpsilonMap, cap: int | None = None) -> DiagramFamily:
    """The plain recursive family; exactly 2^n diagrams."""
    _check_lengths(chi, eps)
    cap = enumeration_cap(LR_CAP) if cap is None else cap
    if chi.n > cap:
        raise CapExceeded(f"n={chi.n} exceeds diagram cap {cap}")
    n = chi.n
    # state: (completed strings tuple, top list tuple of node-tuples)
    states = [((), ())]
    for i in range(n, 0, -1):
        side = chi.side(i)
        shade = eps.colour(i)
        new_states = []
        for completed, top in states:
            end = 0 if side == "l" else len(top) - 1
            target = top[end] if top else None
            if target is not None and eps.colour(target[0]) == shade:
                joined = (i,) + target
                rest = top[:end] + top[end + 1 :]
                # keep the joined string at its slot, or close it off
                kept = top[:end] + (joined,) + top[end + 1 :]
                new_states.append((completed, kept))
                new_states.append((completed + ((joined, False),), rest))
            else:
                fresh = (i,)
                at = 0 if side == "l" else len(top)
                new_states.append((completed, top[:at] + (fresh,) + top[at:]))
                new_states.append((completed + ((fresh, False),), top))
        states = new_states
    diagrams = []
    for completed, top in states:
        strings = list(completed) + [(nodes, True) for nodes in top]
        diagrams.append(make_diagram(chi, eps, strings, top))
    fam = DiagramFamily(chi, eps, (), "plain")
    return fam.with_diagrams(diagrams, "plain")


def lr_k(fam: DiagramFamily, k: int) -> DiagramFamily:
    """Sub-family with exactly k strings reaching the top gap."""
    return fam.with_diagrams([d for d in fam.diagrams if d.top_count() == k])


def single_cuts(diagram: LRDiagram):
    """All diagrams obtained by one cut between adjacent ribs.

    Cutting between ribs c-1 and c of a string keeps the upper part in
    place (with any top flag) and closes off the lower part.
    """
    for nodes, top in diagram.strings:
        if len(nodes) < 2:
            continue
        for c in range(1, len(nodes)):
            upper, lower = nodes[:c], nodes[c:]
            others = [(s, t) for s, t in diagram.strings if s != nodes]
            new_strings = others + [(upper, top), (lower, False)]
            order = tuple(upper if s == nodes else s for s in diagram.spine_order)
            yield make_diagram(diagram.chi, diagram.eps, new_strings, order), c


def lateral_closure(fam: DiagramFamily) -> DiagramFamily:
    """Closure under single cuts; idempotent and containing the input."""
    seen = {d.key(): d for d in fam.diagrams}
    frontier = list(fam.diagrams)
    while frontier:
        d = frontier.pop()
        for cut, _ in single_cuts(d):
            if cut.key() not in seen:
                seen[cut.key()] = cut
                frontier.append(cut)
    return fam.with_diagrams(seen.values(), "lateral")


def filter_boolean(fam: DiagramFamily, k: int):
    """Split by the top-gap colour rule: keep diagrams with no top
    string, or exactly one of colour k."""
    kept, removed = [], []
    for d in fam.diagrams:
        shades = d.top_shades()
        if len(shades) == 0 or (len(shades) == 1 and shades[0] == k):
            kept.append(d)
        else:
            removed.append(d)
    return fam.with_diagrams(kept), fam.with_diagrams(removed)


def diagram_to_partition(d: LRDiagram) -> SetPartition:
    if d.top_count() != 0:
        raise HasTopSpine("diagram has strings reaching the top gap")
    return SetPartition.from_blocks(d.n, [nodes for nodes, _ in d.strings])


def is_realizable(d: LRDiagram) -> bool:
    """Membership in the lateral closure of the plain family."""
    lat = lateral_closure(enumerate_lr(d.chi, d.eps))
    return d.key() in lat.keys()


def _boundary_key(d: LRDiagram, nodes: tuple[int, ...], top: bool, i: int):
    """Order key of a string crossing the boundary above node i.

    Walk from the left column just above the boundary: ribs above on the
    left first (lowest first), then top-gap spines left to right, then
    ribs above on the right (highest first).
    """
    keys = []
    for p in nodes:
        if p >= i:
            continue
        keys.append((0, i - p) if d.chi.side(p) == "l" else (2, p))
    if top:
        keys.append((1, d.spine_order.index(nodes) + 1))
    return min(keys)


def restrict(d: LRDiagram, i: int) -> LRDiagram:
    """Restriction to nodes i..n, relabelled to 1..n-i+1.

    A string's piece reaches the restricted top gap when the string
    reaches the full top gap or extends above the boundary; the pieces
    are ordered by where their spines cross the boundary.
    """
    if not 1 <= i <= d.n + 1:
        raise ValueError(f"position {i} out of range")
    shift = i - 1
    new_chi = ChiMap(d.chi.sides[shift:])
    new_eps = EpsilonMap(d.eps.colours[shift:])
    strings = []
    crossing = []
    for nodes, top in d.strings:
        piece = tuple(j - shift for j in nodes if j >= i)
        if not piece:
            continue
        reaches = top or min(nodes) < i
        strings.append((piece, reaches))
        if reaches:
            crossing.append((nodes, top, piece))
    order = []
    for nodes, top, piece in sorted(
        crossing, key=lambda e: _boundary_key(d, e[0], e[1], i)
    ):
        order.append(piece)
    return make_diagram(new_chi, new_eps, strings, order)


def chi_extensions(
    suffix_family: DiagramFamily, chi: ChiMap, eps: EpsilonMap, cap: int | None = None
) -> DiagramFamily:
    """Diagrams of the full word reachable from the suffix family.

    D qualifies when some D' in the full lateral closure restricts to a
    family member and D follows from D' by cuts whose upper rib lies
    strictly above the suffix start.
    """
    _check_lengths(chi, eps)
    i = chi.n - suffix_family.chi.n + 1
    if (
        chi.sides[i - 1 :] != suffix_family.chi.sides
        or eps.colours[i - 1 :] != suffix_family.eps.colours
    ):
        raise SuffixMismatch("suffix colourings do not match the full word")
    full = lateral_closure(enumerate_lr(chi, eps, cap=cap))
    suffix_keys = suffix_family.keys()
    if i == 1:
        return full.with_diagrams(
            [d for d in full.diagrams if d.key() in suffix_keys], "lateral"
        )
    seeds = [d for d in full.diagrams if restrict(d, i).key() in suffix_keys]
    seen = {d.key(): d for d in seeds}
    frontier = list(seeds)
    while frontier:
        d = frontier.pop()
        for cut in _cuts_above(d, i):
            if cut.key() not in seen:
                seen[cut.key()] = cut
                frontier.append(cut)
    return full.with_diagrams(seen.values(), "lateral")


def _cuts_above(d: LRDiagram, i: int):
    """Single cuts whose upper rib is a node strictly above position i."""
    for nodes, top in d.strings:
        if len(nodes) < 2:
            continue
        for c in range(1, len(nodes)):
            if nodes[c - 1] >= i:
                continue
            upper, lower = nodes[:c], nodes[c:]
            others = [(s, t) for s, t in d.strings if s != nodes]
            new_strings = others + [(upper, top), (lower, False)]
            order = tuple(upper if s == nodes else s for s in d.spine_order)
            yield make_diagram(d.chi, d.eps, new_strings, order)
