"""Reduction engine for partition-indexed moments.

The recursion collapses one block at a time, always the closed block
with the largest minimum element.  A closed block that forms the tail
of the surviving positions folds its value onto the preceding operator
from the right; otherwise its value is inserted, on the side named by
its minimum's colour, onto the first later element of the adjacent
block: the block whose spine runs next to the collapsed one in the
two-column picture.  Blocks whose string reaches the top gap are never
collapsed; once only those remain, the caller takes over.

Spine adjacency is computed from the picture's geometry: a spine
crosses height j when it has a rib below j and either a rib above j or
a segment running to the top gap; among the crossing spines, a left
node attaches to the one nearest the left column and a right node to
the one nearest the right column.  Nearness is read off along the
boundary walk from the node's column through the top gap (ribs just
above on the same side first, then top-gap spines in their left-right
order, then ribs just above on the far side).

Evaluation contexts supply the algebra: ordered-word expectation and
the three insertion operations.  The engine never multiplies elements
itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional


class ReductionError(RuntimeError):
    """Block structure admits no legal collapse step."""


@dataclass(frozen=True)
class ReduceBlock:
    positions: tuple[int, ...]  # 1-based original indices, ascending
    top: bool = False
    gap_rank: Optional[int] = None  # 1 = leftmost top spine


class MomentContext:
    """Interface for moment evaluation; subclasses define the algebra."""

    def expect(self, elems: list) -> object:
        """Expectation of the ordered product; B element."""
        raise NotImplementedError

    def unit_b(self) -> object:
        raise NotImplementedError

    def prepend_left(self, value, elem):
        """L_value . elem"""
        raise NotImplementedError

    def prepend_right(self, value, elem):
        """R_value . elem"""
        raise NotImplementedError

    def append_left(self, elem, value):
        """elem . L_value"""
        raise NotImplementedError


def _crosses(other: ReduceBlock, j: int) -> bool:
    if max(other.positions) <= j:
        return False
    return other.top or min(other.positions) < j


def _arc_key(other: ReduceBlock, j: int, side: dict[int, str], from_left: bool):
    """Position of the block's nearest presence on the walk from height j.

    The walk starts at the node's column just above height j, runs up
    that column, across the top gap, and down the far column.
    """
    same = "l" if from_left else "r"
    keys = []
    for p in other.positions:
        if p >= j:
            continue
        keys.append((0, j - p) if side[p] == same else (2, p))
    if other.top:
        keys.append((1, other.gap_rank if from_left else -other.gap_rank))
    return min(keys)


def _case3_target(block: ReduceBlock, blocks, side: dict[int, str]):
    j = block.positions[0]
    crossing = [w for w in blocks if w is not block and _crosses(w, j)]
    if not crossing:
        return None
    from_left = side[j] == "l"
    w = min(crossing, key=lambda o: _arc_key(o, j, side, from_left))
    later = [p for p in w.positions if p > j]
    if not later:
        return None
    return w, min(later)


def collapsible(block: ReduceBlock, blocks, alive: list[int], side) -> bool:
    """Whether the engine could legally collapse this block right now."""
    if block.top:
        return False
    if len(blocks) == 1:
        return True
    k = len(alive) - len(block.positions)
    if tuple(alive[k:]) == block.positions:
        return True
    return _case3_target(block, blocks, side) is not None


def reduce_blocks(
    blocks: list[ReduceBlock],
    ops: dict[int, object],
    side: dict[int, str],
    ctx: MomentContext,
    chooser: Optional[Callable[[list[ReduceBlock]], ReduceBlock]] = None,
):
    """Collapse closed blocks until only top-gap blocks remain.

    Returns ('scalar', value) when everything collapsed, else
    ('tops', top_blocks_in_gap_order, ops).  chooser may pick any
    currently collapsible block (defaults to the largest minimum); the
    result must not depend on this choice.
    """
    blocks = list(blocks)
    ops = dict(ops)
    while True:
        closed = [b for b in blocks if not b.top]
        if not closed:
            tops = sorted(blocks, key=lambda b: b.gap_rank)
            return ("tops", tops, ops)
        if chooser is None:
            v = max(closed, key=lambda b: b.positions[0])
        else:
            alive = sorted(p for b in blocks for p in b.positions)
            candidates = [b for b in closed if collapsible(b, blocks, alive, side)]
            if not candidates:
                raise ReductionError("no collapsible block")
            v = chooser(candidates)
        value = ctx.expect([ops[p] for p in v.positions])
        blocks.remove(v)
        if not blocks:
            return ("scalar", value)
        alive = sorted(p for b in blocks for p in b.positions)
        if all(p < v.positions[0] for p in alive):
            target = alive[-1]
            ops[target] = ctx.append_left(ops[target], value)
            continue
        found = _case3_target(v, blocks, side)
        if found is None:
            raise ReductionError(
                f"block {v.positions} is neither a tail nor next to a spine"
            )
        _, target = found
        if side[v.positions[0]] == "l":
            ops[target] = ctx.prepend_left(value, ops[target])
        else:
            ops[target] = ctx.prepend_right(value, ops[target])


def blocks_from_partition(pi, tops: dict[tuple[int, ...], int] | None = None):
    """ReduceBlocks from a partition; tops maps node-sets to gap ranks."""
    tops = tops or {}
    out = []
    for blk in pi.blocks():
        rank = tops.get(blk)
        out.append(ReduceBlock(blk, top=rank is not None, gap_rank=rank))
    return out
