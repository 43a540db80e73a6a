"""Exact rational linear algebra over fractions.Fraction.

Small and dependency-free: vectors are lists of Fractions, matrices are
lists of rows.  Everything returns fresh lists; nothing is mutated in
place unless the name says so.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Vec = list[Fraction]
Mat = list[list[Fraction]]

ZERO = Fraction(0)
ONE = Fraction(1)


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def zeros(n: int) -> Vec:
    return [ZERO] * n


def unit_vec(n: int, i: int) -> Vec:
    v = [ZERO] * n
    v[i] = ONE
    return v


def vec_add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return [a + b for a, b in zip(u, v, strict=True)]


def vec_sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vec:
    return [a - b for a, b in zip(u, v, strict=True)]


def vec_scale(c: Fraction, v: Sequence[Fraction]) -> Vec:
    return [c * a for a in v]


def is_zero_vec(v: Sequence[Fraction]) -> bool:
    return all(a == 0 for a in v)


def mat_zero(rows: int, cols: int) -> Mat:
    return [[ZERO] * cols for _ in range(rows)]


def identity(n: int) -> Mat:
    return [unit_vec(n, i) for i in range(n)]


def mat_vec(m: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Vec:
    return [sum((row[j] * v[j] for j in range(len(v)) if v[j]), ZERO) for row in m]


def mat_mul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> Mat:
    rows, inner, cols = len(a), len(b), len(b[0]) if b else 0
    out = mat_zero(rows, cols)
    for i in range(rows):
        arow = a[i]
        orow = out[i]
        for k in range(inner):
            c = arow[k]
            if c:
                brow = b[k]
                for j in range(cols):
                    if brow[j]:
                        orow[j] += c * brow[j]
    return out


def mat_add(a: Mat, b: Mat) -> Mat:
    return [vec_add(x, y) for x, y in zip(a, b, strict=True)]


def mat_sub(a: Mat, b: Mat) -> Mat:
    return [vec_sub(x, y) for x, y in zip(a, b, strict=True)]


def mat_eq(a: Mat, b: Mat) -> bool:
    return all(x == y for x, y in zip(a, b, strict=True))


def transpose(m: Mat) -> Mat:
    return [list(col) for col in zip(*m)] if m else []


class RowSpace:
    """Row-reduced span of a set of vectors, built incrementally.

    Keeps rows in reduced echelon form with pivot bookkeeping, so
    membership tests and quotient coordinates are cheap.
    """

    def __init__(self, width: int):
        self.width = width
        self.rows: Mat = []
        self.pivots: list[int] = []

    def reduce(self, v: Sequence[Fraction]) -> Vec:
        """Return v minus its projection onto the span (echelon residual)."""
        v = list(v)
        for row, p in zip(self.rows, self.pivots):
            if v[p]:
                c = v[p]
                for j in range(p, self.width):
                    if row[j]:
                        v[j] -= c * row[j]
        return v

    def add(self, v: Sequence[Fraction]) -> bool:
        """Add v to the span; True if it increased the rank."""
        r = self.reduce(v)
        p = next((j for j in range(self.width) if r[j]), None)
        if p is None:
            return False
        inv = ONE / r[p]
        r = [c * inv for c in r]
        for row in self.rows:
            if row[p]:
                c = row[p]
                for j in range(p, self.width):
                    if r[j]:
                        row[j] -= c * r[j]
        k = next((i for i, q in enumerate(self.pivots) if q > p), len(self.pivots))
        self.rows.insert(k, r)
        self.pivots.insert(k, p)
        return True

    def contains(self, v: Sequence[Fraction]) -> bool:
        return is_zero_vec(self.reduce(v))

    @property
    def rank(self) -> int:
        return len(self.rows)

    def complement_indices(self) -> list[int]:
        """Coordinate indices forming a basis of a complement of the span."""
        piv = set(self.pivots)
        return [j for j in range(self.width) if j not in piv]


def span_basis(vectors: Iterable[Sequence[Fraction]], width: int) -> RowSpace:
    rs = RowSpace(width)
    for v in vectors:
        rs.add(v)
    return rs


def nullspace(m: Mat, cols: int) -> Mat:
    """Basis of the right nullspace of m (rows may be empty)."""
    rs = RowSpace(cols)
    for row in m:
        rs.add(row)
    free = rs.complement_indices()
    basis = []
    for f in free:
        v = zeros(cols)
        v[f] = ONE
        # back-substitute pivot coordinates
        for row, p in zip(rs.rows, rs.pivots):
            if row[f]:
                v[p] = -row[f]
        basis.append(v)
    return basis


class Basis:
    """Independent vectors with coordinate solving against them."""

    def __init__(self, width: int):
        self.width = width
        self.vectors: list[Vec] = []
        self._rows: list[Vec] = []  # echelon forms of the vectors
        self._combs: list[Vec] = []  # echelon rows over self.vectors
        self._pivots: list[int] = []

    def _reduce(self, v: Sequence[Fraction]):
        r = list(v)
        comb = zeros(len(self.vectors))
        for row, cmb, p in zip(self._rows, self._combs, self._pivots):
            if r[p]:
                f = r[p]
                for j in range(self.width):
                    if row[j]:
                        r[j] -= f * row[j]
                for j in range(len(cmb)):
                    if cmb[j]:
                        comb[j] -= f * cmb[j]
        return r, comb

    def add(self, v: Sequence[Fraction]) -> bool:
        r, comb = self._reduce(v)
        p = next((j for j in range(self.width) if r[j]), None)
        if p is None:
            return False
        self.vectors.append(list(v))
        comb = comb + [ONE]
        for c in self._combs:
            c.append(ZERO)
        inv = ONE / r[p]
        r = [x * inv for x in r]
        comb = [x * inv for x in comb]
        for row, cmb in zip(self._rows, self._combs):
            if row[p]:
                f = row[p]
                for j in range(self.width):
                    if r[j]:
                        row[j] -= f * r[j]
                for j in range(len(comb)):
                    if comb[j]:
                        cmb[j] -= f * comb[j]
        k = next((i for i, q in enumerate(self._pivots) if q > p), len(self._pivots))
        self._rows.insert(k, r)
        self._combs.insert(k, comb)
        self._pivots.insert(k, p)
        return True

    @property
    def rank(self) -> int:
        return len(self.vectors)

    def express(self, v: Sequence[Fraction]) -> Vec | None:
        """Coordinates of v over the added vectors, or None if outside."""
        r, comb = self._reduce(v)
        if not is_zero_vec(r):
            return None
        return [-c for c in comb]


class Quotient:
    """Quotient of coordinate space ℚ^width by a spanned subspace.

    project() maps ambient vectors to quotient coordinates (indexed by
    the non-pivot coordinates of the subspace); section() lifts quotient
    coordinates back to canonical representatives.
    """

    def __init__(self, subspace: RowSpace):
        self.sub = subspace
        self.width = subspace.width
        self.coords = subspace.complement_indices()
        self.dim = len(self.coords)

    def project(self, v: Sequence[Fraction]) -> Vec:
        r = self.sub.reduce(v)
        return [r[j] for j in self.coords]

    def section(self, q: Sequence[Fraction]) -> Vec:
        v = zeros(self.width)
        for j, c in zip(self.coords, q, strict=True):
            v[j] = c
        return v
