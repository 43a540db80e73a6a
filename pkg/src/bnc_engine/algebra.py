"""Finite-dimensional unital algebras over exact rationals.

A StructuredAlgebra is given by a basis and structure constants; a
BBProbSpace bundles an ambient algebra with a base algebra B, an
expectation onto B, and commuting left/right embeddings of B.  All
arithmetic is exact; axiom checks report witnesses instead of raising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .linalg import (
    ONE,
    Vec,
    ZERO,
    RowSpace,
    frac,
    is_zero_vec,
    mat_vec,
    unit_vec,
    vec_add,
    vec_scale,
    zeros,
)


class MismatchedAlgebra(ValueError):
    """Operands belong to different algebras."""


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


@dataclass(frozen=True)
class StructuredAlgebra:
    """Unital algebra with designated basis and rational structure constants.

    mult[i][j] is the coefficient vector of e_i * e_j; unit is the
    coefficient vector of the identity.
    """

    dim: int
    labels: tuple[str, ...]
    mult: tuple[tuple[tuple[Fraction, ...], ...], ...]
    unit: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.labels) != self.dim or len(self.unit) != self.dim:
            raise ValueError("label/unit length must equal dim")

    def element(self, coeffs) -> "AlgebraElement":
        coeffs = [frac(c) for c in coeffs]
        if len(coeffs) != self.dim:
            raise MismatchedAlgebra("coefficient vector has wrong length")
        return AlgebraElement(self, tuple(coeffs))

    def basis_element(self, i: int) -> "AlgebraElement":
        return AlgebraElement(self, tuple(unit_vec(self.dim, i)))

    def one(self) -> "AlgebraElement":
        return AlgebraElement(self, self.unit)

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, tuple(zeros(self.dim)))

    def mul_coeffs(self, x: Vec, y: Vec) -> Vec:
        out = zeros(self.dim)
        for i, xi in enumerate(x):
            if not xi:
                continue
            mi = self.mult[i]
            for j, yj in enumerate(y):
                if not yj:
                    continue
                c = xi * yj
                row = mi[j]
                for k in range(self.dim):
                    if row[k]:
                        out[k] += c * row[k]
        return out

    def associativity_defect(self) -> Optional[tuple[int, int, int]]:
        """First basis triple where (e_i e_j) e_k != e_i (e_j e_k), or None."""
        for i in range(self.dim):
            for j in range(self.dim):
                ij = list(self.mult[i][j])
                for k in range(self.dim):
                    left = self.mul_coeffs(ij, list(unit_vec(self.dim, k)))
                    right = self.mul_coeffs(
                        list(unit_vec(self.dim, i)), list(self.mult[j][k])
                    )
                    if left != right:
                        return (i, j, k)
        return None

    def unit_defect(self) -> Optional[int]:
        for i in range(self.dim):
            e = unit_vec(self.dim, i)
            if self.mul_coeffs(list(self.unit), e) != e:
                return i
            if self.mul_coeffs(e, list(self.unit)) != e:
                return i
        return None

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "labels": list(self.labels),
            "mult": [
                [[_frac_str(c) for c in row] for row in mi] for mi in self.mult
            ],
            "unit": [_frac_str(c) for c in self.unit],
        }

    @staticmethod
    def from_json(data: dict) -> "StructuredAlgebra":
        dim = data["dim"]
        return StructuredAlgebra(
            dim=dim,
            labels=tuple(data["labels"]),
            mult=tuple(
                tuple(tuple(frac(c) for c in row) for row in mi)
                for mi in data["mult"]
            ),
            unit=tuple(frac(c) for c in data["unit"]),
        )


def algebra_from_matrix_units(n: int) -> StructuredAlgebra:
    """Full n x n matrix algebra with matrix-unit basis E_{ab} (row-major)."""
    dim = n * n
    labels = tuple(f"E{a + 1}{b + 1}" for a in range(n) for b in range(n))

    def idx(a, b):
        return a * n + b

    mult = []
    for a in range(n):
        for b in range(n):
            row_i = []
            for c in range(n):
                for d in range(n):
                    v = zeros(dim)
                    if b == c:
                        v[idx(a, d)] = ONE
                    row_i.append(tuple(v))
            mult.append(tuple(row_i))
    unit = zeros(dim)
    for a in range(n):
        unit[idx(a, a)] = ONE
    return StructuredAlgebra(dim, labels, tuple(mult), tuple(unit))


def algebra_scalars() -> StructuredAlgebra:
    """B = rationals."""
    return StructuredAlgebra(1, ("1",), (((ONE,),),), (ONE,))


def algebra_diagonal(n: int) -> StructuredAlgebra:
    """Diagonal n x n matrices: orthogonal idempotents d_1..d_n."""
    labels = tuple(f"d{i + 1}" for i in range(n))
    mult = tuple(
        tuple(
            tuple((ONE if (i == j == k) else ZERO) for k in range(n))
            for j in range(n)
        )
        for i in range(n)
    )
    return StructuredAlgebra(n, labels, mult, tuple([ONE] * n))


def algebra_dual_numbers() -> StructuredAlgebra:
    """Two-dimensional algebra 1, x with x^2 = 0."""
    one = (ONE, ZERO)
    x = (ZERO, ONE)
    zero = (ZERO, ZERO)
    mult = ((one, x), (x, zero))
    return StructuredAlgebra(2, ("1", "x"), mult, one)


@dataclass(frozen=True)
class AlgebraElement:
    parent: StructuredAlgebra
    coeffs: tuple[Fraction, ...]

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.parent, tuple(vec_add(self.coeffs, other.coeffs)))

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(
            self.parent, tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.parent, tuple(-a for a in self.coeffs))

    def scale(self, c) -> "AlgebraElement":
        return AlgebraElement(self.parent, tuple(vec_scale(frac(c), self.coeffs)))

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return algebra_mul(self, other)

    def is_zero(self) -> bool:
        return is_zero_vec(self.coeffs)

    def _check(self, other: "AlgebraElement"):
        if self.parent is not other.parent:
            raise MismatchedAlgebra("elements live in different algebras")

    def __str__(self):
        terms = [
            f"{_frac_str(c)}*{lbl}"
            for c, lbl in zip(self.coeffs, self.parent.labels)
            if c
        ]
        return " + ".join(terms) if terms else "0"


def algebra_mul(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    if x.parent is not y.parent:
        raise MismatchedAlgebra("elements live in different algebras")
    return AlgebraElement(
        x.parent, tuple(x.parent.mul_coeffs(list(x.coeffs), list(y.coeffs)))
    )


def product(elements) -> AlgebraElement:
    """Ordered product; empty product is disallowed (no parent to infer)."""
    elements = list(elements)
    if not elements:
        raise ValueError("empty product")
    out = elements[0]
    for e in elements[1:]:
        out = algebra_mul(out, e)
    return out


@dataclass(frozen=True)
class BBProbSpace:
    """Ambient algebra A with expectation onto B and B (x) B^op embedding.

    expectation: dim(B) x dim(A) matrix.  left_embed/right_embed:
    dim(A) x dim(B) matrices whose columns are images of B basis
    elements (L_b and R_b).
    """

    A: StructuredAlgebra
    B: StructuredAlgebra
    expectation: tuple[tuple[Fraction, ...], ...]
    left_embed: tuple[tuple[Fraction, ...], ...]
    right_embed: tuple[tuple[Fraction, ...], ...]

    def expect(self, x: AlgebraElement) -> AlgebraElement:
        return expectation_apply(self, x)

    def embed_left(self, b: AlgebraElement) -> AlgebraElement:
        if b.parent is not self.B:
            raise MismatchedAlgebra("expected an element of B")
        return self.A.element(mat_vec(self.left_embed, list(b.coeffs)))

    def embed_right(self, b: AlgebraElement) -> AlgebraElement:
        if b.parent is not self.B:
            raise MismatchedAlgebra("expected an element of B")
        return self.A.element(mat_vec(self.right_embed, list(b.coeffs)))

    def expect_word(self, elements) -> AlgebraElement:
        elements = list(elements)
        if not elements:
            return self.B.one()
        return self.expect(product(elements))

    def to_json(self) -> dict:
        return {
            "A": self.A.to_json(),
            "B": self.B.to_json(),
            "expectation": [[_frac_str(c) for c in row] for row in self.expectation],
            "left_embed": [[_frac_str(c) for c in row] for row in self.left_embed],
            "right_embed": [[_frac_str(c) for c in row] for row in self.right_embed],
        }

    @staticmethod
    def from_json(data: dict) -> "BBProbSpace":
        return BBProbSpace(
            A=StructuredAlgebra.from_json(data["A"]),
            B=StructuredAlgebra.from_json(data["B"]),
            expectation=tuple(
                tuple(frac(c) for c in row) for row in data["expectation"]
            ),
            left_embed=tuple(
                tuple(frac(c) for c in row) for row in data["left_embed"]
            ),
            right_embed=tuple(
                tuple(frac(c) for c in row) for row in data["right_embed"]
            ),
        )


def expectation_apply(space: BBProbSpace, x: AlgebraElement) -> AlgebraElement:
    if x.parent is not space.A:
        raise MismatchedAlgebra("element does not live in the ambient algebra")
    return space.B.element(mat_vec(space.expectation, list(x.coeffs)))


@dataclass
class AxiomReport:
    claims: list[dict] = field(default_factory=list)

    def record(self, name: str, ok: bool, witness=None):
        entry = {"id": name, "status": "pass" if ok else "fail"}
        if not ok and witness is not None:
            entry["witness"] = witness
        self.claims.append(entry)

    @property
    def ok(self) -> bool:
        return all(c["status"] == "pass" for c in self.claims)

    def to_json(self) -> dict:
        return {"claims": self.claims, "ok": self.ok}


def check_bb_axioms(space: BBProbSpace) -> AxiomReport:
    """Verify the compatibility axioms of (A, E, embeddings); pure report."""
    rep = AxiomReport()
    A, B = space.A, space.B
    bdim, adim = B.dim, A.dim

    defect = A.associativity_defect()
    rep.record("A-associative", defect is None, witness=defect)
    defect = B.associativity_defect()
    rep.record("B-associative", defect is None, witness=defect)

    lrank = RowSpace(adim)
    for col in zip(*space.left_embed):
        lrank.add(list(col))
    rep.record("left-embed-injective", lrank.rank == bdim)
    rrank = RowSpace(adim)
    for col in zip(*space.right_embed):
        rrank.add(list(col))
    rep.record("right-embed-injective", rrank.rank == bdim)

    one_b = B.one()
    ok = space.embed_left(one_b).coeffs == A.unit and (
        space.embed_right(one_b).coeffs == A.unit
    )
    rep.record("embeds-unital", ok)

    wit = None
    for i in range(bdim):
        for j in range(bdim):
            bi, bj = B.basis_element(i), B.basis_element(j)
            lhs = space.embed_left(bi * bj)
            rhs = space.embed_left(bi) * space.embed_left(bj)
            if lhs.coeffs != rhs.coeffs:
                wit = ("left", i, j)
                break
            # right embedding reverses products
            lhs = space.embed_right(bi * bj)
            rhs = space.embed_right(bj) * space.embed_right(bi)
            if lhs.coeffs != rhs.coeffs:
                wit = ("right", i, j)
                break
        if wit:
            break
    rep.record("embeds-multiplicative", wit is None, witness=wit)

    wit = None
    for i in range(bdim):
        li = space.embed_left(B.basis_element(i))
        for j in range(bdim):
            rj = space.embed_right(B.basis_element(j))
            if (li * rj).coeffs != (rj * li).coeffs:
                wit = (i, j)
                break
        if wit:
            break
    rep.record("left-right-commute", wit is None, witness=wit)

    ok = space.expect(A.one()).coeffs == B.unit
    rep.record("expectation-unital", ok)

    wit = None
    for i in range(bdim):
        li = space.embed_left(B.basis_element(i))
        for j in range(bdim):
            rj = space.embed_right(B.basis_element(j))
            for t in range(adim):
                et = A.basis_element(t)
                lhs = space.expect(li * rj * et)
                rhs = B.basis_element(i) * space.expect(et) * B.basis_element(j)
                if lhs.coeffs != rhs.coeffs:
                    wit = (i, j, t)
                    break
            if wit:
                break
        if wit:
            break
    rep.record("expectation-bimodular", wit is None, witness=wit)

    wit = None
    for t in range(adim):
        et = A.basis_element(t)
        for i in range(bdim):
            bi = B.basis_element(i)
            lhs = space.expect(et * space.embed_left(bi))
            rhs = space.expect(et * space.embed_right(bi))
            if lhs.coeffs != rhs.coeffs:
                wit = (t, i)
                break
        if wit:
            break
    rep.record("expectation-left-right-balance", wit is None, witness=wit)
    return rep


@dataclass
class FaceAssignment:
    """Generator lists for faces: per index k, slots 'l', 'r', 'b'.

    Slot 'l' and 'b' elements must commute with all R_b; slot 'r' with
    all L_b.  Membership is checked on the given generators only.
    """

    space: BBProbSpace
    faces: dict[int, dict[str, list[AlgebraElement]]]

    def check(self) -> AxiomReport:
        rep = AxiomReport()
        sp = self.space
        B = sp.B
        rbs = [sp.embed_right(B.basis_element(i)) for i in range(B.dim)]
        lbs = [sp.embed_left(B.basis_element(i)) for i in range(B.dim)]
        for k, slots in sorted(self.faces.items()):
            for slot, gens in sorted(slots.items()):
                need = rbs if slot in ("l", "b") else lbs
                wit = None
                for gi, g in enumerate(gens):
                    for ci, c in enumerate(need):
                        if (g * c).coeffs != (c * g).coeffs:
                            wit = (gi, ci)
                            break
                    if wit:
                        break
                rep.record(f"face-{k}-{slot}-side", wit is None, witness=wit)
            # boolean faces absorb two-sided multiplication by L_B on generators
            if "b" in slots:
                span = RowSpace(sp.A.dim)
                for h in slots["b"]:
                    span.add(list(h.coeffs))
                wit = None
                for gi, g in enumerate(slots["b"]):
                    for i in range(B.dim):
                        for j in range(B.dim):
                            prod = lbs[i] * g * lbs[j]
                            if not span.contains(list(prod.coeffs)):
                                wit = (gi, i, j)
                                break
                        if wit:
                            break
                    if wit:
                        break
                rep.record(f"face-{k}-b-absorbing", wit is None, witness=wit)
        return rep


def space_to_json_str(space: BBProbSpace) -> str:
    return json.dumps(space.to_json(), sort_keys=True)


def space_from_json_str(text: str) -> BBProbSpace:
    return BBProbSpace.from_json(json.loads(text))
