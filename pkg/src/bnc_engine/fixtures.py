"""Built-in desk-scale spaces, families, and systems.

Every verification entry point runs against these without user data:
scalars, the diagonal pair inside 2x2 matrices, the 2x2 matrix algebra
with its corner expectation, the two-dimensional nilpotent extension,
and the doubled-module systems built over them.
"""

from __future__ import annotations

import random

from .algebra import (
    AlgebraElement,
    BBProbSpace,
    algebra_diagonal,
    algebra_dual_numbers,
    algebra_from_matrix_units,
    algebra_scalars,
)
from .ffb import FfbFamily, FfbSystem, embed_ffb_family
from .linalg import ONE, ZERO


def space_scalar() -> BBProbSpace:
    B = algebra_scalars()
    return BBProbSpace(B, B, ((ONE,),), ((ONE,),), ((ONE,),))


def space_m2_scalar() -> BBProbSpace:
    """Full 2x2 matrices over scalars; expectation reads the corner."""
    A = algebra_from_matrix_units(2)
    B = algebra_scalars()
    expectation = ((ONE, ZERO, ZERO, ZERO),)
    embed = tuple((c,) for c in (ONE, ZERO, ZERO, ONE))
    return BBProbSpace(A, B, expectation, embed, embed)


def space_diag2() -> BBProbSpace:
    """2x2 matrices over their diagonal subalgebra."""
    A = algebra_from_matrix_units(2)
    B = algebra_diagonal(2)
    expectation = (
        (ONE, ZERO, ZERO, ZERO),
        (ZERO, ZERO, ZERO, ONE),
    )
    embed = (
        (ONE, ZERO),
        (ZERO, ZERO),
        (ZERO, ZERO),
        (ZERO, ONE),
    )
    return BBProbSpace(A, B, expectation, embed, embed)


def space_diag2_bad_expectation() -> BBProbSpace:
    """Deliberately broken: pads the strictly upper corner across B."""
    A = algebra_from_matrix_units(2)
    B = algebra_diagonal(2)
    expectation = (
        (ZERO, ONE, ZERO, ZERO),
        (ZERO, ONE, ZERO, ZERO),
    )
    embed = (
        (ONE, ZERO),
        (ZERO, ZERO),
        (ZERO, ZERO),
        (ZERO, ONE),
    )
    return BBProbSpace(A, B, expectation, embed, embed)


def space_dual() -> BBProbSpace:
    """Two-dimensional nilpotent extension of the scalars."""
    A = algebra_dual_numbers()
    B = algebra_scalars()
    return BBProbSpace(A, B, ((ONE, ZERO),), ((ONE,), (ZERO,)), ((ONE,), (ZERO,)))


def family_m2(colours=(1, 2), rich: bool = False) -> FfbFamily:
    sp = space_m2_scalar()
    A = sp.A
    e12 = A.basis_element(1)
    e21 = A.basis_element(2)
    e11 = A.basis_element(0)
    flip = e12 + e21
    corner = e11 + e12
    faces = {}
    for k in colours:
        if rich:
            faces[k] = {"l": [flip, e12], "r": [flip, e21], "b": [corner, e11]}
        else:
            faces[k] = {"l": [flip], "r": [flip], "b": [corner]}
    return FfbFamily(sp, faces)


def family_dual(colours=(1, 2)) -> FfbFamily:
    sp = space_dual()
    u = sp.A.element((ONE, ONE))  # 1 + x
    faces = {k: {"l": [u], "r": [u], "b": [u]} for k in colours}
    return FfbFamily(sp, faces)


def system_doubled_m2(depth: int, rich: bool = False) -> FfbSystem:
    return embed_ffb_family(family_m2(rich=rich), depth)


def system_doubled_dual(depth: int) -> FfbSystem:
    return embed_ffb_family(family_dual(), depth)


SPACES = {
    "scalar": space_scalar,
    "diag2": space_diag2,
    "diag2-bad": space_diag2_bad_expectation,  # negative-control fixture
    "m2-scalar": space_m2_scalar,
    "dual": space_dual,
}

FAMILIES = {
    "m2-scalar": family_m2,
    "dual": family_dual,
}

SYSTEMS = {
    "doubled-m2": system_doubled_m2,
    "doubled-dual": system_doubled_dual,
}


def load_space(name: str) -> BBProbSpace:
    if name not in SPACES:
        raise KeyError(f"unknown space fixture {name!r}; have {sorted(SPACES)}")
    return SPACES[name]()


def load_system(name: str, depth: int) -> FfbSystem:
    if name not in SYSTEMS:
        raise KeyError(f"unknown system fixture {name!r}; have {sorted(SYSTEMS)}")
    return SYSTEMS[name](depth)


def sample_side_element(
    space: BBProbSpace, side: str, rng: random.Random, span: int = 3
) -> AlgebraElement:
    """Random element of the requested one-sided commutant."""
    A, B = space.A, space.B
    basis = []
    for t in range(A.dim):
        e = A.basis_element(t)
        ok = True
        for i in range(B.dim):
            other = (
                space.embed_right(B.basis_element(i))
                if side == "l"
                else space.embed_left(B.basis_element(i))
            )
            if (e * other).coeffs != (other * e).coeffs:
                ok = False
                break
        if ok:
            basis.append(e)
    if not basis:
        raise ValueError("no basis elements lie in the requested commutant")
    out = basis[0].scale(rng.randint(-span, span))
    for e in basis[1:]:
        out = out + e.scale(rng.randint(-span, span))
    return out
