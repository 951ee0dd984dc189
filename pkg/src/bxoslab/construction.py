"""Correlated-basis hard instances for two-bidder binary-XOS auctions.

The construction lives on a universe whose size is a multiple of 16.  A
*basis* is a pair of half-size sets with a fixed 4-cell membership profile;
two bases are *compatible* when their joint 16-cell profile matches a fixed
vector.  Clause pairs are drawn per basis with fixed profiles, and exactly
one index hides a *special* clause pair whose two sides, across the two
bidders, cover the whole universe.  All profile vectors scale linearly with
the universe size.

Every profile vector that is not hard-coded below (the clause-pair joint
profile and the 64-cell full profile) is computed from an embedded 16-item
reference configuration rather than typed in, and the derived per-cell count
tables used by the samplers are re-checked for consistency on first use; a
failed check raises rather than sampling from a wrong distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Literal, Sequence

from .itemsets import ItemSet, UniverseMismatch, part_cells, part_profile
from .rng import RngStream
from .sampling import refine_sample

Variant = Literal["nu", "nu_prime"]
VARIANTS = ("nu", "nu_prime")

# Base profile vectors at scale m=16 (one unit per entry equals m/16 items).
_BASIS_BASE = (5, 3, 3, 5)
_CMP_BASE = (4, 1, 0, 0, 0, 1, 2, 0, 1, 0, 1, 1, 0, 1, 0, 4)
_REG_BASE = (2, 1, 2, 3)
_REGPAIR_BASE = (0, 0, 1, 1)
_SPEC1_BASE = (2, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 2)
_SPEC2_BASE = (2, 0, 0, 0, 0, 0, 2, 0, 1, 0, 0, 0, 0, 1, 0, 2)
_SPECPAIR_BASE = (0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0)

# 16-item reference configuration: a compatible basis pair plus a special
# clause pair, as 0-indexed item tuples.
REFERENCE_M = 16
_REF_S1 = (0, 1, 2, 6, 8, 9, 10, 11)
_REF_S2 = (3, 4, 5, 6, 8, 9, 10, 11)
_REF_T1 = (1, 2, 3, 4, 8, 9, 10, 11)
_REF_T2 = (1, 5, 6, 7, 8, 9, 10, 11)
_REF_A1 = (0, 2, 5, 6, 8, 9, 14, 15)
_REF_A2 = (0, 3, 4, 6, 10, 11, 12, 13)


class ConstructionError(ValueError):
    """Raised when a profile constraint or derived count table is violated."""


@dataclass(frozen=True)
class Basis:
    """A pair of half-size sets with the fixed 4-cell membership profile."""

    s1: ItemSet
    s2: ItemSet

    def __post_init__(self) -> None:
        if self.s1.m != self.s2.m:
            raise UniverseMismatch("basis halves live over different universes")
        m = self.s1.m
        expected = _scaled(_BASIS_BASE, m)
        got = part_profile(m, (self.s1, self.s2))
        if got != expected:
            raise ConstructionError(f"not a basis: profile {got} != {expected}")

    @property
    def m(self) -> int:
        return self.s1.m

    @property
    def rev(self) -> "Basis":
        return Basis(self.s2, self.s1)

    def sets(self) -> tuple[ItemSet, ItemSet]:
        return (self.s1, self.s2)


@dataclass(frozen=True)
class ConstantVectors:
    """All profile vectors of the construction, scaled to a universe size."""

    m: int
    basis: tuple[int, ...]
    cmp: tuple[int, ...]
    reg: tuple[int, ...]
    regpair: tuple[int, ...]
    spec1: tuple[int, ...]
    spec2: tuple[int, ...]
    specpair: tuple[int, ...]
    pair_profile: tuple[int, ...]
    opt_profile: tuple[int, ...]


def _scaled(base: Sequence[int], m: int) -> tuple[int, ...]:
    if m % 16 != 0 or m < 16:
        raise ConstructionError(f"universe size must be a positive multiple of 16, got {m}")
    scale = m // 16
    return tuple(v * scale for v in base)


def reference_configuration() -> tuple[Basis, Basis, tuple[ItemSet, ItemSet]]:
    """The embedded 16-item layout: (S, T, special clause pair)."""
    m = REFERENCE_M
    s = Basis(ItemSet.from_indices(m, _REF_S1), ItemSet.from_indices(m, _REF_S2))
    t = Basis(ItemSet.from_indices(m, _REF_T1), ItemSet.from_indices(m, _REF_T2))
    a1 = ItemSet.from_indices(m, _REF_A1)
    a2 = ItemSet.from_indices(m, _REF_A2)
    return s, t, (a1, a2)


@lru_cache(maxsize=None)
def _reference_profiles() -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Compute (pair_profile, opt_profile) at m=16 from the reference layout,
    after re-deriving every hard-coded vector from it as a consistency check."""
    m = REFERENCE_M
    s, t, (a1, a2) = reference_configuration()
    st = (*s.sets(), *t.sets())
    checks = {
        "basis": (part_profile(m, s.sets()), _BASIS_BASE),
        "cmp": (part_profile(m, st), _CMP_BASE),
        "reg": (part_profile(m, s.sets(), a1), _REG_BASE),
        "reg_rev": (part_profile(m, s.rev.sets(), a2), _REG_BASE),
        "regpair": (part_profile(m, s.sets(), a1 & a2), _REGPAIR_BASE),
        "spec1": (part_profile(m, st, a1), _SPEC1_BASE),
        "spec2": (part_profile(m, st, a2), _SPEC2_BASE),
        "specpair": (part_profile(m, st, a1 & a2), _SPECPAIR_BASE),
    }
    for name, (got, want) in checks.items():
        if got != tuple(want):
            raise ConstructionError(f"reference configuration violates {name}: {got} != {want}")
    pair = part_profile(m, (*s.sets(), a1, a2))
    opt = part_profile(m, (*st, a1, a2))
    return pair, opt


@lru_cache(maxsize=None)
def constant_vectors(m: int) -> ConstantVectors:
    """All profile vectors scaled to universe size ``m`` (16 must divide m)."""
    pair16, opt16 = _reference_profiles()
    return ConstantVectors(
        m=m,
        basis=_scaled(_BASIS_BASE, m),
        cmp=_scaled(_CMP_BASE, m),
        reg=_scaled(_REG_BASE, m),
        regpair=_scaled(_REGPAIR_BASE, m),
        spec1=_scaled(_SPEC1_BASE, m),
        spec2=_scaled(_SPEC2_BASE, m),
        specpair=_scaled(_SPECPAIR_BASE, m),
        pair_profile=_scaled(pair16, m),
        opt_profile=_scaled(opt16, m),
    )


def _check_rows(
    name: str, rows: tuple[tuple[int, ...], ...], row_sums: Sequence[int]
) -> tuple[tuple[int, ...], ...]:
    for row, want in zip(rows, row_sums):
        if any(v < 0 for v in row):
            raise ConstructionError(f"derived {name} table has a negative count: {row}")
        if sum(row) != want:
            raise ConstructionError(f"derived {name} row {row} does not sum to cell size {want}")
    return rows


@lru_cache(maxsize=None)
def compatible_cell_counts(m: int) -> tuple[tuple[int, ...], ...]:
    """Per 4-cell of a basis: how its items split over the second basis's
    four membership patterns (00, 01, 10, 11), read off the 16-cell vector."""
    vec = constant_vectors(m)
    rows = tuple(tuple(vec.cmp[4 * s + t] for t in range(4)) for s in range(4))
    return _check_rows("compatibility", rows, vec.basis)


@lru_cache(maxsize=None)
def clause_pair_cell_counts(m: int) -> tuple[tuple[int, ...], ...]:
    """Per 4-cell of a basis: joint class counts (both, first only, second
    only, neither) of a clause pair, forced by the single-clause profiles of
    the two copies plus the pairwise-intersection profile."""
    vec = constant_vectors(m)
    # The second clause's profile is stated against the reversed basis, whose
    # cell order swaps the two middle positions.
    reg2 = (vec.reg[0], vec.reg[2], vec.reg[1], vec.reg[3])
    rows = []
    for c in range(4):
        both = vec.regpair[c]
        rows.append(
            (
                both,
                vec.reg[c] - both,
                reg2[c] - both,
                vec.basis[c] - vec.reg[c] - reg2[c] + both,
            )
        )
    return _check_rows("clause pair", tuple(rows), vec.basis)


@lru_cache(maxsize=None)
def special_pair_cell_counts(m: int) -> tuple[tuple[int, ...], ...]:
    """Per 16-cell of a compatible basis pair: joint class counts (both,
    first only, second only, neither) of a special clause pair."""
    vec = constant_vectors(m)
    rows = []
    for c in range(16):
        both = vec.specpair[c]
        rows.append(
            (
                both,
                vec.spec1[c] - both,
                vec.spec2[c] - both,
                vec.cmp[c] - vec.spec1[c] - vec.spec2[c] + both,
            )
        )
    return _check_rows("special pair", tuple(rows), vec.cmp)


@lru_cache(maxsize=None)
def second_basis_cell_counts(m: int) -> tuple[tuple[int, ...], ...]:
    """Per 16-cell of (basis, clause pair): the second basis's membership
    pattern counts, obtained by marginalizing the 64-cell full profile.

    Index convention: the 64-cell profile orders indicators as
    (s1, s2, t1, t2, a1, a2) with s1 most significant.
    """
    vec = constant_vectors(m)
    rows = []
    for s1 in (0, 1):
        for s2 in (0, 1):
            for a1 in (0, 1):
                for a2 in (0, 1):
                    row = tuple(
                        vec.opt_profile[32 * s1 + 16 * s2 + 8 * t1 + 4 * t2 + 2 * a1 + a2]
                        for t1 in (0, 1)
                        for t2 in (0, 1)
                    )
                    rows.append(row)
    return _check_rows("second basis", tuple(rows), vec.pair_profile)


def _basis_from_pattern_classes(classes: Sequence[ItemSet]) -> Basis:
    # Classes arrive in pattern order (00, 01, 10, 11) for (first, second).
    return Basis(classes[2] | classes[3], classes[1] | classes[3])


def sample_basis(m: int, rng: RngStream) -> Basis:
    """Uniform draw over all bases."""
    classes = refine_sample([ItemSet.full(m)], [constant_vectors(m).basis], rng)
    return _basis_from_pattern_classes(classes)


def sample_compatible(base: Basis, rng: RngStream) -> Basis:
    """Uniform draw over bases the given basis is compatible with."""
    cells = part_cells(base.m, base.sets())
    classes = refine_sample(cells, compatible_cell_counts(base.m), rng)
    return _basis_from_pattern_classes(classes)


def _pair_from_joint_classes(classes: Sequence[ItemSet]) -> tuple[ItemSet, ItemSet]:
    # Classes arrive as (both, first only, second only, neither).
    return (classes[0] | classes[1], classes[0] | classes[2])


def sample_clause_pair(base: Basis, rng: RngStream) -> tuple[ItemSet, ItemSet]:
    """Uniform draw over clause pairs with respect to the basis.

    The first component is a clause with respect to the basis, the second
    with respect to its reversal, and their overlap profile is fixed.
    """
    cells = part_cells(base.m, base.sets())
    classes = refine_sample(cells, clause_pair_cell_counts(base.m), rng)
    return _pair_from_joint_classes(classes)


def sample_special_pair(s: Basis, t: Basis, rng: RngStream) -> tuple[ItemSet, ItemSet]:
    """Uniform draw over special clause pairs for a compatible basis pair."""
    if not is_compatible(s, t):
        raise ConstructionError("first basis is not compatible with the second")
    cells = part_cells(s.m, (*s.sets(), *t.sets()))
    classes = refine_sample(cells, special_pair_cell_counts(s.m), rng)
    return _pair_from_joint_classes(classes)


def sample_second_basis(s: Basis, a1: ItemSet, a2: ItemSet, rng: RngStream) -> Basis:
    """Uniform draw over bases whose joint 64-cell profile with (s, a1, a2)
    equals the full profile, i.e. those making the given clause pair special."""
    m = s.m
    vec = constant_vectors(m)
    cells = part_cells(m, (*s.sets(), a1, a2))
    if tuple(len(c) for c in cells) != vec.pair_profile:
        raise ConstructionError("sets do not form a clause pair for this basis")
    classes = refine_sample(cells, second_basis_cell_counts(m), rng)
    return _basis_from_pattern_classes(classes)


def validate_profile(m: int, sets: Sequence[ItemSet], expected: Sequence[int]) -> bool:
    """True iff the membership-pattern profile of ``sets`` equals ``expected``."""
    return part_profile(m, sets) == tuple(expected)


def is_basis(s1: ItemSet, s2: ItemSet) -> bool:
    m = s1.m
    return validate_profile(m, (s1, s2), _scaled(_BASIS_BASE, m))


def is_compatible(s: Basis, t: Basis) -> bool:
    """True iff the joint 16-cell profile matches; not symmetric in (s, t)."""
    m = s.m
    return validate_profile(m, (*s.sets(), *t.sets()), constant_vectors(m).cmp)


def is_clause(a: ItemSet, base: Basis) -> bool:
    vec = constant_vectors(base.m)
    return part_profile(base.m, base.sets(), a) == vec.reg


def is_clause_pair(a1: ItemSet, a2: ItemSet, base: Basis) -> bool:
    vec = constant_vectors(base.m)
    return (
        part_profile(base.m, base.sets(), a1) == vec.reg
        and part_profile(base.m, base.rev.sets(), a2) == vec.reg
        and part_profile(base.m, base.sets(), a1 & a2) == vec.regpair
    )


def is_special_pair(a1: ItemSet, a2: ItemSet, s: Basis, t: Basis) -> bool:
    vec = constant_vectors(s.m)
    sets = (*s.sets(), *t.sets())
    return (
        part_profile(s.m, sets, a1) == vec.spec1
        and part_profile(s.m, sets, a2) == vec.spec2
        and part_profile(s.m, sets, a1 & a2) == vec.specpair
    )


@dataclass(frozen=True)
class Instance:
    """One sampled two-bidder input: bases, clause-pair sequences, the hidden
    special index, and the per-index copy choices."""

    m: int
    n: int
    variant: str
    s: Basis
    t: Basis
    i_star: int  # 0-based internally; serialized 1-based
    a1: tuple[ItemSet, ...]
    a2: tuple[ItemSet, ...]
    b1: tuple[ItemSet, ...]
    b2: tuple[ItemSet, ...]
    theta: int
    r_a: tuple[int, ...]
    r_b: tuple[int, ...]
    seed: int = 0

    def validate(self) -> None:
        """Re-check every structural invariant; raises on the first failure."""
        if self.variant not in VARIANTS:
            raise ConstructionError(f"unknown variant {self.variant!r}")
        if self.n < 1:
            raise ConstructionError("at least one clause index is required")
        if not 0 <= self.i_star < self.n:
            raise ConstructionError("special index out of range")
        if self.theta not in (1, 2):
            raise ConstructionError("theta must be 1 or 2")
        for name, seq in (("a1", self.a1), ("a2", self.a2), ("b1", self.b1), ("b2", self.b2)):
            if len(seq) != self.n:
                raise ConstructionError(f"{name} has {len(seq)} entries, expected {self.n}")
            for x in seq:
                if x.m != self.m:
                    raise UniverseMismatch(f"{name} entry width {x.m} != {self.m}")
                if len(x) != self.m // 2:
                    raise ConstructionError(f"{name} clause has size {len(x)}, expected {self.m // 2}")
        for name, seq in (("r_a", self.r_a), ("r_b", self.r_b)):
            if len(seq) != self.n or any(r not in (1, 2) for r in seq):
                raise ConstructionError(f"{name} must be {self.n} values in {{1, 2}}")
        if self.r_a[self.i_star] != self.theta or self.r_b[self.i_star] != self.theta:
            raise ConstructionError("copy choice at the special index must equal theta")
        if not is_compatible(self.s, self.t):
            raise ConstructionError("first basis is not compatible with the second")
        trev = self.t.rev
        for i in range(self.n):
            if i == self.i_star:
                continue
            if not is_clause_pair(self.a1[i], self.a2[i], self.s):
                raise ConstructionError(f"index {i}: not a clause pair for the first bidder")
            if not is_clause_pair(self.b2[i], self.b1[i], trev):
                raise ConstructionError(f"index {i}: not a clause pair for the second bidder")
        i = self.i_star
        if not is_special_pair(self.a1[i], self.a2[i], self.s, self.t):
            raise ConstructionError("special index does not hold a special pair")
        if self.b1[i] != ~self.a1[i] or self.b2[i] != ~self.a2[i]:
            raise ConstructionError("special-index second-bidder clauses must be complements")


def sample_instance(
    m: int, n: int, variant: Variant, rng: RngStream, validate: bool = True
) -> Instance:
    """Draw one full instance.

    ``variant="nu"`` samples the compatible basis pair first and plants the
    special pair at a uniform index.  ``variant="nu_prime"`` draws every
    clause pair first and then the second basis conditioned on the full
    profile at the special index; the two procedures generate identical
    distributions.
    """
    if n < 1:
        raise ConstructionError("at least one clause index is required")
    if variant not in VARIANTS:
        raise ConstructionError(f"unknown variant {variant!r}")
    constant_vectors(m)  # validates m and the derived tables up front

    a1: list = [None] * n
    a2: list = [None] * n
    b1: list = [None] * n
    b2: list = [None] * n

    if variant == "nu":
        s = sample_basis(m, rng)
        t = sample_compatible(s, rng)
        i_star = int(rng.np.integers(n))
        for i in range(n):
            if i == i_star:
                continue
            a1[i], a2[i] = sample_clause_pair(s, rng)
        special = sample_special_pair(s, t, rng)
        a1[i_star], a2[i_star] = special
    else:
        s = sample_basis(m, rng)
        for i in range(n):
            a1[i], a2[i] = sample_clause_pair(s, rng)
        i_star = int(rng.np.integers(n))
        t = sample_second_basis(s, a1[i_star], a2[i_star], rng)

    trev = t.rev
    for i in range(n):
        if i == i_star:
            continue
        b2[i], b1[i] = sample_clause_pair(trev, rng)
    b1[i_star] = ~a1[i_star]
    b2[i_star] = ~a2[i_star]

    theta = int(rng.np.integers(1, 3))
    r_a = [int(r) for r in rng.np.integers(1, 3, size=n)]
    r_b = [int(r) for r in rng.np.integers(1, 3, size=n)]
    r_a[i_star] = theta
    r_b[i_star] = theta

    inst = Instance(
        m=m,
        n=n,
        variant=variant,
        s=s,
        t=t,
        i_star=i_star,
        a1=tuple(a1),
        a2=tuple(a2),
        b1=tuple(b1),
        b2=tuple(b2),
        theta=theta,
        r_a=tuple(r_a),
        r_b=tuple(r_b),
        seed=rng.seed,
    )
    if validate:
        inst.validate()
    return inst


def reference_instance(theta: int = 1) -> Instance:
    """A single-index instance built from the embedded 16-item layout."""
    s, t, (a1, a2) = reference_configuration()
    return Instance(
        m=REFERENCE_M,
        n=1,
        variant="nu",
        s=s,
        t=t,
        i_star=0,
        a1=(a1,),
        a2=(a2,),
        b1=(~a1,),
        b2=(~a2,),
        theta=theta,
        r_a=(theta,),
        r_b=(theta,),
    )


def generalized_deltas(u, v) -> tuple[Fraction, Fraction, Fraction]:
    """Exact intersection fractions for block sizes (u, v), per unit of m.

    Returns (single-copy regular/regular, two-copy regular cross,
    special/regular cross).  The first applies to the one-basis layout with
    two blocks of ``u`` items and four of ``v``; the other two apply to the
    correlated two-basis layout with eight ``u``-blocks and four ``v``-blocks.
    """
    u = Fraction(u)
    v = Fraction(v)
    if u <= 0 or v <= 0:
        raise ValueError("block sizes must be positive")
    single = (2 * v**3 + 2 * u**2 * v + 3 * u * v**2) / (u + 2 * v) ** 3
    cross = (5 * u**2 * v + u**3 + 6 * u * v**2 + 2 * v**3) / (
        2 * (u + 2 * v) ** 2 * (2 * u + v)
    )
    special = (16 * u * v + 5 * u**2 + 6 * v**2) / (12 * (u + 2 * v) * (2 * u + v))
    return single, cross, special


def optimal_block_ratio(tol: float = 1e-9) -> float:
    """Numerically locate the ratio v/u maximizing min(cross, special).

    Coarse grid to bracket the optimum, then golden-section refinement.
    """

    def objective(r: float) -> float:
        cross = (5 * r + 1 + 6 * r * r + 2 * r**3) / (2 * (1 + 2 * r) ** 2 * (2 + r))
        special = (16 * r + 5 + 6 * r * r) / (12 * (1 + 2 * r) * (2 + r))
        return min(cross, special)

    lo, hi, steps = 0.2, 10.0, 2000
    xs = [lo + (hi - lo) * i / steps for i in range(steps + 1)]
    best = max(range(len(xs)), key=lambda i: objective(xs[i]))
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, steps)]
    igold = (5**0.5 - 1) / 2
    c = b - igold * (b - a)
    d = a + igold * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - igold * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + igold * (b - a)
            fd = objective(d)
    return (a + b) / 2
