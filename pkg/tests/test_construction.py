from fractions import Fraction
from math import factorial, isclose, sqrt

import pytest

from bxoslab import (
    Basis,
    ConstructionError,
    RngStream,
    constant_vectors,
    generalized_deltas,
    is_clause_pair,
    is_compatible,
    is_special_pair,
    optimal_block_ratio,
    part_profile,
    reference_instance,
    sample_basis,
    sample_clause_pair,
    sample_compatible,
    sample_instance,
    sample_special_pair,
    validate_profile,
)
from bxoslab.construction import (
    clause_pair_cell_counts,
    compatible_cell_counts,
    second_basis_cell_counts,
    special_pair_cell_counts,
)

from conftest import naive_part_profile


class TestConstantVectors:
    def test_m16_values(self):
        vec = constant_vectors(16)
        assert vec.basis == (5, 3, 3, 5)
        assert vec.cmp == (4, 1, 0, 0, 0, 1, 2, 0, 1, 0, 1, 1, 0, 1, 0, 4)
        assert vec.reg == (2, 1, 2, 3)
        assert vec.regpair == (0, 0, 1, 1)
        assert vec.spec1 == (2, 0, 0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1, 0, 2)
        assert vec.spec2 == (2, 0, 0, 0, 0, 0, 2, 0, 1, 0, 0, 0, 0, 1, 0, 2)
        specpair = [0] * 16
        specpair[8] = specpair[13] = 1
        assert vec.specpair == tuple(specpair)

    def test_scaling(self):
        vec = constant_vectors(32)
        assert vec.reg == (4, 2, 4, 6)
        assert vec.cmp[0] == 8 and vec.cmp[15] == 8
        assert sum(vec.cmp) == 32
        assert sum(vec.reg) == 16
        assert sum(vec.spec1) == 16 and sum(vec.spec2) == 16

    def test_rejects_bad_m(self):
        with pytest.raises(ConstructionError):
            constant_vectors(24)
        with pytest.raises(ConstructionError):
            constant_vectors(8)

    def test_pair_profile_computed_from_reference(self, reference):
        s, _, (a1, a2) = reference
        vec = constant_vectors(16)
        naive = naive_part_profile(16, [list(x) for x in (*s.sets(), a1, a2)])
        assert vec.pair_profile == naive
        assert sum(vec.pair_profile) == 16

    def test_opt_profile_computed_from_reference(self, reference):
        s, t, (a1, a2) = reference
        vec = constant_vectors(16)
        naive = naive_part_profile(16, [list(x) for x in (*s.sets(), *t.sets(), a1, a2)])
        assert vec.opt_profile == naive
        assert sum(vec.opt_profile) == 16

    def test_opt_profile_marginals_match_printed_vectors(self):
        # Summing out the second basis's bits must recover the clause-pair
        # profile; summing out the clause bits must recover the 16-cell
        # compatibility profile.
        vec = constant_vectors(16)
        pair = [0] * 16
        cmp_back = [0] * 16
        spec1_back = [0] * 16
        for idx, count in enumerate(vec.opt_profile):
            s1, s2 = (idx >> 5) & 1, (idx >> 4) & 1
            t1, t2 = (idx >> 3) & 1, (idx >> 2) & 1
            a1, a2 = (idx >> 1) & 1, idx & 1
            pair[8 * s1 + 4 * s2 + 2 * a1 + a2] += count
            cmp_back[8 * s1 + 4 * s2 + 2 * t1 + t2] += count
            if a1:
                spec1_back[8 * s1 + 4 * s2 + 2 * t1 + t2] += count
        assert tuple(pair) == vec.pair_profile
        assert tuple(cmp_back) == vec.cmp
        assert tuple(spec1_back) == vec.spec1


class TestDerivedCellCounts:
    def test_clause_pair_table(self):
        assert clause_pair_cell_counts(16) == (
            (0, 2, 2, 1),
            (0, 1, 2, 0),
            (1, 1, 0, 1),
            (1, 2, 2, 0),
        )

    def test_compatibility_table(self):
        assert compatible_cell_counts(16) == (
            (4, 1, 0, 0),
            (0, 1, 2, 0),
            (1, 0, 1, 1),
            (0, 1, 0, 4),
        )

    def test_rows_are_nonnegative_and_sum(self):
        for m in (16, 160):
            vec = constant_vectors(m)
            for table, sums in (
                (clause_pair_cell_counts(m), vec.basis),
                (compatible_cell_counts(m), vec.basis),
                (special_pair_cell_counts(m), vec.cmp),
                (second_basis_cell_counts(m), vec.pair_profile),
            ):
                for row, want in zip(table, sums):
                    assert all(v >= 0 for v in row)
                    assert sum(row) == want


def support_size(table):
    """Number of joint configurations: product of per-cell multinomials."""
    total = 1
    for row in table:
        size = sum(row)
        ways = factorial(size)
        for v in row:
            ways //= factorial(v)
        total *= ways
    return total


class TestSupportCounting:
    def test_special_decomposition_matches_clause_pairs(self):
        # Each clause pair is special for exactly one second basis:
        # (#compatible bases) * (#special pairs) = (#clause pairs).
        n_compat = support_size(compatible_cell_counts(16))
        n_special = support_size(special_pair_cell_counts(16))
        n_pairs = support_size(clause_pair_cell_counts(16))
        assert n_compat == 450
        assert n_special == 36
        assert n_pairs == 16200
        assert n_compat * n_special == n_pairs

    def test_second_basis_is_deterministic_at_any_scale(self):
        # Every (basis, clause pair) cell maps to a single second-basis
        # pattern, so the conditioned second basis is unique.
        for m in (16, 160):
            for row in second_basis_cell_counts(m):
                assert sum(1 for v in row if v) <= 1


class TestReference:
    def test_reference_is_compatible(self, reference):
        s, t, _ = reference
        assert is_compatible(s, t)
        assert not is_compatible(s, s)

    def test_reference_special_pair(self, reference):
        s, t, (a1, a2) = reference
        assert is_special_pair(a1, a2, s, t)
        assert is_clause_pair(a1, a2, s)

    def test_complement_pair_special_for_reversed_bases(self, reference):
        s, t, (a1, a2) = reference
        assert is_compatible(t.rev, s.rev)
        assert is_special_pair(~a2, ~a1, t.rev, s.rev)

    def test_self_pair_is_not_compatible(self, reference):
        s, _, _ = reference
        vec = constant_vectors(16)
        assert not validate_profile(16, (*s.sets(), *s.sets()), vec.cmp)

    def test_degenerate_empty_profile(self):
        assert validate_profile(16, [], (16,))
        assert not validate_profile(16, [], ())

    def test_reference_instance_validates(self):
        inst = reference_instance()
        inst.validate()
        assert inst.n == 1 and inst.i_star == 0


class TestSamplers:
    def test_basis_draw_invariants(self, rng):
        for trial in range(50):
            b = sample_basis(160, rng)
            assert part_profile(160, b.sets()) == constant_vectors(160).basis
            assert len(b.s1) == len(b.s2) == 80
            assert b.s1.intersection_size(b.s2) == 50  # 5m/16

    def test_basis_item_symmetry(self):
        rng = RngStream(31, 0)
        draws = 100_000
        hits = [0] * 16
        for _ in range(draws):
            b = sample_basis(16, rng)
            for i in b.s1:
                hits[i] += 1
        for h in hits:
            assert abs(h / draws - 0.5) < 0.01  # >6 sigma slack at 1e5 draws

    def test_cross_pair_mean_matches_exact_expectation(self):
        # 1e4 independent clause-pair draws on a fixed compatible basis
        # pair: the mean first-copy cross overlap lands within 1% of
        # 51m/200 (CLT; the exact value is 40.8 at m=160).
        m = 160
        rng = RngStream(37, 0)
        s = sample_basis(m, rng)
        t = sample_compatible(s, rng)
        trev = t.rev
        draws = 10_000
        total = 0
        for _ in range(draws):
            a1, _ = sample_clause_pair(s, rng)
            _, b1 = sample_clause_pair(trev, rng)
            total += a1.intersection_size(b1)
        exact = 51 * m / 200
        assert abs(total / draws - exact) < 0.01 * exact

    def test_compatible_draw_invariants(self, rng):
        s = sample_basis(160, rng)
        vec = constant_vectors(160)
        for _ in range(30):
            t = sample_compatible(s, rng)
            assert part_profile(160, (*s.sets(), *t.sets())) == vec.cmp
            # The drawn second pair is itself a basis (column sums of the
            # 16-cell profile), asserted by the Basis constructor.
            assert isinstance(t, Basis)
            assert is_compatible(t.rev, s.rev)

    def test_clause_pair_draw_invariants(self, rng):
        s = sample_basis(160, rng)
        vec = constant_vectors(160)
        for _ in range(50):
            a1, a2 = sample_clause_pair(s, rng)
            assert part_profile(160, s.sets(), a1) == vec.reg
            assert part_profile(160, s.rev.sets(), a2) == vec.reg
            assert part_profile(160, s.sets(), a1 & a2) == vec.regpair
            assert len(a1) == len(a2) == 80

    def test_special_pair_draw_invariants(self, rng):
        s = sample_basis(160, rng)
        t = sample_compatible(s, rng)
        vec = constant_vectors(160)
        for _ in range(30):
            a1, a2 = sample_special_pair(s, t, rng)
            assert is_special_pair(a1, a2, s, t)
            # Also a clause pair for the first basis, so regular and special
            # indices are indistinguishable through that lens.
            assert is_clause_pair(a1, a2, s)
            assert part_profile(160, (*s.sets(), a1, a2)) == vec.pair_profile
            assert is_special_pair(~a2, ~a1, t.rev, s.rev)

    def test_special_pair_requires_compatibility(self, rng):
        s = sample_basis(160, rng)
        with pytest.raises(ConstructionError):
            sample_special_pair(s, s, rng)

    def test_copies_never_share_a_clause(self, rng):
        # A set cannot satisfy the clause profile for a basis and its
        # reversal at once, so the two copies' clause lists are disjoint.
        s = sample_basis(160, rng)
        vec = constant_vectors(160)
        for _ in range(25):
            a1, a2 = sample_clause_pair(s, rng)
            assert a1 != a2
            assert part_profile(160, s.sets(), a2) != vec.reg


def _assignments(cell_items, row):
    """All distinct ways to deal a cell's items into classes with the given
    counts, as tuples of per-class frozensets."""
    from itertools import permutations

    labels = []
    for cls, cnt in enumerate(row):
        labels.extend([cls] * cnt)
    seen = set()
    for perm in set(permutations(labels)):
        classes = tuple(
            frozenset(i for i, cls in zip(cell_items, perm) if cls == c)
            for c in range(len(row))
        )
        seen.add(classes)
    return sorted(seen, key=repr)


def _enumerate_by_cells(cells, rows):
    """Cartesian product of per-cell assignments, merged per class."""
    from itertools import product as iproduct

    per_cell = [_assignments(sorted(cell), row) for cell, row in zip(cells, rows)]
    for combo in iproduct(*per_cell):
        merged = [frozenset() for _ in rows[0]]
        for classes in combo:
            merged = [m | c for m, c in zip(merged, classes)]
        yield tuple(merged)


class TestSamplerUniformity:
    """Chi-square tests of the construction samplers against their full,
    exhaustively enumerated supports at the 16-item scale."""

    def test_compatible_bases_are_uniform(self, reference):
        from bxoslab.construction import compatible_cell_counts
        from bxoslab.itemsets import part_cells
        from bxoslab.stats import uniform_chi2

        s, _, _ = reference
        cells = [set(c) for c in part_cells(16, s.sets())]
        support = {}
        for classes in _enumerate_by_cells(cells, compatible_cell_counts(16)):
            t1 = frozenset(classes[2] | classes[3])
            t2 = frozenset(classes[1] | classes[3])
            support[(t1, t2)] = len(support)
        assert len(support) == 450
        rng = RngStream(51, 0)
        counts = [0] * len(support)
        for _ in range(90_000):
            t = sample_compatible(s, rng)
            counts[support[(frozenset(t.s1), frozenset(t.s2))]] += 1
        _, _, p = uniform_chi2(counts)
        assert p >= 0.001, f"uniformity over compatible bases rejected: p={p}"

    def test_special_pairs_are_uniform(self, reference):
        from bxoslab.construction import special_pair_cell_counts
        from bxoslab.itemsets import part_cells
        from bxoslab.stats import uniform_chi2

        s, t, _ = reference
        cells = [set(c) for c in part_cells(16, (*s.sets(), *t.sets()))]
        support = {}
        for classes in _enumerate_by_cells(cells, special_pair_cell_counts(16)):
            a1 = frozenset(classes[0] | classes[1])
            a2 = frozenset(classes[0] | classes[2])
            support[(a1, a2)] = len(support)
        assert len(support) == 36
        rng = RngStream(52, 0)
        counts = [0] * len(support)
        for _ in range(20_000):
            a1, a2 = sample_special_pair(s, t, rng)
            counts[support[(frozenset(a1), frozenset(a2))]] += 1
        _, _, p = uniform_chi2(counts)
        assert p >= 0.001, f"uniformity over special pairs rejected: p={p}"


class TestInstances:
    @pytest.mark.parametrize("variant", ["nu", "nu_prime"])
    def test_sampled_instances_validate(self, variant):
        rng = RngStream(99, 0)
        for trial in range(10):
            inst = sample_instance(160, 6, variant, rng.child(trial))
            inst.validate()
            assert inst.variant == variant
            assert inst.r_a[inst.i_star] == inst.r_b[inst.i_star] == inst.theta

    def test_single_index_is_forced_special(self, rng):
        inst = sample_instance(16, 1, "nu", rng)
        assert inst.i_star == 0
        assert is_special_pair(inst.a1[0], inst.a2[0], inst.s, inst.t)
        assert inst.b1[0] == ~inst.a1[0]

    def test_validate_rejects_corruption(self, rng):
        from dataclasses import replace

        inst = sample_instance(16, 3, "nu", rng)
        broken = replace(inst, theta=3 - inst.theta)
        with pytest.raises(ConstructionError):
            broken.validate()

    def test_nu_prime_instances_satisfy_nu_invariants(self):
        rng = RngStream(123, 0)
        inst = sample_instance(160, 4, "nu_prime", rng)
        assert is_special_pair(inst.a1[inst.i_star], inst.a2[inst.i_star], inst.s, inst.t)


class TestGeneralizedDeltas:
    def test_equal_blocks(self):
        single, _, _ = generalized_deltas(1, 1)
        assert single == Fraction(7, 27)
        assert 1 - single == Fraction(20, 27)  # union of two half-size sets

    def test_reference_block_sizes(self):
        _, cross, special = generalized_deltas(1, 2)
        assert cross == Fraction(51, 200)
        assert special == Fraction(61, 240)
        assert min(cross, special) == Fraction(61, 240)

    def test_scale_invariance(self):
        assert generalized_deltas(2, 4) == generalized_deltas(1, 2)
        assert generalized_deltas(Fraction(1, 3), Fraction(2, 3)) == generalized_deltas(1, 2)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            generalized_deltas(0, 1)
        with pytest.raises(ValueError):
            generalized_deltas(1, -2)

    def test_optimal_ratio(self):
        assert isclose(optimal_block_ratio(), 1 + sqrt(1.5), abs_tol=1e-6)

    def test_cross_exceeds_quarter_iff_u_below_2v(self):
        for u, v in ((1, 1), (1, 2), (3, 2), (1, 5)):
            single, _, _ = generalized_deltas(u, v)
            if u < 2 * v:
                assert single > Fraction(1, 4)
        single, _, _ = generalized_deltas(2, 1)
        assert single == Fraction(1, 4)
