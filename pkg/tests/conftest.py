"""Shared fixtures and naive reference implementations.

The naive helpers here recompute profiles and optima with plain Python sets
and full enumeration; they stay independent of the bitmask code paths they
check.
"""

from __future__ import annotations

from itertools import product

import pytest

from bxoslab import ItemSet, RngStream
from bxoslab.construction import reference_configuration


def naive_part_profile(m, sets, mask=None):
    """Profile via per-item pattern matching on plain Python sets."""
    members = [set(s) for s in sets]
    domain = set(range(m)) if mask is None else set(mask)
    k = len(sets)
    out = []
    for bits in product((0, 1), repeat=k):
        out.append(
            sum(
                1
                for z in domain
                if all((z in members[i]) == bool(bits[i]) for i in range(k))
            )
        )
    return tuple(out)


def naive_opt(clauses_a, clauses_b, m):
    """Optimum by enumerating every split of the universe, with sets."""
    universe = set(range(m))
    best = 0
    for mask in range(1 << m):
        z = {i for i in range(m) if (mask >> i) & 1}
        comp = universe - z
        va = max(len(z & set(c)) for c in clauses_a)
        vb = max(len(comp & set(c)) for c in clauses_b)
        best = max(best, va + vb)
    return best


@pytest.fixture(scope="session")
def reference():
    return reference_configuration()


@pytest.fixture()
def rng():
    return RngStream(20260808, 0)


def make_set(m, items):
    return ItemSet.from_indices(m, items)
