import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsttcm.lattice_partition import (PartitionConfig, PartitionError, all_coset_leaders,
                                      bits_to_int, code_at_level, construction_a,
                                      coset_generator_matrix, coset_leader, is_in_lattice,
                                      membership_mask)

ALL_WORDS = np.array(list(itertools.product((0, 1), repeat=8)), dtype=np.int64)


def brute_span(gen):
    gen = np.asarray(gen).reshape(-1, 8)
    return {tuple((np.array(c) @ gen) % 2) for c in itertools.product((0, 1), repeat=len(gen))}


def test_level3_generator_rows():
    g = code_at_level(3).generator
    assert {tuple(r) for r in g} == {(0, 0, 0, 0, 1, 1, 1, 1), (1, 1, 1, 1, 1, 1, 1, 1)}


def test_level0_is_universe():
    assert len(code_at_level(0)) == 256


def test_level1_min_weight_is_two():
    words = brute_span(code_at_level(1).generator)
    assert len(words) == 64
    assert min(sum(w) for w in words if any(w)) == 2
    assert code_at_level(1).min_weight() == 2


def test_level4_empty():
    c = code_at_level(4)
    assert c.k == 0 and len(c) == 1


@pytest.mark.parametrize("level", [-1, 5])
def test_level_out_of_range(level):
    with pytest.raises(PartitionError):
        code_at_level(level)


@pytest.mark.parametrize("level", range(5))
def test_generator_rows_independent_and_counts(level):
    code = code_at_level(level)
    assert len(brute_span(code.generator) if code.k else {(0,) * 8}) == 2 ** code.k == len(code)


def test_coset_generator_0_2():
    h = coset_generator_matrix(0, 2)
    assert h.shape == (4, 8)
    assert tuple(h[0]) == (0, 0, 0, 0, 0, 0, 0, 1)


def test_coset_generator_2_2_equals_g2():
    assert np.array_equal(coset_generator_matrix(2, 2), code_at_level(2).generator)


def test_coset_generator_3_1():
    assert {tuple(r) for r in coset_generator_matrix(3, 1)} == {(0, 0, 0, 0, 1, 1, 1, 1),
                                                                 (1, 1, 1, 1, 1, 1, 1, 1)}


def test_coset_generator_rejects_depth():
    with pytest.raises(PartitionError):
        coset_generator_matrix(2, 3)


def test_coset_leader_examples():
    assert tuple(coset_leader((1, 0, 0, 0), 0, 2)) == (0, 0, 0, 0, 0, 0, 0, 1)
    for l0, l in [(0, 1), (1, 2), (2, 2), (0, 4)]:
        assert not coset_leader((0,) * (2 * l), l0, l).any()


def test_coset_leaders_0_2_distinct_cosets_of_c2():
    c2 = brute_span(code_at_level(2).generator)
    leaders = [coset_leader(b, 0, 2) for b in itertools.product((0, 1), repeat=4)]
    for a, b in itertools.combinations(leaders, 2):
        assert tuple((a + b) % 2) not in c2


@pytest.mark.parametrize("l0,l", [(a, b) for a in range(4) for b in range(1, 5 - a)])
def test_transversal_covers_shallower_code(l0, l):
    deep = brute_span(code_at_level(l0 + l).generator) if l0 + l < 4 else {(0,) * 8}
    top = brute_span(code_at_level(l0).generator) if l0 else {tuple(w) for w in ALL_WORDS}
    union = {tuple((np.array(c) + np.array(d)) % 2) for c in all_coset_leaders(l0, l) for d in deep}
    assert union == top
    assert 4 ** l * 2 ** (8 - 2 * (l0 + l)) == 2 ** (8 - 2 * l0)


def test_nesting():
    for k in range(4):
        shallow = brute_span(code_at_level(k).generator)
        deep = brute_span(code_at_level(k + 1).generator) if k < 3 else {(0,) * 8}
        assert deep <= shallow


def test_c2_self_dual():
    g2 = code_at_level(2).generator
    dual = {tuple(w) for w in ALL_WORDS if not ((w @ g2.T) % 2).any()}
    assert dual == brute_span(g2)


def test_c1_dual_of_c3():
    c1, c3 = code_at_level(1), code_at_level(3)
    assert not ((c1.codewords @ c3.codewords.T) % 2).any()
    assert c1.k + c3.k == 8


@pytest.mark.parametrize("level", range(5))
def test_index_by_counting_points_in_unit_box(level):
    pts = sum(is_in_lattice(w, level) for w in ALL_WORDS)
    assert pts == 2 ** (8 - 2 * level)


def test_membership_examples():
    for level in range(5):
        assert is_in_lattice(np.zeros(8, int), level)
    assert is_in_lattice(np.ones(8, int), 3)
    assert not is_in_lattice([1, 0, 0, 0, 0, 0, 0, 0], 2)
    assert not membership_mask(2)[bits_to_int([1, 0, 0, 0, 0, 0, 0, 0])]


def test_construction_a_examples():
    assert not construction_a(np.zeros(8, int), np.zeros(8, int)).any()
    c = np.array([0, 1, 0, 1, 0, 1, 0, 1])
    assert tuple(construction_a(np.zeros(8, int), c)) == tuple(c)
    x = construction_a(np.ones(8, int), np.ones(8, int))
    assert tuple(x) == (3,) * 8 and is_in_lattice(x, 2)


@given(st.lists(st.integers(-50, 50), min_size=8, max_size=8),
       st.integers(0, 15))
def test_construction_a_stays_in_lattice(u, j):
    c = (np.array([(j >> (3 - i)) & 1 for i in range(4)]) @ code_at_level(2).generator) % 2
    assert is_in_lattice(construction_a(np.array(u), c), 2)


@pytest.mark.parametrize("l0,l,q2", [(2, 2, 0), (0, 2, 4), (0, 3, 2), (1, 1, 4)])
def test_partition_bit_budget(l0, l, q2):
    p = PartitionConfig(l0, l, 4)
    assert p.n_cosets == 4 ** l and p.q1 == 2 and p.q2 == q2 and p.q3 == 8
    assert p.bits_per_slot == p.q1 + p.q2 + p.q3


def test_partition_rejects_bad_levels():
    with pytest.raises(PartitionError):
        PartitionConfig(3, 2)
    with pytest.raises(PartitionError):
        PartitionConfig(0, 0)
