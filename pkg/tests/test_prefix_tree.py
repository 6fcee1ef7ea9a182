import math
from itertools import chain, combinations

import numpy as np
import pytest

from qramc.prefix_tree import (
    AllocRegion,
    PrefixError,
    PrefixSumTree,
    RankSuperposition,
    allocate_block,
    decode_subset,
    encode_subset,
    encoding_length,
    free_block,
    superpose_ranks,
)
from qramc.state import SparseState, fidelity


def subsets(universe):
    items = sorted(universe)
    return chain.from_iterable(
        combinations(items, r) for r in range(len(items) + 1)
    )


def test_encoding_of_empty_set():
    assert encode_subset((), 4) == "000" + "000" + "000" + "0000"


def test_encoding_example_two_members():
    # F = {1, 3} over 4 leaves: labels root=2, left=1, right=1, leaves 1010
    assert encode_subset({1, 3}, 4) == "010" + "001" + "001" + "1010"


def test_encoding_full_set_uses_wide_root_label():
    # the root label equals the leaf count and needs the extra label bit
    assert encode_subset({1, 2, 3, 4}, 4) == "100" + "010" + "010" + "1111"


@pytest.mark.parametrize("leaf_count", [2, 4, 8])
def test_encode_decode_bijection_exhaustive(leaf_count):
    seen = set()
    for members in subsets(range(1, leaf_count + 1)):
        bits = encode_subset(members, leaf_count)
        assert len(bits) == encoding_length(leaf_count)
        assert decode_subset(bits, leaf_count) == frozenset(members)
        seen.add(bits)
    assert len(seen) == 2 ** leaf_count


def test_decode_rejects_inconsistent_sums():
    bits = "010" + "001" + "001" + "1110"  # leaves disagree with labels
    with pytest.raises(PrefixError, match="label sum"):
        decode_subset(bits, 4)


def test_select_matches_sorted_order():
    tree = PrefixSumTree(8, {2, 5, 7})
    assert tree.select(2) == 5
    assert [tree.select(j) for j in (1, 2, 3)] == [2, 5, 7]
    single = PrefixSumTree(4, {1})
    assert single.select(1) == 1
    full = PrefixSumTree(8, range(1, 9))
    assert [full.select(j) for j in range(1, 9)] == list(range(1, 9))


def test_select_out_of_range():
    with pytest.raises(PrefixError, match="rank"):
        PrefixSumTree(4, {2}).select(2)


def make_register_state(k, k_width, j_width):
    bits = format(k, f"0{k_width}b") + "0" * j_width
    return SparseState.basis(bits)


def test_superpose_ranks_exact_examples():
    for k, expect in [(1, {1: 1.0}), (2, {1: 1 / math.sqrt(2), 2: 1 / math.sqrt(2)}),
                      (3, {1: 1 / math.sqrt(3), 2: 1 / math.sqrt(3), 3: 1 / math.sqrt(3)})]:
        state = make_register_state(k, 2, 2)
        out = superpose_ranks(state, [0, 1], [2, 3])
        got = {int(b[2:], 2): a for b, a in out.amplitudes.items()}
        assert got == pytest.approx(expect)
        assert all(b[:2] == format(k, "02b") for b in out.amplitudes)


def test_superpose_ranks_rejects_k_zero_and_dirty_register():
    with pytest.raises(PrefixError, match="k >= 1"):
        superpose_ranks(make_register_state(0, 2, 2), [0, 1], [2, 3])
    dirty = SparseState.basis("1001")
    with pytest.raises(PrefixError, match="must be zero"):
        superpose_ranks(dirty, [0, 1], [2, 3])


def exact_target_columns(max_k, j_width):
    """Columns of the ideal rank superposition on inputs |k>|0>, k=1..max_k."""
    dim = max_k * (2 ** j_width)
    cols = np.zeros((dim, max_k), dtype=complex)
    for k in range(1, max_k + 1):
        for j in range(1, k + 1):
            cols[(k - 1) * (2 ** j_width) + j, k - 1] = 1 / math.sqrt(k)
    return cols


def approx_columns_with_loss(rank, j_width):
    """Apply the decomposed circuit per input; lost remainder mass gets one
    orthogonal axis per input, which preserves all column inner products."""
    max_k = rank.max_k
    dim = max_k * (2 ** j_width)
    cols = np.zeros((dim + max_k, max_k), dtype=complex)
    k_width = max(1, max_k.bit_length())
    for k in range(1, max_k + 1):
        state = make_register_state(k, k_width, j_width)
        out, dropped = rank.apply(state, list(range(k_width)),
                                  list(range(k_width, k_width + j_width)))
        for basis, amp_value in out.amplitudes.items():
            j = int(basis[k_width:], 2)
            cols[(k - 1) * (2 ** j_width) + j, k - 1] = amp_value
        cols[dim + k - 1, k - 1] = math.sqrt(dropped)
    return cols


def spectral_distance(rank, j_width):
    approx = approx_columns_with_loss(rank, j_width)
    exact = np.zeros_like(approx)
    exact[:rank.max_k * (2 ** j_width), :] = exact_target_columns(rank.max_k, j_width)
    return float(np.linalg.norm(approx - exact, ord=2))


@pytest.mark.parametrize("max_k", [2, 4, 8])
@pytest.mark.parametrize("eps", [0.25, 0.1])
def test_rank_superposition_within_budget(max_k, eps):
    rank = RankSuperposition(max_k, eps)
    j_width = max(1, max_k.bit_length())
    assert spectral_distance(rank, j_width) <= eps


def test_rank_superposition_exact_for_k_one():
    rank = RankSuperposition(1, 0.25)
    out, dropped = rank.apply(make_register_state(1, 1, 1), [0], [1])
    assert dropped == 0
    assert out.amplitudes == {"11": pytest.approx(1.0)}


def test_rank_superposition_gate_count_scales_logarithmically():
    counts = {}
    for max_k in (2, 8):
        for eps in (0.25, 0.01):
            counts[(max_k, eps)] = RankSuperposition(max_k, eps).gate_count
    assert counts[(2, 0.25)] < counts[(8, 0.25)] < counts[(8, 0.01)]
    # every op in the sequence is a Hadamard or one of 3 word-level steps
    rank = RankSuperposition(4, 0.1)
    assert rank.gate_count == rank.hadamard_count + 3
    assert sum(1 for op in rank.gates if op[0] == "H") == rank.hadamard_count


def test_rank_superposition_rejects_bad_budget():
    with pytest.raises(PrefixError):
        RankSuperposition(4, 0.0)
    with pytest.raises(PrefixError):
        RankSuperposition(4, 0.5)


def alloc_state(members, leaf_count):
    index_width = leaf_count.bit_length()
    return SparseState.basis(encode_subset(members, leaf_count) + "0" * index_width)


def region_for(leaf_count):
    return AllocRegion(start=0, leaf_count=leaf_count)


def index_positions(leaf_count):
    region = region_for(leaf_count)
    return list(range(region.bit_length, region.bit_length + region.index_width))


def test_allocate_singleton_free_set():
    state = alloc_state({3}, 4)
    out, dropped = allocate_block(state, region_for(4), index_positions(4))
    assert dropped == 0
    (basis, amp), = out.amplitudes.items()
    assert amp == pytest.approx(1.0)
    assert decode_subset(basis[:13], 4) == frozenset()
    assert int(basis[13:], 2) == 3


def test_allocate_two_free_blocks_splits_evenly():
    out, _ = allocate_block(alloc_state({1, 2}, 4), region_for(4), index_positions(4))
    assert len(out.amplitudes) == 2
    for basis, amp in out.amplitudes.items():
        assert amp == pytest.approx(1 / math.sqrt(2))
        i = int(basis[13:], 2)
        assert decode_subset(basis[:13], 4) == frozenset({1, 2}) - {i}


def test_allocate_then_free_round_trips():
    for members in [{1}, {2, 4}, {1, 2, 3, 4}]:
        state = alloc_state(members, 4)
        out, _ = allocate_block(state, region_for(4), index_positions(4))
        back = free_block(out, region_for(4), index_positions(4))
        assert fidelity(state, back) >= 1 - 1e-12


def test_allocate_rejects_empty_free_set_and_dirty_index():
    with pytest.raises(PrefixError, match="empty free set"):
        allocate_block(alloc_state(set(), 4), region_for(4), index_positions(4))
    dirty = SparseState.basis(encode_subset({1}, 4) + "001")
    with pytest.raises(PrefixError, match="must be zero"):
        allocate_block(dirty, region_for(4), index_positions(4))


def test_free_rejects_zero_index_and_double_free():
    state = alloc_state({1}, 4)
    with pytest.raises(PrefixError, match="nonzero index"):
        free_block(state, region_for(4), index_positions(4))
    already_free = SparseState.basis(encode_subset({2}, 4) + "010")
    with pytest.raises(PrefixError, match="already free"):
        free_block(already_free, region_for(4), index_positions(4))
