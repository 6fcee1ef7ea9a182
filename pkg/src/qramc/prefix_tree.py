"""Prefix-sum trees with a canonical bit encoding, and the superposed allocator.

The tree is a complete binary tree whose leaves mark the members of a subset
of 1..leaf_count and whose internal nodes count the marked leaves below them.
Its canonical encoding is the breadth-first list of internal labels, each
ceil(log2(l+1)) bits wide (the root label can equal the leaf count l, which
needs one bit more than log2(l)), followed by the l leaf bits.

The memory allocator uses such a tree to track its free blocks.

``allocate_block`` maps each branch holding an encoded free set F and a zeroed
index register to the uniform superposition over ways of handing out one free
block:

    |P(F)>|0>  ->  (1/sqrt|F|) sum_{i in F} |P(F \\ {i})>|i>

``free_block`` is its inverse.  The uniform split uses either the exact rank
superposition primitive or a decomposed approximation built by
``RankSuperposition``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .state import SimulationError, SparseState, _pruned


class PrefixError(SimulationError):
    """Malformed prefix-sum encoding or illegal allocator use."""


def label_width(leaf_count: int) -> int:
    return leaf_count.bit_length()


def encoding_length(leaf_count: int) -> int:
    return (leaf_count - 1) * label_width(leaf_count) + leaf_count


class PrefixSumTree:
    """Heap-layout prefix-sum tree over leaves 1..leaf_count (1 = marked)."""

    def __init__(self, leaf_count: int, members=()):
        if leaf_count < 1 or leaf_count & (leaf_count - 1):
            raise PrefixError(f"leaf count must be a power of 2, got {leaf_count}")
        self.leaf_count = leaf_count
        self._vals = [0] * (2 * leaf_count)
        for i in members:
            self.add(i)

    def contains(self, i: int) -> bool:
        self._check_leaf(i)
        return self._vals[self.leaf_count + i - 1] == 1

    def size(self) -> int:
        return self._vals[1]

    def members(self) -> frozenset:
        return frozenset(
            i for i in range(1, self.leaf_count + 1)
            if self._vals[self.leaf_count + i - 1]
        )

    def add(self, i: int) -> None:
        self._check_leaf(i)
        node = self.leaf_count + i - 1
        if self._vals[node]:
            raise PrefixError(f"leaf {i} is already marked")
        self._vals[node] = 1
        node >>= 1
        while node >= 1:
            self._vals[node] += 1
            node >>= 1

    def remove(self, i: int) -> None:
        self._check_leaf(i)
        node = self.leaf_count + i - 1
        if not self._vals[node]:
            raise PrefixError(f"leaf {i} is not marked")
        self._vals[node] = 0
        node >>= 1
        while node >= 1:
            self._vals[node] -= 1
            node >>= 1

    def select(self, j: int) -> int:
        """Return the j-th smallest marked leaf (1-based rank), by descent."""
        if not 1 <= j <= self.size():
            raise PrefixError(f"rank {j} out of range (|F|={self.size()})")
        node = 1
        while node < self.leaf_count:
            left = node << 1
            if j <= self._vals[left]:
                node = left
            else:
                j -= self._vals[left]
                node = left | 1
        return node - self.leaf_count + 1

    def encode(self) -> str:
        w = label_width(self.leaf_count)
        parts = [format(self._vals[node], f"0{w}b")
                 for node in range(1, self.leaf_count)]
        parts.append("".join(
            "1" if self._vals[self.leaf_count + i] else "0"
            for i in range(self.leaf_count)
        ))
        return "".join(parts)

    @classmethod
    def decode(cls, bits: str, leaf_count: int) -> "PrefixSumTree":
        w = label_width(leaf_count)
        if len(bits) != encoding_length(leaf_count):
            raise PrefixError(
                f"encoding length {len(bits)} != {encoding_length(leaf_count)}"
            )
        tree = cls(leaf_count)
        vals = tree._vals
        for node in range(1, leaf_count):
            vals[node] = int(bits[(node - 1) * w:node * w], 2)
        leaf_bits = bits[(leaf_count - 1) * w:]
        for i in range(leaf_count):
            vals[leaf_count + i] = int(leaf_bits[i])
        for node in range(leaf_count - 1, 0, -1):
            if vals[node] != vals[2 * node] + vals[2 * node + 1]:
                raise PrefixError(f"inconsistent label sum at node {node}")
        return tree

    def _check_leaf(self, i: int) -> None:
        if not 1 <= i <= self.leaf_count:
            raise PrefixError(f"leaf index {i} out of range 1..{self.leaf_count}")


def encode_subset(members, leaf_count: int) -> str:
    return PrefixSumTree(leaf_count, members).encode()


def decode_subset(bits: str, leaf_count: int) -> frozenset:
    return PrefixSumTree.decode(bits, leaf_count).members()


def superpose_ranks(state: SparseState, k_positions, j_positions) -> SparseState:
    """Exact rank superposition: per branch, |k>|0> -> (1/sqrt k) sum_j |k>|j>.

    A custom simulator primitive, deliberately not decomposed into basic
    gates.  Every supported branch must hold k >= 1 and a zeroed j register.
    """
    k_positions = list(k_positions)
    j_positions = list(j_positions)
    width = len(j_positions)
    amps: dict[str, complex] = {}
    for basis, amp in state.sorted_items():
        k = int("".join(basis[q] for q in k_positions), 2)
        if k == 0:
            raise PrefixError("rank superposition requires k >= 1 in every branch")
        if any(basis[q] != "0" for q in j_positions):
            raise PrefixError("rank register must be zero before superposing")
        if k.bit_length() > width:
            raise PrefixError(f"rank register too narrow for k={k}")
        factor = amp / math.sqrt(k)
        for j in range(1, k + 1):
            jbits = format(j, f"0{width}b")
            nb = list(basis)
            for pos, bit in zip(j_positions, jbits):
                nb[pos] = bit
            key = "".join(nb)
            amps[key] = amps.get(key, 0) + factor
    return _pruned(state.qubit_count, amps)


@dataclass(frozen=True)
class RankSuperposition:
    """Decomposed approximation of the rank superposition.

    Construction: Hadamards on ``hadamard_count`` fresh qubits reach the range
    [K], K = 2**hadamard_count; splitting [K] into k equal intervals of width
    q = K // k maps j' to j = (j'-1) // q + 1 for j' <= k*q, the per-branch
    interval offsets fold back to zero, and the remainder j' > k*q is flagged
    and its squared amplitude accounted to the caller instead of being
    renormalized.  K is sized so the operator distance from the exact
    primitive is at most eps for every k <= max_k (the remainder mass is at
    most eps**2/2, and distance^2 <= mass + mass^2).
    """

    max_k: int
    eps: float

    def __post_init__(self):
        if self.max_k < 1:
            raise PrefixError("max_k must be >= 1")
        if not 0.0 < self.eps < 0.5:
            raise PrefixError(f"eps must lie in (0, 1/2), got {self.eps}")

    @property
    def hadamard_count(self) -> int:
        return 2 * math.ceil(math.log2(self.max_k / self.eps)) + 1

    @property
    def range_size(self) -> int:
        return 1 << self.hadamard_count

    @property
    def gates(self) -> tuple:
        ops = [("H", q) for q in range(self.hadamard_count)]
        ops.append(("INTERVAL_MAP", self.max_k))
        ops.append(("FOLD_OFFSETS",))
        ops.append(("FLAG_REMAINDER",))
        return tuple(ops)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    def branch_amplitudes(self, k: int) -> tuple[list, float]:
        """Kept amplitudes for ranks 1..k plus the dropped remainder mass."""
        if not 1 <= k <= self.max_k:
            raise PrefixError(f"k={k} outside 1..{self.max_k}")
        K = self.range_size
        q = K // k
        kept = math.sqrt(q / K)
        dropped = (K - k * q) / K
        return [kept] * k, dropped

    def apply(self, state: SparseState, k_positions, j_positions):
        """Approximate rank superposition; returns (state, dropped_mass)."""
        k_positions = list(k_positions)
        j_positions = list(j_positions)
        width = len(j_positions)
        amps: dict[str, complex] = {}
        dropped_mass = 0.0
        for basis, amp in state.sorted_items():
            k = int("".join(basis[q] for q in k_positions), 2)
            if k == 0:
                raise PrefixError("rank superposition requires k >= 1 in every branch")
            if any(basis[q] != "0" for q in j_positions):
                raise PrefixError("rank register must be zero before superposing")
            if k.bit_length() > width:
                raise PrefixError(f"rank register too narrow for k={k}")
            kept, dropped = self.branch_amplitudes(k)
            dropped_mass += abs(amp) ** 2 * dropped
            for j, factor in enumerate(kept, start=1):
                jbits = format(j, f"0{width}b")
                nb = list(basis)
                for pos, bit in zip(j_positions, jbits):
                    nb[pos] = bit
                key = "".join(nb)
                amps[key] = amps.get(key, 0) + amp * factor
        return _pruned(state.qubit_count, amps), dropped_mass


@dataclass(frozen=True)
class AllocRegion:
    """Location of a prefix-sum encoding inside a larger state."""

    start: int
    leaf_count: int

    @property
    def bit_length(self) -> int:
        return encoding_length(self.leaf_count)

    @property
    def end(self) -> int:
        return self.start + self.bit_length

    @property
    def index_width(self) -> int:
        return label_width(self.leaf_count)


def _branch_alloc_weights(free: list, mode) -> tuple[list, float]:
    """Per-free-block amplitude factors and the dropped mass for one branch."""
    k = len(free)
    if mode == "exact":
        return [1.0 / math.sqrt(k)] * k, 0.0
    kept, dropped = mode.branch_amplitudes(k)
    return kept, dropped


def allocate_block(state: SparseState, region: AllocRegion, index_positions,
                   mode="exact"):
    """Hand out one free block per branch, in superposition over choices.

    ``mode`` is "exact" or a RankSuperposition.  Returns (state, dropped_mass)
    where dropped_mass is the total squared amplitude lost to the
    approximation's flagged remainder (0.0 in exact mode).
    """
    index_positions = list(index_positions)
    amps: dict[str, complex] = {}
    dropped_mass = 0.0
    for basis, amp in state.sorted_items():
        tree = PrefixSumTree.decode(
            basis[region.start:region.end], region.leaf_count
        )
        if any(basis[q] != "0" for q in index_positions):
            raise PrefixError("allocation index register must be zero")
        free = sorted(tree.members())
        if not free:
            raise PrefixError("allocation from an empty free set")
        factors, dropped = _branch_alloc_weights(free, mode)
        dropped_mass += abs(amp) ** 2 * dropped
        for i, factor in zip(free, factors):
            tree.remove(i)
            new_basis = _splice(basis, region.start, tree.encode())
            tree.add(i)
            new_basis = _write_bits(new_basis, index_positions,
                                    format(i, f"0{len(index_positions)}b"))
            amps[new_basis] = amps.get(new_basis, 0) + amp * factor
    return _pruned(state.qubit_count, amps), dropped_mass


def free_block(state: SparseState, region: AllocRegion, index_positions) -> SparseState:
    """Inverse of allocate_block: return the indexed block to the free set.

    Implemented as the adjoint of the allocation isometry: per branch the
    index register is zeroed, the block is marked free, and the amplitude is
    scaled by 1/sqrt(|F|+1); coherent branches recombine to undo the
    allocation exactly.
    """
    index_positions = list(index_positions)
    amps: dict[str, complex] = {}
    for basis, amp in state.sorted_items():
        tree = PrefixSumTree.decode(
            basis[region.start:region.end], region.leaf_count
        )
        i = int("".join(basis[q] for q in index_positions), 2)
        if i == 0:
            raise PrefixError("free_block requires a nonzero index register")
        if tree.contains(i):
            raise PrefixError(f"block {i} is already free")
        tree.add(i)
        new_basis = _splice(basis, region.start, tree.encode())
        new_basis = _write_bits(new_basis, index_positions,
                                "0" * len(index_positions))
        factor = 1.0 / math.sqrt(tree.size())
        amps[new_basis] = amps.get(new_basis, 0) + amp * factor
    return _pruned(state.qubit_count, amps)


def _splice(basis: str, start: int, replacement: str) -> str:
    return basis[:start] + replacement + basis[start + len(replacement):]


def _write_bits(basis: str, positions, bits: str) -> str:
    chars = list(basis)
    for pos, bit in zip(positions, bits):
        chars[pos] = bit
    return "".join(chars)
