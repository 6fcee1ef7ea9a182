"""Superposed radix-tree memory: canonical states and their unitary updates.

A tree region inside a sparse state holds 2m node blocks followed by the
prefix-sum encoding of the free block set.  The canonical state for a stored
set S is the uniform superposition over every injective placement of the
tree's nodes into blocks (root pinned to block 1), paired with the matching
allocator state.  ``lookup`` XORs membership into a result qubit, ``toggle``
inserts or removes an element (canonical state to canonical state), and
``swap`` exchanges a qubit with the membership bit; all three run as
structured reversible procedures over the sparse simulator, driven per basis
branch, with scratch values living only in locals so every auxiliary register
is trivially restored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import ceil_log2
from .prefix_tree import decode_subset, encode_subset, encoding_length
from .radix_tree import BlockCodec, RadixError, enumerate_layouts, decode_layout
from .state import SimulationError, SparseState, _pruned


class QrtError(SimulationError):
    """Malformed tree region encountered in a supported branch."""


class QrtCapacityError(QrtError):
    """Insertion attempted on a tree already holding its capacity."""


@dataclass(frozen=True)
class QrtRegion:
    """Placement and shape of a tree region inside a larger state."""

    word_length: int
    capacity: int
    start: int = 0

    @property
    def codec(self) -> BlockCodec:
        return BlockCodec(self.word_length, self.capacity)

    @property
    def block_count(self) -> int:
        return 2 * self.capacity

    @property
    def alloc_bits(self) -> int:
        return encoding_length(self.block_count)

    @property
    def total_bits(self) -> int:
        return self.codec.layout_bits + self.alloc_bits

    @property
    def end(self) -> int:
        return self.start + self.total_bits

    @property
    def depth_cap(self) -> int:
        return max(ceil_log2(self.capacity) + self.word_length,
                   self.word_length + 1)


@dataclass
class OpCounters:
    """Primitive-operation counts, standing in for gate-level cost claims."""

    block_reads: int = 0
    block_writes: int = 0
    superpose_uses: int = 0
    remainder_mass: float = 0.0
    lookups: int = 0
    toggles: int = 0

    def as_dict(self) -> dict:
        return {
            "block_reads": self.block_reads,
            "block_writes": self.block_writes,
            "superpose_uses": self.superpose_uses,
            "remainder_mass": self.remainder_mass,
            "lookups": self.lookups,
            "toggles": self.toggles,
        }


def prepare_canonical(strings, word_length: int, capacity: int) -> SparseState:
    """Uniform superposition over all layouts of the tree storing the set.

    Built by direct enumeration; this is the reference construction that the
    unitary operations are checked against, not a gate procedure.
    """
    elements = frozenset(strings)
    if len(elements) > capacity:
        raise QrtError(
            f"set of size {len(elements)} exceeds capacity {capacity}"
        )
    try:
        layouts = enumerate_layouts(elements, word_length, capacity)
    except RadixError as exc:
        raise QrtError(str(exc)) from exc
    region = QrtRegion(word_length, capacity)
    all_blocks = frozenset(range(1, region.block_count + 1))
    amp = 1.0 / math.sqrt(len(layouts))
    amps = {}
    for layout_bits in layouts:
        _, visited = decode_layout(layout_bits, word_length, capacity)
        free = all_blocks - set(visited)
        amps[layout_bits + encode_subset(free, region.block_count)] = amp
    return SparseState(region.total_bits, amps)


def _decode_region(region_bits: str, region: QrtRegion):
    """Unpack and validate one branch; returns (block table, used set, leaf count, free set)."""
    codec = region.codec
    layout = region_bits[:codec.layout_bits]
    try:
        free = decode_subset(region_bits[codec.layout_bits:], region.block_count)
        table = [None]
        for b in range(1, region.block_count + 1):
            table.append(codec.unpack(codec.slice(layout, b)))
    except (SimulationError, RadixError, ValueError) as exc:
        raise QrtError(f"malformed tree region: {exc}") from exc

    used: set[int] = set()
    leaves = 0
    stack = [(1, 0, region.word_length, 1)]
    while stack:
        block, expect_parent, remaining, depth = stack.pop()
        if depth > region.depth_cap:
            raise QrtError(f"tree deeper than the {region.depth_cap}-level cap")
        if block in used or not 1 <= block <= region.block_count:
            raise QrtError(f"bad block link {block}")
        used.add(block)
        label, parent, left, right = table[block]
        if parent != expect_parent:
            raise QrtError(f"block {block}: parent link {parent} != {expect_parent}")
        if block == 1:
            if label:
                raise QrtError("root block must carry an empty label")
        elif not label:
            raise QrtError(f"block {block}: missing edge label")
        rest = remaining - len(label)
        if rest < 0:
            raise QrtError(f"block {block}: path exceeds word length")
        if left == 0 and right == 0:
            if block != 1:
                if rest != 0:
                    raise QrtError(f"block {block}: short leaf path")
                leaves += 1
        else:
            if block != 1 and (left == 0 or right == 0):
                raise QrtError(f"block {block}: internal node with one child")
            for child, first_bit in ((left, "0"), (right, "1")):
                if child:
                    if not 1 <= child <= region.block_count:
                        raise QrtError(f"bad block link {child}")
                    clabel = table[child][0]
                    if not clabel or clabel[0] != first_bit:
                        raise QrtError(
                            f"block {child}: child label must start with {first_bit}"
                        )
                    stack.append((child, block, rest, depth + 1))
    zero = ("", 0, 0, 0)
    for b in range(1, region.block_count + 1):
        if b not in used and table[b] != zero:
            raise QrtError(f"unused block {b} is not zero")
    if free != frozenset(range(1, region.block_count + 1)) - used:
        raise QrtError("free set inconsistent with the occupied blocks")
    return table, used, leaves, free


def _find(table, e: str, counters: OpCounters):
    """Classical traversal for e; returns a membership or insertion context."""
    cur, rem = 1, e
    counters.block_reads += 1
    while True:
        _, _, left, right = table[cur]
        child = left if rem[0] == "0" else right
        if child == 0:
            return ("attach", cur, rem)
        counters.block_reads += 1
        clabel = table[child][0]
        cp = 0
        for a, b in zip(rem, clabel):
            if a != b:
                break
            cp += 1
        if cp == len(clabel):
            if cp == len(rem):
                return ("member", child, cur)
            cur, rem = child, rem[cp:]
        else:
            return ("split", cur, child, cp, rem)


def _region_bits(blocks_bits, alloc_bits: str) -> str:
    return "".join(blocks_bits[1:]) + alloc_bits


def _set_child(entry, side_bit: str, value: int):
    label, parent, left, right = entry
    if side_bit == "0":
        return (label, parent, value, right)
    return (label, parent, left, value)


def _alloc_weights(k: int, mode):
    """Amplitude factors by free rank for one allocation, plus dropped mass."""
    if mode == "exact":
        return [1.0 / math.sqrt(k)] * k, 0.0
    return mode.branch_amplitudes(k)


def toggle(state: SparseState, e_positions, region: QrtRegion, mode="exact",
           counters: OpCounters | None = None) -> SparseState:
    """Insert e into the stored set, or remove it when already present.

    Per branch the element register selects insertion (one new leaf, plus a
    split node when the divergence falls inside an edge label) or the mirror
    deletion (remove the leaf, splice out its non-root parent).  Insertions
    draw block numbers from the allocator in superposition; deletions zero the
    blocks and return them, merging the layout branches back together.
    """
    counters = counters if counters is not None else OpCounters()
    counters.toggles += 1
    e_positions = list(e_positions)
    codec = region.codec
    amps: dict[str, complex] = {}
    slot1_fired = slot2_fired = False

    for basis, amp in state.sorted_items():
        region_bits = basis[region.start:region.end]
        e = "".join(basis[q] for q in e_positions)
        table, used, leaves, free = _decode_region(region_bits, region)
        ctx = _find(table, e, counters)
        blocks_bits = [None] + [codec.slice(region_bits, b)
                                for b in range(1, region.block_count + 1)]

        if ctx[0] == "member":
            leaf, parent = ctx[1], ctx[2]
            new_table = list(table)
            if parent == 1:
                freed = (leaf,)
                new_table[1] = _set_child(new_table[1], e[0], 0)
            else:
                plabel, grand, pleft, pright = table[parent]
                sibling = pleft if pright == leaf else pright
                slabel, _, sleft, sright = table[sibling]
                new_table[sibling] = (plabel + slabel, grand, sleft, sright)
                gentry = table[grand]
                gside = "0" if gentry[2] == parent else "1"
                new_table[grand] = _set_child(new_table[grand], gside, sibling)
                freed = (parent, leaf)
            factor = 1.0
            new_free = set(free)
            for b in freed:
                new_table[b] = ("", 0, 0, 0)
                new_free.add(b)
                factor /= math.sqrt(len(new_free))
            counters.block_writes += len(freed) + 1
            for b in range(1, region.block_count + 1):
                if new_table[b] != table[b]:
                    blocks_bits[b] = codec.pack(*new_table[b])
            key = (basis[:region.start]
                   + _region_bits(blocks_bits, encode_subset(new_free, region.block_count))
                   + basis[region.end:])
            amps[key] = amps.get(key, 0) + amp * factor
            continue

        # insertion
        if leaves >= region.capacity:
            raise QrtCapacityError(
                f"insertion would exceed the declared capacity {region.capacity}"
            )
        free_sorted = sorted(free)
        k = len(free_sorted)
        factors1, dropped1 = _alloc_weights(k, mode)
        counters.remainder_mass += abs(amp) ** 2 * dropped1
        slot1_fired = True

        if ctx[0] == "attach":
            cur, rem = ctx[1], ctx[2]
            counters.block_writes += 2
            for i1, f1 in zip(free_sorted, factors1):
                new_table = list(table)
                new_table[i1] = (rem, cur, 0, 0)
                new_table[cur] = _set_child(new_table[cur], rem[0], i1)
                new_free = set(free)
                new_free.discard(i1)
                nb = list(blocks_bits)
                nb[i1] = codec.pack(*new_table[i1])
                nb[cur] = codec.pack(*new_table[cur])
                key = (basis[:region.start]
                       + _region_bits(nb, encode_subset(new_free, region.block_count))
                       + basis[region.end:])
                amps[key] = amps.get(key, 0) + amp * f1
        else:
            _, cur, child, cp, rem = ctx
            clabel, _, cleft, cright = table[child]
            slot2_fired = True
            counters.block_writes += 4
            for i1, f1 in zip(free_sorted, factors1):
                rest = [b for b in free_sorted if b != i1]
                factors2, dropped2 = _alloc_weights(k - 1, mode)
                counters.remainder_mass += abs(amp * f1) ** 2 * dropped2
                for i2, f2 in zip(rest, factors2):
                    new_table = list(table)
                    # i1: new leaf, i2: new split node
                    new_table[i1] = (rem[cp:], i2, 0, 0)
                    split = (rem[:cp], cur, 0, 0)
                    split = _set_child(split, clabel[cp], child)
                    split = _set_child(split, rem[cp], i1)
                    new_table[i2] = split
                    new_table[child] = (clabel[cp:], i2, cleft, cright)
                    side = "0" if table[cur][2] == child else "1"
                    new_table[cur] = _set_child(new_table[cur], side, i2)
                    new_free = set(free) - {i1, i2}
                    nb = list(blocks_bits)
                    for b in (i1, i2, child, cur):
                        nb[b] = codec.pack(*new_table[b])
                    key = (basis[:region.start]
                           + _region_bits(nb, encode_subset(new_free, region.block_count))
                           + basis[region.end:])
                    amps[key] = amps.get(key, 0) + amp * f1 * f2

    if slot1_fired:
        counters.superpose_uses += 1
    if slot2_fired:
        counters.superpose_uses += 1
    return _pruned(state.qubit_count, amps)


def lookup(state: SparseState, e_positions, region: QrtRegion, b_position: int,
           counters: OpCounters | None = None) -> SparseState:
    """XOR membership of the element register's value into the result qubit."""
    counters = counters if counters is not None else OpCounters()
    counters.lookups += 1
    e_positions = list(e_positions)
    amps: dict[str, complex] = {}
    for basis, amp in state.sorted_items():
        table, _, _, _ = _decode_region(basis[region.start:region.end], region)
        e = "".join(basis[q] for q in e_positions)
        if _find(table, e, counters)[0] == "member":
            flipped = "01"[basis[b_position] == "0"]
            basis = basis[:b_position] + flipped + basis[b_position + 1:]
        amps[basis] = amps.get(basis, 0) + amp
    return _pruned(state.qubit_count, amps)


def controlled(op, control_position: int):
    """Lift an operation to its controlled version on the given qubit."""

    def apply(state: SparseState, *args, **kwargs):
        zeros, ones = {}, {}
        for basis, amp in state.amplitudes.items():
            (ones if basis[control_position] == "1" else zeros)[basis] = amp
        if not ones:
            return state
        out = op(SparseState(state.qubit_count, ones), *args, **kwargs)
        merged = dict(out.amplitudes)
        for basis, amp in zeros.items():
            merged[basis] = merged.get(basis, 0) + amp
        return SparseState(state.qubit_count, merged)

    return apply


def swap(state: SparseState, e_positions, region: QrtRegion, b_position: int,
         mode="exact", counters: OpCounters | None = None) -> SparseState:
    """Exchange the result qubit with set membership of the element register.

    Inserts e and clears b when e is absent and b=1; removes e and sets b when
    e is present and b=0; otherwise the identity.  Realized literally as
    lookup, toggle controlled on b, lookup.
    """
    state = lookup(state, e_positions, region, b_position, counters)
    state = controlled(toggle, b_position)(state, e_positions, region, mode, counters)
    state = lookup(state, e_positions, region, b_position, counters)
    return state
