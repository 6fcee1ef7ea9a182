"""Radix trees over fixed-length bit-strings and their block-memory encodings.

A radix tree is in bijection with a set of length-l bit-strings: edge labels
are non-empty, the labels along every root-to-leaf path concatenate to exactly
l bits, and the child whose label starts with 0 is always the left child.  A
tree with r nodes is laid out in an array of 2m fixed-width blocks: the root
always occupies block 1, every other node occupies the block a layout map
assigns it, and unused blocks are all-zero.  Each block packs
(label length, label content, parent link, left link, right link).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

from .circuit import is_power_of_two


class RadixError(ValueError):
    """Malformed set, tree, layout, or encoding."""


ENUMERATION_CAP = 10 ** 6


@dataclass(frozen=True)
class RadixNode:
    """Node with the edge label from its parent (root label is empty)."""

    label: str
    left: "RadixNode | None" = None
    right: "RadixNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def _build(suffixes: list, label: str) -> RadixNode:
    if len(suffixes) == 1 and suffixes[0] == "":
        return RadixNode(label)
    zero = [s for s in suffixes if s[0] == "0"]
    one = [s for s in suffixes if s[0] == "1"]
    left = right = None
    if zero:
        p = zero[0]
        for s in zero[1:]:
            p = p[:_common_prefix(p, s)]
        left = _build([s[len(p):] for s in zero], p)
    if one:
        p = one[0]
        for s in one[1:]:
            p = p[:_common_prefix(p, s)]
        right = _build([s[len(p):] for s in one], p)
    return RadixNode(label, left, right)


def from_set(strings, word_length: int) -> RadixNode:
    """Canonical radix tree for a set of word_length-bit strings."""
    items = sorted(set(strings))
    for s in items:
        if len(s) != word_length or set(s) - {"0", "1"}:
            raise RadixError(f"element {s!r} is not a {word_length}-bit string")
    if not items:
        return RadixNode("")
    prefix = items[0]
    for s in items[1:]:
        prefix = prefix[:_common_prefix(prefix, s)]
    if prefix:
        # all elements share a prefix: single child under the root
        child = _build([s[len(prefix):] for s in items], prefix)
        if prefix[0] == "0":
            return RadixNode("", left=child)
        return RadixNode("", right=child)
    return _build(items, "")


def to_set(tree: RadixNode) -> frozenset:
    out = []

    def walk(node: RadixNode, acc: str):
        if node.is_leaf:
            if node is not tree:  # a bare root stores the empty set
                out.append(acc)
            return
        if node.left is not None:
            walk(node.left, acc + node.left.label)
        if node.right is not None:
            walk(node.right, acc + node.right.label)

    walk(tree, "")
    return frozenset(out)


def preorder(tree: RadixNode) -> list:
    nodes = []

    def walk(node):
        nodes.append(node)
        if node.left is not None:
            walk(node.left)
        if node.right is not None:
            walk(node.right)

    walk(tree)
    return nodes


def node_count(tree: RadixNode) -> int:
    return len(preorder(tree))


def dump_tree(tree: RadixNode) -> str:
    """Indented text dump for CLI/debug use (format not contractual)."""
    lines = []

    def walk(node, depth):
        name = f"'{node.label}'" if node.label else "(root)"
        tag = " leaf" if node.is_leaf else ""
        lines.append("  " * depth + name + tag)
        for child in (node.left, node.right):
            if child is not None:
                walk(child, depth + 1)

    walk(tree, 0)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class BlockCodec:
    """Bit packing of node blocks for a given word length and capacity."""

    word_length: int
    capacity: int

    def __post_init__(self):
        if not is_power_of_two(self.word_length):
            raise RadixError(f"word length must be a power of 2, got {self.word_length}")
        if not is_power_of_two(self.capacity):
            raise RadixError(f"capacity must be a power of 2, got {self.capacity}")

    @property
    def block_count(self) -> int:
        return 2 * self.capacity

    @property
    def len_width(self) -> int:
        return self.word_length.bit_length()

    @property
    def ptr_width(self) -> int:
        return self.block_count.bit_length()

    @property
    def block_width(self) -> int:
        return self.len_width + self.word_length + 3 * self.ptr_width

    @property
    def layout_bits(self) -> int:
        return self.block_count * self.block_width

    def pack(self, label: str, parent: int, left: int, right: int) -> str:
        if len(label) > self.word_length:
            raise RadixError(f"label {label!r} longer than word length")
        return (
            format(len(label), f"0{self.len_width}b")
            + label.ljust(self.word_length, "0")
            + format(parent, f"0{self.ptr_width}b")
            + format(left, f"0{self.ptr_width}b")
            + format(right, f"0{self.ptr_width}b")
        )

    def unpack(self, bits: str) -> tuple[str, int, int, int]:
        lw, wl, pw = self.len_width, self.word_length, self.ptr_width
        label_len = int(bits[:lw], 2)
        if label_len > wl:
            raise RadixError(f"label length {label_len} exceeds word length")
        content = bits[lw:lw + wl]
        if any(c == "1" for c in content[label_len:]):
            raise RadixError("label padding bits must be zero")
        parent = int(bits[lw + wl:lw + wl + pw], 2)
        left = int(bits[lw + wl + pw:lw + wl + 2 * pw], 2)
        right = int(bits[lw + wl + 2 * pw:], 2)
        for ptr in (parent, left, right):
            if ptr > self.block_count:
                raise RadixError(f"block link {ptr} out of range")
        return content[:label_len], parent, left, right

    def slice(self, bits: str, block: int) -> str:
        return bits[(block - 1) * self.block_width:block * self.block_width]


def encode_with_layout(tree: RadixNode, tau, word_length: int, capacity: int) -> str:
    """Pack the tree into 2*capacity blocks under the layout map ``tau``.

    ``tau`` maps preorder node index -> block number and must be injective
    with tau[0] == 1 (the root).
    """
    nodes = preorder(tree)
    codec = BlockCodec(word_length, capacity)
    if len(nodes) > codec.block_count:
        raise RadixError(
            f"tree has {len(nodes)} nodes but only {codec.block_count} blocks"
        )
    blocks = list(tau) if not isinstance(tau, dict) else [tau[i] for i in range(len(nodes))]
    if len(blocks) != len(nodes):
        raise RadixError("layout map size does not match node count")
    if len(set(blocks)) != len(blocks):
        raise RadixError("layout map must be injective")
    if blocks[0] != 1:
        raise RadixError("layout map must place the root in block 1")
    for b in blocks:
        if not 1 <= b <= codec.block_count:
            raise RadixError(f"block number {b} out of range")

    index_of = {id(node): i for i, node in enumerate(nodes)}
    parent_of = {}
    for node in nodes:
        for child in (node.left, node.right):
            if child is not None:
                parent_of[id(child)] = node
    packed = ["0" * codec.block_width] * codec.block_count
    for i, node in enumerate(nodes):
        parent = parent_of.get(id(node))
        pblock = blocks[index_of[id(parent)]] if parent is not None else 0
        lblock = blocks[index_of[id(node.left)]] if node.left is not None else 0
        rblock = blocks[index_of[id(node.right)]] if node.right is not None else 0
        packed[blocks[i] - 1] = codec.pack(node.label, pblock, lblock, rblock)
    return "".join(packed)


def decode_layout(bits: str, word_length: int, capacity: int):
    """Inverse of encode_with_layout: returns (tree, layout list).

    Validates structure: reachable blocks form a radix tree with consistent
    parent links and path lengths, left/right children start with 0/1, every
    non-root internal node has two children, and unreachable blocks are zero.
    """
    codec = BlockCodec(word_length, capacity)
    if len(bits) != codec.layout_bits:
        raise RadixError(f"layout length {len(bits)} != {codec.layout_bits}")

    visited_order: list[int] = []

    def build_rec(block, expect_parent, remaining):
        visited_order.append(block)
        label, parent, left, right = codec.unpack(codec.slice(bits, block))
        if parent != expect_parent:
            raise RadixError(f"block {block}: parent link {parent} != {expect_parent}")
        if block == 1:
            if label:
                raise RadixError("root block must carry an empty label")
        elif not label:
            raise RadixError(f"block {block}: non-root node needs a non-empty label")
        rest = remaining - len(label)
        if rest < 0:
            raise RadixError(f"block {block}: path exceeds word length")
        if left == 0 and right == 0:
            if block != 1 and rest != 0:
                raise RadixError(f"block {block}: leaf path has {rest} bits missing")
            return RadixNode(label)
        if block != 1 and (left == 0 or right == 0):
            raise RadixError(f"block {block}: non-root internal node needs two children")
        lnode = rnode = None
        if left:
            lnode = build_rec(left, block, rest)
            if lnode.label[0] != "0":
                raise RadixError(f"block {left}: left child label must start with 0")
        if right:
            rnode = build_rec(right, block, rest)
            if rnode.label[0] != "1":
                raise RadixError(f"block {right}: right child label must start with 1")
        return RadixNode(label, lnode, rnode)

    tree = build_rec(1, 0, word_length)
    if len(set(visited_order)) != len(visited_order):
        raise RadixError("layout contains a block cycle")
    zero_block = "0" * codec.block_width
    for block in range(1, codec.block_count + 1):
        if block not in visited_order and codec.slice(bits, block) != zero_block:
            raise RadixError(f"unused block {block} is not zero")
    return tree, visited_order


def count_layouts(strings, word_length: int, capacity: int) -> int:
    """Number of injective node-to-block layouts with the root in block 1."""
    tree = from_set(strings, word_length)
    r = node_count(tree)
    blocks = 2 * capacity
    if r > blocks:
        raise RadixError(f"tree needs {r} blocks but only {blocks} are available")
    return math.perm(blocks - 1, r - 1)


def enumerate_layouts(strings, word_length: int, capacity: int) -> list:
    """All layout encodings of the set; length equals count_layouts."""
    tree = from_set(strings, word_length)
    total = count_layouts(strings, word_length, capacity)
    if total > ENUMERATION_CAP:
        raise RadixError(f"{total} layouts exceed the enumeration cap {ENUMERATION_CAP}")
    r = node_count(tree)
    blocks = 2 * capacity
    out = []
    for rest in permutations(range(2, blocks + 1), r - 1):
        out.append(encode_with_layout(tree, [1, *rest], word_length, capacity))
    return out
