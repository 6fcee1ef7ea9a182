"""History-independent trees for repeated-label and close-pair queries.

Both structures keep a complete binary tree of flag bits over a power-of-2
leaf alphabet and answer their query by reading the root flag; their flat bit
encodings depend only on the represented set, never on the operation order,
and stay sparse: a set of r elements sets O(r (log sigma + log n)) bits.

Distance and grid arithmetic is exact: points are integer coordinates, the
threshold is a rational, and all comparisons are done on cross-multiplied
squared quantities, so boundary cases never depend on floating point.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import isqrt

from .circuit import is_power_of_two
from .prefix_tree import PrefixSumTree, encoding_length


class AppTreeError(ValueError):
    """Illegal parameter or operation on an application tree."""


def sparsity_count(encoding: str) -> int:
    """Number of 1 bits in a flat encoding."""
    return encoding.count("1")


def as_exact_threshold(eps) -> Fraction:
    """Normalize a distance threshold to an exact rational."""
    if isinstance(eps, Fraction):
        value = eps
    elif isinstance(eps, int):
        value = Fraction(eps)
    elif isinstance(eps, str):
        value = Fraction(eps)
    else:
        raise AppTreeError(
            "pass the threshold as int, Fraction, or decimal string; "
            "floats would make boundary comparisons inexact"
        )
    if value <= 0:
        raise AppTreeError(f"threshold must be positive, got {eps}")
    return value


def grid_id(point, eps) -> tuple:
    """Box of a point on the hypergrid of width eps/sqrt(d).

    Computed exactly: coordinate c lands in box floor(c * sqrt(d) / eps),
    evaluated as isqrt(c^2 d den^2) // num for eps = num/den.
    """
    eps = as_exact_threshold(eps)
    d = len(point)
    if d < 1:
        raise AppTreeError("point needs at least one coordinate")
    num, den = eps.numerator, eps.denominator
    out = []
    for c in point:
        if not isinstance(c, int) or c < 0:
            raise AppTreeError(f"coordinates must be nonnegative integers, got {c!r}")
        out.append(isqrt(c * c * d * den * den) // num)
    return tuple(out)


def neighbours(box) -> list:
    """All other boxes within coordinate distance sqrt(d), nonnegative coords."""
    d = len(box)
    radius = isqrt(d)
    out = []
    for offset in product(range(-radius, radius + 1), repeat=d):
        if all(o == 0 for o in offset):
            continue
        if sum(o * o for o in offset) > d:
            continue
        candidate = tuple(b + o for b, o in zip(box, offset))
        if all(c >= 0 for c in candidate):
            out.append(candidate)
    return out


def _flag_path_update(flags, sigma_size, leaf, leaf_qual, touch):
    """Recompute ancestor flags of a leaf bottom-up, stopping when unchanged.

    ``leaf_qual(x)`` tells whether leaf x qualifies on its own; a flag is the
    OR over its two children.  Sound to stop early: an unchanged flag feeds
    ancestors the same value as before.
    """
    if sigma_size < 2:
        return

    def value_of(node):
        touch(1)
        if node >= sigma_size:
            return leaf_qual(node - sigma_size)
        return flags[node]

    node = (sigma_size + leaf) >> 1
    while node >= 1:
        new = 1 if (value_of(2 * node) or value_of(2 * node + 1)) else 0
        touch(1)
        if flags[node] == new:
            break
        flags[node] = new
        touch(1)
        node >>= 1


class KedTree:
    """Counts, per label, how many distinct indices carry it; root flag says
    whether any label reaches the repetition threshold.

    Leaf x stores a length-n bit vector (bit i-1 set iff index i carries label
    x) and its Hamming weight; internal flags mark subtrees containing a leaf
    with weight >= k.  The flat encoding is sigma-1 flag bits breadth-first,
    then per leaf the n vector bits followed by the weight in ceil(log2(n+1))
    bits (one bit more than log2(n), since the weight can equal n).
    """

    def __init__(self, n: int, k: int, sigma_size: int):
        if n < 1:
            raise AppTreeError(f"n must be >= 1, got {n}")
        if k < 1:
            raise AppTreeError(f"k must be >= 1, got {k}")
        if not is_power_of_two(sigma_size) or sigma_size < 2:
            raise AppTreeError(
                f"alphabet size must be a power of 2 and >= 2, got {sigma_size}"
            )
        self.n = n
        self.k = k
        self.sigma_size = sigma_size
        self.label_width = sigma_size.bit_length() - 1
        self.count_width = n.bit_length()
        self._flags = [0] * sigma_size
        self._vectors = [0] * sigma_size
        self._counts = [0] * sigma_size
        self.last_touched = 0

    def _leaf_of(self, label: str) -> int:
        if len(label) != self.label_width or set(label) - {"0", "1"}:
            raise AppTreeError(
                f"label must be a {self.label_width}-bit string, got {label!r}"
            )
        return int(label, 2)

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.n:
            raise AppTreeError(f"index {i} out of range 1..{self.n}")

    def index_used(self, i: int) -> bool:
        self._check_index(i)
        mask = 1 << (i - 1)
        return any(v & mask for v in self._vectors)

    def insert(self, i: int, label: str) -> None:
        leaf = self._leaf_of(label)
        if self.index_used(i):
            raise AppTreeError(f"index {i} is already present")
        self.last_touched = 0
        touch = self._touch
        self._vectors[leaf] |= 1 << (i - 1)
        self._counts[leaf] += 1
        touch(3)
        if self._counts[leaf] >= self.k:
            _flag_path_update(self._flags, self.sigma_size, leaf,
                              self._leaf_qual, touch)

    def delete(self, i: int, label: str) -> None:
        leaf = self._leaf_of(label)
        self._check_index(i)
        mask = 1 << (i - 1)
        if not self._vectors[leaf] & mask:
            raise AppTreeError(f"element ({i}, {label}) is not present")
        self.last_touched = 0
        touch = self._touch
        self._vectors[leaf] &= ~mask
        self._counts[leaf] -= 1
        touch(3)
        if self._counts[leaf] == self.k - 1:
            _flag_path_update(self._flags, self.sigma_size, leaf,
                              self._leaf_qual, touch)

    def query(self) -> int:
        return self._flags[1]

    def _leaf_qual(self, leaf: int) -> int:
        return 1 if self._counts[leaf] >= self.k else 0

    def _touch(self, amount: int) -> None:
        self.last_touched += amount

    def encode(self) -> str:
        parts = ["".join(str(f) for f in self._flags[1:])]
        for leaf in range(self.sigma_size):
            vector = self._vectors[leaf]
            parts.append(
                "".join("1" if vector >> i & 1 else "0" for i in range(self.n))
            )
            parts.append(format(self._counts[leaf], f"0{self.count_width}b"))
        return "".join(parts)

    def encoding_bits(self) -> int:
        return self.sigma_size - 1 + self.sigma_size * (self.n + self.count_width)


class CpTree:
    """Flags whether the stored point set contains a pair within the threshold.

    The points are fixed up front; the structure stores a subset of their
    indices.  Each grid box keeps a prefix-sum tree over the (power-of-2
    padded) index range plus a counter of threshold-close singleton neighbour
    boxes; a box qualifies when it holds two points or is a singleton with a
    close singleton neighbour, and internal flags OR qualification upward.
    """

    def __init__(self, points, eps, side: int):
        if not points:
            raise AppTreeError("need at least one point")
        self.eps = as_exact_threshold(eps)
        self.side = side
        self.d = len(points[0])
        self.n = len(points)
        self.points = [tuple(p) for p in points]
        for p in self.points:
            if len(p) != self.d:
                raise AppTreeError("points must share one dimension")
            for c in p:
                if not isinstance(c, int) or not 1 <= c <= side:
                    raise AppTreeError(
                        f"coordinate {c!r} outside the integer cube 1..{side}"
                    )
        self.n_padded = 1 << (self.n - 1).bit_length() if self.n > 1 else 1
        self.count_width = self.n_padded.bit_length()
        # per-coordinate box range is set by the farthest corner of the cube
        self.max_coord = grid_id((side,) * self.d, self.eps)[0]
        self.coord_bits = self.max_coord.bit_length()
        self.sigma_size = 1 << (self.d * self.coord_bits)
        self._boxes = [grid_id(p, self.eps) for p in self.points]
        self._flags = [0] * max(self.sigma_size, 2)
        self._trees: list = [None] * self.sigma_size
        self._externals = [0] * self.sigma_size
        self._tree_depth = self.n_padded.bit_length() - 1
        self._empty_tree_bits = PrefixSumTree(self.n_padded).encode()
        self.last_touched = 0

    def _leaf_of_box(self, box) -> int:
        index = 0
        for c in box:
            index = (index << self.coord_bits) | c
        return index

    def _box_of_leaf(self, leaf: int) -> tuple:
        mask = (1 << self.coord_bits) - 1
        coords = []
        for _ in range(self.d):
            coords.append(leaf & mask)
            leaf >>= self.coord_bits
        return tuple(reversed(coords))

    def _close(self, a, b) -> bool:
        num, den = self.eps.numerator, self.eps.denominator
        dist_sq = sum((x - y) ** 2 for x, y in zip(a, b))
        return dist_sq * den * den <= num * num

    def _tree(self, leaf: int) -> PrefixSumTree:
        if self._trees[leaf] is None:
            self._trees[leaf] = PrefixSumTree(self.n_padded)
        return self._trees[leaf]

    def _size(self, leaf: int) -> int:
        tree = self._trees[leaf]
        return 0 if tree is None else tree.size()

    def _neighbour_leaves(self, box):
        for other in neighbours(box):
            if all(c <= self.max_coord for c in other):
                yield self._leaf_of_box(other)

    def _leaf_qual(self, leaf: int) -> int:
        size = self._size(leaf)
        return 1 if size >= 2 or (size == 1 and self._externals[leaf] >= 1) else 0

    def _touch(self, amount: int) -> None:
        self.last_touched += amount

    def _only_member(self, leaf: int) -> int:
        self._touch(self._tree_depth)
        return self._tree(leaf).select(1)

    def insert(self, i: int, point) -> None:
        point = tuple(point)
        if not 1 <= i <= self.n:
            raise AppTreeError(f"index {i} out of range 1..{self.n}")
        if point != self.points[i - 1]:
            raise AppTreeError(
                f"point {point} does not match stored point {self.points[i - 1]}"
            )
        leaf = self._leaf_of_box(self._boxes[i - 1])
        tree = self._tree(leaf)
        if tree.contains(i):
            raise AppTreeError(f"index {i} is already present")
        self.last_touched = 0
        touch = self._touch
        tree.add(i)
        touch(self._tree_depth + 1)
        size = tree.size()
        box = self._boxes[i - 1]
        if size == 1:
            external = 0
            for other in self._neighbour_leaves(box):
                if self._size(other) != 1:
                    continue
                j = self._only_member(other)
                if self._close(point, self.points[j - 1]):
                    external += 1
                    self._externals[other] += 1
                    touch(2)
                    if self._externals[other] == 1:
                        _flag_path_update(self._flags, self.sigma_size, other,
                                          self._leaf_qual, touch)
            self._externals[leaf] = external
            touch(1)
        elif size == 2:
            remaining = {tree.select(1), tree.select(2)} - {i}
            touch(2 * self._tree_depth)
            prev = self.points[remaining.pop() - 1]
            for other in self._neighbour_leaves(box):
                if self._size(other) != 1:
                    continue
                j = self._only_member(other)
                if self._close(prev, self.points[j - 1]):
                    self._externals[other] -= 1
                    touch(2)
                    if self._externals[other] == 0:
                        _flag_path_update(self._flags, self.sigma_size, other,
                                          self._leaf_qual, touch)
            self._externals[leaf] = 0
            touch(1)
        _flag_path_update(self._flags, self.sigma_size, leaf,
                          self._leaf_qual, touch)

    def delete(self, i: int, point) -> None:
        point = tuple(point)
        if not 1 <= i <= self.n:
            raise AppTreeError(f"index {i} out of range 1..{self.n}")
        if point != self.points[i - 1]:
            raise AppTreeError(
                f"point {point} does not match stored point {self.points[i - 1]}"
            )
        leaf = self._leaf_of_box(self._boxes[i - 1])
        tree = self._trees[leaf]
        if tree is None or not tree.contains(i):
            raise AppTreeError(f"element ({i}, {point}) is not present")
        self.last_touched = 0
        touch = self._touch
        tree.remove(i)
        touch(self._tree_depth + 1)
        size = tree.size()
        box = self._boxes[i - 1]
        if size == 0:
            for other in self._neighbour_leaves(box):
                if self._size(other) != 1:
                    continue
                j = self._only_member(other)
                if self._close(point, self.points[j - 1]):
                    self._externals[other] -= 1
                    touch(2)
                    if self._externals[other] == 0:
                        _flag_path_update(self._flags, self.sigma_size, other,
                                          self._leaf_qual, touch)
            self._externals[leaf] = 0
            touch(1)
        elif size == 1:
            survivor = self.points[self._only_member(leaf) - 1]
            external = 0
            for other in self._neighbour_leaves(box):
                if self._size(other) != 1:
                    continue
                j = self._only_member(other)
                if self._close(survivor, self.points[j - 1]):
                    external += 1
                    self._externals[other] += 1
                    touch(2)
                    if self._externals[other] == 1:
                        _flag_path_update(self._flags, self.sigma_size, other,
                                          self._leaf_qual, touch)
            self._externals[leaf] = external
            touch(1)
        _flag_path_update(self._flags, self.sigma_size, leaf,
                          self._leaf_qual, touch)

    def query(self) -> int:
        if self.sigma_size < 2:
            return self._leaf_qual(0)
        return self._flags[1]

    def encode(self) -> str:
        parts = ["".join(str(f) for f in self._flags[1:self.sigma_size])]
        for leaf in range(self.sigma_size):
            tree = self._trees[leaf]
            parts.append(self._empty_tree_bits if tree is None else tree.encode())
            parts.append(format(self._externals[leaf], f"0{self.count_width}b"))
        return "".join(parts)

    def encoding_bits(self) -> int:
        per_leaf = encoding_length(self.n_padded) + self.count_width
        return max(self.sigma_size - 1, 0) + self.sigma_size * per_leaf
