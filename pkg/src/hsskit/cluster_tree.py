"""Binary cluster trees over contiguous index ranges.

A cluster tree partitions the index set [0, n) into a binary hierarchy of
contiguous half-open ranges. Every node owns the range of one diagonal
block of the matrix; sibling pairs define the off-diagonal blocks that the
hierarchical compression treats as low rank. Leaves are capped at
``leaf_size`` indices.

Two builders are provided: a deterministic uniform halving rule, and a
geometric rule that reorders a 3D point set by recursive coordinate
bisection (widest axis, median split) so that nearby points land in the
same subtree.
"""

from __future__ import annotations

import numpy as np


class ClusterNode:
    """One tree node: the half-open index range [lo, hi) at a given depth."""

    __slots__ = ("lo", "hi", "level", "left", "right", "nid")

    def __init__(self, lo: int, hi: int, level: int):
        self.lo = lo
        self.hi = hi
        self.level = level
        self.left: ClusterNode | None = None
        self.right: ClusterNode | None = None
        self.nid = -1

    @property
    def size(self) -> int:
        return self.hi - self.lo

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi)

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "internal"
        return f"ClusterNode([{self.lo}, {self.hi}), level={self.level}, {kind})"


class ClusterTree:
    """Binary partition tree of [0, n). Immutable after construction."""

    def __init__(self, root: ClusterNode, n: int, leaf_size: int):
        self.root = root
        self.n = n
        self.leaf_size = leaf_size
        # Stable node ids in breadth-first order; topological_order and the
        # compression sweep address nodes through these.
        self.nodes: list[ClusterNode] = []
        queue = [root]
        while queue:
            node = queue.pop(0)
            node.nid = len(self.nodes)
            self.nodes.append(node)
            if not node.is_leaf:
                queue.append(node.left)
                queue.append(node.right)

    def __len__(self) -> int:
        return len(self.nodes)

    def leaves(self) -> list[ClusterNode]:
        return [node for node in self.nodes if node.is_leaf]

    def depth(self) -> int:
        """Number of levels (root level 0 counts as one)."""
        return 1 + max(node.level for node in self.nodes)


def _split_range(lo: int, hi: int, level: int, leaf_size: int) -> ClusterNode:
    node = ClusterNode(lo, hi, level)
    length = hi - lo
    if length > leaf_size:
        mid = lo + (length + 1) // 2  # left child gets the ceiling half
        node.left = _split_range(lo, mid, level + 1, leaf_size)
        node.right = _split_range(mid, hi, level + 1, leaf_size)
    return node


def build_uniform(n: int, leaf_size: int) -> ClusterTree:
    """Recursive halving of [0, n); ranges longer than leaf_size split with
    the left child taking ceil(len/2)."""
    if n < 1 or leaf_size < 1:
        raise ValueError("n and leaf_size must be positive")
    return ClusterTree(_split_range(0, n, 0, leaf_size), n, leaf_size)


def build_from_points(points, leaf_size: int) -> tuple[ClusterTree, np.ndarray]:
    """Reorder a point set by recursive coordinate bisection and build the
    matching tree.

    At each step the axis of largest coordinate extent is chosen (ties go to
    the lowest axis index) and the points are split at the median, the left
    child taking ceil(len/2) of them; coordinate ties keep the lower index on
    the left. Returns the tree over the reordered indices and the permutation
    ``perm`` with ``perm[new_index] = original_index``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (n, dim) array")
    if leaf_size < 1:
        raise ValueError("leaf_size must be positive")
    n = pts.shape[0]

    perm = np.empty(n, dtype=np.intp)

    def recurse(idx: np.ndarray, lo: int, level: int) -> ClusterNode:
        node = ClusterNode(lo, lo + len(idx), level)
        if len(idx) <= leaf_size:
            perm[lo:lo + len(idx)] = idx
            return node
        coords = pts[idx]
        extents = coords.max(axis=0) - coords.min(axis=0)
        axis = int(np.argmax(extents))  # argmax takes the lowest index on ties
        order = np.argsort(coords[:, axis], kind="stable")
        mid = (len(idx) + 1) // 2
        node.left = recurse(idx[order[:mid]], lo, level + 1)
        node.right = recurse(idx[order[mid:]], lo + mid, level + 1)
        return node

    root = recurse(np.arange(n, dtype=np.intp), 0, 0)
    return ClusterTree(root, n, leaf_size), perm


def topological_order(tree: ClusterTree) -> list[int]:
    """Node ids ordered deepest level first, left-to-right within a level.

    Every node appears after both of its children, so a single pass visits
    the tree bottom-up.
    """
    return [node.nid
            for node in sorted(tree.nodes, key=lambda nd: (-nd.level, nd.lo))]
