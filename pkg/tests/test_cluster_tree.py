"""Tests for cluster tree construction and ordering."""

import numpy as np
import pytest

from hsskit.cluster_tree import (build_from_points, build_uniform,
                                 topological_order)


def left_to_right_leaves(tree):
    return sorted(tree.leaves(), key=lambda node: node.lo)


def test_single_node_when_n_fits_leaf():
    tree = build_uniform(4, 4)
    assert len(tree) == 1
    root = tree.root
    assert root.is_leaf
    assert (root.nid, root.lo, root.hi, root.level) == (0, 0, 4, 0)
    assert root.size == 4
    assert tree.depth() == 1


def test_uniform_1000_by_256_shape():
    tree = build_uniform(1000, 256)
    assert len(tree) == 7
    assert tree.depth() == 3
    assert [leaf.size for leaf in tree.leaves()] == [250, 250, 250, 250]
    root = tree.root
    assert root.left.size == 500 and root.right.size == 500
    # breadth-first ids: root, its two children, then the four leaves
    assert [node.nid for node in tree.nodes] == list(range(7))
    assert [node.level for node in tree.nodes] == [0, 1, 1, 2, 2, 2, 2]


def test_odd_split_gives_ceiling_to_left_child():
    tree = build_uniform(5, 2)
    sizes = [leaf.size for leaf in left_to_right_leaves(tree)]
    assert sizes == [2, 1, 2]
    assert sum(sizes) == 5


def test_ranges_partition_and_nest():
    tree = build_uniform(37, 4)
    for node in tree.nodes:
        if node.is_leaf:
            assert node.size <= 4
        else:
            assert node.left.lo == node.lo
            assert node.left.hi == node.right.lo
            assert node.right.hi == node.hi
            assert node.left.size >= node.right.size
    assert sum(leaf.size for leaf in tree.leaves()) == 37


def test_root_indices_cover_range():
    tree = build_uniform(10, 3)
    np.testing.assert_array_equal(tree.root.indices(), np.arange(10))
    leaf = left_to_right_leaves(tree)[1]
    np.testing.assert_array_equal(leaf.indices(),
                                  np.arange(leaf.lo, leaf.hi))


def test_topological_order_is_children_first():
    tree = build_uniform(1000, 256)
    order = topological_order(tree)
    assert order == [3, 4, 5, 6, 1, 2, 0]
    seen = set()
    for nid in order:
        node = tree.nodes[nid]
        if not node.is_leaf:
            assert node.left.nid in seen and node.right.nid in seen
        seen.add(nid)
    assert order[-1] == tree.root.nid


def test_build_uniform_rejects_bad_sizes():
    with pytest.raises(ValueError):
        build_uniform(0, 4)
    with pytest.raises(ValueError):
        build_uniform(8, 0)


def test_points_identical_pair_keeps_original_order():
    tree, perm = build_from_points(np.zeros((2, 3)), 1)
    np.testing.assert_array_equal(perm, [0, 1])
    assert [leaf.size for leaf in tree.leaves()] == [1, 1]


def test_points_cube_corners_split_by_coordinates():
    # Scrambled unit-cube corners: the splits go x then y, so each leaf
    # pair agrees in the first two coordinates and differs in the third.
    corners = np.array([[x, y, z] for x in (0, 1) for y in (0, 1)
                        for z in (0, 1)], dtype=float)
    rng = np.random.default_rng(7)
    shuffled = corners[rng.permutation(8)]
    tree, perm = build_from_points(shuffled, 2)
    reordered = shuffled[perm]
    for leaf in tree.leaves():
        assert leaf.size == 2
        a, b = reordered[leaf.lo], reordered[leaf.hi - 1]
        assert a[0] == b[0] and a[1] == b[1] and a[2] != b[2]


def test_points_permutation_is_valid():
    rng = np.random.default_rng(3)
    pts = rng.uniform(size=(40, 3))
    tree, perm = build_from_points(pts, 8)
    assert sorted(perm.tolist()) == list(range(40))
    assert tree.n == 40
    assert all(leaf.size <= 8 for leaf in tree.leaves())


def test_regular_grid_tree_matches_uniform_ranges():
    # A 10x10x10 grid splits into equal halves along the widest axis at
    # every level, so the geometric tree has the same ranges as the
    # uniform tree on n=1000.
    axis = np.linspace(0.0, 1.0, 10)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    geo, _ = build_from_points(points, 256)
    uni = build_uniform(1000, 256)
    assert len(geo) == len(uni)
    for a, b in zip(geo.nodes, uni.nodes):
        assert (a.lo, a.hi, a.level) == (b.lo, b.hi, b.level)


def test_build_from_points_validation():
    with pytest.raises(ValueError):
        build_from_points(np.zeros((0, 3)), 4)
    with pytest.raises(ValueError):
        build_from_points(np.zeros(5), 4)
    with pytest.raises(ValueError):
        build_from_points(np.zeros((5, 3)), 0)
