"""Tests for the sketching operators and their sparse kernels."""

import math

import numpy as np
import pytest
import scipy.linalg as sla

from hsskit.sketching import (BLOCK, GAUSSIAN, GRAPH, SJLT, SRHT,
                              DenseAccessor, SjltBlock, append_columns,
                              apply_right, apply_right_transposed,
                              dense_rows, fwht, jl_dimension_bound,
                              new_operator)


def dense_op(op):
    return dense_rows(op, np.arange(op.n), np.arange(op.d))


def test_fwht_constant_vector():
    np.testing.assert_allclose(fwht([1.0, 1.0, 1.0, 1.0]),
                               [2.0, 0.0, 0.0, 0.0])


def test_fwht_matches_hadamard_matrix():
    rng = np.random.default_rng(0)
    for n in (1, 2, 4, 8, 32, 64):
        x = rng.standard_normal(n)
        H = sla.hadamard(n) / math.sqrt(n)
        np.testing.assert_allclose(fwht(x), H @ x, atol=1e-12)


def test_fwht_transforms_each_row():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((3, 16))
    H = sla.hadamard(16) / 4.0
    np.testing.assert_allclose(fwht(X), X @ H, atol=1e-12)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fwht(np.ones(6))
    with pytest.raises(ValueError):
        fwht(np.ones(0))


def test_normalized_hadamard_is_orthogonal():
    for n in (2, 16, 64):
        H = fwht(np.eye(n))
        np.testing.assert_allclose(H.T @ H, np.eye(n), atol=1e-12)


def test_gaussian_apply_matches_dense():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((9, 20))
    op = new_operator(GAUSSIAN, 20, 7, seed=5)
    np.testing.assert_allclose(apply_right(A, op), A @ dense_op(op),
                               atol=1e-12)
    opT = new_operator(GAUSSIAN, 9, 7, seed=6)
    np.testing.assert_allclose(apply_right_transposed(A, opT),
                               A.T @ dense_op(opT), atol=1e-12)


def test_srht_apply_matches_dense():
    rng = np.random.default_rng(3)
    for n in (16, 21):  # exact power of two and a padded length
        A = rng.standard_normal((8, n))
        tol = 1e-12 * np.linalg.norm(A)
        op = new_operator(SRHT, n, 5, seed=1)
        np.testing.assert_allclose(apply_right(A, op), A @ dense_op(op),
                                   atol=tol)
    opT = new_operator(SRHT, 8, 6, seed=2)
    np.testing.assert_allclose(apply_right_transposed(A, opT),
                               A.T @ dense_op(opT), atol=tol)


def test_sjlt_worked_pattern():
    # R^T = (1/sqrt(2)) [[1,0,-1],[0,-1,-1],[1,-1,0],[1,0,1]] expressed
    # through its positive and negative index patterns.
    pos = [[0, 2], [1, 2], [0, 1], [0, 2]]
    signs = [[1, -1], [-1, -1], [1, -1], [1, 1]]
    block = SjltBlock.from_pattern(4, 3, 2, pos, signs)
    s = 1.0 / math.sqrt(2.0)
    expected = s * np.array([[1, 0, -1], [0, -1, -1], [1, -1, 0],
                             [1, 0, 1]], dtype=float)
    np.testing.assert_array_equal(
        block.dense_rows(np.arange(4), np.arange(3)), expected)

    st = block.storage
    assert st.scale == s
    np.testing.assert_array_equal(st.plus_rowptr, [0, 1, 1, 2, 4])
    np.testing.assert_array_equal(st.plus_cols, [0, 0, 0, 2])
    np.testing.assert_array_equal(st.minus_rowptr, [0, 1, 3, 4, 4])
    np.testing.assert_array_equal(st.minus_cols, [2, 1, 2, 1])
    np.testing.assert_array_equal(st.plus_colptr, [0, 3, 3, 4])
    np.testing.assert_array_equal(st.plus_rows, [0, 2, 3, 3])
    np.testing.assert_array_equal(st.minus_colptr, [0, 0, 2, 4])
    np.testing.assert_array_equal(st.minus_rows, [1, 2, 0, 1])

    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 4))
    np.testing.assert_allclose(
        block.apply_right(np.asfortranarray(A)), A @ expected, atol=1e-14)
    np.testing.assert_allclose(
        block.apply_right_transposed(np.asfortranarray(A.T)),
        A @ expected, atol=1e-14)


def test_sjlt_transposed_apply_with_trailing_empty_columns():
    # every nonzero lands in column 0, so columns 1 and 2 are empty in both
    # sign patterns; the gather kernel must still sum column 0 completely
    block = SjltBlock.from_pattern(2, 3, 1, [[0], [0]], [[1], [-1]])
    dense = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    A = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(
        block.apply_right_transposed(np.asfortranarray(A)), A.T @ dense)


def test_sjlt_apply_matches_dense_both_constructions():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((16, 12))
    tol = 1e-13 * np.linalg.norm(A)
    for construction in (BLOCK, GRAPH):
        op = new_operator(SJLT, 12, 6, seed=9, alpha=3,
                          construction=construction)
        np.testing.assert_allclose(apply_right(A, op), A @ dense_op(op),
                                   atol=tol)
        opT = new_operator(SJLT, 16, 6, seed=10, alpha=2,
                           construction=construction)
        np.testing.assert_allclose(apply_right_transposed(A, opT),
                                   A.T @ dense_op(opT), atol=tol)


def test_symmetric_matrix_sides_agree():
    rng = np.random.default_rng(6)
    B = rng.standard_normal((10, 10))
    A = B + B.T
    op = new_operator(SJLT, 10, 4, seed=3, alpha=2, construction=GRAPH)
    np.testing.assert_allclose(apply_right(A, op),
                               apply_right_transposed(A, op), atol=1e-13)


def test_zero_matrix_sketches_to_zero():
    op = new_operator(SRHT, 12, 4, seed=0)
    np.testing.assert_array_equal(apply_right(np.zeros((5, 12)), op), 0.0)


def test_accessor_input_equivalent_to_array():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((6, 18))
    op = new_operator(GAUSSIAN, 18, 4, seed=8)
    np.testing.assert_array_equal(apply_right(DenseAccessor(A), op),
                                  apply_right(A, op))


def test_sjlt_column_norms_exactly_one():
    for construction in (BLOCK, GRAPH):
        op = new_operator(SJLT, 40, 8, seed=11, alpha=4,
                          construction=construction)
        Rt = dense_op(op)
        np.testing.assert_array_equal(np.sum(Rt**2, axis=1), 1.0)


def test_sjlt_entries_and_nonzero_counts():
    s = 1.0 / math.sqrt(3.0)
    for construction in (BLOCK, GRAPH):
        op = new_operator(SJLT, 30, 12, seed=12, alpha=3,
                          construction=construction)
        Rt = dense_op(op)
        assert np.all(np.isin(Rt, [0.0, s, -s]))
        np.testing.assert_array_equal(np.count_nonzero(Rt, axis=1), 3)


def test_sjlt_block_construction_hits_every_chunk():
    op = new_operator(SJLT, 25, 12, seed=13, alpha=3, construction=BLOCK)
    Rt = dense_op(op)
    chunk = 12 // 3
    for row in Rt:
        nz = np.flatnonzero(row)
        np.testing.assert_array_equal(np.sort(nz) // chunk, [0, 1, 2])


def test_sjlt_graph_positions_distinct():
    op = new_operator(SJLT, 200, 10, seed=14, alpha=5, construction=GRAPH)
    Rt = dense_op(op)
    np.testing.assert_array_equal(np.count_nonzero(Rt, axis=1), 5)


def test_sjlt_parameter_validation():
    with pytest.raises(ValueError):
        new_operator(SJLT, 4, 3, seed=0, alpha=2, construction=BLOCK)
    with pytest.raises(ValueError):
        new_operator(SJLT, 16, 4, seed=0, alpha=0, construction=GRAPH)
    with pytest.raises(ValueError):
        new_operator(SJLT, 16, 4, seed=0, alpha=5, construction=GRAPH)
    with pytest.raises(ValueError):
        new_operator(SJLT, 16, 4, seed=0, alpha=None, construction=GRAPH)
    with pytest.raises(ValueError):
        new_operator(SJLT, 16, 4, seed=0, alpha=2, construction="dense")


def test_operator_dimension_validation():
    with pytest.raises(ValueError):
        new_operator(GAUSSIAN, 8, 0, seed=0)
    with pytest.raises(ValueError):
        new_operator(GAUSSIAN, 8, 9, seed=0)
    with pytest.raises(ValueError):
        new_operator("fourier", 8, 4, seed=0)


def test_apply_dimension_mismatch():
    op = new_operator(GAUSSIAN, 8, 4, seed=0)
    with pytest.raises(ValueError):
        apply_right(np.zeros((3, 9)), op)
    with pytest.raises(ValueError):
        apply_right_transposed(np.zeros((9, 3)), op)


def test_append_preserves_existing_columns():
    op = new_operator(SRHT, 32, 6, seed=21)
    before = dense_op(op)
    grown = append_columns(op, 5, seed=99)
    assert grown.d == 11
    assert grown.blocks[0] is op.blocks[0]
    np.testing.assert_array_equal(
        dense_rows(grown, np.arange(32), np.arange(6)), before)


def test_append_rejects_nonpositive_growth():
    op = new_operator(GAUSSIAN, 8, 2, seed=0)
    with pytest.raises(ValueError):
        append_columns(op, 0, seed=1)


def test_same_seed_reproduces_operator():
    for kind, alpha in ((GAUSSIAN, None), (SRHT, None), (SJLT, 2)):
        a = new_operator(kind, 24, 8, seed=7, alpha=alpha)
        b = new_operator(kind, 24, 8, seed=7, alpha=alpha)
        np.testing.assert_array_equal(dense_op(a), dense_op(b))


def test_dense_rows_subsets_and_bounds():
    op = new_operator(GAUSSIAN, 10, 6, seed=1)
    full = dense_op(op)
    rows = np.array([7, 2, 2])
    cols = np.array([5, 0])
    np.testing.assert_array_equal(dense_rows(op, rows, cols),
                                  full[np.ix_(rows, cols)])
    empty = dense_rows(op, np.array([], dtype=int), np.arange(6))
    assert empty.shape == (0, 6)
    with pytest.raises(IndexError):
        dense_rows(op, np.array([10]), np.arange(6))
    with pytest.raises(IndexError):
        dense_rows(op, np.array([0]), np.array([6]))


def test_dense_rows_spans_appended_blocks():
    op = append_columns(
        new_operator(SJLT, 15, 4, seed=2, alpha=2, construction=GRAPH),
        6, seed=3)
    rows = np.arange(15)
    full = np.column_stack([op.blocks[0].dense_rows(rows, np.arange(4)),
                            op.blocks[1].dense_rows(rows, np.arange(6))])
    cols = np.array([8, 1, 5, 3])
    np.testing.assert_array_equal(dense_rows(op, rows, cols),
                                  full[:, cols])


def test_sketch_norm_is_unbiased_per_kind():
    # mean of |R x|^2 over independent draws stays near |x|^2 = 1
    n, d, trials = 32, 16, 3000
    rng = np.random.default_rng(15)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    for kind, alpha in ((GAUSSIAN, None), (SRHT, None), (SJLT, 4)):
        total = 0.0
        for t in range(trials):
            op = new_operator(kind, n, d, seed=(16, t), alpha=alpha)
            Rt = dense_op(op)
            total += float(x @ Rt @ Rt.T @ x)
        assert 0.95 <= total / trials <= 1.05, kind


def test_gaussian_appended_block_is_unbiased():
    # each block is scaled by its own width, so a freshly appended block
    # alone preserves squared norms in expectation
    x = np.zeros(16)
    x[0] = 1.0
    xrow = np.asfortranarray(x[None, :])
    trials = 10000
    total = 0.0
    for t in range(trials):
        op = append_columns(new_operator(GAUSSIAN, 16, 8, seed=(17, t)),
                            8, seed=(18, t))
        y = op.blocks[1].apply_right(xrow)
        total += float(y[0] @ y[0])
    assert 0.95 <= total / trials <= 1.05


def test_dimension_bound_reference_values():
    assert jl_dimension_bound(GAUSSIAN, 0.5, 0.01) == (424, None)
    assert jl_dimension_bound(GAUSSIAN, 0.5, 2.0 / math.e) == (80, None)
    assert jl_dimension_bound(SJLT, 0.5, 0.01) == (369, 185)
    d, alpha = jl_dimension_bound(SRHT, 0.5, 0.01, n=1000)
    expected = math.ceil(2.0 / 0.25 * math.log(4.0 * 1000**2 / 0.01) ** 2
                         * math.log(4.0 / 0.01))
    assert (d, alpha) == (expected, None)


def test_dimension_bound_ordering_at_reference_point():
    # at eps=0.5, delta=0.01, n=1000 the formulas order sjlt < gaussian
    # < srht
    g, _ = jl_dimension_bound(GAUSSIAN, 0.5, 0.01)
    s, _ = jl_dimension_bound(SRHT, 0.5, 0.01, n=1000)
    j, _ = jl_dimension_bound(SJLT, 0.5, 0.01)
    assert j < g < s


def test_dimension_bound_validation():
    with pytest.raises(ValueError):
        jl_dimension_bound(SRHT, 0.5, 0.01)  # needs the ambient dimension
    with pytest.raises(ValueError):
        jl_dimension_bound(GAUSSIAN, 0.0, 0.01)
    with pytest.raises(ValueError):
        jl_dimension_bound(GAUSSIAN, 1.0, 0.01)
    with pytest.raises(ValueError):
        jl_dimension_bound(GAUSSIAN, 0.5, 1.0)
    with pytest.raises(ValueError):
        jl_dimension_bound("fourier", 0.5, 0.01)


def test_dense_accessor_caches_fortran_buffer():
    A = np.arange(12.0).reshape(3, 4)
    acc = DenseAccessor(A)
    assert acc.shape == (3, 4)
    buf = acc.dense()
    assert buf.flags.f_contiguous
    np.testing.assert_array_equal(buf, A)
    assert acc.dense() is buf
    np.testing.assert_array_equal(acc.extract([2, 0], [1, 3]),
                                  A[np.ix_([2, 0], [1, 3])])
