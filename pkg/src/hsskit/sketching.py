"""Johnson-Lindenstrauss sketching operators and their matrix kernels.

Three operator families of logical shape d x n: dense Gaussian, subsampled
randomized Hadamard (SRHT), and sparse JL (SJLT). An operator is an ordered
list of independently seeded blocks, one per adaptation step, so the sketch
can grow by Delta-d columns without touching columns already computed.

The SJLT R^T = s * (B+ - B-) is held as two binary patterns, each stored in
both row-compressed and column-compressed index-only form (s = 1/sqrt(alpha)
is the single scale factor; there are no value arrays). A * R^T accumulates
signed columns of A driven by the row-compressed views, with no scalar
multiplication inside the loop and one final scaling. A^T * R^T makes one
pass over the columns of A (contiguous for the column-major buffers used
throughout) and forms each output entry as a signed index-gathered sum.
"""

from __future__ import annotations

import math

import numpy as np

GAUSSIAN = "gaussian"
SRHT = "srht"
SJLT = "sjlt"
KINDS = (GAUSSIAN, SRHT, SJLT)

BLOCK = "block"
GRAPH = "graph"
CONSTRUCTIONS = (BLOCK, GRAPH)


# ---------------------------------------------------------------------------
# matrix access
# ---------------------------------------------------------------------------

class MatrixAccessor:
    """Read-only view of a matrix: dimensions, entry extraction for index
    sets, and a dense column-major buffer for the sketch kernels.

    extract() must be deterministic and side-effect free. dense() may
    materialize lazily but must return the same buffer on repeated calls;
    callers never mutate it.
    """

    @property
    def shape(self) -> tuple[int, int]:
        raise NotImplementedError

    def extract(self, rows, cols) -> np.ndarray:
        raise NotImplementedError

    def dense(self) -> np.ndarray:
        raise NotImplementedError


class DenseAccessor(MatrixAccessor):
    """Accessor over an in-memory dense matrix."""

    def __init__(self, values):
        a = np.atleast_2d(np.asarray(values, dtype=float))
        self._a = np.asfortranarray(a)

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    def extract(self, rows, cols) -> np.ndarray:
        return self._a[np.ix_(np.asarray(rows, dtype=np.intp),
                              np.asarray(cols, dtype=np.intp))]

    def dense(self) -> np.ndarray:
        return self._a


def _buffer_of(A) -> np.ndarray:
    if isinstance(A, MatrixAccessor):
        return A.dense()
    return np.asfortranarray(np.atleast_2d(np.asarray(A, dtype=float)))


# ---------------------------------------------------------------------------
# fast Walsh-Hadamard transform
# ---------------------------------------------------------------------------

def _fwht_inplace(Y: np.ndarray) -> None:
    """Unnormalized in-place FWHT of each row of Y (row length a power of 2)."""
    n = Y.shape[1]
    h = 1
    while h < n:
        view = Y.reshape(Y.shape[0], n // (2 * h), 2, h)
        a = view[:, :, 0, :]
        b = view[:, :, 1, :]
        t = a - b
        a += b
        b[...] = t
        h *= 2


def fwht(x) -> np.ndarray:
    """Normalized fast Walsh-Hadamard transform of a vector or of each row
    of a matrix; length must be a power of two."""
    arr = np.array(x, dtype=float, copy=True)
    squeeze = arr.ndim == 1
    arr = np.atleast_2d(arr)
    n = arr.shape[1]
    if n & (n - 1) or n == 0:
        raise ValueError("fwht length must be a power of two")
    arr = np.ascontiguousarray(arr)
    _fwht_inplace(arr)
    arr /= math.sqrt(n)
    return arr[0] if squeeze else arr


def _next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


# ---------------------------------------------------------------------------
# operator blocks (one independent draw each)
# ---------------------------------------------------------------------------

class GaussianBlock:
    """i.i.d. normal entries with variance 1/rows, materialized at draw."""

    kind = GAUSSIAN

    def __init__(self, n: int, rows: int, seed):
        self.n = n
        self.rows = rows
        rng = np.random.default_rng(seed)
        self.matrix = rng.standard_normal((rows, n)) / math.sqrt(rows)

    def apply_right(self, buf: np.ndarray) -> np.ndarray:
        return buf @ self.matrix.T

    def apply_right_transposed(self, buf: np.ndarray) -> np.ndarray:
        return (self.matrix @ buf).T

    def dense_rows(self, I: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self.matrix[np.ix_(cols, I)].T


class SrhtBlock:
    """R = P H D on the zero-padded ambient space: Rademacher sign diagonal,
    normalized Hadamard of size n_pad = next power of two >= n, and ``rows``
    uniformly sampled rows scaled sqrt(n_pad/rows). The normalization and
    sampling scale combine into the single factor 1/sqrt(rows)."""

    kind = SRHT
    _chunk = 1024  # rows of A transformed per FWHT batch, bounds scratch size

    def __init__(self, n: int, rows: int, seed):
        self.n = n
        self.rows = rows
        self.n_pad = _next_pow2(n)
        rng = np.random.default_rng(seed)
        self.signs = rng.integers(0, 2, size=self.n_pad) * 2.0 - 1.0
        self.sample = rng.integers(0, self.n_pad, size=rows)
        self.scale = 1.0 / math.sqrt(rows)

    def _transform(self, buf: np.ndarray, transpose: bool) -> np.ndarray:
        m = buf.shape[1] if transpose else buf.shape[0]
        out = np.empty((m, self.rows), order="F")
        for lo in range(0, m, self._chunk):
            hi = min(lo + self._chunk, m)
            Y = np.zeros((hi - lo, self.n_pad))
            if transpose:
                Y[:, :self.n] = buf[:, lo:hi].T
            else:
                Y[:, :self.n] = buf[lo:hi, :]
            Y[:, :self.n] *= self.signs[:self.n]
            _fwht_inplace(Y)
            out[lo:hi, :] = Y[:, self.sample]
        out *= self.scale
        return out

    def apply_right(self, buf: np.ndarray) -> np.ndarray:
        return self._transform(buf, transpose=False)

    def apply_right_transposed(self, buf: np.ndarray) -> np.ndarray:
        return self._transform(buf, transpose=True)

    def dense_rows(self, I: np.ndarray, cols: np.ndarray) -> np.ndarray:
        # Unnormalized Hadamard entry H[i, j] = (-1)^popcount(i & j); signs
        # and both scale factors fold into self.scale.
        picked = self.sample[cols]
        parity = np.bitwise_count(np.bitwise_and.outer(
            I.astype(np.int64), picked.astype(np.int64))) & 1
        H = 1.0 - 2.0 * parity
        return self.signs[I, None] * H * self.scale


class SjltStorage:
    """Index-only storage of the two binary SJLT patterns.

    Each pattern is kept both row-compressed (indptr over rows of R^T,
    column indices) and column-compressed (indptr over columns of R^T, row
    indices); the two views describe the same pattern and the kernels pick
    whichever matches their traversal order.
    """

    __slots__ = ("scale", "plus_rowptr", "plus_cols", "minus_rowptr",
                 "minus_cols", "plus_colptr", "plus_rows", "minus_colptr",
                 "minus_rows")

    def __init__(self, scale, plus_rowptr, plus_cols, minus_rowptr,
                 minus_cols, plus_colptr, plus_rows, minus_colptr, minus_rows):
        self.scale = scale
        self.plus_rowptr = plus_rowptr
        self.plus_cols = plus_cols
        self.minus_rowptr = minus_rowptr
        self.minus_cols = minus_cols
        self.plus_colptr = plus_colptr
        self.plus_rows = plus_rows
        self.minus_colptr = minus_colptr
        self.minus_rows = minus_rows


def _compress_pattern(rows: np.ndarray, cols: np.ndarray, n: int, d: int):
    """Row- and column-compressed index form of a binary pattern given in
    row-major coordinate order."""
    rowptr = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(np.bincount(rows, minlength=n), out=rowptr[1:])
    order = np.argsort(cols, kind="stable")
    colptr = np.zeros(d + 1, dtype=np.intp)
    np.cumsum(np.bincount(cols, minlength=d), out=colptr[1:])
    return rowptr, np.asarray(cols, dtype=np.intp), colptr, rows[order]


class SjltBlock:
    """Sparse JL block: alpha nonzeros of value +-1/sqrt(alpha) per column
    of R (per row of R^T), placed by the block or graph construction."""

    kind = SJLT

    def __init__(self, n: int, rows: int, seed, alpha: int, construction: str,
                 _pattern=None):
        self.n = n
        self.rows = rows
        self.alpha = alpha
        self.construction = construction
        if _pattern is not None:
            pos, signs = _pattern
        else:
            rng = np.random.default_rng(seed)
            if construction == BLOCK:
                chunk = rows // alpha
                offsets = rng.integers(0, chunk, size=(n, alpha))
                pos = np.arange(alpha) * chunk + offsets
            else:
                pos = self._floyd_sample(rng, n, rows, alpha)
            signs = rng.integers(0, 2, size=(n, alpha)) * 2 - 1
        self._pos = np.asarray(pos, dtype=np.intp)
        self._signs = np.asarray(signs, dtype=np.int8)
        self._scale = 1.0 / math.sqrt(alpha)
        # The compressed-index views and kernel traversal aids are built on
        # first use; dense_rows only needs the raw pattern.
        self._storage = None

    @staticmethod
    def _floyd_sample(rng, n: int, d: int, alpha: int) -> np.ndarray:
        # Floyd's sampling of alpha distinct positions from [0, d) for each
        # of the n columns of R, run in lockstep across columns: at step j a
        # candidate in [0, j] is kept unless already taken, in which case j
        # itself is taken.
        taken = np.zeros((n, d), dtype=bool)
        pos = np.empty((n, alpha), dtype=np.intp)
        rows_idx = np.arange(n)
        for t, j in enumerate(range(d - alpha, d)):
            cand = rng.integers(0, j + 1, size=n)
            chosen = np.where(taken[rows_idx, cand], j, cand)
            taken[rows_idx, chosen] = True
            pos[:, t] = chosen
        return pos

    @classmethod
    def from_pattern(cls, n: int, rows: int, alpha: int,
                     pos, signs) -> "SjltBlock":
        """Build a block from an explicit pattern (testing hook)."""
        pos = np.asarray(pos, dtype=np.intp)
        signs = np.asarray(signs)
        return cls(n, rows, seed=0, alpha=alpha, construction=GRAPH,
                   _pattern=(pos, signs))

    @property
    def storage(self) -> SjltStorage:
        if self._storage is None:
            self._build_storage()
        return self._storage

    def _build_storage(self):
        n, d = self.n, self.rows
        flat_rows = np.repeat(np.arange(n, dtype=np.intp), self.alpha)
        flat_cols = self._pos.ravel()
        positive = self._signs.ravel() > 0
        p = _compress_pattern(flat_rows[positive], flat_cols[positive], n, d)
        m = _compress_pattern(flat_rows[~positive], flat_cols[~positive], n, d)
        self._storage = SjltStorage(self._scale,
                                    p[0], p[1], m[0], m[1],
                                    p[2], p[3], m[2], m[3])
        # Besides the compressed views, the kernels want plain-int pair
        # lists (cheap python iteration) and reduceat offsets over the
        # column-compressed order.
        self._plus_pairs = (flat_rows[positive].tolist(),
                            flat_cols[positive].tolist())
        self._minus_pairs = (flat_rows[~positive].tolist(),
                             flat_cols[~positive].tolist())
        self._plus_gather = self._gather_plan(p[2], p[3])
        self._minus_gather = self._gather_plan(m[2], m[3])

    @staticmethod
    def _gather_plan(colptr: np.ndarray, rows_by_col: np.ndarray):
        nonempty = np.diff(colptr) > 0
        if rows_by_col.size == 0:
            return rows_by_col, None, nonempty
        # reduceat wants strictly increasing in-range offsets; empty columns
        # would repeat or overflow them, so list only the nonempty starts and
        # scatter the segment sums back through the mask
        return rows_by_col, colptr[:-1][nonempty], nonempty

    def apply_right(self, buf: np.ndarray) -> np.ndarray:
        if self._storage is None:
            self._build_storage()
        m = buf.shape[0]
        out = np.zeros((m, self.rows), order="F")
        for i, j in zip(*self._plus_pairs):
            out[:, j] += buf[:, i]
        for i, j in zip(*self._minus_pairs):
            out[:, j] -= buf[:, i]
        out *= self._scale
        return out

    def apply_right_transposed(self, buf: np.ndarray) -> np.ndarray:
        if self._storage is None:
            self._build_storage()
        ncols = buf.shape[1]
        out = np.empty((ncols, self.rows), order="F")
        p_rows, p_off, p_mask = self._plus_gather
        m_rows, m_off, m_mask = self._minus_gather
        add_reduceat = np.add.reduceat
        for k in range(ncols):
            c = buf[:, k]
            acc = np.zeros(self.rows)
            if p_off is not None:
                acc[p_mask] = add_reduceat(c[p_rows], p_off)
            if m_off is not None:
                acc[m_mask] -= add_reduceat(c[m_rows], m_off)
            out[k, :] = acc
        out *= self._scale
        return out

    def dense_rows(self, I: np.ndarray, cols: np.ndarray) -> np.ndarray:
        full = np.zeros((len(I), self.rows))
        full[np.arange(len(I))[:, None], self._pos[I]] = \
            self._signs[I] * self._scale
        if cols.size == self.rows and cols[0] == 0 \
                and cols[-1] == self.rows - 1 and np.all(np.diff(cols) == 1):
            return full
        return full[:, cols]


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

class SketchOperator:
    """Immutable stack of independently drawn blocks; logical shape d x n
    with d the total block row count."""

    def __init__(self, kind: str, n: int, blocks: tuple, alpha=None,
                 construction=None):
        self.kind = kind
        self.n = n
        self.blocks = tuple(blocks)
        self.alpha = alpha
        self.construction = construction

    @property
    def d(self) -> int:
        return sum(b.rows for b in self.blocks)

    def block_offsets(self) -> list[int]:
        offsets = [0]
        for b in self.blocks:
            offsets.append(offsets[-1] + b.rows)
        return offsets


def _make_block(kind, n, rows, seed, alpha, construction):
    if kind == GAUSSIAN:
        return GaussianBlock(n, rows, seed)
    if kind == SRHT:
        return SrhtBlock(n, rows, seed)
    if alpha is None or alpha < 1 or alpha > rows:
        raise ValueError(f"SJLT needs 1 <= alpha <= block rows; "
                         f"got alpha={alpha}, rows={rows}")
    if construction not in CONSTRUCTIONS:
        raise ValueError(f"unknown SJLT construction {construction!r}")
    if construction == BLOCK and rows % alpha != 0:
        raise ValueError(
            f"block construction needs alpha | d: alpha={alpha} does not "
            f"divide d={rows}")
    return SjltBlock(n, rows, seed, alpha, construction)


def new_operator(kind: str, n: int, d: int, seed, *, alpha: int | None = None,
                 construction: str = BLOCK) -> SketchOperator:
    """Draw a single block of d rows of the named distribution."""
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}")
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= d <= n; got d={d}, n={n}")
    block = _make_block(kind, n, d, seed, alpha, construction)
    if kind != SJLT:
        alpha = None
        construction = None
    return SketchOperator(kind, n, (block,), alpha, construction)


def append_columns(op: SketchOperator, dd: int, seed) -> SketchOperator:
    """Append a fresh independent block of dd rows; existing blocks are
    shared untouched, so previously materialized columns never change."""
    if dd < 1:
        raise ValueError("dd must be >= 1")
    block = _make_block(op.kind, op.n, dd, seed, op.alpha, op.construction)
    return SketchOperator(op.kind, op.n, op.blocks + (block,), op.alpha,
                          op.construction)


def apply_right(A, op: SketchOperator) -> np.ndarray:
    """A @ R^T for the whole operator (m x d)."""
    buf = _buffer_of(A)
    if buf.shape[1] != op.n:
        raise ValueError(f"operator is over dimension {op.n}, "
                         f"matrix has {buf.shape[1]} columns")
    out = np.empty((buf.shape[0], op.d), order="F")
    lo = 0
    for block in op.blocks:
        out[:, lo:lo + block.rows] = block.apply_right(buf)
        lo += block.rows
    return out


def apply_right_transposed(A, op: SketchOperator) -> np.ndarray:
    """A^T @ R^T for the whole operator (n_A x d); real transpose (the
    conjugate transpose degenerates, all scalars are real)."""
    buf = _buffer_of(A)
    if buf.shape[0] != op.n:
        raise ValueError(f"operator is over dimension {op.n}, "
                         f"matrix has {buf.shape[0]} rows")
    out = np.empty((buf.shape[1], op.d), order="F")
    lo = 0
    for block in op.blocks:
        out[:, lo:lo + block.rows] = block.apply_right_transposed(buf)
        lo += block.rows
    return out


def dense_rows(op: SketchOperator, I, col_range) -> np.ndarray:
    """Materialize R^T(I, col_range). Bit-reproducible for fixed seeds."""
    I = np.asarray(I, dtype=np.intp)
    cols = np.asarray(col_range, dtype=np.intp)
    if I.size and (I.min() < 0 or I.max() >= op.n):
        raise IndexError("row indices out of range")
    if cols.size and (cols.min() < 0 or cols.max() >= op.d):
        raise IndexError("column indices out of range")
    if len(op.blocks) == 1:
        return op.blocks[0].dense_rows(I, cols)
    out = np.empty((len(I), len(cols)))
    offsets = op.block_offsets()
    for block, lo, hi in zip(op.blocks, offsets[:-1], offsets[1:]):
        here = (cols >= lo) & (cols < hi)
        if np.any(here):
            out[:, here] = block.dense_rows(I, cols[here] - lo)
    return out


def jl_dimension_bound(kind: str, eps: float, delta: float,
                       n: int | None = None, *,
                       sjlt_c: float = 20.0) -> tuple[int, int | None]:
    """Minimal sketch size d guaranteeing the (eps, delta) Frobenius-norm
    concentration for the named family; for SJLT also the companion
    alpha = ceil(eps * d). The SJLT constant is not pinned down by theory
    and is exposed as ``sjlt_c``."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("need eps, delta in (0, 1)")
    if kind == GAUSSIAN:
        return math.ceil(20.0 / eps**2 * math.log(2.0 / delta)), None
    if kind == SRHT:
        if n is None:
            raise ValueError("SRHT bound needs the ambient dimension n")
        val = 2.0 / eps**2 * math.log(4.0 * n**2 / delta)**2 \
            * math.log(4.0 / delta)
        return math.ceil(val), None
    if kind == SJLT:
        d = math.ceil(sjlt_c / eps**2 * math.log(1.0 / delta))
        return d, math.ceil(eps * d)
    raise ValueError(f"unknown operator kind {kind!r}")
