"""Test matrix generators: smooth kernel matrices with rank-structured
off-diagonal blocks, plus a synthetic generator whose HSS form is known
exactly and serves as a ground-truth oracle."""

from __future__ import annotations

import dataclasses
import struct

import numpy as np
from scipy.spatial.distance import cdist

from .cluster_tree import ClusterTree, build_from_points, build_uniform
from .sketching import DenseAccessor, MatrixAccessor

MAGIC = b"HSSD"


class FileFormatError(TypeError):
    """Raised for malformed dense-matrix files."""


class CovarianceAccessor(MatrixAccessor):
    """Exponential covariance kernel exp(-||x_i - x_j|| / lam) over a fixed
    point set; entries are evaluated on demand."""

    def __init__(self, points: np.ndarray, lam: float):
        self.points = np.asarray(points, dtype=float)
        self.lam = float(lam)
        self._dense = None

    @property
    def shape(self) -> tuple[int, int]:
        n = self.points.shape[0]
        return (n, n)

    def extract(self, rows, cols) -> np.ndarray:
        pr = self.points[np.asarray(rows, dtype=np.intp)]
        pc = self.points[np.asarray(cols, dtype=np.intp)]
        return np.exp(-cdist(pr, pc) / self.lam)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            full = np.exp(-cdist(self.points, self.points) / self.lam)
            self._dense = np.asfortranarray(full)
        return self._dense


class ToeplitzAccessor(MatrixAccessor):
    """Symmetric Toeplitz matrix of a 1-D kinetic-energy discretization:
    diagonal pi^2/(6 h^2), off-diagonal (-1)^(i-j) / (h^2 (i-j)^2)."""

    def __init__(self, n: int, spacing: float):
        self.n = n
        self.spacing = float(spacing)
        self.diag_value = np.pi**2 / (6.0 * self.spacing**2)
        self._dense = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def extract(self, rows, cols) -> np.ndarray:
        diff = (np.asarray(rows, dtype=np.int64)[:, None]
                - np.asarray(cols, dtype=np.int64)[None, :])
        out = np.full(diff.shape, self.diag_value)
        off = diff != 0
        sign = 1.0 - 2.0 * (diff[off] & 1)
        out[off] = sign / (self.spacing**2 * diff[off].astype(float)**2)
        return out

    def dense(self) -> np.ndarray:
        if self._dense is None:
            # Diagonal-by-diagonal fill keeps the peak footprint at a single
            # n x n buffer (index-matrix constructions would double it).
            n = self.n
            out = np.empty((n, n), order="F")
            np.fill_diagonal(out, self.diag_value)
            idx = np.arange(n)
            for k in range(1, n):
                val = (-1.0 if k & 1 else 1.0) / (self.spacing**2 * (k * k))
                out[idx[:n - k], idx[:n - k] + k] = val
                out[idx[:n - k] + k, idx[:n - k]] = val
            self._dense = out
        return self._dense


def covariance_matrix(k: int, lam: float,
                      leaf_size: int = 256) -> tuple[CovarianceAccessor,
                                                     ClusterTree]:
    """Covariance kernel on the k^3 regular grid over [0,1]^3, points
    reordered by recursive coordinate bisection."""
    if k < 2:
        raise ValueError("need k >= 2")
    axis = np.linspace(0.0, 1.0, k)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    tree, perm = build_from_points(points, leaf_size)
    return CovarianceAccessor(points[perm], lam), tree


def qchem_toeplitz(n: int, spacing: float) -> ToeplitzAccessor:
    """Kinetic-energy Toeplitz matrix on n grid points with the given
    spacing."""
    if n < 1:
        raise ValueError("need n >= 1")
    if spacing <= 0:
        raise ValueError("need spacing > 0")
    return ToeplitzAccessor(n, spacing)


def synthetic_hss(n: int, leaf_size: int, r: int, seed, *,
                  symmetric: bool = False):
    """Random matrix assembled from an exact rank-r HSS representation.

    Draws orthonormal-column bases per node (leaf: size x r, internal:
    2r x r), uniform [-1, 1] cross blocks and dense diagonal blocks, and
    expands them into the dense matrix. Every off-diagonal block of the
    hierarchy has rank <= r by construction. Returns (accessor, tree,
    dense ground truth).
    """
    if n % leaf_size != 0:
        raise ValueError("n must be a multiple of leaf_size")
    tree = build_uniform(n, leaf_size)
    min_leaf = min(node.size for node in tree.leaves())
    if r > min_leaf:
        raise ValueError(f"need r <= smallest leaf ({min_leaf}); got r={r}")

    rng = np.random.default_rng(seed)
    U: dict[int, np.ndarray] = {}
    V: dict[int, np.ndarray] = {}
    diag: dict[int, np.ndarray] = {}
    cross: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def draw_basis(rows: int) -> np.ndarray:
        if r == 0:
            return np.zeros((rows, 0))
        q, _ = np.linalg.qr(rng.standard_normal((rows, r)))
        return q

    order = sorted(tree.nodes, key=lambda nd: (-nd.level, nd.lo))
    for node in order:
        if node.is_leaf:
            block = rng.uniform(-1.0, 1.0, (node.size, node.size))
            if symmetric:
                block = (block + block.T) / 2.0
            diag[node.nid] = block
            U[node.nid] = draw_basis(node.size)
            V[node.nid] = U[node.nid] if symmetric else draw_basis(node.size)
        else:
            b12 = rng.uniform(-1.0, 1.0, (r, r))
            b21 = b12.T.copy() if symmetric else rng.uniform(-1.0, 1.0, (r, r))
            cross[node.nid] = (b12, b21)
            if node.level > 0:
                U[node.nid] = draw_basis(2 * r)
                V[node.nid] = (U[node.nid] if symmetric
                               else draw_basis(2 * r))

    def expand(node, table) -> np.ndarray:
        if node.is_leaf:
            return table[node.nid]
        left = expand(node.left, table)
        right = expand(node.right, table)
        trans = table[node.nid]
        top = left @ trans[:r, :]
        bottom = right @ trans[r:, :]
        return np.vstack([top, bottom])

    A = np.zeros((n, n))
    for node in tree.nodes:
        if node.is_leaf:
            A[node.lo:node.hi, node.lo:node.hi] = diag[node.nid]
        else:
            b12, b21 = cross[node.nid]
            ul = expand(node.left, U)
            ur = expand(node.right, U)
            vl = expand(node.left, V)
            vr = expand(node.right, V)
            l, m = node.left, node.right
            upper = ul @ b12 @ vr.T
            A[l.lo:l.hi, m.lo:m.hi] = upper
            if symmetric:
                # mirror the computed block so A == A.T holds exactly
                A[m.lo:m.hi, l.lo:l.hi] = upper.T
            else:
                A[m.lo:m.hi, l.lo:l.hi] = ur @ b21 @ vl.T

    return DenseAccessor(A), tree, A


def write_file(path, values) -> None:
    """Serialize a dense matrix: magic, little-endian u64 dimensions, then
    the entries as binary64 in column-major order."""
    a = np.atleast_2d(np.asarray(values, dtype=float))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", a.shape[0], a.shape[1]))
        fh.write(a.astype("<f8").tobytes(order="F"))


def from_file(path) -> DenseAccessor:
    """Load a dense matrix written by write_file."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise FileFormatError(
                f"bad magic {magic!r}; expected {MAGIC.decode()!r}")
        header = fh.read(16)
        if len(header) < 16:
            raise FileFormatError("truncated header")
        rows, cols = struct.unpack("<QQ", header)
        payload = fh.read()
    expected = rows * cols * 8
    if expected > 2**40:
        raise FileFormatError(f"dimensions {rows}x{cols} overflow sane size")
    if len(payload) != expected:
        raise FileFormatError(
            f"truncated payload: header promises {rows * cols} values "
            f"({expected} bytes), file holds {len(payload)} bytes")
    arr = np.frombuffer(payload, dtype="<f8")
    return DenseAccessor(arr.reshape((rows, cols), order="F"))


@dataclasses.dataclass
class MatrixSpec:
    """Declarative matrix selection used by the command-line front end."""

    kind: str                       # covariance | qchem | synthetic | file
    n: int | None = None
    k: int | None = None
    lam: float = 0.2
    spacing: float = 0.1
    rank: int = 8
    seed: int = 0
    path: str | None = None
    leaf_size: int = 256

    def build(self):
        """Returns (accessor, tree or None, ground truth or None); callers
        build a uniform tree when none is implied by the matrix."""
        if self.kind == "covariance":
            if self.k is None:
                raise ValueError("covariance needs the grid side k")
            acc, tree = covariance_matrix(self.k, self.lam, self.leaf_size)
            return acc, tree, None
        if self.kind == "qchem":
            if self.n is None:
                raise ValueError("qchem needs n")
            return qchem_toeplitz(self.n, self.spacing), None, None
        if self.kind == "synthetic":
            if self.n is None:
                raise ValueError("synthetic needs n")
            acc, tree, truth = synthetic_hss(self.n, self.leaf_size,
                                             self.rank, self.seed)
            return acc, tree, truth
        if self.kind == "file":
            if not self.path:
                raise ValueError("file matrix needs a path")
            return from_file(self.path), None, None
        raise ValueError(f"unknown matrix kind {self.kind!r}")
