"""Adaptive, partially matrix-free HSS compression.

The driver sketches A and A^T once with a shared random operator, then
sweeps the cluster tree bottom-up turning local sample columns into
interpolative bases. When a node's stopping tests show the current sketch
is too small, the operator gains a fresh batch of columns, the sweep
restarts, and already-compressed nodes only fold the new columns into
their bookkeeping. Diagonal blocks, cross blocks at selected indices, and
the random operator's rows at leaf index sets are the only entries ever
requested from the matrix, so A can be given as any MatrixAccessor.
"""

from __future__ import annotations

import dataclasses
import enum
import time

import numpy as np

from . import sketching
from .cluster_tree import ClusterTree, topological_order
from .dense_kernels import project_out, qr, row_interpolative_decomposition
from .sketching import MatrixAccessor, SketchOperator


class NodeState(enum.Enum):
    UNTOUCHED = "untouched"
    PARTIALLY_COMPRESSED = "partially_compressed"
    COMPRESSED = "compressed"


class MaxSketchReached(RuntimeError):
    """Sketch size hit d_max with the tree not fully compressed."""

    def __init__(self, d: int, d_max: int, blocking_nid: int,
                 sketch_seconds: float = 0.0):
        self.d = d
        self.d_max = d_max
        self.blocking_nid = blocking_nid
        self.sketch_seconds = sketch_seconds
        super().__init__(
            f"sketch size {d} reached the limit d_max={d_max} while node "
            f"{blocking_nid} still requests more columns")


@dataclasses.dataclass
class CompressOptions:
    d0: int = 128
    dd: int = 64
    d_max: int | None = None        # defaults to n at compress time
    eps_rel: float = 1e-2
    eps_abs: float = 1e-8
    leaf_size: int = 256
    kind: str = sketching.SJLT
    alpha: int | None = 4
    construction: str = sketching.BLOCK
    seed: int = 0

    def validate(self) -> None:
        if self.d0 < 1 or self.dd < 1:
            raise ValueError("d0 and dd must be >= 1")
        if self.d_max is not None and self.d_max < self.d0 + self.dd:
            raise ValueError("d_max must be >= d0 + dd")
        if self.eps_rel < 0 or self.eps_abs < 0:
            raise ValueError("tolerances must be >= 0")


class HssNode:
    """Per-cluster compression state and payload."""

    __slots__ = ("state", "D", "B12", "B21", "U_coeff", "V_coeff",
                 "J_row", "J_col", "Itilde_row", "Itilde_col",
                 "Sr_loc", "Sc_loc", "Rr_red", "Rc_red", "Qr", "Qc",
                 "omega_first_row", "omega_first_col")

    def __init__(self):
        self.state = NodeState.UNTOUCHED
        for name in self.__slots__[1:]:
            setattr(self, name, None)

    @property
    def rank_row(self) -> int:
        return 0 if self.J_row is None else len(self.J_row)

    @property
    def rank_col(self) -> int:
        return 0 if self.J_col is None else len(self.J_col)


class HssMatrix:
    """Compressed representation: the cluster tree plus one HssNode per
    tree node, with a few scalar run statistics."""

    def __init__(self, tree: ClusterTree, nodes: list[HssNode], n: int,
                 final_d: int, adaptation_rounds: int,
                 sketch_seconds: float = 0.0):
        self.tree = tree
        self.nodes = nodes
        self.n = n
        self.final_d = final_d
        self.adaptation_rounds = adaptation_rounds
        self.sketch_seconds = sketch_seconds


def frobenius_stop(S_hat: np.ndarray, S_tilde: np.ndarray,
                   eps_rel_level: float, eps_abs_level: float) -> bool:
    """True when the un-captured part of the new sample columns is
    negligible, absolutely or relative to the raw new columns. A zero
    reference norm counts as satisfied (nothing left to capture)."""
    lhs = np.linalg.norm(S_hat)
    ref = np.linalg.norm(S_tilde)
    if lhs < eps_abs_level:
        return True
    if ref == 0.0:
        return True
    return lhs < eps_rel_level * ref


def rank_deficiency_stop(omega_diag: np.ndarray, omega_first: float,
                         eps_rel_level: float, eps_abs_level: float) -> bool:
    """True when the incremental QR shows the freshly added directions are
    numerically rank deficient."""
    smallest = float(np.min(np.abs(omega_diag)))
    return (smallest < eps_abs_level
            or smallest < eps_rel_level * abs(omega_first))


def _level_tolerances(opts: CompressOptions, level: int) -> tuple[float, float]:
    return opts.eps_rel / level, opts.eps_abs / level


class _Driver:
    def __init__(self, A: MatrixAccessor, tree: ClusterTree,
                 opts: CompressOptions):
        self.A = A
        self.tree = tree
        self.opts = opts
        self.n = tree.n
        self.nodes = [HssNode() for _ in tree.nodes]
        self.order = topological_order(tree)
        self.d = opts.d0
        self.rounds = 0
        self.op: SketchOperator | None = None
        self.Sr = None
        self.Sc = None
        self.sketch_seconds = 0.0

    # -- sketch plumbing ----------------------------------------------------

    def _block_seed(self, index: int):
        return np.random.SeedSequence((self.opts.seed, index))

    @property
    def width(self) -> int:
        return self.d + self.opts.dd

    def init_sketch(self) -> None:
        o = self.opts
        self.op = sketching.new_operator(
            o.kind, self.n, o.d0 + o.dd, self._block_seed(0),
            alpha=o.alpha, construction=o.construction)
        start = time.perf_counter()
        self.Sr = sketching.apply_right(self.A, self.op)
        self.Sc = sketching.apply_right_transposed(self.A, self.op)
        self.sketch_seconds += time.perf_counter() - start

    def extend_sketch(self) -> None:
        self.rounds += 1
        self.d += self.opts.dd
        self.op = sketching.append_columns(self.op, self.opts.dd,
                                           self._block_seed(self.rounds))
        # Only the new block touches the matrix; earlier sketch columns are
        # reused as-is.
        tail = SketchOperator(self.op.kind, self.n, (self.op.blocks[-1],),
                              self.op.alpha, self.op.construction)
        start = time.perf_counter()
        new_sr = sketching.apply_right(self.A, tail)
        new_sc = sketching.apply_right_transposed(self.A, tail)
        self.sketch_seconds += time.perf_counter() - start
        self.Sr = np.concatenate([self.Sr, new_sr], axis=1)
        self.Sc = np.concatenate([self.Sc, new_sc], axis=1)

    def _random_rows(self, lo: int, hi: int, cols: np.ndarray) -> np.ndarray:
        return sketching.dense_rows(self.op, np.arange(lo, hi), cols)

    # -- per-node sample updates ---------------------------------------------

    def _leaf_windows(self, nid: int, cols: np.ndarray):
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        R = self._random_rows(tnode.lo, tnode.hi, cols)
        rows = np.arange(tnode.lo, tnode.hi)
        sr = self.Sr[np.ix_(rows, cols)] - node.D @ R
        sc = self.Sc[np.ix_(rows, cols)] - node.D.T @ R
        return sr, sc, R

    def _internal_windows(self, nid: int, cols: np.ndarray):
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        c1 = self.nodes[tnode.left.nid]
        c2 = self.nodes[tnode.right.nid]
        sr = np.vstack([
            c1.Sr_loc[np.ix_(c1.J_row, cols)] - node.B12 @ c2.Rc_red[:, cols],
            c2.Sr_loc[np.ix_(c2.J_row, cols)] - node.B21 @ c1.Rc_red[:, cols],
        ])
        sc = np.vstack([
            c1.Sc_loc[np.ix_(c1.J_col, cols)] - node.B21.T @ c2.Rr_red[:, cols],
            c2.Sc_loc[np.ix_(c2.J_col, cols)] - node.B12.T @ c1.Rr_red[:, cols],
        ])
        return sr, sc

    def _fetch_cross_blocks(self, nid: int) -> None:
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        c1 = self.nodes[tnode.left.nid]
        c2 = self.nodes[tnode.right.nid]
        node.B12 = self.A.extract(c1.Itilde_row, c2.Itilde_col)
        node.B21 = self.A.extract(c2.Itilde_row, c1.Itilde_col)

    def first_touch(self, nid: int) -> None:
        """Fetch the node's direct matrix data and build its local samples
        over the full current column range."""
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        cols = np.arange(self.width)
        if tnode.is_leaf:
            node.D = self.A.extract(np.arange(tnode.lo, tnode.hi),
                                    np.arange(tnode.lo, tnode.hi))
            sr, sc, _ = self._leaf_windows(nid, cols)
        else:
            self._fetch_cross_blocks(nid)
            sr, sc = self._internal_windows(nid, cols)
        node.Sr_loc = sr
        node.Sc_loc = sc

    def append_window(self, nid: int, cols: np.ndarray) -> None:
        """Fold the newest Delta-d sample columns into a touched node."""
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        if tnode.is_leaf:
            sr, sc, R = self._leaf_windows(nid, cols)
        else:
            sr, sc = self._internal_windows(nid, cols)
            R = None
        node.Sr_loc = np.concatenate([node.Sr_loc, sr], axis=1)
        node.Sc_loc = np.concatenate([node.Sc_loc, sc], axis=1)
        if node.state is NodeState.COMPRESSED:
            rr, rc = self._reduced_window(nid, cols, R)
            node.Rr_red = np.concatenate([node.Rr_red, rr], axis=1)
            node.Rc_red = np.concatenate([node.Rc_red, rc], axis=1)

    def _reduced_window(self, nid: int, cols: np.ndarray, R_leaf):
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        if tnode.is_leaf:
            R = (R_leaf if R_leaf is not None
                 else self._random_rows(tnode.lo, tnode.hi, cols))
            return node.U_coeff.T @ R, node.V_coeff.T @ R
        c1 = self.nodes[tnode.left.nid]
        c2 = self.nodes[tnode.right.nid]
        rr = node.U_coeff.T @ np.vstack([c1.Rr_red[:, cols],
                                         c2.Rr_red[:, cols]])
        rc = node.V_coeff.T @ np.vstack([c1.Rc_red[:, cols],
                                         c2.Rc_red[:, cols]])
        return rr, rc

    # -- gating and compression ----------------------------------------------

    def _gate_side(self, node: HssNode, side: str, eps_rel: float,
                   eps_abs: float) -> bool:
        """Stopping tests for one side; may install or augment the side's
        basis of processed columns. True means the sample is rich enough."""
        S = node.Sr_loc if side == "row" else node.Sc_loc
        q_attr = "Qr" if side == "row" else "Qc"
        w_attr = "omega_first_row" if side == "row" else "omega_first_col"
        Q = getattr(node, q_attr)
        if Q is None:
            first = qr(S[:, :self.d])
            Q = first.q
            setattr(node, q_attr, Q)
            diag = np.diag(first.omega)
            setattr(node, w_attr, abs(float(diag[0])) if diag.size else 0.0)
        window = S[:, self.d:]
        S_hat = project_out(Q, window)
        if frobenius_stop(S_hat, window, eps_rel, eps_abs):
            return True
        inc = qr(S_hat)
        setattr(node, q_attr, np.hstack([Q, inc.q]))
        return rank_deficiency_stop(np.diag(inc.omega),
                                    getattr(node, w_attr), eps_rel, eps_abs)

    def compress_node(self, nid: int, eps_rel: float, eps_abs: float) -> None:
        tnode = self.tree.nodes[nid]
        node = self.nodes[nid]
        node.U_coeff, node.J_row = row_interpolative_decomposition(
            node.Sr_loc, eps_rel, eps_abs)
        node.V_coeff, node.J_col = row_interpolative_decomposition(
            node.Sc_loc, eps_rel, eps_abs)
        if tnode.is_leaf:
            base = np.arange(tnode.lo, tnode.hi)
            node.Itilde_row = base[node.J_row]
            node.Itilde_col = base[node.J_col]
        else:
            c1 = self.nodes[tnode.left.nid]
            c2 = self.nodes[tnode.right.nid]
            rows = np.concatenate([c1.Itilde_row, c2.Itilde_row])
            cols = np.concatenate([c1.Itilde_col, c2.Itilde_col])
            node.Itilde_row = rows[node.J_row]
            node.Itilde_col = cols[node.J_col]
        full = np.arange(self.width)
        node.Rr_red, node.Rc_red = self._reduced_window(nid, full, None)
        node.state = NodeState.COMPRESSED
        node.Qr = None
        node.Qc = None

    def finalize_root(self, nid: int) -> None:
        self._fetch_cross_blocks(nid)
        self.nodes[nid].state = NodeState.COMPRESSED

    # -- sweep ---------------------------------------------------------------

    def sweep(self) -> int | None:
        """One bottom-up pass; returns the nid requesting more sketch
        columns, or None when the root got compressed."""
        window_cols = np.arange(self.d, self.width)
        for nid in self.order:
            tnode = self.tree.nodes[nid]
            node = self.nodes[nid]
            if tnode.level == 0:
                self.finalize_root(nid)
                return None
            if node.state is NodeState.COMPRESSED:
                self.append_window(nid, window_cols)
                continue
            if node.state is NodeState.UNTOUCHED:
                self.first_touch(nid)
            else:
                self.append_window(nid, window_cols)
            eps_rel, eps_abs = _level_tolerances(self.opts, tnode.level)
            row_ok = self._gate_side(node, "row", eps_rel, eps_abs)
            col_ok = self._gate_side(node, "col", eps_rel, eps_abs)
            if row_ok and col_ok:
                self.compress_node(nid, eps_rel, eps_abs)
            else:
                node.state = NodeState.PARTIALLY_COMPRESSED
                return nid
        raise AssertionError("sweep ended without reaching the root")

    def run(self) -> HssMatrix:
        d_max = self.opts.d_max if self.opts.d_max is not None else self.n
        self.init_sketch()
        while True:
            blocking = self.sweep()
            if blocking is None:
                break
            if self.d + self.opts.dd >= d_max:
                raise MaxSketchReached(self.d + self.opts.dd, d_max, blocking,
                                       self.sketch_seconds)
            self.extend_sketch()
        return HssMatrix(self.tree, self.nodes, self.n, self.d, self.rounds,
                         self.sketch_seconds)


def compress(A: MatrixAccessor, tree: ClusterTree,
             opts: CompressOptions) -> HssMatrix:
    """Compress a square matrix over the given cluster tree."""
    opts.validate()
    rows, cols = A.shape
    if rows != cols:
        raise ValueError(f"matrix must be square; got {rows}x{cols}")
    if rows != tree.n:
        raise ValueError(f"tree covers {tree.n} indices, matrix has {rows}")
    if len(tree) == 1:
        # Single-cluster tree: the whole matrix is one diagonal block and
        # no sketching happens.
        node = HssNode()
        node.D = A.extract(np.arange(rows), np.arange(rows))
        node.state = NodeState.COMPRESSED
        return HssMatrix(tree, [node], rows, 0, 0)
    if opts.d0 + opts.dd > rows:
        raise ValueError(
            f"initial sketch width d0+dd = {opts.d0 + opts.dd} exceeds "
            f"n = {rows}; lower d0 or dd")
    return _Driver(A, tree, opts).run()
