"""Consumers of a compressed HssMatrix: fast matrix-vector products, dense
reconstruction, rank and memory statistics, and error measurement."""

from __future__ import annotations

import dataclasses

import numpy as np

from .hss_compress import HssMatrix
from .sketching import _buffer_of


@dataclasses.dataclass
class HssStats:
    max_rank: int
    final_d: int
    memory_fraction: float      # stored scalars / n^2, in percent
    adaptation_rounds: int


def _down_order(H: HssMatrix):
    return sorted(H.tree.nodes, key=lambda nd: (nd.level, nd.lo))


def matvec(H: HssMatrix, x: np.ndarray) -> np.ndarray:
    """y = A x through the compressed representation, O(n * rank) work."""
    x = np.asarray(x, dtype=float)
    if x.shape != (H.n,):
        raise ValueError(f"expected a vector of length {H.n}, "
                         f"got shape {x.shape}")
    tree = H.tree
    if len(tree) == 1:
        return H.nodes[0].D @ x

    z: dict[int, np.ndarray] = {}
    for tnode in sorted(tree.nodes, key=lambda nd: (-nd.level, nd.lo)):
        node = H.nodes[tnode.nid]
        if tnode.level == 0:
            continue
        if tnode.is_leaf:
            z[tnode.nid] = node.V_coeff.T @ x[tnode.lo:tnode.hi]
        else:
            stacked = np.concatenate([z[tnode.left.nid], z[tnode.right.nid]])
            z[tnode.nid] = node.V_coeff.T @ stacked

    f: dict[int, np.ndarray] = {}
    for tnode in _down_order(H):
        if tnode.is_leaf:
            continue
        node = H.nodes[tnode.nid]
        if tnode.level == 0:
            carried = None
        else:
            carried = node.U_coeff @ f[tnode.nid]
        r1 = H.nodes[tnode.left.nid].rank_row
        down1 = node.B12 @ z[tnode.right.nid]
        down2 = node.B21 @ z[tnode.left.nid]
        if carried is not None:
            down1 = down1 + carried[:r1]
            down2 = down2 + carried[r1:]
        f[tnode.left.nid] = down1
        f[tnode.right.nid] = down2

    y = np.empty(H.n)
    for tnode in tree.leaves():
        node = H.nodes[tnode.nid]
        y[tnode.lo:tnode.hi] = (node.D @ x[tnode.lo:tnode.hi]
                                + node.U_coeff @ f[tnode.nid])
    return y


def reconstruct_dense(H: HssMatrix, cap: int = 4096) -> np.ndarray:
    """Expand the compressed form back to a dense matrix (small n only)."""
    if H.n > cap:
        raise ValueError(f"n = {H.n} exceeds the reconstruction cap {cap}")
    if len(H.tree) == 1:
        return H.nodes[0].D.copy()

    ubig: dict[int, np.ndarray] = {}
    vbig: dict[int, np.ndarray] = {}
    for tnode in sorted(H.tree.nodes, key=lambda nd: (-nd.level, nd.lo)):
        if tnode.level == 0:
            continue
        node = H.nodes[tnode.nid]
        if tnode.is_leaf:
            ubig[tnode.nid] = node.U_coeff
            vbig[tnode.nid] = node.V_coeff
        else:
            r1u = H.nodes[tnode.left.nid].rank_row
            r1v = H.nodes[tnode.left.nid].rank_col
            ubig[tnode.nid] = np.vstack([
                ubig[tnode.left.nid] @ node.U_coeff[:r1u],
                ubig[tnode.right.nid] @ node.U_coeff[r1u:]])
            vbig[tnode.nid] = np.vstack([
                vbig[tnode.left.nid] @ node.V_coeff[:r1v],
                vbig[tnode.right.nid] @ node.V_coeff[r1v:]])

    out = np.zeros((H.n, H.n))
    for tnode in H.tree.nodes:
        node = H.nodes[tnode.nid]
        if tnode.is_leaf:
            out[tnode.lo:tnode.hi, tnode.lo:tnode.hi] = node.D
        else:
            le, ri = tnode.left, tnode.right
            out[le.lo:le.hi, ri.lo:ri.hi] = \
                ubig[le.nid] @ node.B12 @ vbig[ri.nid].T
            out[ri.lo:ri.hi, le.lo:le.hi] = \
                ubig[ri.nid] @ node.B21 @ vbig[le.nid].T
    return out


def stats(H: HssMatrix) -> HssStats:
    """Rank and memory summary. The memory figure counts stored floating
    point scalars only: diagonal blocks, cross blocks, and the coefficient
    part of each interpolative basis (its embedded identity rows cost
    indices, not scalars)."""
    scalars = 0
    max_rank = 0
    for tnode in H.tree.nodes:
        node = H.nodes[tnode.nid]
        if tnode.is_leaf:
            scalars += node.D.size
        else:
            scalars += node.B12.size + node.B21.size
        if tnode.level > 0:
            max_rank = max(max_rank, node.rank_row, node.rank_col)
            for coeff in (node.U_coeff, node.V_coeff):
                rows, r = coeff.shape
                scalars += (rows - r) * r
    return HssStats(max_rank=max_rank, final_d=H.final_d,
                    memory_fraction=100.0 * scalars / H.n**2,
                    adaptation_rounds=H.adaptation_rounds)


def relative_error(A, H: HssMatrix, cap: int = 4096) -> float:
    """Frobenius-norm relative reconstruction error against the original."""
    dense = _buffer_of(A)
    approx = reconstruct_dense(H, cap=cap)
    denom = np.linalg.norm(dense)
    num = np.linalg.norm(dense - approx)
    if denom == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return float(num / denom)
