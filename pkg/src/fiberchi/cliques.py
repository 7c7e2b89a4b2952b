"""Clique counting on neighborhood graphs, the estimator's inner loop.

Vertices are packed into uint64 bitsets and cliques are enumerated with
an iterative depth-first walk that only ever extends a clique by a
higher-indexed vertex, so each clique is visited exactly once.  Vertices
are relabeled by a degeneracy order first, which keeps the candidate
sets small on the dense scales of a Vietoris-Rips scan.  A hard budget
caps the total number of cliques visited; blowing it raises instead of
returning a silently truncated count.

The jitted kernel is the default; a pure-Python twin (arbitrary-size int
bitsets, same traversal) covers interpreters without numba and doubles
as a cross-check in the tests.  A vectorized power-set enumerator for
tiny vertex sets serves as the independent oracle.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


DEFAULT_CLIQUE_BUDGET = 50_000_000

_DEBRUIJN = 0x03F79D71B4CB0A89
_DB_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DB_TABLE[(((1 << _i) * _DEBRUIJN) & 0xFFFFFFFFFFFFFFFF) >> 58] = _i
if len(set(_DB_TABLE.tolist())) != 64:  # pragma: no cover - constant is fixed
    raise RuntimeError("de Bruijn bit-index table failed to be a permutation")


class CliqueBudgetError(RuntimeError):
    """The enumeration walk hit the clique budget before finishing."""


def degeneracy_order(adj: np.ndarray) -> np.ndarray:
    """Vertex order by repeated minimum-degree removal.

    adj is a symmetric boolean matrix with a false diagonal.  Quadratic
    implementation; fine for the few thousand vertices a scan sees.
    """
    n = adj.shape[0]
    deg = adj.sum(axis=1).astype(np.int64)
    order = np.empty(n, dtype=np.int64)
    for i in range(n):
        v = int(np.argmin(deg))
        order[i] = v
        deg[adj[v]] -= 1
        deg[v] = n + 1
    return order


def pack_adjacency(adj: np.ndarray) -> np.ndarray:
    """Pack a boolean adjacency matrix into (n, words) uint64 bitsets."""
    adj = np.ascontiguousarray(adj, dtype=bool)
    n = adj.shape[0]
    pad = (-n) % 64
    if pad:
        adj = np.concatenate([adj, np.zeros((n, pad), dtype=bool)], axis=1)
    packed = np.packbits(adj, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64)


@njit(cache=True, nogil=True)
def _count_kernel(bits, n, words, budget, counts, table):  # pragma: no cover
    stack = np.zeros((n + 2, words), dtype=np.uint64)
    total = 0
    one = np.uint64(1)
    full = ~np.uint64(0)
    dbc = np.uint64(0x03F79D71B4CB0A89)
    fifty_eight = np.uint64(58)
    for v in range(n):
        total += 1
        counts[1] += 1
        if total > budget:
            return -1
        wv = v >> 6
        bv = v & 63
        nonzero = False
        for w in range(words):
            x = bits[v, w]
            if w < wv:
                x = np.uint64(0)
            elif w == wv:
                if bv == 63:
                    x = np.uint64(0)
                else:
                    x = x & (full << np.uint64(bv + 1))
            stack[1, w] = x
            if x != np.uint64(0):
                nonzero = True
        if not nonzero:
            continue
        depth = 1
        while depth >= 1:
            u = -1
            for w in range(words):
                b = stack[depth, w]
                if b != np.uint64(0):
                    lsb = b & ((~b) + one)
                    u = (w << 6) + table[(lsb * dbc) >> fifty_eight]
                    stack[depth, w] = b ^ lsb
                    break
            if u < 0:
                depth -= 1
                continue
            total += 1
            counts[depth + 1] += 1
            if total > budget:
                return -1
            nonzero = False
            for w in range(words):
                x = stack[depth, w] & bits[u, w]
                stack[depth + 1, w] = x
                if x != np.uint64(0):
                    nonzero = True
            if nonzero:
                depth += 1
    return 0


def _count_python(masks, n, budget, counts):
    """Same walk with Python int bitsets; masks[v] has bits for N(v)."""
    total = 0
    for v in range(n):
        total += 1
        counts[1] += 1
        if total > budget:
            return -1
        cand = masks[v] >> (v + 1) << (v + 1)
        if not cand:
            continue
        stack = [cand]
        while stack:
            s = stack[-1]
            if not s:
                stack.pop()
                continue
            lsb = s & -s
            stack[-1] = s ^ lsb
            u = lsb.bit_length() - 1
            total += 1
            counts[len(stack) + 1] += 1
            if total > budget:
                return -1
            child = stack[-1] & masks[u]
            if child:
                stack.append(child)
    return 0


def clique_counts(
    adj: np.ndarray, budget: int = DEFAULT_CLIQUE_BUDGET, reorder: bool = True
) -> np.ndarray:
    """Count cliques of every size in the graph given by boolean adj.

    Returns an int64 array c with c[k] = number of cliques on k vertices
    (c[0] = 1 for the empty clique is NOT included; index 0 is 0),
    trimmed to the largest populated size.  Raises CliqueBudgetError
    when the walk would visit more than ``budget`` cliques.
    """
    adj = np.asarray(adj, dtype=bool)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise ValueError(f"adjacency must be square, got {adj.shape}")
    n = adj.shape[0]
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    if not (adj == adj.T).all():
        raise ValueError("adjacency must be symmetric")
    if adj.diagonal().any():
        raise ValueError("adjacency diagonal must be false")
    if reorder and n > 2:
        order = degeneracy_order(adj)
        adj = adj[np.ix_(order, order)]
    counts = np.zeros(n + 2, dtype=np.int64)
    if HAVE_NUMBA:
        bits = pack_adjacency(adj)
        rc = _count_kernel(bits, n, bits.shape[1], int(budget), counts, _DB_TABLE)
    else:
        masks = [int(sum(1 << j for j in np.flatnonzero(adj[v]))) for v in range(n)]
        rc = _count_python(masks, n, int(budget), counts)
    if rc != 0:
        raise CliqueBudgetError(
            f"clique budget {budget} exceeded on a graph with {n} vertices"
        )
    top = int(np.max(np.nonzero(counts)[0])) if counts.any() else 0
    return counts[: top + 1]


def brute_force_clique_counts(adj: np.ndarray, max_vertices: int = 16) -> np.ndarray:
    """Oracle: count cliques by scanning every vertex subset.

    Only for tiny graphs; vectorized over the 2^n subsets.  Output
    format matches :func:`clique_counts`.
    """
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    if n > max_vertices:
        raise ValueError(f"brute force capped at {max_vertices} vertices, got {n}")
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    closed = [
        int(sum(1 << j for j in np.flatnonzero(adj[v])) | (1 << v)) for v in range(n)
    ]
    subsets = np.arange(1, 1 << n, dtype=np.uint32)
    ok = np.ones(subsets.shape[0], dtype=bool)
    for v in range(n):
        has_v = (subsets >> np.uint32(v)) & np.uint32(1) == 1
        covered = (subsets & np.uint32(~closed[v] & 0xFFFFFFFF)) == 0
        ok &= covered | ~has_v
    sizes = np.bitwise_count(subsets[ok]).astype(np.int64)
    counts = np.bincount(sizes, minlength=2)
    return counts.astype(np.int64)
