"""Jitted inner loops of the event-driven simulator.

The binary indexed tree over per-vertex total rates uses plain arrays:
``tree`` has length ``n + 1`` (1-based Fenwick layout) and ``values``
mirrors the leaf rates so point updates can be written as "set" operations.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def build(values):
    n = len(values)
    tree = np.zeros(n + 1)
    for i in range(1, n + 1):
        tree[i] += values[i - 1]
        parent = i + (i & -i)
        if parent <= n:
            tree[parent] += tree[i]
    return tree


@njit(cache=True)
def total(tree):
    s = 0.0
    i = len(tree) - 1
    while i > 0:
        s += tree[i]
        i -= i & -i
    return s


@njit(cache=True)
def _set(tree, values, v, new_value):
    delta = new_value - values[v]
    if delta == 0.0:
        return
    values[v] = new_value
    n = len(values)
    i = v + 1
    while i <= n:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def search(tree, target):
    """Return ``(v, rem)``: the first leaf whose running prefix sum exceeds
    ``target`` and the offset of ``target`` inside that leaf."""
    n = len(tree) - 1
    pos = 0
    step = 1
    while step * 2 <= n:
        step *= 2
    rem = target
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        step //= 2
    if pos >= n:
        pos = n - 1
    return pos, rem


@njit(cache=True)
def environments(indptr, indices, scaled, xi, state_count):
    """``phi[i, s] = sum_{j ~ i, xi_j = s} a_ij / <d>`` in one pass."""
    n = len(indptr) - 1
    phi = np.zeros((n, state_count))
    for i in range(n):
        for m in range(indptr[i], indptr[i + 1]):
            phi[i, xi[indices[m]]] += scaled[m]
    return phi


@njit(cache=True)
def shift_environments(phi, indptr, indices, scaled, v, s, k):
    """Neighbours of ``v`` see ``v`` move from ``s`` to ``k``."""
    for m in range(indptr[v], indptr[v + 1]):
        j = indices[m]
        phi[j, k] += scaled[m]
        x = phi[j, s] - scaled[m]
        phi[j, s] = x if x > 0.0 else 0.0


@njit(cache=True)
def affected(indptr, indices, v):
    """Neighbours of ``v`` followed by ``v`` itself."""
    a, b = indptr[v], indptr[v + 1]
    out = np.empty(b - a + 1, dtype=np.int64)
    out[: b - a] = indices[a:b]
    out[b - a] = v
    return out


@njit(cache=True)
def commit(cols, values, tree, channel, aff, states, old_state_last, new_cols):
    """Install refreshed outflow columns for the vertices in ``aff``.

    ``states`` are the current states of ``aff``; the last entry of ``aff``
    is the vertex that jumped, whose previous state is ``old_state_last``.
    """
    S = cols.shape[1]
    last = len(aff) - 1
    for m in range(len(aff)):
        v = aff[m]
        so = old_state_last if m == last else states[m]
        sn = states[m]
        tot = 0.0
        for q in range(S):
            channel[q, so] -= cols[v, q]
            channel[q, sn] += new_cols[m, q]
            cols[v, q] = new_cols[m, q]
            tot += new_cols[m, q]
        _set(tree, values, v, tot)


@njit(cache=True)
def row_sums(cols):
    n, S = cols.shape
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for q in range(S):
            acc += cols[i, q]
        out[i] = acc
    return out


def warmup():
    """Trigger compilation (cached on disk after the first run)."""
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    scaled = np.ones(2)
    xi = np.array([0, 1], dtype=np.int64)
    phi = environments(indptr, indices, scaled, xi, 2)
    shift_environments(phi, indptr, indices, scaled, 0, 0, 1)
    aff = affected(indptr, indices, 0)
    cols = np.ones((2, 2))
    values = row_sums(cols)
    tree = build(values)
    commit(cols, values, tree, np.zeros((2, 2)), aff, xi, 1, np.ones((2, 2)))
    search(tree, 1.5)
    total(tree)
