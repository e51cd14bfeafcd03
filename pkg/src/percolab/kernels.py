"""Hot loops compiled with numba: union-find over edge lists and random walks.

Everything here is deterministic in its arguments; parallelism lives upstream.
"""

import numba
import numpy as np

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MIX2 = np.uint64(0x94D049BB133111EB)


@numba.njit(cache=True)
def cluster_roots(edge_u, edge_v, open_mask, n):
    """Canonical root per vertex for the open subgraph.

    Union by size with path halving; final pass fully compresses, so the
    returned array is idempotent (root[root[v]] == root[v]).
    """
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for i in range(edge_u.shape[0]):
        if open_mask[i]:
            a = edge_u[i]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = edge_v[i]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                if size[a] < size[b]:
                    a, b = b, a
                parent[b] = a
                size[a] += size[b]
    for v in range(n):
        r = v
        while parent[r] != r:
            r = parent[r]
        u = v
        while parent[u] != r:
            nxt = parent[u]
            parent[u] = r
            u = nxt
    return parent


@numba.njit(cache=True)
def _splitmix64(state):
    state = (state + _SM_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> np.uint64(30))) * _SM_MIX1) & MASK64
    z = ((z ^ (z >> np.uint64(27))) * _SM_MIX2) & MASK64
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True)
def escape_walks(neigh_flat, neigh_ptr, start, s_mask, boundary_mask, walkers, max_steps, seed):
    """Simple random walks from ``start``: count escapes to the boundary.

    A walk escapes if it hits a boundary vertex (absorbing) before revisiting
    any vertex of S after time zero.  Walks exhausting ``max_steps`` count as
    non-escapes and are tallied separately.
    """
    escapes = 0
    truncated = 0
    for w in range(walkers):
        state = np.uint64(seed) ^ ((np.uint64(w) * _SM_MIX1) & MASK64)
        state = (state ^ ((np.uint64(start) * _SM_MIX2) & MASK64)) & MASK64
        state, _ = _splitmix64(state)
        pos = start
        steps = 0
        while True:
            if steps >= max_steps:
                truncated += 1
                break
            state, r = _splitmix64(state)
            deg = neigh_ptr[pos + 1] - neigh_ptr[pos]
            pos = neigh_flat[neigh_ptr[pos] + np.int64(r % np.uint64(deg))]
            steps += 1
            if s_mask[pos]:
                break
            if boundary_mask[pos]:
                escapes += 1
                break
    return escapes, truncated
