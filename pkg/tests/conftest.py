import collections

import numpy as np
import pytest

from percolab.graph_core import build_window


@pytest.fixture(scope="session")
def grid3():
    return build_window("hypercubic", d=2, L=3)


@pytest.fixture(scope="session")
def grid5():
    return build_window("hypercubic", d=2, L=5)


@pytest.fixture(scope="session")
def path5():
    return build_window("hypercubic", d=1, L=5)


@pytest.fixture(scope="session")
def tiny_square():
    return build_window("hypercubic", d=2, L=2)


def bfs_clusters(window, open_mask):
    """Reference cluster decomposition: plain BFS over open edges.

    Returns (component id per vertex, list of vertex sets).
    """
    comp = np.full(window.n_vertices, -1, dtype=np.int64)
    comps = []
    for start in range(window.n_vertices):
        if comp[start] >= 0:
            continue
        cid = len(comps)
        comp[start] = cid
        members = [start]
        queue = collections.deque([start])
        while queue:
            u = queue.popleft()
            for e in window.incident_edges[u]:
                if not open_mask[e]:
                    continue
                a, b = window.edges[e]
                w = int(b) if int(a) == u else int(a)
                if comp[w] < 0:
                    comp[w] = cid
                    members.append(w)
                    queue.append(w)
        comps.append(set(members))
    return comp, comps
