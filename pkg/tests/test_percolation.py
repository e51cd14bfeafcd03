import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import bfs_clusters
from percolab.errors import DomainError
from percolab.graph_core import build_window
from percolab.percolation import (
    Configuration,
    EdgeLabels,
    assign_uniforms,
    clusters,
    connected_off,
    count_edge_disjoint_paths,
    hull,
    open_oriented_boundary,
    reachable_off,
    repulsion_statistic,
    tau,
    threshold,
)


def make_config(window, open_edges):
    mask = np.zeros(window.n_edges, dtype=bool)
    mask[list(open_edges)] = True
    return Configuration(open=mask, p=0.5)


class TestLabels:
    def test_deterministic(self, grid5):
        a = assign_uniforms(grid5, 11, 3)
        b = assign_uniforms(grid5, 11, 3)
        assert np.array_equal(a.labels, b.labels)

    def test_streams_differ(self, grid5):
        a = assign_uniforms(grid5, 11, 3)
        assert not np.array_equal(a.labels, assign_uniforms(grid5, 11, 4).labels)
        assert not np.array_equal(a.labels, assign_uniforms(grid5, 12, 3).labels)

    def test_range(self, grid5):
        labels = assign_uniforms(grid5, 0, 0).labels
        assert np.all((labels >= 0) & (labels < 1))

    def test_threshold_extremes(self, grid5):
        labels = assign_uniforms(grid5, 0, 0)
        assert not threshold(labels, 0.0).open.any()
        assert threshold(labels, 1.0).open.all()
        with pytest.raises(DomainError):
            threshold(labels, 1.5)

    @given(p1=st.floats(0.01, 0.99), p2=st.floats(0.01, 0.99), idx=st.integers(0, 50))
    @settings(max_examples=60, deadline=None)
    def test_monotone_coupling(self, grid3, p1, p2, idx):
        p1, p2 = min(p1, p2), max(p1, p2)
        labels = assign_uniforms(grid3, 5, idx)
        open1 = threshold(labels, p1).open
        open2 = threshold(labels, p2).open
        assert not np.any(open1 & ~open2)

    def test_joint_law_single_edge(self):
        # one-edge window: P(open at .5) = .5, P(open at .75) = .75,
        # and the coupling forbids open-at-.5 but closed-at-.75
        w = build_window("hypercubic", d=1, L=2)
        n = 40000
        both = low_only = high_only = 0
        for i in range(n):
            labels = assign_uniforms(w, 123, i)
            o1 = bool(threshold(labels, 0.5).open[0])
            o2 = bool(threshold(labels, 0.75).open[0])
            assert not (o1 and not o2)
            both += o1 and o2
            high_only += (not o1) and o2
            low_only += o1
        assert abs(both / n - 0.5) < 0.01
        assert abs(high_only / n - 0.25) < 0.01


class TestClusters:
    @given(seed=st.integers(0, 10_000), p=st.floats(0.1, 0.9))
    @settings(max_examples=60, deadline=None)
    def test_matches_bfs_oracle(self, grid5, seed, p):
        config = threshold(assign_uniforms(grid5, seed, 0), p)
        part = clusters(grid5, config)
        comp, comps = bfs_clusters(grid5, config.open)
        for cid, members in enumerate(comps):
            roots = {part.root_of(v) for v in members}
            assert len(roots) == 1
            v0 = next(iter(members))
            assert part.size_of(v0) == len(members)
            touching = {
                e
                for u in members
                for e in grid5.incident_edges[u]
            }
            assert part.edge_count_of(v0) == len(touching)
            is_pseudo = any(grid5.boundary_mask[u] for u in members)
            assert part.is_pseudo_infinite(v0) == is_pseudo
        # distinct BFS components get distinct roots
        assert len({part.root_of(next(iter(m))) for m in comps}) == len(comps)

    def test_infinite_mask(self, grid5):
        config = threshold(assign_uniforms(grid5, 7, 0), 0.6)
        part = clusters(grid5, config)
        mask = part.infinite_mask()
        for v in range(grid5.n_vertices):
            assert mask[v] == part.is_pseudo_infinite(v)

    def test_all_closed(self, grid3):
        part = clusters(grid3, make_config(grid3, []))
        for v in range(grid3.n_vertices):
            assert part.size_of(v) == 1
            assert part.edge_count_of(v) == grid3.degrees[v]
            assert part.is_pseudo_infinite(v) == grid3.boundary_mask[v]

    def test_all_open(self, grid3):
        part = clusters(grid3, make_config(grid3, range(grid3.n_edges)))
        assert part.size_of(0) == 9
        assert part.edge_count_of(0) == 12
        assert part.is_pseudo_infinite(grid3.center_vertex())


class TestTau:
    def test_path_hand_case(self, path5):
        assert tau(path5, [0, 1], [2]) == 1
        assert tau(path5, [0], [2]) == 0
        assert tau(path5, [1], [0, 2]) == 2

    def test_requires_disjoint(self, path5):
        with pytest.raises(DomainError):
            tau(path5, [0, 1], [1, 2])

    def test_repulsion_statistic_pseudo_infinite(self, grid3):
        labels = assign_uniforms(grid3, 1, 0)
        all_open = EdgeLabels(np.zeros(grid3.n_edges), 1, 0)
        finite, t = repulsion_statistic(grid3, all_open, 0.5, 0.7, grid3.center_vertex())
        assert (finite, t) == (False, 0)
        with pytest.raises(DomainError):
            repulsion_statistic(grid3, labels, 0.7, 0.5, 0)

    def test_repulsion_statistic_finite(self, path5):
        # edge i joins vertices (i, i+1); labels chosen so that at p2 the
        # cluster of 2 is just {2}, and at p1 only edge (3,4) is open
        labels = EdgeLabels(np.array([0.9, 0.6, 0.6, 0.1]), 0, 0)
        finite, t = repulsion_statistic(path5, labels, 0.5, 0.55, 2)
        assert finite
        # K_2 = {2}; p1-infinite union = {0} and {3,4}; edges (2,3) crosses
        assert t == 1


class TestOffInfinityPrimitives:
    def test_reachable_off_path(self, path5):
        config = make_config(path5, range(4))  # all open
        reach = reachable_off(path5, config, [2])
        assert list(reach) == [True, True, False, True, True]

    def test_reachable_off_blocked(self, path5):
        config = make_config(path5, [1, 2, 3])  # edge (0,1) closed
        reach = reachable_off(path5, config, [2])
        assert list(reach) == [True, False, False, True, True]

    def test_connected_off(self, path5):
        config = make_config(path5, [1, 2, 3])
        assert not connected_off(path5, config, 1, [2])
        assert connected_off(path5, config, 3, [2])
        assert connected_off(path5, config, 0, [2])  # boundary vertex
        with pytest.raises(DomainError):
            connected_off(path5, config, 2, [2])

    def test_consistency_with_batch(self, grid5):
        config = threshold(assign_uniforms(grid5, 3, 0), 0.55)
        S = [grid5.center_vertex()]
        reach = reachable_off(grid5, config, S)
        for x in range(grid5.n_vertices):
            if x in S:
                continue
            assert reach[x] == connected_off(grid5, config, x, S)


class TestHull:
    def test_all_open_hull_is_s(self, path5):
        config = make_config(path5, range(4))
        assert tuple(hull(path5, config, [2])) == (2,)

    def test_blocked_side_joins_hull(self, path5):
        # edge (0,1) closed: vertex 1 only reaches the boundary through S={2}
        config = make_config(path5, [1, 2, 3])
        assert tuple(hull(path5, config, [2])) == (1, 2)
        boundary = open_oriented_boundary(path5, config, [1, 2])
        assert [(e.tail, e.head) for e in boundary] == [(2, 3)]

    def test_finite_cluster_not_in_hull(self, path5):
        # only edge (1,2) open: cluster {1,2} never reaches the boundary,
        # so nothing is pseudo-infinite through S
        config = make_config(path5, [1])
        assert tuple(hull(path5, config, [2])) == ()


class TestEdgeDisjointPaths:
    def test_all_open_grid(self, grid3):
        config = make_config(grid3, range(grid3.n_edges))
        assert count_edge_disjoint_paths(grid3, config, [grid3.center_vertex()]) == 4

    def test_all_closed(self, grid3):
        config = make_config(grid3, [])
        assert count_edge_disjoint_paths(grid3, config, [grid3.center_vertex()]) == 0

    def test_single_path(self, path5):
        config = make_config(path5, [0, 1])
        assert count_edge_disjoint_paths(path5, config, [2]) == 1
        config = make_config(path5, range(4))
        assert count_edge_disjoint_paths(path5, config, [2]) == 2

    def test_menger_pruning(self, grid3):
        # close every edge incident to the center except one
        c = grid3.center_vertex()
        keep = grid3.incident_edges[c][0]
        open_edges = [e for e in range(grid3.n_edges) if e not in
                      set(int(x) for x in grid3.incident_edges[c]) or e == keep]
        config = make_config(grid3, open_edges)
        assert count_edge_disjoint_paths(grid3, config, [c]) == 1
