import numpy as np
import pytest

from tetcontour.contourtree import (NOT_FOUND, build_contour_tree,
                                    build_join_tree, build_split_tree,
                                    merge_trees, superarc_at_value)
from tetcontour.mesh import (build_topology_graph, build_vertex_order,
                             grid_to_tets)

from conftest import gaussian_grid_mesh, random_grid_mesh, two_peak_mesh


def _tree(mesh):
    graph = build_topology_graph(mesh)
    order = build_vertex_order(mesh)
    return build_contour_tree(graph, order, mesh.values), graph, order


def _local_extrema(mesh, graph, order):
    """(n_minima, n_maxima) by neighbor scan with rank tie-breaks."""
    n_min = n_max = 0
    for v in range(mesh.vertex_count):
        ranks = order.rank[graph.neighbors(v)]
        if np.all(ranks > order.rank[v]):
            n_min += 1
        elif np.all(ranks < order.rank[v]):
            n_max += 1
    return n_min, n_max


def _tree_degrees(tree):
    up = np.zeros(tree.supernode_count, dtype=int)
    down = np.zeros(tree.supernode_count, dtype=int)
    for lo, hi in tree.superarcs:
        up[lo] += 1
        down[hi] += 1
    return up, down


def test_monotone_field_single_superarc():
    mesh = grid_to_tets((2, 2, 2), np.arange(8, dtype=float))
    tree, _, _ = _tree(mesh)
    assert tree.supernode_count == 2
    assert tree.superarc_count == 1
    assert len(tree.arc_regulars[0]) == 6


def test_join_split_tree_roots():
    mesh = random_grid_mesh(np.random.default_rng(1), dims=(4, 4, 4))
    graph = build_topology_graph(mesh)
    order = build_vertex_order(mesh)
    join = build_join_tree(graph, order)
    split = build_split_tree(graph, order)
    assert join.root == order.sort_index[0]          # global minimum
    assert split.root == order.sort_index[-1]        # global maximum
    # each tree has exactly one parentless vertex
    assert np.sum(join.parent < 0) == 1
    assert np.sum(split.parent < 0) == 1
    # join parents point downward, split parents upward
    for v in range(mesh.vertex_count):
        if join.parent[v] >= 0:
            assert order.rank[join.parent[v]] < order.rank[v]
        if split.parent[v] >= 0:
            assert order.rank[split.parent[v]] > order.rank[v]


def test_tree_structure_invariants(rng):
    for _ in range(6):
        mesh = random_grid_mesh(rng, dims=(6, 6, 6))
        tree, graph, order = _tree(mesh)
        n = mesh.vertex_count
        assert tree.superarc_count == tree.supernode_count - 1
        # partition: every vertex in exactly one arc
        counts = np.zeros(n, dtype=int)
        for a, regs in enumerate(tree.arc_regulars):
            counts[regs] += 1
            assert np.all(tree.arc_of[regs] == a)
            lo, hi = tree.superarcs[a]
            rlo = tree.rank[tree.supernodes[lo]]
            rhi = tree.rank[tree.supernodes[hi]]
            assert rlo < rhi
            if len(regs):
                rr = tree.rank[regs]
                assert np.all(np.diff(rr) > 0)       # ascending along arc
                assert rlo < rr[0] and rr[-1] < rhi
        counts[tree.supernodes] += 1
        assert np.all(counts == 1)
        assert tree.supernodes[tree.root] == order.sort_index[-1]


def test_leaf_count_matches_local_extrema(rng):
    for _ in range(6):
        mesh = random_grid_mesh(rng, dims=(6, 6, 6))
        tree, graph, order = _tree(mesh)
        up, down = _tree_degrees(tree)
        leaves = int(np.sum(up + down == 1))
        n_min, n_max = _local_extrema(mesh, graph, order)
        assert leaves == n_min + n_max


def test_negated_field_flips_orientations(rng):
    mesh = random_grid_mesh(rng, dims=(5, 5, 5))
    tree, _, _ = _tree(mesh)
    neg = grid_to_tets((5, 5, 5), -mesh.values)
    neg_tree, _, _ = _tree(neg)
    assert neg_tree.supernode_count == tree.supernode_count
    # the same vertex pairs are joined, with lo/hi swapped
    def arc_set(t, flip):
        pairs = set()
        for lo, hi in t.superarcs:
            a, b = t.supernodes[lo], t.supernodes[hi]
            pairs.add((b, a) if flip else (a, b))
        return pairs
    assert arc_set(tree, False) == arc_set(neg_tree, True)
    assert set(tree.supernodes) == set(neg_tree.supernodes)


def test_canonical_supernode_assignment(rng):
    mesh = random_grid_mesh(rng, dims=(5, 5, 5))
    tree, _, _ = _tree(mesh)
    up_arcs = [[] for _ in range(tree.supernode_count)]
    down_arcs = [[] for _ in range(tree.supernode_count)]
    for a, (lo, hi) in enumerate(tree.superarcs):
        up_arcs[lo].append(a)
        down_arcs[hi].append(a)
    for sn in range(tree.supernode_count):
        arc = tree.arc_of[tree.supernodes[sn]]
        if up_arcs[sn]:
            assert arc == max(up_arcs[sn])           # upward when possible
        else:
            assert arc == max(down_arcs[sn])         # maxima fall back


def test_two_peak_tree_shape():
    mesh = two_peak_mesh()
    tree, _, _ = _tree(mesh)
    assert tree.supernode_count == 3
    assert tree.superarc_count == 2
    up, down = _tree_degrees(tree)
    # the shared minimum is a split supernode with two upward arcs
    splits = np.flatnonzero((up == 2) & (down == 0))
    assert len(splits) == 1
    assert tree.supernode_value(int(splits[0])) == 0.0


def test_superarc_at_value_containment(rng):
    mesh = random_grid_mesh(rng, dims=(6, 6, 6))
    tree, _, _ = _tree(mesh)
    sn_vals = tree.values[tree.supernodes]
    hits = misses = 0
    for _ in range(200):
        v = int(rng.integers(mesh.vertex_count))
        h = float(rng.normal())
        arc = superarc_at_value(tree, v, h)
        if arc == NOT_FOUND:
            misses += 1
            continue
        hits += 1
        lo, hi = tree.superarcs[arc]
        assert (sn_vals[lo] <= h < sn_vals[hi]
                or (hi == tree.root and h == sn_vals[tree.root]))
    assert hits > 0
    # out-of-range values can never land on an arc
    assert superarc_at_value(tree, 0, mesh.values.max() + 1.0) == NOT_FOUND
    assert superarc_at_value(tree, 0, mesh.values.min() - 1.0) == NOT_FOUND


def test_superarc_at_value_own_interval(rng):
    """A query inside the seed's own superarc interval returns that arc."""
    mesh = random_grid_mesh(rng, dims=(5, 5, 5))
    tree, _, _ = _tree(mesh)
    for a, regs in enumerate(tree.arc_regulars):
        if not len(regs):
            continue
        v = int(regs[len(regs) // 2])
        assert superarc_at_value(tree, v, float(mesh.values[v])) == a


def test_merge_rejects_mismatched_trees():
    mesh = random_grid_mesh(np.random.default_rng(2), dims=(4, 4, 4))
    graph = build_topology_graph(mesh)
    order = build_vertex_order(mesh)
    join = build_join_tree(graph, order)
    small = random_grid_mesh(np.random.default_rng(3), dims=(3, 3, 3))
    split_small = build_split_tree(build_topology_graph(small),
                                   build_vertex_order(small))
    from tetcontour.contourtree import InconsistentTreesError
    with pytest.raises(InconsistentTreesError):
        merge_trees(join, split_small, order, mesh.values)


def test_gaussian_two_bumps_has_two_maxima():
    mesh = gaussian_grid_mesh(
        9, [(0.3, 0.5, 0.5), (0.7, 0.5, 0.5)], [1.0, 0.8], width=40.0)
    tree, _, _ = _tree(mesh)
    up, down = _tree_degrees(tree)
    maxima = np.flatnonzero((up == 0) & (down == 1))
    assert len(maxima) == 2
