"""Contour tree construction: join/split sweeps, merge, augmentation.

The join tree is built by a descending sweep with union-find over the
already-seen (higher) neighbors; the split tree is its dual under the
reversed order. The two are merged by iterated leaf pruning into the fully
augmented contour tree, which is then contracted into supernodes and
superarcs with every regular vertex mapped to its superarc.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mesh import TopologyGraph, VertexOrder


@dataclass(frozen=True)
class MergeTree:
    """Augmented merge tree as per-vertex parent pointers.

    For the join tree parents point toward lower values (root is the
    global minimum); for the split tree toward higher values (root is the
    global maximum). root has parent -1.
    """

    parent: np.ndarray
    root: int


def _sweep(graph: TopologyGraph, order: VertexOrder,
           descending: bool) -> MergeTree:
    n = graph.vertex_count
    rank = order.rank
    parent = np.full(n, -1, dtype=np.int64)
    uf = np.full(n, -1, dtype=np.int64)       # union-find parent, -1 unseen
    frontier = np.empty(n, dtype=np.int64)    # per root: latest swept vertex

    offsets = graph.neighbor_offsets
    nbrs = graph.neighbor_indices
    sweep = order.sort_index[::-1] if descending else order.sort_index

    def find(x):
        root = x
        while uf[root] != root:
            root = uf[root]
        while uf[x] != root:
            uf[x], x = root, uf[x]
        return root

    for v in sweep:
        uf[v] = v
        frontier[v] = v
        rv = rank[v]
        for u in nbrs[offsets[v]:offsets[v + 1]]:
            if uf[u] < 0:
                continue  # not yet swept
            seen_later = rank[u] > rv if descending else rank[u] < rv
            if not seen_later:
                continue
            ru = find(u)
            rw = find(v)
            if ru != rw:
                parent[frontier[ru]] = v
                uf[ru] = rw
                frontier[rw] = v
    root = int(sweep[-1])
    return MergeTree(parent, root)


def build_join_tree(graph: TopologyGraph, order: VertexOrder) -> MergeTree:
    """Descending sweep; leaves are the local maxima, root the global min."""
    return _sweep(graph, order, descending=True)


def build_split_tree(graph: TopologyGraph, order: VertexOrder) -> MergeTree:
    """Ascending sweep; leaves are the local minima, root the global max."""
    return _sweep(graph, order, descending=False)


@dataclass
class ContourTree:
    """Contour tree with full augmentation.

    supernodes:    (k,) vertex indices of the critical points.
    supernode_of:  (n,) supernode id per vertex, -1 for regular vertices.
    superarcs:     (k-1, 2) rows (lo, hi) of supernode ids, lo below hi in
                   the global vertex order.
    arc_regulars:  per superarc, regular vertex indices in ascending order.
    arc_of:        (n,) superarc id for every vertex; supernodes carry
                   their canonical arc (the arc toward the global maximum,
                   for the global maximum itself its single incident arc).
    root:          supernode id of the global maximum.
    parent_arc:    (k,) superarc id toward the root per supernode (-1 at
                   the root); arc_child[a] is the supernode on the far side
                   of arc a from the root.
    values:        (n,) the scalar field the tree was built from.
    rank:          (n,) the global vertex order ranks.
    """

    supernodes: np.ndarray
    supernode_of: np.ndarray
    superarcs: np.ndarray
    arc_regulars: list
    arc_of: np.ndarray
    root: int
    parent_arc: np.ndarray
    arc_child: np.ndarray
    values: np.ndarray
    rank: np.ndarray

    @property
    def supernode_count(self) -> int:
        return self.supernodes.shape[0]

    @property
    def superarc_count(self) -> int:
        return self.superarcs.shape[0]

    def arc_value_range(self, arc: int):
        lo, hi = self.superarcs[arc]
        return (float(self.values[self.supernodes[lo]]),
                float(self.values[self.supernodes[hi]]))

    def supernode_value(self, sn: int) -> float:
        return float(self.values[self.supernodes[sn]])


class InconsistentTreesError(Exception):
    """Join/split trees do not describe the same simply connected field."""


def merge_trees(join: MergeTree, split: MergeTree, order: VertexOrder,
                values: np.ndarray) -> ContourTree:
    """Iterated leaf pruning of the two merge trees into the contour tree."""
    n = join.parent.shape[0]
    values = np.asarray(values, dtype=np.float64)
    if split.parent.shape[0] != n:
        raise InconsistentTreesError("vertex count mismatch")
    if n == 1:
        raise InconsistentTreesError("need at least 2 vertices")

    jp = join.parent.copy()
    sp = split.parent.copy()
    j_children = [set() for _ in range(n)]
    s_children = [set() for _ in range(n)]
    for v in range(n):
        if jp[v] >= 0:
            j_children[jp[v]].add(v)
        if sp[v] >= 0:
            s_children[sp[v]].add(v)

    arcs = np.empty((n - 1, 2), dtype=np.int64)
    n_arcs = 0
    removed = np.zeros(n, dtype=bool)

    def is_leaf(v):
        return ((not j_children[v] and len(s_children[v]) <= 1)
                or (not s_children[v] and len(j_children[v]) <= 1))

    queue = deque(v for v in range(n) if is_leaf(v))
    remaining = n
    while queue and remaining > 1:
        v = queue.popleft()
        if removed[v] or not is_leaf(v):
            continue
        if not j_children[v] and jp[v] >= 0:
            w = jp[v]
            leaf_parent, leaf_children = jp, j_children
            other_parent, other_children = sp, s_children
        elif not s_children[v] and sp[v] >= 0:
            w = sp[v]
            leaf_parent, leaf_children = sp, s_children
            other_parent, other_children = jp, j_children
        else:
            # root of one tree with no remaining arc in the other: done
            continue
        arcs[n_arcs, 0] = v
        arcs[n_arcs, 1] = w
        n_arcs += 1
        removed[v] = True
        remaining -= 1
        # leaf deletion from the tree that supplied the arc
        leaf_children[w].discard(v)
        # bypass deletion from the other tree
        p = other_parent[v]
        c = next(iter(other_children[v])) if other_children[v] else -1
        if c >= 0:
            other_parent[c] = p
            if p >= 0:
                other_children[p].discard(v)
                other_children[p].add(c)
        elif p >= 0:
            other_children[p].discard(v)
        for cand in (w, p, c):
            if cand >= 0 and not removed[cand] and is_leaf(cand):
                queue.append(cand)
    if n_arcs != n - 1:
        raise InconsistentTreesError(
            f"merge produced {n_arcs} arcs for {n} vertices")
    return _contract(arcs, order, values)


def _contract(arcs: np.ndarray, order: VertexOrder,
              values: np.ndarray) -> ContourTree:
    """Contract the augmented contour tree into supernodes and superarcs."""
    n = arcs.shape[0] + 1
    rank = order.rank
    # adjacency of the augmented tree, neighbors split by rank direction
    deg = np.zeros(n, dtype=np.int64)
    np.add.at(deg, arcs[:, 0], 1)
    np.add.at(deg, arcs[:, 1], 1)
    adj_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=adj_off[1:])
    adj = np.empty(2 * (n - 1), dtype=np.int64)
    cursor = adj_off[:-1].copy()
    for a, b in arcs:
        adj[cursor[a]] = b
        cursor[a] += 1
        adj[cursor[b]] = a
        cursor[b] += 1

    up_deg = np.zeros(n, dtype=np.int64)
    down_deg = np.zeros(n, dtype=np.int64)
    for v in range(n):
        for u in adj[adj_off[v]:adj_off[v + 1]]:
            if rank[u] > rank[v]:
                up_deg[v] += 1
            else:
                down_deg[v] += 1
    is_super = (up_deg != 1) | (down_deg != 1)
    supernodes = np.flatnonzero(is_super)
    supernode_of = np.full(n, -1, dtype=np.int64)
    supernode_of[supernodes] = np.arange(supernodes.shape[0])

    superarcs = []
    arc_regulars = []
    arc_of = np.full(n, -1, dtype=np.int64)
    for sn, v in enumerate(supernodes):
        for u in adj[adj_off[v]:adj_off[v + 1]]:
            if rank[u] < rank[v]:
                continue  # walk upward only, so each chain is built once
            regs = []
            prev, cur = v, u
            while not is_super[cur]:
                regs.append(cur)
                nxt = adj[adj_off[cur]:adj_off[cur + 1]]
                step = nxt[0] if nxt[0] != prev else nxt[1]
                prev, cur = cur, step
            arc_id = len(superarcs)
            superarcs.append((sn, supernode_of[cur]))
            regs_arr = np.asarray(regs, dtype=np.int64)
            arc_regulars.append(regs_arr)
            arc_of[regs_arr] = arc_id
    superarcs = np.asarray(superarcs, dtype=np.int64).reshape(-1, 2)

    # root at the global maximum supernode; parent arcs give the canonical
    # supernode-to-superarc assignment
    k = supernodes.shape[0]
    order_pos = rank[supernodes]
    root = int(np.argmax(order_pos))
    sn_adj = [[] for _ in range(k)]
    for a, (lo, hi) in enumerate(superarcs):
        sn_adj[lo].append((hi, a))
        sn_adj[hi].append((lo, a))
    parent_arc = np.full(k, -1, dtype=np.int64)
    arc_child = np.full(superarcs.shape[0], -1, dtype=np.int64)
    seen = np.zeros(k, dtype=bool)
    stack = [root]
    seen[root] = True
    while stack:
        s = stack.pop()
        for t, a in sn_adj[s]:
            if not seen[t]:
                seen[t] = True
                parent_arc[t] = a
                arc_child[a] = t
                stack.append(t)
    if not seen.all():
        raise InconsistentTreesError("contour tree is not connected")
    # canonical supernode-to-superarc assignment: the upward arc (largest
    # id when a split saddle offers several), falling back to the largest
    # downward arc at maxima
    sn_up = [[] for _ in range(k)]
    sn_down = [[] for _ in range(k)]
    for a, (lo, hi) in enumerate(superarcs):
        sn_up[lo].append(a)
        sn_down[hi].append(a)
    for sn in range(k):
        pick = sn_up[sn] if sn_up[sn] else sn_down[sn]
        arc_of[supernodes[sn]] = max(pick)
    return ContourTree(supernodes=supernodes, supernode_of=supernode_of,
                       superarcs=superarcs, arc_regulars=arc_regulars,
                       arc_of=arc_of, root=root, parent_arc=parent_arc,
                       arc_child=arc_child, values=values, rank=rank)


def build_contour_tree(graph: TopologyGraph, order: VertexOrder,
                       values: np.ndarray) -> ContourTree:
    """Convenience: join + split + merge."""
    return merge_trees(build_join_tree(graph, order),
                       build_split_tree(graph, order), order, values)


NOT_FOUND = -1


def _arc_contains(tree: ContourTree, sn_vals, arc: int, h: float) -> bool:
    lo, hi = tree.superarcs[arc]
    if sn_vals[lo] <= h < sn_vals[hi]:
        return True
    return hi == tree.root and h == sn_vals[tree.root]


def straddling_arcs(tree: ContourTree, seed_vertex: int, h: float,
                    up_arcs=None, down_arcs=None) -> set:
    """All superarcs containing isovalue h reachable from the seed's arc
    by a value-monotone walk (upward when h is above the seed's arc)."""
    sn_vals = tree.values[tree.supernodes]
    if up_arcs is None or down_arcs is None:
        up_arcs, down_arcs = arc_incidence(tree)
    start = int(tree.arc_of[seed_vertex])
    if _arc_contains(tree, sn_vals, start, h):
        return {start}
    lo0, hi0 = tree.superarcs[start]
    going_up = h >= sn_vals[hi0]
    hits = set()
    stack = [start]
    visited = {start}
    while stack:
        arc = stack.pop()
        lo, hi = tree.superarcs[arc]
        nxt = up_arcs[hi] if going_up else down_arcs[lo]
        for b in nxt:
            if b in visited:
                continue
            visited.add(b)
            if _arc_contains(tree, sn_vals, b, h):
                hits.add(b)
            else:
                blo, bhi = tree.superarcs[b]
                past = (h >= sn_vals[bhi]) if going_up else (h < sn_vals[blo])
                if past:
                    stack.append(b)
    return hits


def arc_incidence(tree: ContourTree):
    """Per supernode: superarcs leaving upward and arriving from below."""
    up_arcs = [[] for _ in range(tree.supernode_count)]
    down_arcs = [[] for _ in range(tree.supernode_count)]
    for a, (lo, hi) in enumerate(tree.superarcs):
        up_arcs[lo].append(a)
        down_arcs[hi].append(a)
    return up_arcs, down_arcs


def superarc_at_value(tree: ContourTree, seed_vertex: int, h: float) -> int:
    """Superarc whose contour at isovalue h the seed's arc flows into.

    Walks monotonically from arcOf(seed) toward h, branching where a
    saddle offers several continuations; the result is the unique superarc
    straddling h reachable that way, or NOT_FOUND when there is none or
    the straddling superarc is ambiguous. Queries exactly at a supernode
    value resolve upward (h is treated as h+), except at the global
    maximum where the top arc still contains its endpoint value.
    """
    hits = straddling_arcs(tree, seed_vertex, h)
    if len(hits) == 1:
        return hits.pop()
    return NOT_FOUND
