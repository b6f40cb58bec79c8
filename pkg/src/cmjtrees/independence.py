"""Independence numbers of rooted trees.

:func:`independence_profile` runs the leaf-to-root recursion

* ``i0[v] = sum(i[c] for c in children(v))``  (best set avoiding ``v``)
* ``i1[v] = 1 + sum(i0[c] for c in children(v))``  (best set using ``v``)
* ``i[v] = max(i0[v], i1[v])``, ``iota[v] = i[v] - i0[v]``

``iota[v]`` is 1 exactly when ``v`` is essential, i.e. lies in every maximum
independent set of its fringe subtree, and the independence number of the
whole tree is the number of essential nodes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import RootedTree

BRUTE_FORCE_CAP = 25


@dataclass(frozen=True)
class IndependenceProfile:
    """Per-node independence values of every fringe subtree, plus tree totals."""

    i0: np.ndarray
    i1: np.ndarray
    i: np.ndarray
    iota: np.ndarray
    tree_i: int
    matching: int
    vertex_cover: int
    nullity: int
    root: int = 0

    @property
    def node_count(self) -> int:
        return int(self.i.size)

    @property
    def root_essential(self) -> bool:
        return bool(self.iota[self.root])


def independence_profile(tree: RootedTree) -> IndependenceProfile:
    n = tree.node_count
    par = tree.parent.tolist()
    i0 = [0] * n
    i1 = [1] * n
    best = [0] * n
    for v in reversed(tree.topological_order().tolist()):
        a = i0[v]
        b = i1[v]
        iv = a if a >= b else b
        best[v] = iv
        p = par[v]
        if p >= 0:
            i0[p] += iv
            i1[p] += a
    i0_arr = np.array(i0, dtype=np.int64)
    i_arr = np.array(best, dtype=np.int64)
    iota = (i_arr - i0_arr).astype(np.int8)
    tree_i = int(i_arr[tree.root])
    matching = n - tree_i
    return IndependenceProfile(
        i0=i0_arr,
        i1=np.array(i1, dtype=np.int64),
        i=i_arr,
        iota=iota,
        tree_i=tree_i,
        matching=matching,
        vertex_cover=matching,
        nullity=2 * tree_i - n,
        root=tree.root,
    )


def essential_flags(tree: RootedTree) -> np.ndarray:
    """Boolean essential indicator per node: a node is essential iff no child is."""
    n = tree.node_count
    par = tree.parent.tolist()
    has_essential_child = [False] * n
    flags = [False] * n
    for v in reversed(tree.topological_order().tolist()):
        if not has_essential_child[v]:
            flags[v] = True
            p = par[v]
            if p >= 0:
                has_essential_child[p] = True
    return np.array(flags, dtype=bool)


def essential_set(tree: RootedTree) -> set[int]:
    return set(np.flatnonzero(essential_flags(tree)).tolist())


def independence_number(tree: RootedTree) -> int:
    """Independence number via the essential-node count."""
    return int(essential_flags(tree).sum())


def is_independent(tree: RootedTree, nodes) -> bool:
    chosen = np.zeros(tree.node_count, dtype=bool)
    chosen[list(nodes)] = True
    par = tree.parent
    nonroot = par >= 0
    return not np.any(chosen[nonroot] & chosen[par[nonroot]])


def brute_force_independence(tree: RootedTree) -> int:
    """Maximum independent set size by branch-and-bound over vertex subsets.

    Branches on a highest-degree vertex of the remaining graph (exclude it, or
    include it and drop its neighbours) and prunes when the remaining vertex
    count cannot beat the incumbent.  Independent of the tree recursion; only
    the adjacency structure is used.

    Raises
    ------
    ValueError
        If the tree has more than 25 nodes.
    """
    n = tree.node_count
    if n > BRUTE_FORCE_CAP:
        raise ValueError(f"brute force is capped at {BRUTE_FORCE_CAP} nodes, got {n}")
    adj = [0] * n
    for p, c in tree.edges():
        adj[p] |= 1 << c
        adj[c] |= 1 << p

    best = 0

    def search(mask: int, size: int) -> None:
        nonlocal best
        remaining = mask.bit_count()
        if size + remaining <= best:
            return
        pick, pick_deg = -1, -1
        m = mask
        while m:
            low = m & -m
            v = low.bit_length() - 1
            m ^= low
            d = (adj[v] & mask).bit_count()
            if d > pick_deg:
                pick, pick_deg = v, d
        if pick_deg <= 0:
            # No edges left: every remaining vertex can be taken.
            best = max(best, size + remaining)
            return
        bit = 1 << pick
        search(mask & ~bit & ~adj[pick], size + 1)
        search(mask & ~bit, size)

    search((1 << n) - 1, 0)
    return best
