"""Discrete-time growth rules for the five tree models."""

from __future__ import annotations

import numpy as np

from .models import Model, ModelSpec, make_rng
from .tree import RootedTree


def gen_discrete(spec: ModelSpec, n: int, seed=0) -> RootedTree:
    """Grow a random tree of the given model by its discrete insertion rule.

    Parameters
    ----------
    spec : ModelSpec
        Tree model.
    n : int
        Number of nodes (RRT, BST, PA), internal nodes (XBST) or keys (MARY).
    seed : int or numpy.random.Generator
        Random seed; identical ``(spec, n, seed)`` give identical trees.

    Returns
    -------
    RootedTree
        Tree whose node indices follow birth order, so every parent has a
        smaller index than its children.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    model = spec.model
    if model is Model.RRT:
        return RootedTree(_uniform_attachment(n, rng))
    if model is Model.PA:
        return RootedTree(_preferential_attachment(n, spec.chi, spec.rho, rng))
    if model is Model.BST:
        keys = rng.permutation(n) + 1
        parent, _, first = search_tree(keys, 2)
        return RootedTree(_relabel_by_birth(parent, first))
    if model is Model.XBST:
        keys = rng.permutation(n) + 1
        return RootedTree(_extend(*search_tree(keys, 2)))
    if model is Model.MARY:
        keys = rng.random(n)
        parent, _, first = search_tree(keys, spec.m)
        return RootedTree(_relabel_by_birth(parent, first))
    raise ValueError(f"unknown model {model!r}")


def _uniform_attachment(n: int, rng: np.random.Generator) -> np.ndarray:
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    if n > 1:
        k = np.arange(1, n)
        parent[1:] = np.minimum((rng.random(n - 1) * k).astype(np.int64), k - 1)
    return parent


def _preferential_attachment(n: int, chi: float, rho: float, rng: np.random.Generator) -> np.ndarray:
    if chi == 0:
        return _uniform_attachment(n, rng)
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    if n == 1:
        return parent
    u = rng.random(n).tolist()
    v = rng.random(n).tolist()
    par = parent.tolist()
    if chi > 0:
        # Weight chi*d(v) + rho splits into a uniform node part (total rho*k)
        # and an outdegree part (total chi*(k-1)), the latter sampled as the
        # parent of a uniformly chosen existing edge.
        for k in range(1, n):
            uniform_mass = rho * k
            if u[k] * (uniform_mass + chi * (k - 1)) < uniform_mass:
                par[k] = min(int(v[k] * k), k - 1)
            else:
                j = 1 + min(int(v[k] * (k - 1)), k - 2)
                par[k] = par[j]
        return np.array(par, dtype=np.int64)
    # chi < 0: the weight |chi| * (cap - d(v)) counts free child slots.
    cap = int(round(rho / -chi))
    slots = [0] * cap
    for k in range(1, n):
        j = min(int(u[k] * len(slots)), len(slots) - 1)
        p = slots[j]
        slots[j] = slots[-1]
        slots.pop()
        par[k] = p
        slots.extend([k] * cap)
    return np.array(par, dtype=np.int64)


def search_tree(keys: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Insert ``keys`` in order into an m-ary search tree.

    A node stores the first ``m - 1`` keys that reach it; later keys are routed
    to child slot ``j`` where ``j`` is the number of stored keys below the key.
    All keys are routed one tree level at a time.

    Returns
    -------
    parent, slot, first : ndarray
        For every allocated node (in level order): its parent (``-1`` for the
        root), its child slot in ``0..m-1`` and the insertion position of its
        first key.
    """
    keys = np.asarray(keys)
    cap = m - 1
    pos = np.arange(keys.size)
    group = np.zeros(keys.size, dtype=np.int64)
    n_groups = 1
    group_parent = np.array([-1], dtype=np.int64)
    group_slot = np.array([0], dtype=np.int64)
    parents, slots, firsts = [], [], []
    offset = 0
    while pos.size:
        order = np.argsort(group, kind="stable")
        pos = pos[order]
        group = group[order]
        counts = np.bincount(group, minlength=n_groups)
        start = np.concatenate(([0], np.cumsum(counts)[:-1]))
        rank = np.arange(pos.size) - start[group]
        node_ids = offset + np.arange(n_groups)
        parents.append(group_parent)
        slots.append(group_slot)
        firsts.append(pos[start])
        stored = rank < cap
        if stored.all():
            break
        table = np.full((n_groups, cap), np.inf)
        table[group[stored], rank[stored]] = keys[pos[stored]]
        table.sort(axis=1)
        rest = ~stored
        g = group[rest]
        j = (keys[pos[rest]][:, None] > table[g]).sum(axis=1)
        child_key = g * m + j
        uniq, inverse = np.unique(child_key, return_inverse=True)
        group_parent = node_ids[uniq // m]
        group_slot = uniq % m
        group = inverse.astype(np.int64)
        pos = pos[rest]
        n_groups = uniq.size
        offset += node_ids.size
    return np.concatenate(parents), np.concatenate(slots), np.concatenate(firsts)


def _relabel_by_birth(parent: np.ndarray, birth_key) -> np.ndarray:
    """Renumber nodes in increasing ``birth_key`` (parents must come first)."""
    order = np.lexsort(birth_key[::-1]) if isinstance(birth_key, tuple) else np.argsort(birth_key, kind="stable")
    new_id = np.empty_like(order)
    new_id[order] = np.arange(order.size)
    old_parent = parent[order]
    return np.where(old_parent >= 0, new_id[np.maximum(old_parent, 0)], -1)


def _extend(parent: np.ndarray, slot: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Attach external leaves to every free slot of a binary search tree.

    Children of an internal node ``u`` (internal or external) are all born
    when ``u`` receives its key, so nodes are ordered by
    ``(first key position of the parent, slot)``.
    """
    n = parent.size
    filled = np.zeros((n, 2), dtype=bool)
    nonroot = parent >= 0
    filled[parent[nonroot], slot[nonroot]] = True
    ext_parent, ext_slot = np.nonzero(~filled)
    all_parent = np.concatenate((parent, ext_parent))
    all_slot = np.concatenate((slot, ext_slot))
    born = np.where(all_parent >= 0, first[np.maximum(all_parent, 0)], -1)
    return _relabel_by_birth(all_parent, (born, all_slot))
