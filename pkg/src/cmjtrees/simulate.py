"""Continuous-time Crump-Mode-Jagers simulation of the five tree models.

Two engines live here.  :func:`simulate_cmj` is event driven: a binary heap of
pending births is popped in time order and the run stops the first time the
total weight reaches ``n``.  Fixed-horizon runs (:func:`simulate_to_time`,
fringe sampling and the batched estimators in :mod:`cmjtrees.experiments`)
need no stopping rule, so :func:`grow_forest` instead draws every individual's
whole reproduction process inside its window at once, one generation at a
time, for many independent trees in parallel.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .models import Model, ModelSpec, SizeMode, exponential, make_rng
from .tree import RootedTree

MAX_SIMULATED_NODES = 10**8

_BIRTH, _TWINS, _GROW = 0, 1, 2


class SizeGuardExceeded(RuntimeError):
    """A fixed-horizon simulation grew past the node budget."""


@dataclass
class SimState:
    """Mutable state of one event-driven run."""

    parent: list
    birth_time: list
    n_children: list
    weight: list
    weight_total: float
    clock: float
    event_queue: list
    seq: int = 0

    def push(self, time: float, node: int, kind: int) -> None:
        # Ties in time (possible only through rounding) break on node index.
        heapq.heappush(self.event_queue, (time, node, self.seq, kind))
        self.seq += 1


def _initial_weight(spec: ModelSpec) -> float:
    if spec.model is Model.XBST and spec.size_mode is SizeMode.INTERNAL:
        return 0.0
    return 1.0


def simulate_cmj(spec: ModelSpec, n: float, seed=0) -> tuple[RootedTree, float]:
    """Run the branching process until the total weight first reaches ``n``.

    Returns the family tree at that moment (nodes indexed in birth order, with
    birth times attached) and the stopping time.  The tree can exceed ``n``
    nodes when one event adds more than one unit of weight.
    """
    if not n >= 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed)
    state = SimState([], [], [], [], 0.0, 0.0, [])
    model = spec.model
    chi = spec.chi

    def exp(rate: float) -> float:
        return -math.log1p(-rng.random()) / rate

    def add_node(parent: int, t: float) -> int:
        v = len(state.parent)
        state.parent.append(parent)
        state.birth_time.append(t)
        state.n_children.append(0)
        w = _initial_weight(spec)
        state.weight.append(w)
        state.weight_total += w
        if parent >= 0:
            state.n_children[parent] += 1
        if model is Model.RRT:
            state.push(t + exp(1.0), v, _BIRTH)
        elif model is Model.BST:
            state.push(t + exp(1.0), v, _BIRTH)
            state.push(t + exp(1.0), v, _BIRTH)
        elif model is Model.PA:
            rate = spec.root_rate if v == 0 else spec.rho
            if rate > 0:
                state.push(t + exp(rate), v, _BIRTH)
        elif model is Model.XBST:
            state.push(t + exp(1.0), v, _TWINS)
        elif model is Model.MARY:
            _schedule_growth(v, t)
        return v

    def _schedule_growth(v: int, t: float) -> None:
        w = int(state.weight[v])
        if w < spec.m - 1:
            state.push(t + exp(w + 1.0), v, _GROW)
        else:
            for _ in range(spec.m):
                state.push(t + exp(1.0), v, _BIRTH)

    add_node(-1, 0.0)
    while state.weight_total < n:
        t, v, _, kind = heapq.heappop(state.event_queue)
        state.clock = t
        if kind == _BIRTH:
            add_node(v, t)
            if model is Model.RRT:
                state.push(t + exp(1.0), v, _BIRTH)
            elif model is Model.PA:
                base = spec.root_rate if v == 0 else spec.rho
                rate = chi * state.n_children[v] + base
                if rate > 1e-12:
                    state.push(t + exp(rate), v, _BIRTH)
        elif kind == _TWINS:
            if spec.size_mode is SizeMode.INTERNAL:
                state.weight[v] = 1.0
                state.weight_total += 1.0
            elif spec.size_mode is SizeMode.EXTERNAL:
                state.weight[v] = 0.0
                state.weight_total -= 1.0
            add_node(v, t)
            add_node(v, t)
        else:
            state.weight[v] += 1.0
            state.weight_total += 1.0
            _schedule_growth(v, t)
    tree = RootedTree(state.parent, birth_time=state.birth_time)
    return tree, state.clock


# -- fixed-horizon forests -------------------------------------------------------


@dataclass
class Forest:
    """Independent family trees grown to per-root horizons, stored by generation.

    ``parent[g]`` indexes into generation ``g - 1``; ``tree[g]`` gives the root
    each node descends from.
    """

    parent: list
    birth: list
    tree: list
    n_roots: int

    @property
    def node_count(self) -> int:
        return int(sum(b.size for b in self.birth))

    def tree_sizes(self) -> np.ndarray:
        sizes = np.zeros(self.n_roots, dtype=np.int64)
        for tr in self.tree:
            sizes += np.bincount(tr, minlength=self.n_roots)
        return sizes

    def essential(self) -> list:
        """Per-generation essential flags (a node is essential iff no child is)."""
        flags = [None] * len(self.birth)
        below = None
        for g in range(len(self.birth) - 1, -1, -1):
            has_child = np.zeros(self.birth[g].size, dtype=bool)
            if below is not None:
                has_child[self.parent[g + 1][below]] = True
            flags[g] = ~has_child
            below = flags[g]
        return flags

    def root_essential(self) -> np.ndarray:
        return self.essential()[0]


def grow_forest(spec: ModelSpec, horizons, rng: np.random.Generator, max_nodes: int = MAX_SIMULATED_NODES) -> Forest:
    """Grow one family tree per entry of ``horizons`` up to that time."""
    horizon0 = np.asarray(horizons, dtype=float).reshape(-1)
    if np.any(horizon0 < 0):
        raise ValueError("horizons must be non-negative")
    birth = np.zeros(horizon0.size)
    tree = np.arange(horizon0.size)
    parents = [np.full(horizon0.size, -1, dtype=np.int64)]
    births = [birth]
    trees = [tree]
    total = horizon0.size
    is_root = True
    while birth.size:
        horizon = horizon0[tree]
        p, b = _offspring(spec, birth, horizon, rng, is_root)
        is_root = False
        if p.size == 0:
            break
        total += p.size
        if total > max_nodes:
            raise SizeGuardExceeded(f"simulation exceeded {max_nodes} nodes")
        tree = tree[p]
        birth = b
        parents.append(p)
        births.append(b)
        trees.append(tree)
    return Forest(parents, births, trees, horizon0.size)


def _offspring(spec, birth, horizon, rng, is_root):
    """Children born inside ``[birth, horizon]`` for each individual of a generation."""
    model = spec.model
    window = horizon - birth
    idx = np.arange(birth.size)
    if model is Model.RRT:
        counts = rng.poisson(window)
        p = np.repeat(idx, counts)
        b = birth[p] + rng.random(p.size) * window[p]
    elif model is Model.BST:
        p = np.repeat(idx, 2)
        b = birth[p] + exponential(rng, 1.0, p.size)
        keep = b <= horizon[p]
        p, b = p[keep], b[keep]
    elif model is Model.XBST:
        t = birth + exponential(rng, 1.0, birth.size)
        alive = np.flatnonzero(t <= horizon)
        p = np.repeat(alive, 2)
        b = t[p]
    elif model is Model.MARY:
        puberty = birth.copy()
        for i in range(2, spec.m):
            puberty += exponential(rng, float(i), birth.size)
        fertile = np.flatnonzero(puberty <= horizon)
        p = np.repeat(fertile, spec.m)
        b = puberty[p] + exponential(rng, 1.0, p.size)
        keep = b <= horizon[p]
        p, b = p[keep], b[keep]
    elif model is Model.PA:
        p, b = _pa_offspring(spec, birth, horizon, rng, is_root)
    else:
        raise ValueError(f"unknown model {model!r}")
    # Children of a parent in birth order; parents stay in generation order.
    order = np.lexsort((b, p))
    return p[order], b[order]


def _pa_offspring(spec, birth, horizon, rng, is_root):
    base = spec.root_rate if is_root else spec.rho
    chi = spec.chi
    active = np.arange(birth.size)
    clock = birth.copy()
    out_p, out_b = [], []
    k = 0
    while active.size:
        rate = chi * k + base
        if rate <= 1e-12:
            break
        clock = clock + exponential(rng, rate, active.size)
        born = clock <= horizon[active]
        active = active[born]
        clock = clock[born]
        out_p.append(active)
        out_b.append(clock)
        k += 1
    if not out_p:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate(out_p), np.concatenate(out_b)


def forest_tree(forest: Forest, index: int = 0) -> RootedTree:
    """Extract one tree of a forest, relabelled in birth order, birth times attached."""
    offsets = np.cumsum([0] + [b.size for b in forest.birth])
    parent_global = np.concatenate(
        [forest.parent[0]] + [forest.parent[g] + offsets[g - 1] for g in range(1, len(forest.birth))]
    )
    birth = np.concatenate(forest.birth)
    tree = np.concatenate(forest.tree)
    keep = np.flatnonzero(tree == index)
    local = np.full(birth.size, -1, dtype=np.int64)
    # Stable sort on birth time; generation order settles exact ties.
    order = keep[np.argsort(birth[keep], kind="stable")]
    local[order] = np.arange(order.size)
    par = parent_global[order]
    new_parent = np.where(par >= 0, local[np.maximum(par, 0)], -1)
    return RootedTree(new_parent, birth_time=birth[order])


def simulate_to_time(spec: ModelSpec, t: float, seed=0, max_nodes: int = MAX_SIMULATED_NODES) -> RootedTree:
    """Family tree of all individuals born by time ``t``.

    Raises
    ------
    SizeGuardExceeded
        If the tree grows past ``max_nodes``.
    """
    if not t >= 0:
        raise ValueError("t must be non-negative")
    rng = make_rng(seed)
    return forest_tree(grow_forest(spec, [t], rng, max_nodes))


def sample_fringe_tree(spec: ModelSpec, seed=0, max_nodes: int = MAX_SIMULATED_NODES) -> RootedTree:
    """The process stopped at an independent ``Exp(alpha)`` time."""
    rng = make_rng(seed)
    tau = float(exponential(rng, spec.alpha))
    return forest_tree(grow_forest(spec, [tau], rng, max_nodes))
