"""Index-addressed rooted trees and their line-based text serialization."""

from __future__ import annotations

import io
import os
from typing import Iterable, Sequence, TextIO

import numpy as np

MAX_NODES = 2**31 - 1


class RootedTree:
    """An immutable rooted tree on nodes ``0..node_count-1``.

    The tree is stored as a parent array (``-1`` marks the root) together with
    a CSR-style child table.  Children of a node are kept in birth order; when
    the tree is built from a parent array alone, birth order is taken to be
    index order.

    Parameters
    ----------
    parent : sequence of int
        ``parent[v]`` is the parent of node ``v``, or ``-1`` for the root.
    birth_time : sequence of float, optional
        Birth time of every node, when the tree comes from a simulation.
    """

    __slots__ = ("_parent", "_offsets", "_child_index", "_root", "_order", "birth_time")

    def __init__(self, parent: Sequence[int] | np.ndarray, *, birth_time=None, _children=None):
        par = np.array(parent, dtype=np.int64).reshape(-1)
        n = par.size
        if n < 1:
            raise ValueError("a tree needs at least one node")
        if n > MAX_NODES:
            raise ValueError(f"node_count {n} exceeds {MAX_NODES}")
        if np.any((par < -1) | (par >= n)):
            raise ValueError("parent index out of range")
        roots = np.flatnonzero(par == -1)
        if roots.size != 1:
            raise ValueError(f"expected exactly one root, found {roots.size}")
        self._root = int(roots[0])
        par.setflags(write=False)
        self._parent = par

        if _children is None:
            nonroot = np.flatnonzero(par >= 0)
            order = nonroot[np.argsort(par[nonroot], kind="stable")]
            counts = np.bincount(par[nonroot], minlength=n)
        else:
            order, counts = _children
        self._offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
        self._child_index = np.asarray(order, dtype=np.int64)
        self._offsets.setflags(write=False)
        self._child_index.setflags(write=False)
        self._order = self._compute_order()
        if birth_time is not None:
            bt = np.array(birth_time, dtype=float).reshape(-1)
            if bt.size != n:
                raise ValueError("birth_time length does not match node_count")
            bt.setflags(write=False)
            birth_time = bt
        self.birth_time = birth_time

    @classmethod
    def from_children(cls, children: Sequence[Sequence[int]], *, birth_time=None) -> "RootedTree":
        """Build a tree from per-node child lists, keeping the given child order."""
        n = len(children)
        parent = np.full(n, -1, dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        flat: list[int] = []
        counts = np.zeros(n, dtype=np.int64)
        for v, kids in enumerate(children):
            counts[v] = len(kids)
            for c in kids:
                if not 0 <= c < n:
                    raise ValueError("child index out of range")
                if seen[c]:
                    raise ValueError(f"node {c} has more than one parent")
                seen[c] = True
                parent[c] = v
                flat.append(int(c))
        return cls(parent, birth_time=birth_time, _children=(np.array(flat, dtype=np.int64), counts))

    def _compute_order(self) -> np.ndarray:
        par = self._parent
        n = par.size
        idx = np.arange(n)
        if self._root == 0 and np.all(par[1:] < idx[1:]):
            # Parents precede children already; every node reaches the root.
            return idx
        offsets = self._offsets.tolist()
        kids = self._child_index.tolist()
        order = [self._root]
        i = 0
        while i < len(order):
            v = order[i]
            order.extend(kids[offsets[v]:offsets[v + 1]])
            i += 1
            if len(order) > n:
                break
        if len(order) != n:
            raise ValueError("parent array contains a cycle or unreachable nodes")
        return np.array(order, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return int(self._parent.size)

    def __len__(self) -> int:
        return self.node_count

    @property
    def root(self) -> int:
        return self._root

    @property
    def parent(self) -> np.ndarray:
        """Read-only parent array."""
        return self._parent

    def children(self, v: int) -> np.ndarray:
        return self._child_index[self._offsets[v]:self._offsets[v + 1]]

    def child_lists(self) -> list[list[int]]:
        offsets = self._offsets.tolist()
        kids = self._child_index.tolist()
        return [kids[offsets[v]:offsets[v + 1]] for v in range(self.node_count)]

    def outdegree(self) -> np.ndarray:
        return np.diff(self._offsets)

    def topological_order(self) -> np.ndarray:
        """Node order in which every parent precedes its children."""
        return self._order

    def depth(self) -> np.ndarray:
        d = np.zeros(self.node_count, dtype=np.int64)
        par = self._parent
        for v in self._order[1:].tolist():
            d[v] = d[par[v]] + 1
        return d

    def edges(self) -> Iterable[tuple[int, int]]:
        for v, p in enumerate(self._parent.tolist()):
            if p >= 0:
                yield p, v

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RootedTree):
            return NotImplemented
        return (
            np.array_equal(self._parent, other._parent)
            and np.array_equal(self._child_index, other._child_index)
        )

    def __hash__(self) -> int:
        return hash((self._parent.tobytes(), self._child_index.tobytes()))

    def __repr__(self) -> str:
        return f"RootedTree(node_count={self.node_count})"


def path_tree(n: int) -> RootedTree:
    return RootedTree(np.arange(-1, n - 1))


def star_tree(leaves: int) -> RootedTree:
    return RootedTree([-1] + [0] * leaves)


def complete_binary_tree(depth: int) -> RootedTree:
    n = 2 ** (depth + 1) - 1
    return RootedTree([-1] + [(v - 1) // 2 for v in range(1, n)])


# -- serialization ---------------------------------------------------------


def dumps_tree(tree: RootedTree) -> str:
    lines = [str(tree.node_count)]
    lines.extend(str(p) for p in tree.parent.tolist())
    return "\n".join(lines) + "\n"


def loads_tree(text: str) -> RootedTree:
    tokens = text.split()
    if not tokens:
        raise ValueError("empty tree file")
    n = int(tokens[0])
    if len(tokens) != n + 1:
        raise ValueError(f"expected {n} parent lines, found {len(tokens) - 1}")
    return RootedTree([int(t) for t in tokens[1:]])


def write_tree(tree: RootedTree, target: str | os.PathLike | TextIO) -> None:
    _write_text(dumps_tree(tree), target)


def read_tree(source: str | os.PathLike | TextIO) -> RootedTree:
    return loads_tree(_read_text(source))


def dumps_birth_times(birth_time: Sequence[float]) -> str:
    # repr() of a float is the shortest string that round-trips exactly.
    return "".join(f"{float(x)!r}\n" for x in birth_time)


def loads_birth_times(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split()], dtype=float)


def write_birth_times(birth_time: Sequence[float], target: str | os.PathLike | TextIO) -> None:
    _write_text(dumps_birth_times(birth_time), target)


def read_birth_times(source: str | os.PathLike | TextIO) -> np.ndarray:
    return loads_birth_times(_read_text(source))


def _write_text(text: str, target) -> None:
    if isinstance(target, io.TextIOBase) or hasattr(target, "write"):
        target.write(text)
        return
    with open(target, "w", encoding="ascii") as fh:
        fh.write(text)


def _read_text(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    with open(source, encoding="ascii") as fh:
        return fh.read()
