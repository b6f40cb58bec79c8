import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmjtrees.generators import gen_discrete, search_tree
from cmjtrees.models import ModelSpec, make_rng

ALL_SPECS = [
    ModelSpec.rrt(),
    ModelSpec.bst(),
    ModelSpec.pa(1.0, 1.0),
    ModelSpec.pa(-0.5, 1.0),
    ModelSpec.pa(-1.0, 3.0),
    ModelSpec.pa(2.5, 0.5),
    ModelSpec.xbst(),
    ModelSpec.mary(3),
    ModelSpec.mary(4),
]


def literal_search_tree(keys, m):
    """Insert keys one by one into an m-ary search tree (nodes numbered by creation)."""
    stored = [[]]
    child = [[None] * m]
    parent = [-1]
    for key in keys:
        v = 0
        while True:
            if len(stored[v]) < m - 1:
                stored[v].append(key)
                break
            j = sum(1 for s in stored[v] if s < key)
            if child[v][j] is None:
                child[v][j] = len(stored)
                stored.append([key])
                child.append([None] * m)
                parent.append(v)
                break
            v = child[v][j]
    return parent


def attachment_distribution(n, chi, rho):
    """Exact law of the parent array for preferential attachment on n nodes."""
    out = {(-1,): Fraction(1)}
    for k in range(1, n):
        nxt = {}
        for par, pr in out.items():
            deg = Counter(par[1:])
            w = [max(Fraction(chi) * deg[v] + Fraction(rho), Fraction(0)) for v in range(k)]
            total = sum(w)
            for v in range(k):
                if w[v]:
                    key = par + (v,)
                    nxt[key] = nxt.get(key, 0) + pr * w[v] / total
        out = nxt
    return out


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.label())
def test_trees_are_valid_and_reproducible(spec):
    a = gen_discrete(spec, 500, 11)
    b = gen_discrete(spec, 500, 11)
    c = gen_discrete(spec, 500, 12)
    assert np.array_equal(a.parent, b.parent)
    assert not np.array_equal(a.parent, c.parent)
    par = a.parent
    assert par[0] == -1 and np.all(par[1:] < np.arange(1, par.size))


def test_sizes():
    assert gen_discrete(ModelSpec.rrt(), 37, 0).node_count == 37
    assert gen_discrete(ModelSpec.bst(), 37, 0).node_count == 37
    assert gen_discrete(ModelSpec.pa(), 37, 0).node_count == 37
    assert gen_discrete(ModelSpec.xbst(), 37, 0).node_count == 75
    for n in (1, 2, 5, 40):
        assert gen_discrete(ModelSpec.mary(3), n, 0).node_count <= n


def test_degree_caps():
    bst = gen_discrete(ModelSpec.bst(), 2000, 1)
    assert bst.outdegree().max() <= 2
    xbst = gen_discrete(ModelSpec.xbst(), 2000, 1)
    assert set(np.unique(xbst.outdegree()).tolist()) == {0, 2}
    for m in (3, 4, 6):
        t = gen_discrete(ModelSpec.mary(m), 3000, 1)
        assert set(np.unique(t.outdegree()).tolist()) <= set(range(m + 1))
    pa = gen_discrete(ModelSpec.pa(-1.0, 3.0), 2000, 1)
    assert pa.outdegree().max() <= 3


def test_n_one_and_invalid_n():
    for spec in ALL_SPECS:
        t = gen_discrete(spec, 1, 0)
        assert t.node_count == (3 if spec.model.value == "xbst" else 1)
    with pytest.raises(ValueError):
        gen_discrete(ModelSpec.rrt(), 0, 0)


def test_rrt_two_nodes():
    assert gen_discrete(ModelSpec.rrt(), 2, 5).parent.tolist() == [-1, 0]


def test_rrt_three_nodes_root_degree():
    draws = 20_000
    hits = sum(gen_discrete(ModelSpec.rrt(), 3, make_rng(1, k)).outdegree()[0] == 2 for k in range(draws))
    assert abs(hits / draws - 0.5) < 4 * math.sqrt(0.25 / draws)


def test_pa_three_nodes_root_degree():
    draws = 20_000
    spec = ModelSpec.pa(1.0, 1.0)
    hits = sum(gen_discrete(spec, 3, make_rng(2, k)).outdegree()[0] == 2 for k in range(draws))
    # Root weight chi*1 + rho = 2 against rho = 1 for node 1: P(two children) = 2/3,
    # and rho/(chi + 2 rho) = 1/3 is the chance the root keeps a single child.
    p = 2 / 3
    assert abs(hits / draws - p) < 4 * math.sqrt(p * (1 - p) / draws)


@pytest.mark.parametrize("chi,rho", [(1.0, 1.0), (2.0, 0.5), (-0.5, 1.0), (-1.0, 3.0), (0.0, 1.0)])
def test_pa_matches_exact_attachment_law(chi, rho):
    n, draws = 5, 20_000
    exact = attachment_distribution(n, chi, rho)
    spec = ModelSpec.pa(chi, rho)
    counts = Counter(tuple(gen_discrete(spec, n, make_rng(3, k)).parent.tolist()) for k in range(draws))
    assert set(counts) <= set(exact)
    for shape, pr in exact.items():
        p = float(pr)
        assert abs(counts[shape] / draws - p) < 5 * math.sqrt(p * (1 - p) / draws) + 1e-12


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=60, unique=True), st.integers(2, 5))
def test_search_tree_matches_literal_insertion(keys, m):
    parent, slot, first = search_tree(np.array(keys), m)
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    par = parent[order]
    ours = np.where(par >= 0, relabel[np.maximum(par, 0)], -1).tolist()
    assert ours == literal_search_tree(keys, m)
    assert np.all(slot[parent >= 0] < m)


def test_bst_generator_matches_literal_insertion():
    rng = make_rng(9)
    keys = rng.permutation(300) + 1
    t = gen_discrete(ModelSpec.bst(), 300, make_rng(9))
    assert t.parent.tolist() == literal_search_tree(keys.tolist(), 2)


def test_mary_generator_matches_literal_insertion():
    keys = make_rng(4).random(500)
    t = gen_discrete(ModelSpec.mary(4), 500, make_rng(4))
    assert t.parent.tolist() == literal_search_tree(keys.tolist(), 4)


def test_xbst_internal_part_is_the_bst():
    n = 200
    xt = gen_discrete(ModelSpec.xbst(), n, 8)
    internal = np.flatnonzero(xt.outdegree() == 2)
    assert internal.size == n
    # Internal nodes induce a tree isomorphic in size to the BST on the same keys.
    assert np.all(np.isin(xt.parent[internal[1:]], internal))
