import itertools
import math
from collections import Counter

import numpy as np
import pytest

from cmjtrees.experiments import estimate_root_essential
from cmjtrees.generators import gen_discrete
from cmjtrees.models import ModelSpec, SizeMode, make_rng
from cmjtrees.simulate import (
    SizeGuardExceeded,
    forest_tree,
    grow_forest,
    sample_fringe_tree,
    simulate_cmj,
    simulate_to_time,
)

from .test_generators import attachment_distribution, literal_search_tree

SPECS = [
    ModelSpec.rrt(),
    ModelSpec.bst(),
    ModelSpec.pa(1.0, 1.0),
    ModelSpec.pa(-0.5, 1.0),
    ModelSpec.pa(1.0, 1.0, root_rate_lambda=2.0),
    ModelSpec.xbst(),
    ModelSpec.xbst("internal_nodes"),
    ModelSpec.xbst("external_nodes"),
    ModelSpec.mary(3),
    ModelSpec.mary(4),
]


def permutation_law(n, m, extended=False):
    """Exact law of search-tree shapes (labelled by birth order) over all key orders."""
    law = Counter()
    perms = list(itertools.permutations(range(n)))
    for perm in perms:
        parent = literal_search_tree(list(perm), m)
        if extended:
            parent = gen_extended(parent, list(perm))
        law[tuple(parent)] += 1
    return {k: v / len(perms) for k, v in law.items()}


def gen_extended(parent, keys):
    # Reuse the generator's own extension on a fixed key order.
    from cmjtrees.generators import _extend, search_tree

    return _extend(*search_tree(np.array(keys), 2)).tolist()


def assert_matches_law(samples, law, sigmas=5.0):
    counts = Counter(samples)
    total = len(samples)
    assert set(counts) <= set(law), set(counts) - set(law)
    for shape, p in law.items():
        assert abs(counts[shape] / total - p) <= sigmas * math.sqrt(p * (1 - p) / total) + 1e-12, shape


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label())
def test_cmj_trees_are_consistent(spec):
    tree, tau = simulate_cmj(spec, 300, 5)
    bt = tree.birth_time
    par = tree.parent
    assert np.all(np.diff(bt) >= 0)
    assert np.all(bt[1:] > bt[par[1:]])
    # m-ary runs can stop on a weight (key) event rather than a birth
    assert bt[-1] <= tau
    if spec.model.value != "mary":
        assert bt[-1] == tau
    for v in range(tree.node_count):
        assert np.all(np.diff(bt[tree.children(v)]) >= 0)
    again, tau2 = simulate_cmj(spec, 300, 5)
    assert again == tree and tau2 == tau


def test_n_one_is_a_single_node():
    for spec in SPECS:
        if spec.size_mode is SizeMode.INTERNAL:
            continue
        tree, tau = simulate_cmj(spec, 1, 0)
        assert tree.node_count == 1 and tau == 0.0


def test_xbst_internal_weight_starts_at_zero():
    tree, tau = simulate_cmj(ModelSpec.xbst("internal_nodes"), 1, 0)
    assert tree.node_count == 3 and tau > 0


def test_xbst_size_modes():
    for mode, count in [("all_nodes", lambda t: t.node_count), ("internal_nodes", lambda t: (t.node_count - 1) // 2),
                        ("external_nodes", lambda t: (t.node_count + 1) // 2)]:
        tree, _ = simulate_cmj(ModelSpec.xbst(mode), 51, 3)
        assert tree.node_count % 2 == 1
        assert count(tree) >= 51 and count(tree) <= 52


def test_mary_stops_at_key_count():
    for seed in range(20):
        tree, _ = simulate_cmj(ModelSpec.mary(3), 100, seed)
        # a node with children is full (2 keys); children of a full node arrive one at a time
        deg = tree.outdegree()
        assert deg.max() <= 3
        assert 2 * np.count_nonzero(deg > 0) <= 100 <= 2 * tree.node_count


def test_invalid_n():
    with pytest.raises(ValueError):
        simulate_cmj(ModelSpec.rrt(), 0.5, 0)


def test_waiting_time_means():
    rng = make_rng(21)
    draws = 40_000
    rrt = np.array([simulate_cmj(ModelSpec.rrt(), 2, rng)[1] for _ in range(draws)])
    bst = np.array([simulate_cmj(ModelSpec.bst(), 2, rng)[1] for _ in range(draws)])
    assert abs(rrt.mean() - 1.0) < 4 / math.sqrt(draws)
    assert abs(bst.mean() - 0.5) < 4 * 0.5 / math.sqrt(draws)


def test_rrt_cmj_matches_discrete_law():
    rng = make_rng(31)
    draws = 30_000
    law = {tuple(p): 1 / 6 for p in [[-1, 0, a, b] for a in range(2) for b in range(3)]}
    assert_matches_law([tuple(simulate_cmj(ModelSpec.rrt(), 4, rng)[0].parent.tolist()) for _ in range(draws)], law)
    assert_matches_law([tuple(gen_discrete(ModelSpec.rrt(), 4, rng).parent.tolist()) for _ in range(draws)], law)


@pytest.mark.parametrize(
    "spec,n,law",
    [
        (ModelSpec.bst(), 4, lambda: permutation_law(4, 2)),
        (ModelSpec.mary(3), 5, lambda: permutation_law(5, 3)),
        (ModelSpec.xbst("internal_nodes"), 3, lambda: permutation_law(3, 2, extended=True)),
        (ModelSpec.pa(1.0, 1.0), 5, lambda: {k: float(v) for k, v in attachment_distribution(5, 1.0, 1.0).items()}),
        (ModelSpec.pa(-0.5, 1.0), 5, lambda: {k: float(v) for k, v in attachment_distribution(5, -0.5, 1.0).items()}),
    ],
    ids=["bst", "mary3", "xbst", "pa", "pa-neg"],
)
def test_cmj_matches_discrete_law(spec, n, law):
    rng = make_rng(41)
    draws = 20_000
    exact = law()
    assert_matches_law([tuple(simulate_cmj(spec, n, rng)[0].parent.tolist()) for _ in range(draws)], exact)
    assert_matches_law([tuple(gen_discrete(spec, n, rng).parent.tolist()) for _ in range(draws)], exact)


def test_simulate_to_time_zero():
    for spec in SPECS:
        assert simulate_to_time(spec, 0.0, 1).node_count == 1


def test_rrt_mean_size_at_time_one():
    forest = grow_forest(ModelSpec.rrt(), np.ones(100_000), make_rng(2))
    sizes = forest.tree_sizes()
    assert abs(sizes.mean() - math.e) < 3 * sizes.std() / math.sqrt(sizes.size)


def test_fixed_horizon_trees():
    for spec in SPECS:
        t = simulate_to_time(spec, 2.0, 7)
        assert np.all(t.birth_time <= 2.0)
        assert np.all(t.birth_time[1:] > t.birth_time[t.parent[1:]])
    for seed in range(30):
        assert simulate_to_time(ModelSpec.xbst(), 1.5, seed).node_count % 2 == 1


def test_forest_tree_extracts_each_root():
    forest = grow_forest(ModelSpec.bst(), [0.0, 2.0, 3.0], make_rng(4))
    sizes = forest.tree_sizes()
    assert [forest_tree(forest, k).node_count for k in range(3)] == sizes.tolist()
    assert sizes[0] == 1


def test_size_guard():
    with pytest.raises(SizeGuardExceeded):
        simulate_to_time(ModelSpec.rrt(), 12.0, 0, max_nodes=1000)
    with pytest.raises(ValueError):
        simulate_to_time(ModelSpec.rrt(), -1.0, 0)


def test_fringe_single_node_probability():
    rng = make_rng(8)
    forest = grow_forest(ModelSpec.rrt(), rng.exponential(size=100_000), rng)
    single = np.mean(forest.tree_sizes() == 1)
    assert abs(single - 0.5) < 4 * 0.5 / math.sqrt(100_000)
    assert sample_fringe_tree(ModelSpec.xbst(), 3).node_count % 2 == 1


def test_forest_essential_matches_tree_recursion():
    from cmjtrees.independence import essential_flags

    forest = grow_forest(ModelSpec.pa(1.0, 1.0), np.full(50, 1.5), make_rng(6))
    roots = forest.root_essential()
    for k in range(50):
        assert bool(essential_flags(forest_tree(forest, k))[0]) == bool(roots[k])


def test_pa_merge_identity():
    # Root rate 2*rho behaves like two independent roots merged.
    base = estimate_root_essential(ModelSpec.pa(1.0, 1.0), 1.0, 100_000, seed=1, threads=1)
    merged = estimate_root_essential(ModelSpec.pa(1.0, 1.0, root_rate_lambda=2.0), 1.0, 100_000, seed=2, threads=1)
    target = base.estimate**2
    se = math.hypot(merged.std_error, 2 * base.estimate * base.std_error)
    assert abs(merged.estimate - target) < 4 * se
