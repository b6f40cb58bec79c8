import io

import numpy as np
import pytest
from hypothesis import given

from cmjtrees.tree import (
    RootedTree,
    complete_binary_tree,
    dumps_birth_times,
    dumps_tree,
    loads_birth_times,
    loads_tree,
    path_tree,
    read_birth_times,
    read_tree,
    star_tree,
    write_birth_times,
    write_tree,
)

from .conftest import random_trees


def test_single_node():
    t = RootedTree([-1])
    assert t.node_count == 1
    assert t.root == 0
    assert t.children(0).size == 0
    assert list(t.edges()) == []


def test_children_follow_index_order():
    t = RootedTree([-1, 0, 0, 1, 0])
    assert t.children(0).tolist() == [1, 2, 4]
    assert t.children(1).tolist() == [3]
    assert t.outdegree().tolist() == [3, 1, 0, 0, 0]


def test_from_children_keeps_given_order():
    t = RootedTree.from_children([[2, 1], [], []])
    assert t.children(0).tolist() == [2, 1]
    assert t.parent.tolist() == [-1, 0, 0]


def test_root_need_not_be_zero():
    t = RootedTree([2, 2, -1])
    assert t.root == 2
    order = t.topological_order().tolist()
    assert order[0] == 2 and sorted(order) == [0, 1, 2]
    assert t.depth().tolist() == [1, 1, 0]


@pytest.mark.parametrize(
    "parent",
    [
        [],
        [0],  # self loop, no root
        [-1, -1],  # two roots
        [-1, 5],  # out of range
        [-1, -2],
        [-1, 2, 3, 1],  # cycle 1 -> 2 -> 3 -> 1 detached from root
    ],
)
def test_invalid_parent_arrays_rejected(parent):
    with pytest.raises(ValueError):
        RootedTree(parent)


def test_birth_time_length_checked():
    with pytest.raises(ValueError):
        RootedTree([-1, 0], birth_time=[0.0])


def test_parent_array_is_read_only():
    t = path_tree(3)
    with pytest.raises(ValueError):
        t.parent[1] = 2


def test_helpers():
    assert path_tree(4).depth().tolist() == [0, 1, 2, 3]
    assert star_tree(3).outdegree().tolist() == [3, 0, 0, 0]
    cb = complete_binary_tree(2)
    assert cb.node_count == 7
    assert cb.outdegree().tolist() == [2, 2, 2, 0, 0, 0, 0]


def test_deep_path_is_fine():
    t = path_tree(200_000)
    assert t.depth()[-1] == 199_999


def test_serialization_format():
    text = dumps_tree(RootedTree([-1, 0, 0, 1]))
    assert text == "4\n-1\n0\n0\n1\n"


@given(random_trees(max_size=40))
def test_serialization_round_trip(tree):
    back = loads_tree(dumps_tree(tree))
    assert np.array_equal(back.parent, tree.parent)
    assert dumps_tree(back) == dumps_tree(tree)


def test_file_round_trip(tmp_path):
    t = complete_binary_tree(3)
    path = tmp_path / "t.txt"
    write_tree(t, path)
    assert read_tree(path) == t
    buf = io.StringIO()
    write_tree(t, buf)
    buf.seek(0)
    assert read_tree(buf) == t


def test_truncated_file_rejected():
    with pytest.raises(ValueError):
        loads_tree("3\n-1\n0\n")
    with pytest.raises(ValueError):
        loads_tree("")


def test_birth_times_round_trip_bit_exact(tmp_path):
    values = np.random.default_rng(3).exponential(size=50).cumsum()
    values[3] = 1 / 3
    assert np.array_equal(loads_birth_times(dumps_birth_times(values)), values)
    path = tmp_path / "b.txt"
    write_birth_times(values, path)
    assert read_birth_times(path).tobytes() == values.tobytes()


def test_equality_and_hash():
    a = RootedTree([-1, 0, 0])
    b = RootedTree([-1, 0, 0])
    c = RootedTree.from_children([[2, 1], [], []])
    assert a == b and hash(a) == hash(b)
    assert a != c  # same parents, different child order
