import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from himap.cloud import PointCloud
from himap.errors import ConfigError, DataError, DomainError
from himap.hilbert_address import CellAddress
from himap.mass_tree import MAX_DEPTH, HimapTree, build_tree, default_depth, node_at, select_median


def test_small_line_example():
    tree = build_tree([4.0, 1.0, 3.0, 2.0], depth=2)
    assert tree.n_nodes == 7
    assert tree.cut[:3].tolist() == [2.0, 1.0, 3.0]
    assert tree.size.tolist() == [4, 2, 2, 1, 1, 1, 1]
    assert sorted(tree.index_set(1).tolist()) == [1, 3]


def test_default_depth():
    assert [default_depth(n) for n in (1, 2, 3, 4, 1000, 1024)] == [1, 1, 1, 2, 9, 10]
    assert default_depth(2**40) == 30
    with pytest.raises(DataError):
        default_depth(0)


def test_select_median():
    assert select_median([5, 1, 4, 2]) == 2.0
    assert select_median([5, 1, 4, 2], take_lower=False) == 4.0
    assert select_median([3, 1, 2]) == 2.0
    with pytest.raises(DataError):
        select_median([])


@pytest.mark.parametrize("depth", [0, -1, MAX_DEPTH + 1, 2.5, True])
def test_invalid_depth(depth):
    with pytest.raises(ConfigError):
        build_tree(np.zeros((4, 2)), depth)


def test_rejects_bad_clouds():
    with pytest.raises(DataError):
        build_tree(np.empty((0, 2)))
    with pytest.raises(DataError):
        build_tree([[0.0, np.nan]])


clouds = st.integers(1, 3).flatmap(
    lambda d: arrays(np.float64, st.tuples(st.integers(1, 60), st.just(d)),
                     elements=st.sampled_from([-1.0, 0.0, 0.5, 1.0, 2.0]) | st.floats(-5, 5))
)


@given(clouds, st.integers(1, 8))
def test_structure_invariants(pts, depth):
    tree = build_tree(pts, depth)
    inner = tree.internal_nodes()
    lo = tree.lower[inner]
    assert np.all(tree.size[lo] - tree.size[lo + 1] >= 0)
    assert np.all(tree.size[lo] - tree.size[lo + 1] <= 1)
    assert np.all(tree.size[lo] + tree.size[lo + 1] == tree.size[inner])
    for v in inner:
        a, c = tree.axis[v], tree.cut[v]
        below = pts[tree.index_set(tree.lower[v]), a]
        above = pts[tree.index_set(tree.lower[v] + 1), a]
        assert np.all(below <= c) and np.all(above >= c)
        assert c in below
    leaves = np.flatnonzero(tree.lower < 0)
    assert np.sort(np.concatenate([tree.index_set(v) for v in leaves])).tolist() == list(range(len(pts)))
    assert np.all(tree.node_depth[leaves] <= depth)


@given(clouds, st.integers(1, 6))
def test_matches_recursive_reference(pts, depth):
    from himap.quantile_map import QuantileMap
    from reference import reference_table

    np.testing.assert_array_equal(QuantileMap(build_tree(pts, depth)).cell_values(),
                                  reference_table(pts, depth))


def test_boxes_nest_and_contain_their_points(rng):
    pts = rng.normal(size=(300, 3))
    tree = build_tree(pts, 7)
    for v in range(tree.n_nodes):
        box = tree.box(v)
        sub = pts[tree.index_set(v)]
        assert np.all(sub >= box[:, 0]) and np.all(sub <= box[:, 1])
        p = tree.parent[v]
        if p >= 0:
            pb = tree.box(p)
            assert np.all(box[:, 0] >= pb[:, 0]) and np.all(box[:, 1] <= pb[:, 1])


def test_node_view_and_address_lookup(rng):
    tree = build_tree(rng.normal(size=(64, 2)), 6)
    root = tree.root
    assert root.depth == 0 and root.size == 64 and root.children == (1, 2)
    node = node_at(tree, CellAddress((1, 0, 1)))
    assert node.depth == 3 and node.size == 8
    first = node_at(tree, (0, 0, 0, 0, 0, 0))
    assert first.is_leaf and first.size == 1
    with pytest.raises(DomainError):
        node_at(tree, (0,) * 7)
    with pytest.raises(DomainError):
        tree.node(tree.n_nodes)


def test_early_leaves_keep_their_point():
    pts = np.array([[0.0, 0.0], [1.0, 3.0], [2.0, 1.0]])
    tree = build_tree(pts, 4)
    singles = np.flatnonzero((tree.size == 1) & (tree.node_depth < 4))
    assert singles.size == 3
    for v in singles:
        assert tree.leaf_points[tree.leaf_row[v]].tolist() == pts[tree.index_set(v)[0]].tolist()


def test_dict_round_trip(rng):
    tree = build_tree(rng.normal(size=(37, 3)), 6)
    again = HimapTree.from_dict(tree.to_dict())
    for name in ("parent", "node_depth", "size", "axis", "reversed", "lower", "leaf_row"):
        np.testing.assert_array_equal(getattr(tree, name), getattr(again, name))
    np.testing.assert_array_equal(tree.cut, again.cut)
    np.testing.assert_array_equal(tree.leaf_points, again.leaf_points)
    assert again.to_dict() == tree.to_dict()
    with pytest.raises(DataError):
        again.index_set(0)
    with pytest.raises(DataError):
        HimapTree.from_dict({"format": "other"})


def test_translation_and_scaling_commute_with_cuts(rng):
    cloud = PointCloud(rng.normal(size=(200, 2)))
    a, b = np.array([2.0, 0.5]), np.array([-1.0, 3.0])
    t1, t2 = build_tree(cloud, 7), build_tree(cloud.affine(a, b), 7)
    inner = t1.internal_nodes()
    np.testing.assert_array_equal(t1.axis, t2.axis)
    np.testing.assert_allclose(t2.cut[inner], a[t1.axis[inner]] * t1.cut[inner] + b[t1.axis[inner]],
                               rtol=0, atol=1e-12)
