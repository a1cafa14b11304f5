import numpy as np
import pytest

from himap.cloud import PointCloud
from himap.errors import DataError
from himap.io import (
    read_cloud,
    read_grid,
    read_json,
    read_manifest,
    read_tree,
    write_cloud,
    write_grid,
    write_manifest,
    write_tree,
)
from himap.mass_tree import build_tree
from himap.quantile_map import QuantileMap


def test_cloud_round_trip_is_exact(tmp_path, rng):
    cloud = PointCloud(rng.normal(size=(50, 3)) * 1e-7 + np.pi)
    write_cloud(tmp_path / "c.csv", cloud)
    assert read_cloud(tmp_path / "c.csv") == cloud
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "x1,x2,x3"
    assert b"\r" not in (tmp_path / "c.csv").read_bytes()


def test_grid_round_trip_is_exact(tmp_path, rng):
    grid = QuantileMap.fit(rng.normal(size=(100, 2))).sample_grid(40)
    write_grid(tmp_path / "g.csv", grid)
    back = read_grid(tmp_path / "g.csv")
    np.testing.assert_array_equal(back.levels, grid.levels)
    np.testing.assert_array_equal(back.values, grid.values)


def test_tree_round_trip_preserves_the_map(tmp_path, rng):
    tree = build_tree(rng.normal(size=(77, 2)))
    write_tree(tmp_path / "t.json", tree)
    again = QuantileMap(read_tree(tmp_path / "t.json"))
    np.testing.assert_array_equal(again.cell_values(), QuantileMap(tree).cell_values())


def test_manifest_round_trip(tmp_path, rng):
    clouds = [PointCloud(rng.normal(size=(5, 2))) for _ in range(2)]
    for i, c in enumerate(clouds):
        write_cloud(tmp_path / f"m{i}.csv", c)
    write_manifest(tmp_path / "manifest.json", [(0, "m0.csv"), (1, "m1.csv")], {"seed": 3}, X=[0.0, 1.0])
    obj = read_manifest(tmp_path / "manifest.json")
    assert obj["clouds"] == clouds and obj["X"] == [0.0, 1.0] and obj["params"] == {"seed": 3}


@pytest.mark.parametrize("text", ["", "x1,x2\n", "x1,x2\n1,2\n3\n", "x1,x2\n1,a\n", "y1\n1\n", "x1\nnan\n"])
def test_bad_cloud_files(tmp_path, text):
    (tmp_path / "bad.csv").write_text(text)
    with pytest.raises(DataError):
        read_cloud(tmp_path / "bad.csv")


def test_bad_json_and_missing_files(tmp_path):
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(DataError):
        read_json(tmp_path / "bad.json")
    with pytest.raises(DataError):
        read_cloud(tmp_path / "missing.csv")
    (tmp_path / "tree.json").write_text('{"format": "himap-tree", "dim": 2}')
    with pytest.raises(DataError):
        read_tree(tmp_path / "tree.json")
    (tmp_path / "grid.csv").write_text("x1,x2\n1,2\n")
    with pytest.raises(DataError):
        read_grid(tmp_path / "grid.csv")
