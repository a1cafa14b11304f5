import numpy as np
import pytest
from hypothesis import given, strategies as st

from himap.barycenter import AffineWeights, barycenter_cloud, barycenter_map
from himap.cloud import PointCloud
from himap.errors import DomainError, WeightError
from himap.quantile_map import QuantileMap


@pytest.fixture
def maps(rng):
    return [QuantileMap.fit(rng.normal(loc=i, size=(128, 2)), 7) for i in range(3)]


def test_weights_validation():
    w = AffineWeights([1.5, -0.5])
    assert w.total == 1.0 and len(w) == 2
    with pytest.raises(ValueError):
        w.lambdas[0] = 2.0
    for bad in ([], [1.0, -1.0], [-1.0], [np.inf, 1.0], [np.nan]):
        with pytest.raises(WeightError):
            AffineWeights(bad)


def test_one_hot_recovers_input(maps):
    for i, m in enumerate(maps):
        w = np.eye(3)[i]
        np.testing.assert_array_equal(barycenter_map(maps, w).values, m.sample_grid().values)


@given(st.floats(1e-3, 1e3))
def test_scale_invariance(c):
    rng = np.random.default_rng(5)
    ms = [QuantileMap.fit(rng.normal(size=(64, 2)), 6) for _ in range(2)]
    w = np.array([0.3, 0.9])
    np.testing.assert_allclose(barycenter_map(ms, c * w).values, barycenter_map(ms, w).values,
                               rtol=0, atol=1e-12)


def test_extrapolation_of_translated_copies(rng):
    base = PointCloud(rng.normal(size=(256, 2)))
    shift = np.array([2.0, -1.0])
    a = QuantileMap.fit(base, 8)
    b = QuantileMap.fit(base.affine(1.0, shift), 8)
    out = barycenter_map([a, b], [1.5, -0.5]).values
    np.testing.assert_allclose(out, a.sample_grid().values - 0.5 * shift, rtol=0, atol=1e-9)


def test_grid_inputs_and_errors(maps):
    grids = [m.sample_grid(32) for m in maps]
    np.testing.assert_array_equal(barycenter_map(grids, [1, 1, 1]).values,
                                  barycenter_map(maps, [1, 1, 1], 32).values)
    with pytest.raises(DomainError):
        barycenter_map(maps, [1, 1])
    with pytest.raises(DomainError):
        barycenter_map(grids, [1, 1, 1], 64)
    other = QuantileMap.fit(np.zeros((4, 3)))
    with pytest.raises(DomainError):
        barycenter_map([maps[0], other], [1, 1])


def test_cloud_output(maps):
    cloud = barycenter_cloud(maps, [1, 1, 1], 50)
    assert isinstance(cloud, PointCloud) and cloud.n == 50
