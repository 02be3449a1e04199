import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slingbag.model import (
    A0_MIN,
    GaussianSource,
    Medium,
    PointCloud,
    SensorArray,
    SignalSet,
    VoxelGrid,
    make_hemispherical_array,
    make_planar_array,
    undersample_planar,
)


def test_medium_rejects_nonpositive_speed():
    with pytest.raises(ValueError):
        Medium(0.0)
    with pytest.raises(ValueError):
        Medium(-1500.0)


def test_gaussian_source_validation():
    GaussianSource(1.0, A0_MIN, (0, 0, 0))
    with pytest.raises(ValueError):
        GaussianSource(1.0, 0.0, (0, 0, 0))
    with pytest.raises(ValueError):
        GaussianSource(np.nan, A0_MIN, (0, 0, 0))
    with pytest.raises(ValueError):
        GaussianSource(1.0, 1e-4, (0, 0))


def test_point_cloud_roundtrip_through_sources():
    srcs = [GaussianSource(0.5, 1e-4, (1e-3, 2e-3, 3e-3)),
            GaussianSource(1.0, 2e-4, (0.0, 0.0, 20e-3))]
    cloud = PointCloud.from_sources(srcs)
    assert len(cloud) == 2 and cloud.grads.shape == (2, 5)
    assert cloud.sources == srcs
    np.testing.assert_array_equal(cloud.params[:, 3], [0.5, 1.0])


def test_point_cloud_take_carries_grads_and_state():
    cloud = PointCloud(np.arange(9.0).reshape(3, 3), [1, 2, 3], [1e-4, 2e-4, 3e-4])
    cloud.grads[:] = np.arange(15.0).reshape(3, 5)
    cloud.state["m"] = np.array([10.0, 20.0, 30.0])
    sub = cloud.take([2, 0, 2])
    np.testing.assert_array_equal(sub.p0, [3, 1, 3])
    np.testing.assert_array_equal(sub.grads[0], cloud.grads[2])
    np.testing.assert_array_equal(sub.state["m"], [30, 10, 30])
    sub.p0[0] = -1
    assert cloud.p0[2] == 3


def test_point_cloud_state_length_checked():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((2, 3)), [1, 1], [1e-4, 1e-4], state={"m": np.zeros(3)})


def test_sensor_array_invariants():
    with pytest.raises(ValueError):
        SensorArray(np.zeros((0, 3)), 40e6, 100)
    with pytest.raises(ValueError):
        SensorArray([[0, 0, np.nan]], 40e6, 100)
    with pytest.raises(ValueError):
        SensorArray([[0, 0, 0]], 0.0, 100)
    with pytest.raises(ValueError):
        SensorArray([[0, 0, 0]], 40e6, 1)
    arr = SensorArray([[0, 0, 0]], 40e6, 4, t_start=1e-6)
    np.testing.assert_allclose(arr.times, 1e-6 + np.arange(4) * 25e-9)


def test_signal_set_matches_array(small_array):
    sig = SignalSet(np.zeros((9, 1024)), 40e6)
    sig.check_matches(small_array)
    with pytest.raises(ValueError):
        SignalSet(np.zeros((9, 100)), 40e6).check_matches(small_array)
    with pytest.raises(ValueError):
        SignalSet(np.zeros((9, 1024)), 20e6).check_matches(small_array)


def test_voxel_grid_invariants():
    VoxelGrid((0, 0, 0), 1e-3, np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        VoxelGrid((0, 0, 0), 0.0, np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        VoxelGrid((0, 0, 0), 1e-3, -np.ones((2, 2, 2)))
    with pytest.raises(ValueError):
        VoxelGrid((0, 0, 0), 1e-3, np.full((2, 2, 2), np.inf))


def test_planar_full_scale_configuration():
    arr = make_planar_array(350, 350, 0.4e-3)
    assert arr.n_sensors == 122_500
    span = arr.positions.max(axis=0) - arr.positions.min(axis=0)
    np.testing.assert_allclose(span[:2], 139.6e-3, rtol=1e-12)
    assert span[2] == 0.0


def test_planar_single_sensor_at_center():
    arr = make_planar_array(1, 1, 5e-3, center=(1e-3, 2e-3, 3e-3))
    np.testing.assert_array_equal(arr.positions, [[1e-3, 2e-3, 3e-3]])


def test_planar_sparsest_configuration():
    arr = make_planar_array(7, 7, 20e-3)
    assert arr.n_sensors == 49


@pytest.mark.parametrize("axis,plane_dim", [("x", 0), ("y", 1), ("z", 2)])
def test_planar_normal_axis(axis, plane_dim):
    arr = make_planar_array(3, 4, 1e-3, center=(1.0, 2.0, 3.0), normal_axis=axis)
    np.testing.assert_allclose(arr.positions[:, plane_dim], [1.0, 2.0, 3.0][plane_dim])
    np.testing.assert_allclose(arr.positions.mean(axis=0), [1.0, 2.0, 3.0], atol=1e-15)


def test_planar_rejects_bad_pitch():
    with pytest.raises(ValueError):
        make_planar_array(2, 2, 0.0)
    with pytest.raises(ValueError):
        make_planar_array(0, 2, 1e-3)


@pytest.mark.parametrize("stride,n,pitch", [(50, 7, 20e-3), (5, 70, 2e-3), (35, 10, 14e-3)])
def test_undersample_reference_configurations(stride, n, pitch):
    sub = undersample_planar(make_planar_array(350, 350, 0.4e-3), stride)
    assert sub.n_sensors == n * n
    assert sub.pitch == pytest.approx(pitch)
    d = np.diff(sub.positions.reshape(n, n, 3)[:, 0, 0])
    np.testing.assert_allclose(d, pitch, rtol=1e-9)


def test_undersample_576_configuration():
    # 24 x 24 kept columns come from a stride that does not divide 350
    sub = undersample_planar(make_planar_array(350, 350, 0.4e-3), 15)
    assert sub.n_sensors == 576
    assert sub.pitch == pytest.approx(6e-3)


def test_undersample_identity():
    arr = make_planar_array(6, 4, 1e-3)
    sub = undersample_planar(arr, 1)
    np.testing.assert_array_equal(sub.positions, arr.positions)


def test_undersample_errors():
    arr = make_planar_array(4, 4, 1e-3)
    with pytest.raises(ValueError):
        undersample_planar(arr, 4)
    with pytest.raises(ValueError):
        undersample_planar(arr, 0)
    with pytest.raises(ValueError):
        undersample_planar(SensorArray(arr.positions, 40e6, 16), 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(6, 30))
def test_undersample_composes(s1, s2, n):
    arr = make_planar_array(n, n, 1e-3)
    if s1 * s2 >= n and s1 * s2 > 1:
        return
    twice = undersample_planar(undersample_planar(arr, s1), s2)
    once = undersample_planar(arr, s1 * s2)
    a = {tuple(np.round(p, 12)) for p in twice.positions}
    b = {tuple(np.round(p, 12)) for p in once.positions}
    assert a == b


def test_hemisphere_1024_radius():
    arr = make_hemispherical_array(1024, 60e-3, center=(1e-3, 0, 5e-3))
    d = np.linalg.norm(arr.positions - [1e-3, 0, 5e-3], axis=1)
    assert arr.n_sensors == 1024
    assert np.max(np.abs(d - 60e-3)) <= 1e-9


def test_hemisphere_single_sensor_at_pole():
    arr = make_hemispherical_array(1, 60e-3)
    np.testing.assert_allclose(arr.positions, [[0, 0, -60e-3]], atol=1e-15)


def test_hemisphere_256_distinct_and_on_sphere():
    arr = make_hemispherical_array(256, 60e-3)
    p = arr.positions
    d = np.linalg.norm(p[:, None] - p[None], axis=2)
    d[np.diag_indices(256)] = np.inf
    assert d.min() > 0
    np.testing.assert_allclose(np.linalg.norm(p, axis=1), 60e-3, atol=1e-12)
    # lower hemisphere around the default pole
    assert np.all(p[:, 2] <= 1e-15)


def test_hemisphere_deterministic_and_custom_pole():
    a = make_hemispherical_array(100, 0.05, pole=(1, 0, 0))
    b = make_hemispherical_array(100, 0.05, pole=(1, 0, 0))
    np.testing.assert_array_equal(a.positions, b.positions)
    assert np.all(a.positions[:, 0] >= -1e-15)
    np.testing.assert_allclose(a.normals, -a.positions / 0.05, atol=1e-12)
