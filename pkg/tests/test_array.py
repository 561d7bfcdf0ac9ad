import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from dpbeam.array import (ArrayGeometry, RegionPartition, az_section_centers, build_dictionaries,
                          el_section_centers, region_transform, steering_paired, steering_unpaired)
from dpbeam.design import mip_single, pattern_single

from conftest import unit

angles = st.floats(-10, 10, allow_nan=False)


def test_geometry_ports():
    assert ArrayGeometry(4, 8).port_count() == 64
    assert ArrayGeometry(4, 8, dual=False).port_count() == 32
    assert ArrayGeometry(4, 8).single().port_count() == 32
    with pytest.raises(ValueError):
        ArrayGeometry(0, 4)


def test_partition_counts():
    part = RegionPartition(6, 6, 7, 7)
    assert part.region_count == 36
    assert part.section_count == 49
    assert list(part.regions())[:2] == [(1, 1), (1, 2)]
    with pytest.raises(IndexError):
        part.check_region(7, 1)


def test_region_bounds_tile_coverage():
    part = RegionPartition(3, 2)
    (a0, a1), (e0, e1) = part.bounds(1, 1)
    assert_allclose([a0, a1], [-np.pi, -np.pi + 2 * np.pi / 3])
    assert_allclose([e0, e1], [-np.pi / np.sqrt(2), 0.0], atol=1e-15)
    assert part.locate(0.0, 0.1) == (2, 2)
    assert part.contains(2, 2, 0.0, 0.1)


@pytest.mark.parametrize("psi, m, want", [
    (0.0, 4, np.ones(4) / 2),
    (np.pi, 2, np.array([1, -1]) / np.sqrt(2)),
    (np.pi / 2, 4, np.array([1, 1j, -1, -1j]) / 2),
])
def test_steering_unpaired_examples(psi, m, want):
    assert_allclose(steering_unpaired(psi, m), want, atol=1e-15)


@given(angles, st.integers(1, 16))
def test_steering_unit_norm_and_periodic(psi, m):
    a = steering_unpaired(psi, m)
    assert abs(np.linalg.norm(a) - 1) < 1e-12
    assert_allclose(steering_unpaired(psi + 2 * np.pi, m), a, atol=1e-12)


@pytest.mark.parametrize("az, el, mh, mv, want", [
    (0.0, 0.0, 2, 2, np.ones(4) / 2),
    (np.pi / 2, 0.0, 2, 1, np.array([1, -1]) / np.sqrt(2)),
    (0.0, np.pi / 2, 1, 2, np.array([1, -1]) / np.sqrt(2)),
])
def test_steering_paired_examples(az, el, mh, mv, want):
    assert_allclose(steering_paired(az, el, ArrayGeometry(mh, mv)), want, atol=1e-15)


@given(st.floats(-np.pi / 2, np.pi / 2))
def test_paired_matches_unpaired_at_zero_elevation(az):
    geom = ArrayGeometry(3, 4)
    want = np.kron(steering_unpaired(np.pi * np.sin(az), 3), steering_unpaired(0.0, 4))
    assert_allclose(steering_paired(az, 0.0, geom), want, atol=1e-12)


def test_dictionary_single_section():
    dic = build_dictionaries(ArrayGeometry(2, 1), RegionPartition(1, 1, 1, 1))
    assert_allclose(dic.d_h[:, 0], steering_unpaired(0.0, 2), atol=1e-15)


def test_dictionary_centers_hand_evaluated():
    # four sections over [-pi, pi): centers at odd multiples of pi/4
    centers = az_section_centers(RegionPartition(2, 1, 2, 1))
    assert_allclose(centers, np.pi * np.array([-0.75, -0.25, 0.25, 0.75]))
    dic = build_dictionaries(ArrayGeometry(4, 1), RegionPartition(2, 1, 2, 1))
    for k, psi in enumerate(centers):
        assert_allclose(dic.d_h[:, k], steering_unpaired(psi, 4), atol=1e-15)


def test_elevation_centers_span():
    c = el_section_centers(RegionPartition(1, 2, 1, 2))
    step = 2 * np.pi / (np.sqrt(2) * 4)
    assert_allclose(c, -np.pi / np.sqrt(2) + step / 2 + step * np.arange(4))


def test_dictionary_structure():
    geom, part = ArrayGeometry(4, 8), RegionPartition(4, 4, 3, 2)
    dic = build_dictionaries(geom, part)
    assert dic.d_h.shape == (4, 12) and dic.d_v.shape == (8, 8)
    assert_allclose(np.linalg.norm(dic.d_h, axis=0), 1)
    assert_allclose(np.linalg.norm(dic.d_v, axis=0), 1)
    e = np.zeros((4, 1))
    e[2] = 1
    assert_allclose(dic.d_h_p(3), dic.d_h @ np.kron(e, np.eye(3)))
    assert_allclose(dic.d_pq(2, 3), np.kron(dic.d_h_p(2), dic.d_v_q(3)))
    assert_allclose(dic.d[:, part.section_index(2, 3)], dic.d_pq(2, 3))


@pytest.mark.parametrize("m, l", [(4, 4), (4, 7), (8, 8), (5, 11)])
def test_full_circle_grid_is_tight_frame(m, l):
    dic = build_dictionaries(ArrayGeometry(m, 1), RegionPartition(1, 1, l, 1))
    assert_allclose(dic.d_h @ dic.d_h.conj().T, l / m * np.eye(m), atol=1e-10)


def test_region_transform_identity_and_ramp():
    geom, part = ArrayGeometry(4, 1), RegionPartition(2, 1)
    c = np.ones(4) / 2
    assert_allclose(region_transform(c, 1, 1, geom, part), c)
    assert_allclose(region_transform(c, 2, 1, geom, part), np.exp(1j * np.pi * np.arange(4)) / 2, atol=1e-15)
    with pytest.raises(IndexError):
        region_transform(c, 3, 1, geom, part)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_region_transform_preserves_norm(seed):
    geom, part = ArrayGeometry(4, 8), RegionPartition(4, 4)
    c = unit(np.random.default_rng(seed), 32)
    for p, q in [(1, 1), (2, 3), (4, 4)]:
        assert abs(np.linalg.norm(region_transform(c, p, q, geom, part)) - 1) < 1e-12


def test_region_transform_moves_pattern_peak(small_dic):
    base = mip_single(small_dic, 1, 1)
    part = small_dic.part
    for p, q in part.regions():
        c = region_transform(base, p, q, small_dic.geom, part)
        assert int(np.argmax(pattern_single(c, small_dic))) in set(part.section_index(p, q))
