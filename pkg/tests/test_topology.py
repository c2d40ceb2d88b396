import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaybf.topology import CellTopology, NetworkConfig, link_distances, place_nodes, relay_positions


def net(m=2, k=2, radius=750.0, ratio=0.5):
    return NetworkConfig(m, k, 4, 4, 2, radius, ratio, 6)


def test_three_relays_evenly_spaced_on_half_radius():
    pos = relay_positions(net(m=3))
    np.testing.assert_allclose(np.linalg.norm(pos, axis=1), 375.0)
    angles = np.degrees(np.arctan2(pos[:, 1], pos[:, 0])) % 360
    np.testing.assert_allclose(angles, [0.0, 120.0, 240.0], atol=1e-9)


def test_single_relay_on_x_axis():
    np.testing.assert_allclose(relay_positions(net(m=1)), [[375.0, 0.0]], atol=1e-12)


def test_no_relays_allowed():
    topo = place_nodes(net(m=0), np.random.default_rng(0))
    assert topo.rn_positions.shape == (0, 2)
    assert link_distances(topo).rn_ue.shape == (0, 2)


def test_uniform_disc_second_moment():
    r = 750.0
    topo = place_nodes(net(k=10_000, radius=r), np.random.default_rng(1))
    d2 = (topo.ue_positions**2).sum(axis=1)
    assert abs(d2.mean() / (r**2 / 2) - 1) < 0.02
    assert d2.max() <= r**2


def test_three_four_five():
    topo = CellTopology(np.zeros(2), np.zeros((0, 2)), np.array([[300.0, 400.0]]))
    assert link_distances(topo).bs_ue[0] == pytest.approx(500.0)


def test_coincident_nodes_zero_distance():
    topo = CellTopology(np.zeros(2), np.array([[10.0, 20.0]]), np.array([[10.0, 20.0]]))
    assert link_distances(topo).rn_ue[0, 0] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 4))
def test_distances_match_independent_computation(seed, k, m):
    topo = place_nodes(net(m=m, k=k), np.random.default_rng(seed))
    d = link_distances(topo)
    for j, u in enumerate(topo.ue_positions):
        assert d.bs_ue[j] == pytest.approx(np.hypot(*u))
        for i, r in enumerate(topo.rn_positions):
            assert d.rn_ue[i, j] == pytest.approx(np.hypot(*(u - r)))
    assert np.all(d.bs_rn >= 0) and np.allclose(d.bs_rn, 375.0)


def test_same_seed_same_layout():
    a = place_nodes(net(), np.random.default_rng(5))
    b = place_nodes(net(), np.random.default_rng(5))
    np.testing.assert_array_equal(a.ue_positions, b.ue_positions)


@pytest.mark.parametrize(
    "kwargs",
    [dict(num_relays=-1), dict(num_ues=0), dict(n_bs=0), dict(cell_radius=0.0), dict(bs_rn_distance_ratio=1.5), dict(num_subcarriers=0)],
)
def test_invalid_network_rejected(kwargs):
    base = dict(num_relays=2, num_ues=2, n_bs=4, n_rn=4, n_ue=2, cell_radius=750.0, bs_rn_distance_ratio=0.5, num_subcarriers=6)
    base.update(kwargs)
    with pytest.raises(ValueError):
        NetworkConfig(**base)
