import numpy as np
import pytest

from relaybf.channel import (
    LinkKind,
    PathLossModel,
    RadioParams,
    dbm_to_watt,
    draw_channels,
    path_loss_gain,
    watt_to_dbm,
)
from relaybf.topology import CellTopology, NetworkConfig, place_nodes


def test_nlos_at_one_km():
    model = PathLossModel()
    assert model.path_loss_db(1000.0, LinkKind.NLOS) == pytest.approx(131.1)
    assert path_loss_gain(1000.0, LinkKind.NLOS) == pytest.approx(10 ** (-13.11), rel=1e-12)
    assert path_loss_gain(1000.0, LinkKind.NLOS) == pytest.approx(7.76e-14, rel=1e-3)


@pytest.mark.parametrize("d", [10.0, 123.4, 1000.0, 2500.0])
def test_doubling_distance_adds_slope_log2(d):
    model = PathLossModel(los_slope=31.0)
    diff = model.path_loss_db(2 * d, LinkKind.LOS) - model.path_loss_db(d, LinkKind.LOS)
    assert diff == pytest.approx(31.0 * np.log10(2.0), abs=1e-12)


def test_gain_strictly_decreasing():
    d = np.linspace(10.0, 2000.0, 500)
    for kind in LinkKind:
        assert np.all(np.diff(path_loss_gain(d, kind)) < 0)


def test_nonpositive_distance_rejected():
    with pytest.raises(ValueError):
        path_loss_gain(0.0, LinkKind.LOS)


def test_radio_units():
    r = RadioParams(180e3, -174.0, 0.0, 20.0, 10.0)
    assert r.noise_psd == pytest.approx(3.98e-21, rel=1e-3)
    assert r.noise_power == pytest.approx(7.16e-16, rel=1e-3)
    assert r.p_max_bs == pytest.approx(0.1)
    assert r.p_max_rn == pytest.approx(0.01)
    assert r.snr_gap == 1.0
    assert watt_to_dbm(dbm_to_watt(17.5)) == pytest.approx(17.5)


def _fixed_topology():
    return CellTopology(np.zeros(2), np.array([[375.0, 0.0]]), np.array([[0.0, 500.0], [-200.0, 0.0]]))


def _many_draws(n=100_000, seed=3):
    # Subcarrier blocks fade independently, so one wide draw gives n samples of every entry.
    cfg = NetworkConfig(1, 2, 4, 4, 2, 750.0, 0.5, n)
    return draw_channels(_fixed_topology(), cfg, PathLossModel(), np.random.default_rng(seed))


def test_fading_power_matches_path_loss():
    real = _many_draws()
    cases = [
        (real.h_bu[:, 0, 1, 2], path_loss_gain(500.0, LinkKind.NLOS)),
        (real.h_br[:, 0, 3, 0], path_loss_gain(375.0, LinkKind.LOS)),
        (real.h_ru[:, 0, 1, 0, 0], path_loss_gain(np.hypot(575.0, 0.0), LinkKind.NLOS)),
    ]
    for h, expect in cases:
        assert np.mean(np.abs(h) ** 2) / expect == pytest.approx(1.0, abs=0.02)


def test_entries_uncorrelated():
    real = _many_draws(seed=4)
    x = real.h_bu[:, 1].reshape(real.num_subcarriers, -1)
    for j in range(1, x.shape[1]):
        a, b = x[:, 0], x[:, j]
        rho = np.vdot(a, b) / np.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
        assert abs(rho) < 0.02


def test_draws_are_full_rank_and_shaped():
    cfg = NetworkConfig(2, 3, 4, 4, 2, 750.0, 0.5, 6)
    rng = np.random.default_rng(5)
    real = draw_channels(place_nodes(cfg, rng), cfg, PathLossModel(), rng)
    assert real.h_bu.shape == (6, 3, 2, 4)
    assert real.h_br.shape == (6, 2, 4, 4)
    assert real.h_ru.shape == (6, 2, 3, 2, 4)
    assert real.is_full_rank()


def test_min_distance_clamps_gain():
    cfg = NetworkConfig(1, 1, 4, 4, 2, 750.0, 0.5, 1)
    topo = CellTopology(np.zeros(2), np.array([[375.0, 0.0]]), np.array([[375.0, 0.0]]))
    real = draw_channels(topo, cfg, PathLossModel(), np.random.default_rng(0))
    assert np.all(np.isfinite(real.h_ru))
