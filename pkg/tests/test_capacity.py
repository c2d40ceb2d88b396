import numpy as np
import pytest

from relaybf.beamform import CnrSet
from relaybf.capacity import (
    PowerAllocation,
    batch_capacity,
    equal_power_allocation,
    evaluate_group,
    group_capacity,
    group_structure,
    select_group,
    stream_rate,
)
from relaybf.channel import RadioParams
from relaybf.beamform import group_gains
from relaybf.decompose import BS, Smc, SmcKind, SmcPair, decompose
from relaybf.grouping import CandidateTable, GroupingParams, SmcGroup, esga, ocga, pad_groups

from oracles import random_realization

RADIO = RadioParams(180e3, -174.0, 0.0, 20.0, 10.0)
W = RADIO.bandwidth_hz


def smc(i, kind, tx, rx):
    phase = 1 if kind in (SmcKind.BU_T1, SmcKind.BR_T1) else 2
    row = np.eye(4, dtype=complex)[i % 4]
    active = frozenset({BS, 0}) if phase == 2 else None
    rows = {BS: row, 0: row} if phase == 2 else None
    return Smc(i, 0, phase, kind, tx, rx, row, 1.0, np.ones(2), active, rows)


def test_two_phase1_streams_power():
    g = SmcGroup.of([smc(0, SmcKind.BU_T1, BS, 0), smc(1, SmcKind.BU_T1, BS, 1)])
    p = equal_power_allocation(g, RADIO, 6)
    assert p.get(0) == pytest.approx(0.1 / 6 / 2)
    assert p.get(0) == pytest.approx(8.33e-3, rel=1e-3)
    assert p.p_ru_t2 == {} and p.p_br_t1 == {}


def test_single_stream_per_node_full_budget():
    pair = SmcPair(2, 0, smc(0, SmcKind.BR_T1, BS, 0), smc(1, SmcKind.RU_T2, 0, 0))
    g = SmcGroup.of([pair, smc(3, SmcKind.BU_T2, BS, 1)])
    p = equal_power_allocation(g, RADIO, 6)
    assert p.get(0) == pytest.approx(0.1 / 6)
    assert p.get(1) == pytest.approx(0.01 / 6)
    assert p.get(3) == pytest.approx(0.1 / 6)


def test_stream_rate_examples():
    assert stream_rate(0.0, 5.0, W) == 0.0
    assert stream_rate(1.0, 1.0, W) == pytest.approx(180e3)
    assert stream_rate(1.0, 3.0, W) == pytest.approx(2 * stream_rate(1.0, 1.0, W))
    with pytest.raises(ValueError):
        stream_rate(-1.0, 1.0, W)


def test_empty_group_zero():
    assert group_capacity(SmcGroup(()), PowerAllocation(), CnrSet({}, {}, {}, {}), RADIO).total == 0.0


def test_relay_pair_half_min():
    pair = SmcPair(2, 0, smc(0, SmcKind.BR_T1, BS, 0), smc(1, SmcKind.RU_T2, 0, 0))
    g = SmcGroup.of([pair])
    # Choose p*g so hop rates are exactly 10 and 4 Mbit/s.
    g1 = 2 ** (10e6 / W) - 1
    g2 = 2 ** (4e6 / W) - 1
    powers = PowerAllocation(p_br_t1={0: 1.0}, p_ru_t2={1: 1.0})
    rep = group_capacity(g, powers, CnrSet({}, {0: g1}, {}, {1: g2}), RADIO)
    assert rep.total == pytest.approx(2e6)
    assert rep.bottleneck == {2: "second"}


def test_direct_stream_half_rate():
    g = SmcGroup.of([smc(0, SmcKind.BU_T1, BS, 0)])
    rep = group_capacity(g, PowerAllocation(p_bu_t1={0: 2.0}), CnrSet({0: 1.5}, {}, {}, {}), RADIO)
    assert rep.total == pytest.approx(0.5 * W * np.log2(4.0))


def _real_groups(seed):
    cands = decompose(random_realization(np.random.default_rng(seed))).candidates(0)
    return cands, GroupingParams(0.3, 4, 4, 2, 2, 2)


def test_select_singleton_and_best():
    cands, params = _real_groups(0)
    groups = ocga(cands, params)
    rng = np.random.default_rng(0)
    for policy in ("best", "random"):
        assert select_group(groups[:1], policy, radio=RADIO, num_subcarriers=6, rng=rng) == groups[0]
    best = select_group(groups, "best", radio=RADIO, num_subcarriers=6)
    caps = [evaluate_group(g, RADIO, 6).total for g in groups]
    assert evaluate_group(best, RADIO, 6).total == max(caps)
    with pytest.raises(ValueError):
        select_group([], "best", radio=RADIO)


def test_best_ocga_not_above_best_esga():
    for seed in range(3):
        cands, params = _real_groups(seed)
        best_o = evaluate_group(select_group(ocga(cands, params), "best", radio=RADIO, num_subcarriers=6), RADIO, 6)
        best_e = evaluate_group(select_group(esga(cands, params), "best", radio=RADIO, num_subcarriers=6), RADIO, 6)
        assert best_o.total <= best_e.total * (1 + 1e-12)


def test_batch_capacity_matches_object_path():
    cands, params = _real_groups(4)
    table = CandidateTable(cands, params)
    groups = esga(cands, params)
    index = {c.id: i for i, c in enumerate(cands)}
    rows = pad_groups([tuple(index[c.id] for c in g.members) for g in groups])
    gains, ok = group_gains(table, rows)
    for radio in (RADIO, RADIO.with_powers(35.0, 30.0)):
        fast = batch_capacity(group_structure(table, rows), gains, radio, 6)
        for i in np.flatnonzero(ok)[::7]:
            assert fast[i] == pytest.approx(evaluate_group(groups[i], radio, 6).total, rel=1e-9)
