"""Equal power allocation, stream rates and two-phase group capacity.

Each subcarrier block gets ``1/N`` of every node's power budget. Within a
phase the BS splits its share equally over the streams it sends; in phase 2
each relay splits its share over its own streams. A transmission period has
two equal halves, hence the factor 1/2 on every rate, and a relayed stream
carries the smaller of its two hop rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .beamform import GroupRejected, beamform, effective_cnrs
from .channel import RadioParams
from .decompose import BS, SmcKind
from .grouping import CandidateTable, SmcGroup


@dataclass
class PowerAllocation:
    """Transmit power per stream in watts, keyed by SMC id."""

    p_bu_t1: dict = field(default_factory=dict)
    p_br_t1: dict = field(default_factory=dict)
    p_bu_t2: dict = field(default_factory=dict)
    p_ru_t2: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)  # (phase, transmitter) -> watts

    def get(self, smc_id: int) -> float:
        for d in (self.p_bu_t1, self.p_br_t1, self.p_bu_t2, self.p_ru_t2):
            if smc_id in d:
                return d[smc_id]
        raise KeyError(smc_id)


def equal_power_allocation(group: SmcGroup, radio: RadioParams, num_subcarriers: int) -> PowerAllocation:
    out = PowerAllocation()
    bs_share = radio.p_max_bs / num_subcarriers
    rn_share = radio.p_max_rn / num_subcarriers
    t1 = group.members_t1
    for s in t1:
        target = out.p_bu_t1 if s.kind is SmcKind.BU_T1 else out.p_br_t1
        target[s.id] = bs_share / len(t1)
    if t1:
        out.totals[(1, BS)] = bs_share
    t2 = group.members_t2
    for tx in {s.transmitter for s in t2}:
        mine = [s for s in t2 if s.transmitter == tx]
        share = bs_share if tx == BS else rn_share
        target = out.p_bu_t2 if tx == BS else out.p_ru_t2
        for s in mine:
            target[s.id] = share / len(mine)
        out.totals[(2, tx)] = share
    return out


def stream_rate(p, g, bandwidth_hz: float):
    """``W log2(1 + p g)`` in bit/s."""
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(p < 0) or np.any(g < 0):
        raise ValueError("power and CNR must be nonnegative")
    return bandwidth_hz * np.log2(1.0 + p * g)


@dataclass
class CapacityReport:
    """Capacity of one group on one subcarrier.

    ``rates`` holds the full-duration rate of every stream (before the 1/2
    phase factor); ``bottleneck`` maps each relay pair id to ``"first"`` or
    ``"second"``, the hop that limited it.
    """

    group_key: tuple
    rates: dict
    total: float
    bottleneck: dict


def group_capacity(
    group: SmcGroup, powers: PowerAllocation, cnrs, radio: RadioParams
) -> CapacityReport:
    rates = {}
    for s in group.members_t1 + group.members_t2:
        rates[s.id] = float(stream_rate(powers.get(s.id), cnrs.get(s.id), radio.bandwidth_hz))
    pair_hops = set()
    total = 0.0
    bottleneck = {}
    for pr in group.relay_pairs:
        r1, r2 = rates[pr.first_hop.id], rates[pr.second_hop.id]
        total += 0.5 * min(r1, r2)
        bottleneck[pr.id] = "first" if r1 <= r2 else "second"
        pair_hops.update((pr.first_hop.id, pr.second_hop.id))
    for sid, r in rates.items():
        if sid not in pair_hops:
            total += 0.5 * r
    return CapacityReport(group.key, rates, total, bottleneck)


def evaluate_group(group: SmcGroup, radio: RadioParams, num_subcarriers: int) -> CapacityReport:
    """Beamform, allocate equal power and compute the capacity of one group."""
    bf = beamform(group)
    cnrs = effective_cnrs(group, bf, radio)
    return group_capacity(group, equal_power_allocation(group, radio, num_subcarriers), cnrs, radio)


def select_group(
    groups: Sequence[SmcGroup],
    policy: str,
    *,
    radio: Optional[RadioParams] = None,
    num_subcarriers: int = 1,
    rng: Optional[np.random.Generator] = None,
) -> SmcGroup:
    """Pick one group: ``"random"`` (uniform, via ``rng``) or ``"best"`` capacity.

    The best policy skips rank-deficient groups and breaks ties by position.
    """
    if not groups:
        raise ValueError("cannot select from an empty set of groups")
    if policy == "random":
        if rng is None:
            raise ValueError("random selection needs an rng")
        return groups[int(rng.integers(len(groups)))]
    if policy != "best":
        raise ValueError(f"unknown selection policy {policy!r}")
    if radio is None:
        raise ValueError("best selection needs radio parameters")
    best, best_val = None, -np.inf
    for g in groups:
        try:
            val = evaluate_group(g, radio, num_subcarriers).total
        except GroupRejected:
            continue
        if val > best_val:
            best, best_val = g, val
    if best is None:
        raise ValueError("every group is rank deficient")
    return best


# ---------------------------------------------------------------------------
# Batched evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupStructure:
    """Stream counts of many groups, needed for equal power allocation.

    ``n1`` phase-1 streams, ``n2[:, t]`` phase-2 streams of transmitter index
    ``t`` (0 = BS, 1 + m = relay m), per group.
    """

    n1: np.ndarray
    n2: np.ndarray
    has1: np.ndarray  # (G, S)
    tx2: np.ndarray  # (G, S), -1 where absent
    pair: np.ndarray  # (G, S)


def group_structure(table: CandidateTable, groups: np.ndarray) -> GroupStructure:
    present = groups >= 0
    safe = np.where(present, groups, 0)
    has1 = present & table.has1[safe]
    has2 = present & table.has2[safe]
    tx2 = np.where(has2, table.tx2[safe], -1)
    n2 = np.stack([(tx2 == t).sum(axis=1) for t in range(table.num_tx)], axis=1)
    return GroupStructure(has1.sum(axis=1), n2, has1, tx2, present & table.is_pair[safe])


def batch_capacity(
    structure: GroupStructure,
    gains: np.ndarray,
    radio: RadioParams,
    num_subcarriers: int,
) -> np.ndarray:
    """Total capacity (bit/s) of every group under equal power allocation.

    ``gains`` is the ``(G, S, 2)`` array of squared ZF weights.
    """
    bs_share = radio.p_max_bs / num_subcarriers
    rn_share = radio.p_max_rn / num_subcarriers
    norm = radio.snr_gap * radio.noise_power
    w = radio.bandwidth_hz
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(structure.n1 > 0, bs_share / structure.n1, 0.0)
        shares = np.array([bs_share] + [rn_share] * (structure.n2.shape[1] - 1))
        p2_tx = np.where(structure.n2 > 0, shares / structure.n2, 0.0)
    tx = structure.tx2
    p2 = np.where(tx >= 0, np.take_along_axis(p2_tx, np.maximum(tx, 0), axis=1), 0.0)
    r1 = np.where(structure.has1, w * np.log2(1.0 + p1[:, None] * gains[:, :, 0] / norm), 0.0)
    r2 = np.where(tx >= 0, w * np.log2(1.0 + p2 * gains[:, :, 1] / norm), 0.0)
    per_slot = np.where(structure.pair, np.minimum(r1, r2), r1 + r2)
    return 0.5 * per_slot.sum(axis=1)
