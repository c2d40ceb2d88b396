"""Self-checks behind ``relaybf validate``.

Every property is checked on a batch of seeded random instances. Each check
uses a different code path from the one it verifies where possible, e.g.
ZF beamformers are checked by pushing symbols through the raw channel
matrices, and ESGA against brute-force subset enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .beamform import GroupRejected, beamform, group_gains
from .capacity import batch_capacity, evaluate_group, group_structure
from .channel import ChannelRealization, RadioParams
from .config import parse_config, serialize_config
from .decompose import SmcKind, decompose
from .grouping import (
    CandidateTable,
    GroupingParams,
    SmcGroup,
    esga,
    esga_indices,
    is_valid_group,
    ocga,
    pad_groups,
    prune_dominated,
    slot_codes,
)
from .matrixkit import joint_diagonalize, right_inverse, semi_orthogonality, svd
from .sim import preset_fig2, preset_fig3
from .topology import NetworkConfig


@dataclass
class PropertyResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def _cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _realization(rng, k=2, m=2, nb=4, nr=4, nu=2) -> ChannelRealization:
    return ChannelRealization(_cn(rng, 1, k, nu, nb), _cn(rng, 1, m, nr, nb), _cn(rng, 1, m, k, nu, nr))


def _params(alpha, k=2, m=2, nb=4, nr=4, nu=2) -> GroupingParams:
    return GroupingParams.from_config(NetworkConfig(m, k, nb, nr, nu, 750.0, 0.5, 1), alpha)


def _svd_reconstructs(rng) -> bool:
    a = _cn(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)))
    r = svd(a)
    return np.allclose(r.reconstruct(), a, atol=1e-10) and bool(np.all(np.diff(r.s) <= 0))


def _right_inverse(rng) -> bool:
    q = int(rng.integers(1, 5))
    a = _cn(rng, q, q + int(rng.integers(0, 3)))
    return np.linalg.norm(a @ right_inverse(a) - np.eye(q)) < 1e-9


def _semi_orth_range(rng) -> bool:
    v1, v2 = _cn(rng, 4), _cn(rng, 4)
    x = semi_orthogonality(v1, v2)
    return 0.0 <= x <= 1.0 + 1e-12 and abs(x - semi_orthogonality(v2, v1)) < 1e-12


def _jd_monotone(rng) -> bool:
    n, count = int(rng.integers(2, 4)), int(rng.integers(1, 5))
    x = _cn(rng, count, n, n + 1)
    res = joint_diagonalize(x @ x.conj().transpose(0, 2, 1))
    t = np.array(res.objective_trace)
    return bool(np.all(np.diff(t) <= 1e-12 * max(t[0], 1e-300)))


def _jd_single_exact(rng) -> bool:
    x = _cn(rng, 3, 4)
    a = x @ x.conj().T
    res = joint_diagonalize(a)
    return res.objective <= 1e-8 * np.linalg.norm(a) ** 2


def _phase1_structure(rng) -> bool:
    real = _realization(rng)
    dec = decompose(real, max_inactive=0)
    p1 = dec.phase1
    if len(p1) != 2 * min(4, 2) + 2 * min(4, 4):
        return False
    for s in p1:
        h = real.h_bu[0, s.receiver] if s.kind is SmcKind.BU_T1 else real.h_br[0, s.receiver]
        if not np.allclose(s.combiner @ h, s.row, atol=1e-10):
            return False
        if abs(np.linalg.norm(s.row) - s.gain) > 1e-10:
            return False
    return True


def _accepted_groups(rng, count):
    real = _realization(rng)
    dec = decompose(real)
    groups = [g for g in ocga(dec.candidates(0), _params(0.5)) if len(g) > 1]
    picks = rng.choice(len(groups), size=min(count, len(groups)), replace=False) if groups else []
    return real, [groups[i] for i in picks]


def _zf_link_level(rng) -> bool:
    real, groups = _accepted_groups(rng, 3)
    for g in groups:
        try:
            bf = beamform(g)
        except GroupRejected:
            continue
        if g.members_t1:
            t1 = bf.precoder_t1()
            for j, s in enumerate(g.members_t1):
                h = real.h_bu[0, s.receiver] if s.kind is SmcKind.BU_T1 else real.h_br[0, s.receiver]
                c = s.combiner @ h @ t1
                if np.abs(np.delete(c, j)).max(initial=0.0) > 1e-9 * abs(c[j]):
                    return False
        smcs = g.members_t2
        for j, s in enumerate(smcs):
            total = np.zeros(len(smcs), dtype=complex)
            for tx in bf.t2:
                h = real.h_bu[0, s.receiver] if tx == -1 else real.h_ru[0, tx, s.receiver]
                total += s.combiner @ h @ bf.precoder_t2(tx)
            if np.abs(np.delete(total, j)).max(initial=0.0) > 1e-9 * abs(total[j]):
                return False
    return True


def _esga_brute_force(rng) -> bool:
    cands = decompose(_realization(rng)).candidates(0)
    pick = sorted(rng.choice(len(cands), size=min(7, len(cands)), replace=False))
    cands = [cands[i] for i in pick]
    params = _params(float(rng.uniform(0.1, 0.6)))
    brute = {
        frozenset(c.id for c in combo)
        for r in range(1, len(cands) + 1)
        for combo in itertools.combinations(cands, r)
        if is_valid_group(list(combo), params)
    }
    return {frozenset(c.id for c in g.members) for g in esga(cands, params)} == brute


def _ocga_valid_and_bounded(rng) -> bool:
    cands = decompose(_realization(rng)).candidates(0)
    params = _params(float(rng.uniform(0.1, 0.6)))
    groups = ocga(cands, params)
    return len(groups) <= len(cands) and all(is_valid_group(g.members, params) for g in groups)


def _batch_capacity_matches(rng) -> bool:
    real, groups = _accepted_groups(rng, 5)
    if not groups:
        return True
    radio = RadioParams(180e3, -174.0, 0.0, 20.0, 10.0)
    cands = sorted({c.id: c for g in groups for c in g.members}.values(), key=lambda c: c.id)
    table = CandidateTable(cands, _params(0.5))
    index = {c.id: i for i, c in enumerate(cands)}
    rows = pad_groups([tuple(index[c.id] for c in g.members) for g in groups])
    gains, ok = group_gains(table, rows)
    fast = batch_capacity(group_structure(table, rows), gains, radio, 6)
    for i, g in enumerate(groups):
        if not ok[i]:
            continue
        slow = evaluate_group(g, radio, 6).total
        if abs(fast[i] - slow) > 1e-9 * max(1.0, slow):
            return False
    return True


def _pruning_keeps_best(rng) -> bool:
    real = _realization(rng)
    cands = decompose(real).candidates(0)
    table = CandidateTable(cands, _params(0.3))
    groups = pad_groups(esga_indices(table))
    gains, ok = group_gains(table, groups)
    sel = np.flatnonzero(ok)
    keep = sel[prune_dominated(slot_codes(table, groups[sel]), gains[sel])]
    p_bs, p_rn = rng.uniform(0.0, 40.0, size=2)
    radio = RadioParams(180e3, -174.0, 0.0, float(p_bs), float(p_rn))
    all_cap = batch_capacity(group_structure(table, groups[sel]), gains[sel], radio, 6)
    kept = batch_capacity(group_structure(table, groups[keep]), gains[keep], radio, 6)
    return abs(all_cap.max() - kept.max()) <= 1e-9 * all_cap.max()


def _config_round_trip(rng) -> bool:
    base = preset_fig2() if rng.random() < 0.5 else preset_fig3()
    cfg = base.with_overrides(num_samples=int(rng.integers(1, 10**5)), seed=int(rng.integers(0, 2**31)))
    return parse_config(serialize_config(cfg)) == cfg


def _group_key_order(rng) -> bool:
    cands = decompose(_realization(rng)).candidates(0)
    pick = [cands[i] for i in rng.permutation(len(cands))[:3]]
    return SmcGroup.of(pick) == SmcGroup.of(list(reversed(pick)))


PROPERTIES: list[tuple[str, Callable, int]] = [
    ("svd reconstructs its input", _svd_reconstructs, 50),
    ("right inverse gives identity", _right_inverse, 50),
    ("semi-orthogonality symmetric in [0, 1]", _semi_orth_range, 50),
    ("joint diagonalizer objective non-increasing", _jd_monotone, 30),
    ("joint diagonalizer exact on one matrix", _jd_single_exact, 20),
    ("phase-1 SMC count, rows and gains", _phase1_structure, 10),
    ("zero-forcing nulls cross-stream terms", _zf_link_level, 10),
    ("ESGA equals brute-force enumeration", _esga_brute_force, 10),
    ("OCGA groups valid, at most one per candidate", _ocga_valid_and_bounded, 10),
    ("batched capacity matches per-group evaluation", _batch_capacity_matches, 10),
    ("dominance pruning keeps the best group", _pruning_keeps_best, 5),
    ("config text round trip", _config_round_trip, 10),
    ("group identity ignores member order", _group_key_order, 10),
]


def run_validation(seed: int = 0, report: Callable[[str], None] = print) -> list[PropertyResult]:
    results = []
    for j, (name, check, trials) in enumerate(PROPERTIES):
        rng = np.random.default_rng([seed, j])
        passed = sum(bool(check(rng)) for _ in range(trials))
        res = PropertyResult(name, passed, trials)
        report(f"{'PASS' if res.ok else 'FAIL'}  {name}: {passed}/{trials}")
        results.append(res)
    good = sum(r.ok for r in results)
    report(f"{good}/{len(results)} properties passed")
    return results
