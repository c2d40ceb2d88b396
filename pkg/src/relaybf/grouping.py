"""Semi-orthogonal SMC grouping.

Candidates on one subcarrier are direct BS->UE SMCs (either phase) and relay
pairs. A set of candidates is a valid group when

* every two members are compatible (:func:`compatible`): no shared SMC,
  phase-1 rows pairwise semi-orthogonal, phase-2 rows pairwise
  semi-orthogonal in the space of each transmitter involved, and transmitter
  variants that agree on who is active;
* the multiplexing and per-node dimension caps hold (:class:`GroupingParams`).

Both conditions are hereditary, so a set is valid iff all its pairs are
compatible and its counts fit. :func:`esga` enumerates every valid set in
canonical order; :func:`ocga` grows one group per seed by picking the
candidate with the largest norm of orthogonal component (NOC).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .decompose import BS, Candidate, Smc, SmcKind, SmcPair
from .matrixkit import semi_orthogonality
from .topology import NetworkConfig


class EsgaLimitExceeded(RuntimeError):
    """ESGA produced more groups than the configured safety limit."""


@dataclass(frozen=True)
class GroupingParams:
    alpha: float
    n_bs: int
    n_rn: int
    n_ue: int
    num_ues: int
    num_relays: int
    esga_limit: int = 10**6

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    @classmethod
    def from_config(cls, config: NetworkConfig, alpha: float, esga_limit: int = 10**6):
        return cls(
            alpha, config.n_bs, config.n_rn, config.n_ue, config.num_ues, config.num_relays, esga_limit
        )

    @property
    def q1_cap(self) -> int:
        nb, nr, nu = self.n_bs, self.n_rn, self.n_ue
        return min(nb, self.num_ues * min(nb, nu) + self.num_relays * min(nb, nr))

    @property
    def q2_cap(self) -> int:
        return min(self.n_bs, self.n_rn)

    @property
    def lb_cap(self) -> int:
        return min(self.n_bs, self.n_ue)

    @property
    def lr_cap(self) -> int:
        return min(self.n_rn, self.n_ue)

    @property
    def rx1_ue_cap(self) -> int:
        return min(self.n_bs, self.n_ue)

    @property
    def rx1_rn_cap(self) -> int:
        return min(self.n_bs, self.n_rn)


# ---------------------------------------------------------------------------
# Candidate helpers
# ---------------------------------------------------------------------------


def phase1_part(c: Candidate) -> Optional[Smc]:
    if isinstance(c, SmcPair):
        return c.first_hop
    return c if c.phase == 1 else None


def phase2_part(c: Candidate) -> Optional[Smc]:
    if isinstance(c, SmcPair):
        return c.second_hop
    return c if c.phase == 2 else None


def smc_ids(c: Candidate) -> frozenset:
    if isinstance(c, SmcPair):
        return frozenset((c.id, c.first_hop.id, c.second_hop.id))
    return frozenset((c.id,))


def subcarrier_of(c: Candidate) -> int:
    return c.subcarrier


def compatible(a: Candidate, b: Candidate, alpha: float) -> bool:
    """Pairwise part of the admission test; symmetric in ``a`` and ``b``."""
    if smc_ids(a) & smc_ids(b):
        return False
    a1, b1 = phase1_part(a), phase1_part(b)
    if a1 is not None and b1 is not None:
        if semi_orthogonality(a1.row, b1.row) > alpha:
            return False
    a2, b2 = phase2_part(a), phase2_part(b)
    if a2 is not None and b2 is not None:
        if a2.transmitter not in b2.active_tx or b2.transmitter not in a2.active_tx:
            return False
        for t in {a2.transmitter, b2.transmitter}:
            if semi_orthogonality(a2.tx_rows[t], b2.tx_rows[t]) > alpha:
                return False
    return True


@dataclass(frozen=True)
class GroupCounts:
    q_t1: int
    q_t2: int
    l_b: tuple
    l_r: tuple
    rx1: dict


def count_members(members: Sequence[Candidate], num_ues: int) -> GroupCounts:
    l_b = [0] * num_ues
    l_r = [0] * num_ues
    rx1: dict = {}
    q1 = q2 = 0
    for c in members:
        p1, p2 = phase1_part(c), phase2_part(c)
        if p1 is not None:
            q1 += 1
            key = ("ue" if p1.kind is SmcKind.BU_T1 else "rn", p1.receiver)
            rx1[key] = rx1.get(key, 0) + 1
        if p2 is not None:
            q2 += 1
            if p2.transmitter == BS:
                l_b[p2.receiver] += 1
            else:
                l_r[p2.receiver] += 1
    return GroupCounts(q1, q2, tuple(l_b), tuple(l_r), rx1)


def caps_ok(counts: GroupCounts, params: GroupingParams) -> bool:
    if counts.q_t1 > params.q1_cap or counts.q_t2 > params.q2_cap:
        return False
    for lb, lr in zip(counts.l_b, counts.l_r):
        if lb > params.lb_cap or lr > params.lr_cap or lb + lr > params.n_ue:
            return False
    for (what, _), v in counts.rx1.items():
        if v > (params.rx1_ue_cap if what == "ue" else params.rx1_rn_cap):
            return False
    return True


@dataclass(frozen=True)
class SmcGroup:
    """A set of candidates scheduled together on one subcarrier.

    ``members`` is sorted by id; two groups are equal when they hold the same
    candidates.
    """

    members: tuple

    @classmethod
    def of(cls, members) -> "SmcGroup":
        members = tuple(sorted(members, key=lambda c: c.id))
        if len({c.subcarrier for c in members}) > 1:
            raise ValueError("group members must share one subcarrier")
        return cls(members)

    @property
    def key(self) -> tuple:
        return tuple(c.id for c in self.members)

    def __eq__(self, other):
        return isinstance(other, SmcGroup) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __len__(self):
        return len(self.members)

    @property
    def subcarrier(self) -> Optional[int]:
        return self.members[0].subcarrier if self.members else None

    @property
    def members_t1(self) -> list:
        return [p for p in map(phase1_part, self.members) if p is not None]

    @property
    def members_t2(self) -> list:
        return [p for p in map(phase2_part, self.members) if p is not None]

    @property
    def relay_pairs(self) -> list:
        return [c for c in self.members if isinstance(c, SmcPair)]

    @property
    def q_t1(self) -> int:
        return len(self.members_t1)

    @property
    def q_t2(self) -> int:
        return len(self.members_t2)

    def counts(self, num_ues: int) -> GroupCounts:
        return count_members(self.members, num_ues)

    @property
    def transmitter_set(self) -> frozenset:
        """Active ``(phase, transmitter)`` combinations."""
        out = set()
        if self.members_t1:
            out.add((1, BS))
        out.update((2, s.transmitter) for s in self.members_t2)
        return frozenset(out)


def smc_check(candidate: Candidate, group: SmcGroup, params: GroupingParams) -> bool:
    """Whether ``candidate`` may join ``group``.

    Accepts iff the candidate is not already (partly) in the group, is
    compatible with every member, and all caps still hold afterwards.
    """
    if group.members and candidate.subcarrier != group.subcarrier:
        raise ValueError("candidate and group are on different subcarriers")
    for m in group.members:
        if not compatible(candidate, m, params.alpha):
            return False
    return caps_ok(count_members(group.members + (candidate,), params.num_ues), params)


def is_valid_group(members: Sequence[Candidate], params: GroupingParams) -> bool:
    """Full validity test of a candidate set, independent of insertion order."""
    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            if not compatible(a, b, params.alpha):
                return False
    return caps_ok(count_members(members, params.num_ues), params)


# ---------------------------------------------------------------------------
# Vectorized candidate table
# ---------------------------------------------------------------------------


def _tx_index(t: int) -> int:
    return 0 if t == BS else t + 1


class CandidateTable:
    """Array view of the candidates of one subcarrier.

    Phase-2 rows are stored per transmitter index (0 = BS, 1 + m = relay m)
    and zero-padded to the longer of ``N_B`` and ``N_R``.
    """

    def __init__(self, candidates: Sequence[Candidate], params: GroupingParams):
        self.candidates = list(candidates)
        self.params = params
        e = len(self.candidates)
        t_count = params.num_relays + 1
        width = max(params.n_bs, params.n_rn)
        k = params.num_ues
        self.size = e
        self.num_tx = t_count
        self.has1 = np.zeros(e, dtype=bool)
        self.has2 = np.zeros(e, dtype=bool)
        self.row1 = np.zeros((e, params.n_bs), dtype=complex)
        self.rows2 = np.zeros((e, t_count, width), dtype=complex)
        self.subset = np.zeros((e, t_count), dtype=bool)
        self.tx2 = np.full(e, -1, dtype=np.int64)
        self.ue2 = np.full(e, -1, dtype=np.int64)
        self.rx1 = np.full(e, -1, dtype=np.int64)  # UE k -> k, relay m -> K + m
        self.is_pair = np.zeros(e, dtype=bool)
        self.rn = np.full(e, -1, dtype=np.int64)
        self.ue = np.full(e, -1, dtype=np.int64)  # end user served
        hop_owner: dict = {}
        self._share = np.eye(e, dtype=bool)
        for i, c in enumerate(self.candidates):
            p1, p2 = phase1_part(c), phase2_part(c)
            if p1 is not None:
                self.has1[i] = True
                self.row1[i] = p1.row
                self.rx1[i] = p1.receiver if p1.kind is SmcKind.BU_T1 else k + p1.receiver
            if p2 is not None:
                self.has2[i] = True
                self.tx2[i] = _tx_index(p2.transmitter)
                self.ue2[i] = p2.receiver
                for t, row in p2.tx_rows.items():
                    ti = _tx_index(t)
                    self.subset[i, ti] = True
                    self.rows2[i, ti, : row.shape[0]] = row
            if isinstance(c, SmcPair):
                self.is_pair[i] = True
                self.rn[i] = c.rn
                self.ue[i] = c.served_ue
            else:
                self.ue[i] = c.receiver
            for sid in smc_ids(c):
                for j in hop_owner.get(sid, ()):
                    self._share[i, j] = self._share[j, i] = True
                hop_owner.setdefault(sid, []).append(i)
        self.norm1 = np.linalg.norm(self.row1, axis=1)
        self.norm2 = np.linalg.norm(self.rows2, axis=2)  # (E, T)
        self.own2 = np.zeros((e, width), dtype=complex)
        sel = np.flatnonzero(self.has2)
        self.own2[sel] = self.rows2[sel, self.tx2[sel]]
        self._compat_cache: dict = {}

    @cached_property
    def _measure1(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.abs((self.row1 @ self.row1.conj().T).real) / np.outer(self.norm1, self.norm1)
        return np.where(np.outer(self.has1, self.has1), m, 0.0)

    @cached_property
    def _measure2(self) -> np.ndarray:
        """Phase-2 pairwise measure, ``inf`` where the variants disagree."""
        e = self.size
        r = self.rows2.transpose(1, 0, 2)  # (T, E, W)
        nrm = self.norm2.T  # (T, E)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.abs(np.real(r @ r.conj().transpose(0, 2, 1))) / (nrm[:, :, None] * nrm[:, None, :])
        both = np.flatnonzero(self.has2)
        out = np.zeros((e, e))
        if both.size:
            tx = self.tx2[both]
            sub = s[:, both][:, :, both]
            cols = np.arange(both.size)
            m_a = sub[tx[:, None], cols[:, None], cols[None, :]]
            m_b = sub[tx[None, :], cols[:, None], cols[None, :]]
            # agree[a, b]: tx(b) in S_a and tx(a) in S_b
            agree = self.subset[both][:, tx] & self.subset[both][:, tx].T
            block = np.where(agree, np.maximum(m_a, m_b), np.inf)
            out[np.ix_(both, both)] = block
        return out

    def compat(self, alpha: float) -> np.ndarray:
        """Boolean matrix of pairwise compatibility at ``alpha``."""
        key = float(alpha)
        if key not in self._compat_cache:
            ok = ~self._share
            ok &= self._measure1 <= alpha
            ok &= self._measure2 <= alpha
            self._compat_cache[key] = ok
        return self._compat_cache[key]

    def upper_masks(self, alpha: float) -> list:
        """Compatibility rows as Python int bitmasks restricted to higher indices."""
        ok = np.triu(self.compat(alpha), 1)
        weights = [1 << j for j in range(self.size)]
        masks = []
        for i in range(self.size):
            m = 0
            for j in np.flatnonzero(ok[i]):
                m |= weights[j]
            masks.append(m)
        return masks

    # footprint helpers -----------------------------------------------------
    @cached_property
    def is_relay2(self) -> np.ndarray:
        return self.has2 & (self.tx2 > 0)

    @cached_property
    def rx1_caps(self) -> np.ndarray:
        p = self.params
        return np.array([p.rx1_ue_cap] * p.num_ues + [p.rx1_rn_cap] * p.num_relays, dtype=np.int64)


class _Counters:
    """Mutable cap bookkeeping used by the enumerators."""

    __slots__ = ("q1", "q2", "lb", "lr", "rx", "t")

    def __init__(self, table: CandidateTable):
        p = table.params
        self.t = table
        self.q1 = 0
        self.q2 = 0
        self.lb = [0] * p.num_ues
        self.lr = [0] * p.num_ues
        self.rx = [0] * (p.num_ues + p.num_relays)


def _footprints(table: CandidateTable):
    """Per-candidate tuples (has1, has2, ue2, relay2, rx1) as plain Python values."""
    return list(
        zip(
            table.has1.tolist(),
            table.has2.tolist(),
            table.ue2.tolist(),
            table.is_relay2.tolist(),
            table.rx1.tolist(),
        )
    )


def esga_indices(table: CandidateTable, alpha: Optional[float] = None) -> list:
    """All valid groups as sorted index tuples, in lexicographic order.

    Equivalent to the recursive exhaustive search followed by removal of
    order duplicates: since validity is hereditary and order independent,
    extending each group only with higher-indexed candidates reaches every
    valid set exactly once.
    """
    p = table.params
    alpha = p.alpha if alpha is None else alpha
    masks = table.upper_masks(alpha)
    fp = _footprints(table)
    q1_cap, q2_cap, lb_cap, lr_cap, nu = p.q1_cap, p.q2_cap, p.lb_cap, p.lr_cap, p.n_ue
    rx_caps = table.rx1_caps.tolist()
    limit = p.esga_limit
    state = _Counters(table)
    out: list = []
    members: list = []

    def fits(i):
        h1, h2, ue, rel, rx = fp[i]
        if h1 and (state.q1 >= q1_cap or state.rx[rx] >= rx_caps[rx]):
            return False
        if h2:
            if state.q2 >= q2_cap or state.lb[ue] + state.lr[ue] >= nu:
                return False
            if rel:
                if state.lr[ue] >= lr_cap:
                    return False
            elif state.lb[ue] >= lb_cap:
                return False
        return True

    def apply(i, d):
        h1, h2, ue, rel, rx = fp[i]
        if h1:
            state.q1 += d
            state.rx[rx] += d
        if h2:
            state.q2 += d
            if rel:
                state.lr[ue] += d
            else:
                state.lb[ue] += d

    def rec(mask):
        while mask:
            low = mask & -mask
            i = low.bit_length() - 1
            mask ^= low
            if not fits(i):
                continue
            apply(i, 1)
            members.append(i)
            out.append(tuple(members))
            if len(out) > limit:
                raise EsgaLimitExceeded(f"ESGA exceeded {limit} groups")
            rec(mask & masks[i])
            members.pop()
            apply(i, -1)

    rec((1 << table.size) - 1)
    return out


def ocga_indices(table: CandidateTable, alpha: Optional[float] = None) -> list:
    """Greedy NOC grouping: one group per seed, deduplicated, sorted.

    Each seed starts a group that is extended with the admissible candidate
    of largest NOC until nothing fits. A relay pair scores the smaller of its
    two hop NOCs. Phase-2 NOCs are measured in the space of the candidate's
    own transmitter. Ties go to the lowest index.

    All seeds advance together: row ``s`` of every state array belongs to the
    group seeded by candidate ``s``.
    """
    p = table.params
    alpha = p.alpha if alpha is None else alpha
    compat = table.compat(alpha)
    e = table.size
    if e == 0:
        return []
    has1, has2 = table.has1, table.has2
    both = has1 & has2
    ue2 = np.where(has2, table.ue2, 0)
    rel = table.is_relay2
    rx1 = np.where(has1, table.rx1, 0)
    rx_caps = table.rx1_caps[rx1]
    tx2 = np.where(has2, table.tx2, -1)
    n_tx, width = table.num_tx, table.rows2.shape[2]

    allowed = compat.copy()
    q1 = np.zeros(e, dtype=np.int64)
    q2 = np.zeros(e, dtype=np.int64)
    lb = np.zeros((e, p.num_ues), dtype=np.int64)
    lr = np.zeros((e, p.num_ues), dtype=np.int64)
    rxc = np.zeros((e, p.num_ues + p.num_relays), dtype=np.int64)
    # Residual of every candidate's phase-1 row and own phase-2 row, per seed.
    res1 = np.broadcast_to(table.row1, (e,) + table.row1.shape).copy()
    res2 = np.broadcast_to(table.own2, (e,) + table.own2.shape).copy()
    # Orthonormal bases of the members' phase-2 rows, per seed and transmitter.
    k2_cap = max(p.q2_cap, 1)
    basis2 = np.zeros((e, n_tx, k2_cap, width), dtype=complex)
    used2 = np.zeros((e, n_tx), dtype=np.int64)
    members = np.full((e, p.q1_cap + p.q2_cap + 1), -1, dtype=np.int64)
    size = np.zeros(e, dtype=np.int64)

    def add(seeds: np.ndarray, cand: np.ndarray) -> None:
        members[seeds, size[seeds]] = cand
        size[seeds] += 1
        allowed[seeds] &= compat[cand]
        h1 = has1[cand]
        if h1.any():
            s, c = seeds[h1], cand[h1]
            q1[s] += 1
            np.add.at(rxc, (s, rx1[c]), 1)
            _deflate(res1, s, res1[s, c], table.norm1[c], None)
        h2 = has2[cand]
        if h2.any():
            s, c = seeds[h2], cand[h2]
            q2[s] += 1
            np.add.at(lr, (s[rel[c]], ue2[c[rel[c]]]), 1)
            np.add.at(lb, (s[~rel[c]], ue2[c[~rel[c]]]), 1)
            for t in range(n_tx):
                m = table.subset[c, t]
                if not m.any():
                    continue
                st, ct = s[m], c[m]
                v = table.rows2[ct, t].copy()
                q = basis2[st, t]
                for _ in range(2):
                    v -= np.einsum("sk,skw->sw", np.einsum("skw,sw->sk", q.conj(), v), q)
                nv = np.linalg.norm(v, axis=1)
                ok = nv > 1e-12 * table.norm2[ct, t]
                st, v = st[ok], v[ok] / nv[ok, None]
                basis2[st, t, used2[st, t]] = v
                used2[st, t] += 1
                _deflate(res2, st, v, None, tx2 == t)

    seeds = np.arange(e)
    add(seeds, seeds)
    active = seeds
    while active.size:
        ok = allowed[active]
        blocked1 = (q1[active] >= p.q1_cap)[:, None] | (rxc[active][:, rx1] >= rx_caps)
        ok &= ~(has1 & blocked1)
        l_b, l_r = lb[active][:, ue2], lr[active][:, ue2]
        blocked2 = (
            (q2[active] >= p.q2_cap)[:, None]
            | (l_b + l_r >= p.n_ue)
            | np.where(rel, l_r >= p.lr_cap, l_b >= p.lb_cap)
        )
        ok &= ~(has2 & blocked2)
        go = ok.any(axis=1)
        active, ok = active[go], ok[go]
        if not active.size:
            break
        noc1 = np.linalg.norm(res1[active], axis=2)
        noc2 = np.linalg.norm(res2[active], axis=2)
        score = np.where(both, np.minimum(noc1, noc2), np.where(has1, noc1, noc2))
        best = np.argmax(np.where(ok, score, -np.inf), axis=1)
        add(active, best)

    groups = {tuple(sorted(row[:n].tolist())) for row, n in zip(members, size)}
    return sorted(groups)


def _deflate(res: np.ndarray, seeds: np.ndarray, v: np.ndarray, ref, columns) -> None:
    """Project ``v`` (one vector per seed) out of the residuals of those seeds.

    With ``ref`` given, ``v`` is normalized first and skipped where its norm
    is below ``1e-12 * ref``. ``columns`` restricts the update to a subset
    of candidates.
    """
    if ref is not None:
        nv = np.linalg.norm(v, axis=1)
        keep = nv > 1e-12 * ref
        seeds, v = seeds[keep], v[keep] / nv[keep, None]
    if not seeds.size:
        return
    if columns is None:
        r = res[seeds]
        r -= np.einsum("sew,sw->se", r, v.conj())[:, :, None] * v[:, None, :]
        res[seeds] = r
    else:
        cols = np.flatnonzero(columns)
        if not cols.size:
            return
        r = res[seeds[:, None], cols[None, :]]
        r -= np.einsum("sew,sw->se", r, v.conj())[:, :, None] * v[:, None, :]
        res[seeds[:, None], cols[None, :]] = r


def pad_groups(index_groups: Sequence[tuple], width: Optional[int] = None) -> np.ndarray:
    """Index tuples as a ``(G, S)`` int array padded with -1."""
    width = max((len(g) for g in index_groups), default=0) if width is None else width
    out = np.full((len(index_groups), width), -1, dtype=np.int64)
    for i, g in enumerate(index_groups):
        out[i, : len(g)] = g
    return out


def required_alpha(table: CandidateTable, groups: np.ndarray) -> np.ndarray:
    """Smallest alpha at which each group is pairwise compatible.

    A group that is valid at alpha stays valid at every larger alpha, so the
    ESGA output at a small alpha equals the larger-alpha output filtered by
    ``required_alpha <= alpha``. Singletons need 0; groups with an
    incompatibility that no alpha fixes get ``inf``.
    """
    g_count, width = groups.shape
    out = np.zeros(g_count)
    if g_count == 0 or width < 2:
        return out
    measure = np.maximum(table._measure1, table._measure2)
    measure = np.where(table._share & ~np.eye(table.size, dtype=bool), np.inf, measure)
    present = groups >= 0
    safe = np.where(present, groups, 0)
    for a in range(width):
        for b in range(a + 1, width):
            both = present[:, a] & present[:, b]
            m = measure[safe[:, a], safe[:, b]]
            out = np.maximum(out, np.where(both, m, 0.0))
    return out


# ---------------------------------------------------------------------------
# Object-level wrappers
# ---------------------------------------------------------------------------


def _to_groups(table: CandidateTable, index_groups) -> list:
    c = table.candidates
    return [SmcGroup(tuple(c[i] for i in g)) for g in index_groups]


def esga(candidates: Sequence[Candidate], params: GroupingParams) -> list:
    """Every valid SMC group over ``candidates`` (exhaustive search)."""
    if not candidates:
        raise ValueError("ESGA needs at least one candidate")
    table = CandidateTable(sorted(candidates, key=lambda c: c.id), params)
    return _to_groups(table, esga_indices(table))


def ocga(candidates: Sequence[Candidate], params: GroupingParams) -> list:
    """Greedy orthogonal-component grouping over ``candidates``."""
    if not candidates:
        raise ValueError("OCGA needs at least one candidate")
    table = CandidateTable(sorted(candidates, key=lambda c: c.id), params)
    return _to_groups(table, ocga_indices(table))


# ---------------------------------------------------------------------------
# Dominated-group pruning
# ---------------------------------------------------------------------------


def slot_codes(table: CandidateTable, members: np.ndarray) -> np.ndarray:
    """Integer slot code per member: direct phase 1/2 per UE, or (relay, UE) pair."""
    p = table.params
    k = p.num_ues
    m = members.clip(min=0)
    code = np.where(
        table.is_pair[m],
        2 * k + table.rn[m] * k + table.ue[m],
        np.where(table.has1[m], table.ue[m], k + table.ue[m]),
    )
    return np.where(members >= 0, code, np.iinfo(np.int64).max)


def prune_dominated(codes: np.ndarray, gains: np.ndarray) -> np.ndarray:
    """Keep-mask of groups not dominated by another group of the same structure.

    Parameters
    ----------
    codes : int array (G, S)
        Slot codes per member (padding = max int). Groups with the same
        multiset of codes serve the same receivers from the same transmitters.
    gains : float array (G, S, 2)
        Effective gains per slot: (phase-1, phase-2), zero where absent.

    A group is removed when another group with the same slot structure is at
    least as good in every slot; among identical groups the first one stays.
    Slots of equal code are matched after sorting by their weaker gain.
    """
    g_count = codes.shape[0]
    keep = np.ones(g_count, dtype=bool)
    if g_count <= 1:
        return keep
    weak = np.where(gains.max(axis=2) > 0, np.where(
        (gains > 0).all(axis=2), gains.min(axis=2), gains.max(axis=2)), 0.0)
    order = np.lexsort((-weak, codes), axis=1)
    codes_s = np.take_along_axis(codes, order, axis=1)
    gains_s = np.take_along_axis(gains, order[:, :, None], axis=1).reshape(g_count, -1)
    _, bucket = np.unique(_row_keys(codes_s), return_inverse=True)
    bucket = bucket.reshape(-1)
    order = np.argsort(bucket, kind="stable")
    starts = np.flatnonzero(np.diff(bucket[order], prepend=-1))
    sizes = np.diff(np.append(starts, g_count))
    small: dict = {}
    for start, size in zip(starts.tolist(), sizes.tolist()):
        if size == 1:
            continue
        if size <= _SMALL_BUCKET:
            width = 1 << (size - 1).bit_length()
            small.setdefault(width, []).append(order[start : start + size])
        else:
            idx = order[start : start + size]
            keep[idx] = _pareto_keep(gains_s[idx])
    for width, buckets in small.items():
        idx = np.full((len(buckets), width), -1, dtype=np.int64)
        for i, b in enumerate(buckets):
            idx[i, : b.size] = b
        keep[idx[idx >= 0]] = _pareto_keep_small(gains_s, idx)[idx >= 0]
    return keep


_SMALL_BUCKET = 64


def _pareto_keep_small(x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Batched maximal-row test for many small buckets padded with -1."""
    xb = np.where((idx >= 0)[:, :, None], x[np.maximum(idx, 0)], -np.inf)
    ge = (xb[:, None, :, :] >= xb[:, :, None, :]).all(axis=3)  # ge[b, i, j]: row j >= row i
    gt = (xb[:, None, :, :] > xb[:, :, None, :]).any(axis=3)
    w = idx.shape[1]
    earlier = np.tri(w, k=-1, dtype=bool)  # j < i; idx is increasing within a bucket
    return ~(ge & (gt | earlier)).any(axis=2)


def _row_keys(codes: np.ndarray) -> np.ndarray:
    """One hashable key per row of small nonnegative codes."""
    pad = np.iinfo(np.int64).max
    c = np.where(codes == pad, -1, codes) + 1
    base = int(c.max()) + 1
    if base ** codes.shape[1] < 2**62:
        return c @ (base ** np.arange(codes.shape[1], dtype=np.int64))
    _, inv = np.unique(c, axis=0, return_inverse=True)
    return inv.reshape(-1)


def _pareto_keep(x: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Maximal rows of ``x`` under componentwise >=; among equal rows the first stays.

    Rows are visited by decreasing sum, then decreasing components, then
    position. Rounded summation is monotone, so a row can only be dominated
    by rows visited before it, and by transitivity it suffices to compare it
    with the survivors so far plus the earlier rows of its own chunk. The
    chunk is first screened against the survivors, which removes most rows
    before the quadratic in-chunk comparison.
    """
    n = x.shape[0]
    x = x[:, x.min(axis=0) != x.max(axis=0)]  # constant columns never decide dominance
    keys = [np.arange(n)] + [-x[:, j] for j in range(x.shape[1] - 1, -1, -1)] + [-x.sum(axis=1)]
    order = np.lexsort(keys)
    front_x = np.empty((0, x.shape[1]))
    keep = np.zeros(n, dtype=bool)
    for start in range(0, n, chunk):
        blk = order[start : start + chunk]
        if front_x.shape[0]:
            blk = blk[~(front_x[None, :, :] >= x[blk][:, None, :]).all(axis=2).any(axis=1)]
        xb = x[blk]
        ge = (xb[None, :, :] >= xb[:, None, :]).all(axis=2)  # ge[i, j]: row j >= row i
        new = blk[~np.tril(ge, k=-1).any(axis=1)]
        keep[new] = True
        front_x = np.vstack([front_x, x[new]])
    return keep


def prune_groups(groups: Sequence[SmcGroup], gains: Sequence) -> list:
    """Drop groups dominated by another group with the same transmitters and slots.

    ``gains[i]`` maps every member id of ``groups[i]`` to its effective gains
    ``(phase-1, phase-2)`` (zero where the member has no such part).
    """
    if not groups:
        return []
    s = max(len(g) for g in groups)
    k = max(
        [1]
        + [c.served_ue + 1 if isinstance(c, SmcPair) else c.receiver + 1 for g in groups for c in g.members]
    )
    codes = np.full((len(groups), s), np.iinfo(np.int64).max, dtype=np.int64)
    gmat = np.zeros((len(groups), s, 2))
    for gi, (g, gg) in enumerate(zip(groups, gains)):
        for j, c in enumerate(g.members):
            if isinstance(c, SmcPair):
                codes[gi, j] = 2 * k + c.rn * k + c.served_ue
            else:
                codes[gi, j] = c.receiver if c.phase == 1 else k + c.receiver
            gmat[gi, j] = gg[c.id]
    keep = prune_dominated(codes, gmat)
    return [g for g, kp in zip(groups, keep) if kp]
