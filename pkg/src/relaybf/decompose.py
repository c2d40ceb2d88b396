"""Turn channel matrices into spatial multiplexing components (SMCs).

Phase 1 (only the BS transmits) uses the SVD of each BS-UE and BS-RN
matrix: the receiver applies ``U^H`` and every nonzero row of ``S V^H`` is
one SMC. Phase 2 (BS and relays transmit) gives each UE a single combining
matrix obtained by jointly diagonalizing the Gram matrices of all its
incoming channels; rows of ``R H`` are the phase-2 SMCs.

Phase-2 SMCs are produced for several *variants*: subsets of the phase-2
transmitters that are assumed active. Fewer active transmitters means fewer
matrices to diagonalize jointly and hence better-separated rows.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Union

import numpy as np

from .channel import ChannelRealization
from .matrixkit import RANK_TOL, JointDiagResult, joint_diagonalize, joint_diagonalize_batch

#: Transmitter id of the base station; relays use their index 0..M-1.
BS = -1


class SmcKind(enum.Enum):
    BU_T1 = "BU_T1"
    BR_T1 = "BR_T1"
    BU_T2 = "BU_T2"
    RU_T2 = "RU_T2"


@dataclass(frozen=True, eq=False)
class Smc:
    """One effective MISO channel.

    ``row`` is the effective channel seen by ``combiner`` (the receive vector
    applied at ``receiver``) from ``transmitter``. Phase-2 SMCs also carry
    ``tx_rows``: the same combiner seen through every transmitter of their
    variant, which is what other transmitters must zero-force.
    """

    id: int
    subcarrier: int
    phase: int
    kind: SmcKind
    transmitter: int
    receiver: int
    row: np.ndarray
    gain: float
    combiner: np.ndarray
    active_tx: Optional[frozenset] = None
    tx_rows: Optional[Mapping[int, np.ndarray]] = None

    def __repr__(self):
        return (
            f"Smc(id={self.id}, n={self.subcarrier}, {self.kind.value}, "
            f"tx={self.transmitter}, rx={self.receiver}, gain={self.gain:.3e})"
        )


@dataclass(frozen=True, eq=False)
class SmcPair:
    """A relayed stream: BS->RN SMC in phase 1 and RN->UE SMC in phase 2."""

    id: int
    rn: int
    first_hop: Smc
    second_hop: Smc

    def __post_init__(self):
        if not (
            self.first_hop.kind is SmcKind.BR_T1
            and self.second_hop.kind is SmcKind.RU_T2
            and self.first_hop.receiver == self.rn == self.second_hop.transmitter
            and self.first_hop.subcarrier == self.second_hop.subcarrier
        ):
            raise ValueError("inconsistent relay pair")

    @property
    def served_ue(self) -> int:
        return self.second_hop.receiver

    @property
    def subcarrier(self) -> int:
        return self.first_hop.subcarrier

    def __repr__(self):
        return f"SmcPair(id={self.id}, rn={self.rn}, {self.first_hop.id}->{self.second_hop.id})"


Candidate = Union[Smc, SmcPair]


@dataclass
class ReceiveBfSet:
    """Receive combiners. Phase-2 entries are keyed by transmitter variant."""

    r_bu_t1: np.ndarray  # (N, K, r, N_U)
    r_br_t1: np.ndarray  # (N, M, r, N_R)
    r_u_t2: dict = field(default_factory=dict)  # frozenset -> (N, K, N_U, N_U)
    jd_nonconverged: int = 0


def _ids_from(start: int = 0) -> Iterator[int]:
    return itertools.count(start)


def _nonzero_rows(rows: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=-1)
    ref = norms.max() if norms.size else 0.0
    return (norms > 0) & (norms > RANK_TOL * ref)


def phase1_decompose(realization: ChannelRealization, ids: Optional[Iterator[int]] = None):
    """SVD receive combiners and phase-1 SMCs for every BS-UE and BS-RN link.

    Returns
    -------
    receive : ReceiveBfSet
        With only the phase-1 fields populated.
    smcs : list of Smc
        Ordered by subcarrier, then BS-UE links, then BS-RN links.
    """
    ids = _ids_from() if ids is None else ids
    h_bu, h_br = realization.h_bu, realization.h_br
    n_sc, k_count = h_bu.shape[:2]
    m_count = h_br.shape[1]
    u_bu, s_bu, vh_bu = np.linalg.svd(h_bu, full_matrices=False)
    r_bu = u_bu.conj().swapaxes(-1, -2)
    if m_count:
        u_br, s_br, vh_br = np.linalg.svd(h_br, full_matrices=False)
        r_br = u_br.conj().swapaxes(-1, -2)
    else:
        r_br = np.zeros((n_sc, 0, 0, h_br.shape[2]), dtype=complex)
    smcs = []
    for n in range(n_sc):
        links = [(SmcKind.BU_T1, k, s_bu[n, k], vh_bu[n, k], r_bu[n, k]) for k in range(k_count)]
        if m_count:
            links += [(SmcKind.BR_T1, m, s_br[n, m], vh_br[n, m], r_br[n, m]) for m in range(m_count)]
        for kind, rx, s, vh, r in links:
            eff = s[:, None] * vh
            keep = _nonzero_rows(eff)
            for i in np.flatnonzero(keep):
                smcs.append(
                    Smc(
                        id=next(ids),
                        subcarrier=n,
                        phase=1,
                        kind=kind,
                        transmitter=BS,
                        receiver=rx,
                        row=eff[i],
                        gain=float(s[i]),
                        combiner=r[i],
                    )
                )
    return ReceiveBfSet(r_bu, r_br), smcs


def transmitter_subsets(num_relays: int, max_inactive: int = 1) -> list[frozenset]:
    """Phase-2 transmitter variants: all active first, then with 1..max_inactive switched off."""
    tx = [BS] + list(range(num_relays))
    out = [frozenset(tx)]
    for d in range(1, min(max_inactive, len(tx) - 1) + 1):
        for off in itertools.combinations(tx, d):
            out.append(frozenset(t for t in tx if t not in off))
    return out


def _ordered(subset) -> list[int]:
    return sorted(subset)  # BS (-1) first, then relays


def _phase2_targets(realization: ChannelRealization, subset) -> np.ndarray:
    """Gram matrices to diagonalize, shape (N, K, |subset|, N_U, N_U)."""
    mats = []
    for t in _ordered(subset):
        h = realization.h_bu if t == BS else realization.h_ru[:, t]
        mats.append(h @ h.conj().swapaxes(-1, -2))
    return np.stack(mats, axis=2)


def _normalize_rows(r: np.ndarray) -> np.ndarray:
    return r / np.linalg.norm(r, axis=-1, keepdims=True)


def phase2_receive_bf(
    realization: ChannelRealization, n: int, k: int, subset=None, tol=1e-8, max_iter=500
) -> tuple[np.ndarray, JointDiagResult]:
    """Phase-2 combiner of UE ``k`` on subcarrier ``n``, rows normalized to unit norm.

    ``subset`` selects the transmitters whose channels are diagonalized
    jointly (default: the BS and every relay).
    """
    subset = transmitter_subsets(realization.num_relays, 0)[0] if subset is None else subset
    a = _phase2_targets(realization, subset)[n, k]
    res = joint_diagonalize(a, tol=tol, max_iter=max_iter)
    return _normalize_rows(res.combiner), res


def phase2_receive_all(realization: ChannelRealization, subset, tol=1e-8, max_iter=500):
    """Combiners for every (subcarrier, UE) under one variant, solved as a batch.

    Returns the (N, K, N_U, N_U) combiners and the number of problems that
    hit ``max_iter``.
    """
    a = _phase2_targets(realization, subset)
    n_sc, k_count = a.shape[:2]
    flat = a.reshape((n_sc * k_count,) + a.shape[2:])
    b, _, conv = joint_diagonalize_batch(flat, tol=tol, max_iter=max_iter)
    r = _normalize_rows(b).reshape(n_sc, k_count, *b.shape[1:])
    return r, int(np.count_nonzero(~conv))


def phase2_decompose(
    realization: ChannelRealization,
    receive: ReceiveBfSet,
    ids: Optional[Iterator[int]] = None,
) -> list[Smc]:
    """Phase-2 SMCs for every variant stored in ``receive.r_u_t2``.

    For UE ``k`` and variant ``S`` every combiner row ``r`` yields one SMC per
    transmitter ``t`` in ``S`` whose effective row ``r H_t`` is nonzero.
    """
    ids = _ids_from() if ids is None else ids
    n_sc, k_count = realization.h_bu.shape[:2]
    smcs = []
    for n in range(n_sc):
        for k in range(k_count):
            for subset, r_all in receive.r_u_t2.items():
                r = r_all[n, k]
                order = _ordered(subset)
                eff = {
                    t: r @ (realization.h_bu[n, k] if t == BS else realization.h_ru[n, t, k])
                    for t in order
                }
                keep = {t: _nonzero_rows(eff[t]) for t in order}
                for i in range(r.shape[0]):
                    tx_rows = {t: eff[t][i] for t in order}
                    for t in order:
                        if not keep[t][i]:
                            continue
                        row = eff[t][i]
                        smcs.append(
                            Smc(
                                id=next(ids),
                                subcarrier=n,
                                phase=2,
                                kind=SmcKind.BU_T2 if t == BS else SmcKind.RU_T2,
                                transmitter=t,
                                receiver=k,
                                row=row,
                                gain=float(np.linalg.norm(row)),
                                combiner=r[i],
                                active_tx=frozenset(subset),
                                tx_rows=tx_rows,
                            )
                        )
    return smcs


def pair_relay_smcs(br_smcs, ru_smcs, ids: Optional[Iterator[int]] = None) -> list[SmcPair]:
    """All (BS->RN, RN->UE) combinations through the same relay on the same subcarrier."""
    ids = _ids_from() if ids is None else ids
    by_key: dict = {}
    for s in ru_smcs:
        if s.kind is SmcKind.RU_T2:
            by_key.setdefault((s.subcarrier, s.transmitter), []).append(s)
    pairs = []
    for b in br_smcs:
        if b.kind is not SmcKind.BR_T1:
            continue
        for r in by_key.get((b.subcarrier, b.receiver), []):
            pairs.append(SmcPair(next(ids), b.receiver, b, r))
    return pairs


@dataclass
class Decomposition:
    """Every SMC and relay pair of one channel realization."""

    receive: ReceiveBfSet
    phase1: list
    phase2: list
    pairs: list
    num_subcarriers: int

    def candidates(self, n: int) -> list:
        """The schedulable entities of subcarrier ``n``, ordered by id.

        Direct BS-UE SMCs of both phases plus relay pairs; lone BS->RN or
        RN->UE SMCs carry no end-to-end traffic and are not candidates.
        """
        out = [s for s in self.phase1 if s.subcarrier == n and s.kind is SmcKind.BU_T1]
        out += [s for s in self.phase2 if s.subcarrier == n and s.kind is SmcKind.BU_T2]
        out += [p for p in self.pairs if p.subcarrier == n]
        return sorted(out, key=lambda c: c.id)

    @property
    def jd_nonconverged(self) -> int:
        return self.receive.jd_nonconverged


def decompose(
    realization: ChannelRealization, max_inactive: int = 1, tol=1e-8, max_iter=500
) -> Decomposition:
    """Full decomposition of one realization into SMCs and relay pairs."""
    ids = _ids_from()
    receive, p1 = phase1_decompose(realization, ids)
    for subset in transmitter_subsets(realization.num_relays, max_inactive):
        r, bad = phase2_receive_all(realization, subset, tol=tol, max_iter=max_iter)
        receive.r_u_t2[subset] = r
        receive.jd_nonconverged += bad
    p2 = phase2_decompose(realization, receive, ids)
    pairs = pair_relay_smcs(p1, p2, ids)
    return Decomposition(receive, p1, p2, pairs, realization.num_subcarriers)
