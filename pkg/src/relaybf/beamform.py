"""Zero-forcing transmit beamforming for a selected SMC group.

Phase 1: the BS inverts the matrix of all selected phase-1 rows. Phase 2:
every active transmitter inverts the matrix of *all* selected phase-2 rows
seen through its own channel, and spends power only on the columns of the
streams it serves. The other columns are never transmitted; they exist so
that the served columns are orthogonal to every other stream's combiner.

With unit-norm columns the effective gain of stream ``i`` is
``|w_i|^2 = 1 / ||t_i||^2 = 1 / [(H H^H)^-1]_ii``; :func:`zf_gains` evaluates
that for whole batches of groups at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import RadioParams
from .decompose import BS, SmcKind
from .grouping import CandidateTable, SmcGroup
from .matrixkit import SingularMatrixError, right_inverse

#: Refined matrices (rows scaled to unit norm) above this condition number are rejected.
MAX_CONDITION = 1e10


class GroupRejected(ValueError):
    """The refined matrix of a group is (numerically) rank deficient."""


def _check_condition(h: np.ndarray) -> None:
    hn = h / np.linalg.norm(h, axis=1, keepdims=True)
    s = np.linalg.svd(hn, compute_uv=False)
    if s.size < h.shape[0] or not s[-1] > 0 or s[0] / s[-1] > MAX_CONDITION:
        raise GroupRejected(f"refined matrix of shape {h.shape} is ill-conditioned")


def _zf(h: np.ndarray):
    _check_condition(h)
    try:
        t = right_inverse(h)
    except SingularMatrixError as exc:  # pragma: no cover - caught by the condition check
        raise GroupRejected(str(exc)) from exc
    w = 1.0 / np.linalg.norm(t, axis=0)
    return t, w


@dataclass
class BeamformerSet:
    """ZF matrices and unit-power weights of one group.

    ``t1``/``w1`` belong to the BS in phase 1, with columns in the order of
    ``ids_t1``. ``t2[tx]``/``w2[tx]`` are the phase-2 matrices of transmitter
    ``tx`` (``BS`` or relay index) with columns in the order of ``ids_t2``;
    weights of streams served by another transmitter are zero.
    """

    ids_t1: list
    t1: Optional[np.ndarray]
    w1: np.ndarray
    ids_t2: list
    served_by: list
    t2: dict = field(default_factory=dict)
    w2: dict = field(default_factory=dict)

    def precoder_t1(self) -> Optional[np.ndarray]:
        return None if self.t1 is None else self.t1 * self.w1

    def precoder_t2(self, tx: int) -> np.ndarray:
        return self.t2[tx] * self.w2[tx]


def zf_phase1(group: SmcGroup):
    """``(T, w)`` of the phase-1 BS transmission, or ``(None, empty)`` if unused."""
    rows = [s.row for s in group.members_t1]
    if not rows:
        return None, np.zeros(0)
    return _zf(np.array(rows))


def zf_phase2(group: SmcGroup) -> dict:
    """Per active transmitter: ``(T, w)`` with ``w`` zero on streams it does not serve."""
    smcs = group.members_t2
    out = {}
    for tx in sorted({s.transmitter for s in smcs}):
        h = np.array([s.tx_rows[tx] for s in smcs])
        t, w = _zf(h)
        served = np.array([s.transmitter == tx for s in smcs])
        out[tx] = (t, np.where(served, w, 0.0))
    return out


def beamform(group: SmcGroup) -> BeamformerSet:
    """Both phases at once; raises :class:`GroupRejected` for rank-deficient groups."""
    t1, w1 = zf_phase1(group)
    p2 = zf_phase2(group)
    smcs = group.members_t2
    return BeamformerSet(
        ids_t1=[s.id for s in group.members_t1],
        t1=t1,
        w1=w1,
        ids_t2=[s.id for s in smcs],
        served_by=[s.transmitter for s in smcs],
        t2={tx: v[0] for tx, v in p2.items()},
        w2={tx: v[1] for tx, v in p2.items()},
    )


@dataclass
class CnrSet:
    """Effective CNRs (per watt of transmit power), keyed by SMC id."""

    g_bu_t1: dict
    g_br_t1: dict
    g_bu_t2: dict
    g_ru_t2: dict

    def get(self, smc_id: int) -> float:
        for d in (self.g_bu_t1, self.g_br_t1, self.g_bu_t2, self.g_ru_t2):
            if smc_id in d:
                return d[smc_id]
        raise KeyError(smc_id)


def cnr_from_weight(w, radio: RadioParams):
    """``|w|^2 / (gap * N0 * W)``."""
    return np.abs(w) ** 2 / (radio.snr_gap * radio.noise_power)


def effective_cnrs(group: SmcGroup, beamformers: BeamformerSet, radio: RadioParams) -> CnrSet:
    out = CnrSet({}, {}, {}, {})
    for s, w in zip(group.members_t1, beamformers.w1):
        target = out.g_bu_t1 if s.kind is SmcKind.BU_T1 else out.g_br_t1
        target[s.id] = float(cnr_from_weight(w, radio))
    for j, s in enumerate(group.members_t2):
        w = beamformers.w2[s.transmitter][j]
        target = out.g_bu_t2 if s.transmitter == BS else out.g_ru_t2
        target[s.id] = float(cnr_from_weight(w, radio))
    return out


# ---------------------------------------------------------------------------
# Batched gains
# ---------------------------------------------------------------------------


def zf_gains(rows: np.ndarray):
    """Squared ZF weights for a batch of refined matrices.

    Parameters
    ----------
    rows : complex array (B, q, n)
        Nonzero rows, ``q <= n``.

    Returns
    -------
    gains : float array (B, q)
        ``1 / [(H H^H)^-1]_ii``; zero for rejected matrices.
    ok : bool array (B,)
        False where the row-normalized matrix has condition number above
        :data:`MAX_CONDITION`.
    """
    b, q, _ = rows.shape
    if b == 0 or q == 0:
        return np.zeros((b, q)), np.ones(b, dtype=bool)
    d = np.linalg.norm(rows, axis=2)
    zero = (d == 0).any(axis=1)
    d = np.where(d == 0, 1.0, d)
    hn = rows / d[:, :, None]
    gram = hn @ hn.conj().transpose(0, 2, 1)
    with np.errstate(all="ignore"):
        try:
            inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            inv = np.full_like(gram, np.nan)
        kappa = np.linalg.norm(gram, axis=(1, 2)) * np.linalg.norm(inv, axis=(1, 2))
        diag = np.real(np.diagonal(inv, axis1=1, axis2=2))
    # kappa_F bounds the 2-norm condition of the Gram matrix, which is the
    # square of the condition of the rows themselves.
    slow = ~np.isfinite(kappa) | (kappa > 1e8) | ~np.isfinite(diag).all(axis=1)
    slow &= ~zero
    ok = ~zero
    gains = np.zeros((b, q))
    fast = ~slow & ~zero
    gains[fast] = d[fast] ** 2 / diag[fast]
    if slow.any():
        u, s, _ = np.linalg.svd(hn[slow], full_matrices=False)
        good = (s[:, -1] > 0) & (s[:, 0] <= MAX_CONDITION * s[:, -1])
        with np.errstate(all="ignore"):
            col = (np.abs(u) ** 2 / s[:, None, :] ** 2).sum(axis=2)
            g = np.where(good[:, None], d[slow] ** 2 / col, 0.0)
        gains[slow] = g
        ok[slow] = good
    return gains, ok


def _stack_rows(members: np.ndarray, mask: np.ndarray):
    """Move the masked member slots of each group to the front (stable)."""
    order = np.argsort(~mask, axis=1, kind="stable")
    return np.take_along_axis(members, order, axis=1), order, mask.sum(axis=1)


def group_gains(table: CandidateTable, groups: np.ndarray):
    """Per-slot ZF gains for many groups of one subcarrier.

    Parameters
    ----------
    table : CandidateTable
    groups : int array (G, S)
        Candidate indices per group, padded with -1.

    Returns
    -------
    gains : float array (G, S, 2)
        ``|w|^2`` of each member's phase-1 and phase-2 stream (zero if absent).
    ok : bool array (G,)
        False for groups with a rank-deficient refined matrix.
    """
    g_count, width = groups.shape
    gains = np.zeros((g_count, width, 2))
    ok = np.ones(g_count, dtype=bool)
    if g_count == 0:
        return gains, ok
    present = groups >= 0
    safe = np.where(present, groups, 0)

    m1 = present & table.has1[safe]
    sorted1, order1, q1 = _stack_rows(safe, m1)
    for q in np.unique(q1):
        if q == 0:
            continue
        sel = np.flatnonzero(q1 == q)
        rows = table.row1[sorted1[sel, :q]]
        g, good = zf_gains(rows)
        ok[sel] &= good
        gains[sel[:, None], order1[sel, :q], 0] = g

    m2 = present & table.has2[safe]
    sorted2, order2, q2 = _stack_rows(safe, m2)
    tx_of = np.where(m2, table.tx2[safe], -1)
    for q in np.unique(q2):
        if q == 0:
            continue
        sel_q = np.flatnonzero(q2 == q)
        members = sorted2[sel_q, :q]
        slots = order2[sel_q, :q]
        serving = np.take_along_axis(tx_of[sel_q], slots, axis=1)
        for t in range(table.num_tx):
            uses = (serving == t).any(axis=1)
            if not uses.any():
                continue
            sel = sel_q[uses]
            rows = table.rows2[members[uses], t]
            g, good = zf_gains(rows)
            ok[sel] &= good
            own = serving[uses] == t
            gi, si = np.nonzero(own)
            gains[sel[gi], slots[uses][gi, si], 1] = g[gi, si]
    gains[~ok] = 0.0
    return gains, ok
