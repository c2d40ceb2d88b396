"""Monte-Carlo campaigns.

One sample is one random drop of UEs plus one fading realization. The
decomposition into SMCs is computed once per sample and shared by every
sweep point; ESGA runs once at the largest alpha of the sweep and smaller
alphas filter its output, which is exact because validity only gets easier
as alpha grows.

Seeding: sample ``i`` of a campaign with master seed ``s`` uses
``SeedSequence(s, spawn_key=(i,))``; its first 64-bit word is the sample
seed. ``SeedSequence(sample_seed).spawn(3)`` then feeds node placement,
fading and random group selection, in that order. Results therefore depend
only on the sample index, not on how samples are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .beamform import group_gains
from .capacity import batch_capacity, group_structure
from .channel import PathLossModel, RadioParams, draw_channels
from .decompose import decompose
from .grouping import (
    CandidateTable,
    EsgaLimitExceeded,
    GroupingParams,
    esga_indices,
    ocga_indices,
    pad_groups,
    prune_dominated,
    required_alpha,
    slot_codes,
)
from .topology import NetworkConfig, place_nodes

ALGORITHMS = ("esga", "ocga")
POLICIES = ("best", "random")


@dataclass(frozen=True)
class SweepPoint:
    var: str  # "alpha", "p_bs", "p_rn" or "none"
    value: float
    alpha: float
    p_bs_dbm: float
    p_rn_dbm: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run a campaign.

    ``alpha`` and the power limits inside ``radio`` are the base point.
    Each nonempty sweep varies one of them while the others stay at base;
    sweeps are run in the order alpha, BS power, relay power.
    """

    network: NetworkConfig
    radio: RadioParams
    alpha: float
    num_samples: int
    seed: int
    pathloss: PathLossModel = PathLossModel()
    alpha_sweep: tuple = ()
    p_bs_sweep: tuple = ()
    p_rn_sweep: tuple = ()
    algorithms: tuple = ALGORITHMS
    selection: str = "best"
    max_inactive: int = 1
    esga_limit: int = 10**6

    def __post_init__(self):
        if int(self.num_samples) != self.num_samples or self.num_samples < 1:
            raise ValueError(f"num_samples must be a positive integer, got {self.num_samples!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        for a in (self.alpha,) + tuple(self.alpha_sweep):
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"alpha must lie in [0, 1], got {a!r}")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("algorithms must not repeat")
        if self.selection not in POLICIES:
            raise ValueError(f"selection must be one of {POLICIES}")
        if int(self.max_inactive) != self.max_inactive or self.max_inactive < 0:
            raise ValueError("max_inactive must be a nonnegative integer")
        if int(self.esga_limit) != self.esga_limit or self.esga_limit < 1:
            raise ValueError("esga_limit must be a positive integer")
        for name in ("p_bs_sweep", "p_rn_sweep"):
            if not all(np.isfinite(v) for v in getattr(self, name)):
                raise ValueError(f"{name} values must be finite")

    @property
    def primary_algorithm(self) -> str:
        """The algorithm whose selected group gives the reported capacity."""
        return "ocga" if "ocga" in self.algorithms else "esga"

    def sweep_points(self) -> list:
        r = self.radio
        base = (self.alpha, r.p_max_bs_dbm, r.p_max_rn_dbm)
        pts = [SweepPoint("alpha", a, a, base[1], base[2]) for a in self.alpha_sweep]
        pts += [SweepPoint("p_bs", p, base[0], p, base[2]) for p in self.p_bs_sweep]
        pts += [SweepPoint("p_rn", p, base[0], base[1], p) for p in self.p_rn_sweep]
        return pts or [SweepPoint("none", float("nan"), *base)]

    def with_overrides(self, num_samples: Optional[int] = None, seed: Optional[int] = None):
        return replace(
            self,
            num_samples=self.num_samples if num_samples is None else num_samples,
            seed=self.seed if seed is None else seed,
        )


def _reference_network(num_ues: int, radius: float) -> NetworkConfig:
    return NetworkConfig(
        num_relays=2,
        num_ues=num_ues,
        n_bs=4,
        n_rn=4,
        n_ue=2,
        cell_radius=radius,
        bs_rn_distance_ratio=0.5,
        num_subcarriers=6,
    )


def preset_fig2() -> ExperimentConfig:
    """Optimality gap and group counts of OCGA against ESGA over alpha."""
    return ExperimentConfig(
        network=_reference_network(2, 750.0),
        radio=RadioParams(180e3, -174.0, 0.0, 20.0, 10.0),
        alpha=0.1,
        alpha_sweep=(0.1, 0.2, 0.3, 0.4, 0.5),
        algorithms=("esga", "ocga"),
        selection="best",
        num_samples=10_000,
        seed=0,
    )


def preset_fig3() -> ExperimentConfig:
    """Capacity of OCGA with random selection against BS and relay power."""
    return ExperimentConfig(
        network=_reference_network(10, 1750.0),
        radio=RadioParams(180e3, -174.0, 0.0, 20.0, 10.0),
        alpha=0.1,
        p_bs_sweep=(10.0, 15.0, 20.0, 25.0, 30.0),
        p_rn_sweep=(0.0, 5.0, 10.0, 15.0, 20.0),
        algorithms=("ocga",),
        selection="random",
        num_samples=10_000,
        seed=0,
    )


def sample_seed(master_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# One sample
# ---------------------------------------------------------------------------


@dataclass
class _Pool:
    """Surviving groups of one (subcarrier, algorithm, alpha)."""

    structure: object
    gains: np.ndarray


@dataclass
class PointRecord:
    """Outcome of one sample at one sweep point.

    Capacities are summed over subcarriers (bit/s); group counts are summed
    over subcarriers after pruning. ``nan`` marks an algorithm that did not
    run or a sample that was aborted.
    """

    capacity: float
    capacity_esga: float
    capacity_ocga: float
    groups_esga: float
    groups_ocga: float
    aborted: bool


@dataclass
class SampleResult:
    index: int
    seed: int
    points: list
    diagnostics: dict = field(default_factory=dict)


def _select(cap: np.ndarray, policy: str, u: float) -> float:
    if cap.size == 0:
        return 0.0
    if policy == "best":
        return float(cap.max())
    return float(cap[min(int(u * cap.size), cap.size - 1)])


def _subcarrier_pools(table: CandidateTable, alphas: list, algorithms, diag: dict):
    """Pruned group pools per algorithm and alpha; a missing ESGA entry means aborted."""
    pools: dict = {}
    a_max = max(alphas)
    esga_rows: dict = {}
    if "esga" in algorithms:
        try:
            found = esga_indices(table, a_max)
            todo = {a: None for a in alphas}
        except EsgaLimitExceeded:
            found = None
            todo = {}
            for a in alphas:
                try:
                    todo[a] = esga_indices(table, a)
                except EsgaLimitExceeded:
                    diag["esga_aborted"] += 1
        if found is not None:
            groups = pad_groups(found)
            req = required_alpha(table, groups)
            gains, ok = group_gains(table, groups)
            codes = slot_codes(table, groups)
            key_row = {g: i for i, g in enumerate(found)}
        for a, own in todo.items():
            if own is not None:
                groups = pad_groups(own)
                gains, ok = group_gains(table, groups)
                codes = slot_codes(table, groups)
                key_row = {g: i for i, g in enumerate(own)}
                sel = np.flatnonzero(ok)
            else:
                sel = np.flatnonzero(ok & (req <= a))
            diag["esga_raw"][a] += int(np.count_nonzero(req <= a)) if own is None else len(own)
            keep = sel[prune_dominated(codes[sel], gains[sel])]
            pools[("esga", a)] = _Pool(group_structure(table, groups[keep]), gains[keep])
            esga_rows[a] = (key_row, groups, gains, ok)
    if "ocga" in algorithms:
        for a in alphas:
            found = ocga_indices(table, a)
            diag["ocga_raw_max_ratio"] = max(diag["ocga_raw_max_ratio"], len(found) / table.size)
            diag["ocga_raw"][a] += len(found)
            if a in esga_rows:
                # Reuse the ESGA gains so both algorithms score a shared group identically.
                key_row, e_groups, e_gains, e_ok = esga_rows[a]
                rows = np.array([key_row[g] for g in found], dtype=np.int64)
                groups, gains, ok = e_groups[rows], e_gains[rows], e_ok[rows]
            else:
                groups = pad_groups(found)
                gains, ok = group_gains(table, groups)
            sel = np.flatnonzero(ok)
            keep = sel[prune_dominated(slot_codes(table, groups[sel]), gains[sel])]
            pools[("ocga", a)] = _Pool(group_structure(table, groups[keep]), gains[keep])
    return pools


def evaluate_sample(index: int, config: ExperimentConfig) -> SampleResult:
    """Run every sweep point of ``config`` on sample ``index``."""
    return _evaluate(index, sample_seed(config.seed, index), config)


def _evaluate(index: int, seed: int, config: ExperimentConfig) -> SampleResult:
    rng_top, rng_ch, rng_sel = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    net = config.network
    topology = place_nodes(net, rng_top)
    realization = draw_channels(topology, net, config.pathloss, rng_ch)
    u = rng_sel.random(net.num_subcarriers)
    dec = decompose(realization, max_inactive=config.max_inactive)
    points = config.sweep_points()
    alphas = sorted({p.alpha for p in points})
    diag = {
        "jd_nonconverged": dec.jd_nonconverged,
        "candidates": [],
        "esga_raw": {a: 0 for a in alphas},
        "ocga_raw": {a: 0 for a in alphas},
        "esga_aborted": 0,
        "ocga_raw_max_ratio": 0.0,
    }
    per_sc = []
    for n in range(net.num_subcarriers):
        cands = dec.candidates(n)
        diag["candidates"].append(len(cands))
        if not cands:
            per_sc.append({})
            continue
        params = GroupingParams.from_config(net, max(alphas), config.esga_limit)
        table = CandidateTable(cands, params)
        per_sc.append(_subcarrier_pools(table, alphas, config.algorithms, diag))

    records = []
    for pt in points:
        radio = config.radio.with_powers(pt.p_bs_dbm, pt.p_rn_dbm)
        totals = {alg: 0.0 for alg in config.algorithms}
        counts = {alg: 0 for alg in config.algorithms}
        aborted = False
        for n, pools in enumerate(per_sc):
            for alg in config.algorithms:
                pool = pools.get((alg, pt.alpha)) if pools else None
                if pool is None:
                    if pools:
                        aborted = True
                    continue
                cap = batch_capacity(pool.structure, pool.gains, radio, net.num_subcarriers)
                totals[alg] += _select(cap, config.selection, u[n])
                counts[alg] += cap.size
        nan = float("nan")
        if aborted:
            records.append(PointRecord(nan, nan, nan, nan, nan, True))
            continue
        records.append(
            PointRecord(
                capacity=totals[config.primary_algorithm],
                capacity_esga=totals.get("esga", nan),
                capacity_ocga=totals.get("ocga", nan),
                groups_esga=float(counts["esga"]) if "esga" in counts else nan,
                groups_ocga=float(counts["ocga"]) if "ocga" in counts else nan,
                aborted=False,
            )
        )
    return SampleResult(index, seed, records, diag)


def run_sample(
    sample_seed_value: int, config: ExperimentConfig, alpha: float, p_bs_dbm: float, p_rn_dbm: float
) -> PointRecord:
    """Single-point convenience wrapper: the sample whose seed is ``sample_seed_value``."""
    cfg = replace(
        config,
        radio=config.radio.with_powers(p_bs_dbm, p_rn_dbm),
        alpha=alpha,
        alpha_sweep=(),
        p_bs_sweep=(),
        p_rn_sweep=(),
    )
    return _evaluate(0, sample_seed_value, cfg).points[0]


# ---------------------------------------------------------------------------
# Campaigns
# ---------------------------------------------------------------------------


@dataclass
class PointSummary:
    point: SweepPoint
    mean_capacity: float
    stderr: float
    mean_groups_esga: float
    mean_groups_ocga: float
    norm_opt_gap: float
    samples_ok: int
    samples_aborted: int

    @property
    def valid(self) -> bool:
        return self.samples_ok > 0


@dataclass
class CampaignSummary:
    config: ExperimentConfig
    points: list
    samples: list
    metadata: dict

    @property
    def diagnostics(self) -> dict:
        return self.metadata["diagnostics"]


def _mean(x: np.ndarray) -> float:
    return float(np.mean(x)) if x.size else float("nan")


def summarize_point(point: SweepPoint, records: list, gap_applicable: bool) -> PointSummary:
    ok = [r for r in records if not r.aborted]
    cap = np.array([r.capacity for r in ok])
    n = cap.size
    stderr = float(np.std(cap, ddof=1) / math.sqrt(n)) if n > 1 else (0.0 if n == 1 else float("nan"))
    gap = float("nan")
    if gap_applicable and n:
        beta = _mean(np.array([r.capacity_ocga for r in ok]))
        beta_star = _mean(np.array([r.capacity_esga for r in ok]))
        gap = beta / beta_star - 1.0 if beta_star > 0 else float("nan")
    return PointSummary(
        point=point,
        mean_capacity=_mean(cap),
        stderr=stderr,
        mean_groups_esga=_mean(np.array([r.groups_esga for r in ok])),
        mean_groups_ocga=_mean(np.array([r.groups_ocga for r in ok])),
        norm_opt_gap=gap,
        samples_ok=n,
        samples_aborted=len(records) - n,
    )


def _evaluate_chunk(args):
    indices, config = args
    return [evaluate_sample(i, config) for i in indices]


def run_campaign(config: ExperimentConfig, threads: int = 1) -> CampaignSummary:
    """Run ``config.num_samples`` samples and aggregate per sweep point.

    With ``threads > 1`` samples are spread over worker processes; the
    reduction is always in sample order, so the summary does not depend on
    the worker count.
    """
    if threads < 1:
        raise ValueError("threads must be >= 1")
    indices = list(range(config.num_samples))
    if threads == 1 or config.num_samples == 1:
        samples = [evaluate_sample(i, config) for i in indices]
    else:
        size = max(1, math.ceil(len(indices) / (4 * threads)))
        chunks = [(indices[i : i + size], config) for i in range(0, len(indices), size)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            samples = [s for part in pool.map(_evaluate_chunk, chunks) for s in part]
    points = config.sweep_points()
    gap_applicable = set(config.algorithms) == set(ALGORITHMS) and config.selection == "best"
    summaries = [
        summarize_point(pt, [s.points[j] for s in samples], gap_applicable) for j, pt in enumerate(points)
    ]
    return CampaignSummary(config, summaries, samples, _metadata(config, samples, gap_applicable))


def _metadata(config: ExperimentConfig, samples: list, gap_applicable: bool) -> dict:
    cand = [c for s in samples for c in s.diagnostics["candidates"]]
    return {
        "capacity": "sum over all subcarrier blocks, bit/s, two-phase factor 1/2 included",
        "group_counts": "summed over subcarrier blocks, after dedup, rank check and dominance pruning",
        "optimality_gap": (
            "mean(best OCGA capacity) / mean(best ESGA capacity) - 1; the reference is the best "
            "ESGA group under equal power allocation, not an optimized power allocation"
            if gap_applicable
            else "not applicable"
        ),
        "seeding": "sample i uses SeedSequence(master_seed, spawn_key=(i,)).generate_state(1, uint64)[0]",
        "primary_algorithm": config.primary_algorithm,
        "selection": config.selection,
        "diagnostics": {
            "jd_nonconverged": int(sum(s.diagnostics["jd_nonconverged"] for s in samples)),
            "esga_aborted_subcarriers": int(sum(s.diagnostics["esga_aborted"] for s in samples)),
            "mean_candidates_per_subcarrier": float(np.mean(cand)) if cand else 0.0,
            "max_ocga_raw_to_candidates": float(
                max((s.diagnostics["ocga_raw_max_ratio"] for s in samples), default=0.0)
            ),
        },
    }
