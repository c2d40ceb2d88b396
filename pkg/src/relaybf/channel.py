"""Radio constants, path loss and Rayleigh-faded MIMO channel draws."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .topology import CellTopology, NetworkConfig, link_distances


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class RadioParams:
    """Radio parameters, kept in the units they are configured in.

    Linear values are exposed as properties so that a configuration survives
    a text round trip without floating-point drift.
    """

    bandwidth_hz: float = 180e3
    noise_psd_dbm_hz: float = -174.0
    snr_gap_db: float = 0.0
    p_max_bs_dbm: float = 20.0
    p_max_rn_dbm: float = 10.0

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth_hz!r}")
        for name in ("noise_psd_dbm_hz", "snr_gap_db", "p_max_bs_dbm", "p_max_rn_dbm"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def noise_psd(self) -> float:
        """N0 in W/Hz."""
        return float(dbm_to_watt(self.noise_psd_dbm_hz))

    @property
    def snr_gap(self) -> float:
        return float(db_to_linear(self.snr_gap_db))

    @property
    def p_max_bs(self) -> float:
        return float(dbm_to_watt(self.p_max_bs_dbm))

    @property
    def p_max_rn(self) -> float:
        return float(dbm_to_watt(self.p_max_rn_dbm))

    @property
    def noise_power(self) -> float:
        """Noise power per subcarrier block, N0 * W, in watts."""
        return self.noise_psd * self.bandwidth_hz

    def with_powers(self, p_max_bs_dbm: float, p_max_rn_dbm: float) -> "RadioParams":
        return RadioParams(
            self.bandwidth_hz, self.noise_psd_dbm_hz, self.snr_gap_db, p_max_bs_dbm, p_max_rn_dbm
        )


class LinkKind(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class PathLossModel:
    """``PL(d) = intercept + slope * log10(d / 1 km)`` in dB.

    Defaults are macro-cell style constants: NLOS for BS-UE and RN-UE links,
    LOS for the BS-RN backhaul.
    """

    los_intercept: float = 100.7
    los_slope: float = 23.5
    nlos_intercept: float = 131.1
    nlos_slope: float = 42.8
    min_distance: float = 10.0

    def __post_init__(self):
        if not (self.los_slope > 0 and self.nlos_slope > 0):
            raise ValueError("path-loss slopes must be positive")
        if not self.min_distance > 0:
            raise ValueError("min_distance must be positive")

    def path_loss_db(self, distance, kind: LinkKind):
        d = np.asarray(distance, dtype=float)
        if np.any(~(d > 0)):
            raise ValueError("path loss is only defined for positive distances")
        if kind is LinkKind.LOS:
            return self.los_intercept + self.los_slope * np.log10(d / 1000.0)
        return self.nlos_intercept + self.nlos_slope * np.log10(d / 1000.0)


def path_loss_gain(distance, kind: LinkKind, model: PathLossModel = PathLossModel()):
    """Linear power gain ``10^(-PL(d)/10)`` for a distance in meters."""
    return 10.0 ** (-model.path_loss_db(distance, kind) / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    """All channel matrices of one Monte-Carlo draw.

    Attributes
    ----------
    h_bu : ndarray, shape (N, K, N_U, N_B)
    h_br : ndarray, shape (N, M, N_R, N_B)
    h_ru : ndarray, shape (N, M, K, N_U, N_R)
    """

    h_bu: np.ndarray
    h_br: np.ndarray
    h_ru: np.ndarray

    @property
    def num_subcarriers(self) -> int:
        return self.h_bu.shape[0]

    @property
    def num_ues(self) -> int:
        return self.h_bu.shape[1]

    @property
    def num_relays(self) -> int:
        return self.h_br.shape[1]

    def is_full_rank(self, tol: float = 1e-12) -> bool:
        """True when every matrix has rank ``min(rows, cols)``."""
        for h in (self.h_bu, self.h_br, self.h_ru):
            if h.size == 0:
                continue
            s = np.linalg.svd(h, compute_uv=False)
            if np.any(s[..., -1] <= tol * s[..., 0]):
                return False
        return True


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channels(
    topology: CellTopology,
    config: NetworkConfig,
    model: PathLossModel,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Independent Rayleigh fading per antenna pair and subcarrier block, scaled by path loss."""
    n, k, m = config.num_subcarriers, config.num_ues, config.num_relays
    dist = link_distances(topology)
    clamp = model.min_distance
    g_bu = path_loss_gain(np.maximum(dist.bs_ue, clamp), LinkKind.NLOS, model)
    g_br = path_loss_gain(np.maximum(dist.bs_rn, clamp), LinkKind.LOS, model)
    g_ru = path_loss_gain(np.maximum(dist.rn_ue, clamp), LinkKind.NLOS, model)

    h_bu = _cn(rng, (n, k, config.n_ue, config.n_bs)) * np.sqrt(g_bu)[None, :, None, None]
    h_br = _cn(rng, (n, m, config.n_rn, config.n_bs)) * np.sqrt(g_br)[None, :, None, None]
    h_ru = _cn(rng, (n, m, k, config.n_ue, config.n_rn)) * np.sqrt(g_ru)[None, :, :, None, None]
    return ChannelRealization(h_bu, h_br, h_ru)
