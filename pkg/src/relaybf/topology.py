"""Cell geometry: BS at the origin, relays on a ring, UEs uniform in the disc."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of the cell and its antenna counts.

    Distances are in meters. ``num_relays`` may be zero, which turns the
    network into a plain multi-user MIMO downlink.
    """

    num_relays: int
    num_ues: int
    n_bs: int
    n_rn: int
    n_ue: int
    cell_radius: float
    bs_rn_distance_ratio: float
    num_subcarriers: int

    def __post_init__(self):
        for name in ("num_ues", "n_bs", "n_rn", "n_ue", "num_subcarriers"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
        if int(self.num_relays) != self.num_relays or self.num_relays < 0:
            raise ValueError(f"num_relays must be an integer >= 0, got {self.num_relays!r}")
        if not self.cell_radius > 0:
            raise ValueError(f"cell_radius must be positive, got {self.cell_radius!r}")
        if not 0 < self.bs_rn_distance_ratio < 1:
            raise ValueError(
                f"bs_rn_distance_ratio must lie in (0, 1), got {self.bs_rn_distance_ratio!r}"
            )

    @property
    def antennas(self) -> tuple[int, int, int]:
        return (self.n_bs, self.n_rn, self.n_ue)


@dataclass(frozen=True)
class CellTopology:
    bs_position: np.ndarray
    rn_positions: np.ndarray  # (M, 2)
    ue_positions: np.ndarray  # (K, 2)


@dataclass(frozen=True)
class LinkDistances:
    bs_ue: np.ndarray  # (K,)
    bs_rn: np.ndarray  # (M,)
    rn_ue: np.ndarray  # (M, K)


def relay_positions(config: NetworkConfig) -> np.ndarray:
    """Relays evenly spaced on a ring, the first one on the +x axis."""
    d = config.bs_rn_distance_ratio * config.cell_radius
    angles = 2 * np.pi * np.arange(config.num_relays) / max(config.num_relays, 1)
    return d * np.column_stack([np.cos(angles), np.sin(angles)])


def place_nodes(config: NetworkConfig, rng: np.random.Generator) -> CellTopology:
    """Draw one cell layout. Only the UE positions are random."""
    k = config.num_ues
    radius = config.cell_radius * np.sqrt(rng.random(k))
    theta = 2 * np.pi * rng.random(k)
    ues = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
    return CellTopology(np.zeros(2), relay_positions(config), ues)


def link_distances(topology: CellTopology) -> LinkDistances:
    bs = topology.bs_position
    rn = topology.rn_positions.reshape(-1, 2)
    ue = topology.ue_positions.reshape(-1, 2)
    return LinkDistances(
        bs_ue=np.linalg.norm(ue - bs, axis=1),
        bs_rn=np.linalg.norm(rn - bs, axis=1),
        rn_ue=np.linalg.norm(rn[:, None, :] - ue[None, :, :], axis=2),
    )
