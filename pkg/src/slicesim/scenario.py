"""Scenario generation: random small-cell layouts and channel gains.

Conventions used throughout the package:
  * distances in meters, powers in milliwatts (dBm only at the config boundary)
  * channel gains are linear power ratios (transmit mW -> received mW)
  * all randomness flows through ``numpy.random.Generator`` objects
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Log-distance attenuation diverges as d -> 0; distances shorter than this
# are clamped before the gain computation so gains stay finite.
MIN_GAIN_DISTANCE_M = 1.0


def dbm_to_mw(value_dbm: float) -> float:
    """Convert a power from dBm to milliwatts."""
    return 10.0 ** (value_dbm / 10.0)


def path_loss_direct(distance_m: float) -> float:
    """Attenuation in dB between a station and its own user at ``distance_m``."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return 37.0 + 20.0 * math.log10(distance_m)


def path_loss_cross(distance_m: float, wall_loss_db: float = 15.0) -> float:
    """Attenuation in dB between a station and another station's user.

    Cross links additionally pay ``wall_loss_db`` for the interior wall
    separating neighbouring cells.
    """
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return 7.0 + 56.0 * math.log10(distance_m) + wall_loss_db


def linear_gain(pl_db: float, shadow_db: float = 0.0, fading: float = 1.0) -> float:
    """Linear channel gain for a given path loss, shadowing offset and fading draw."""
    return 10.0 ** (-(pl_db + shadow_db) / 10.0) * fading


def sample_channel_gain(pl_db: float, shadow_sigma_db: float, rng: np.random.Generator) -> float:
    """Draw one channel gain: log-normal shadowing plus unit-mean exponential fading.

    The exponential draw models the squared magnitude of a Rayleigh-faded
    amplitude; the shadowing term is normal in dB with ``shadow_sigma_db``.
    """
    if shadow_sigma_db < 0:
        raise ValueError(f"shadow sigma must be >= 0, got {shadow_sigma_db}")
    shadow_db = rng.normal(0.0, shadow_sigma_db)
    fading = rng.exponential(1.0)
    return linear_gain(pl_db, shadow_db, fading)


@dataclass(frozen=True)
class ScenarioConfig:
    """Immutable description of one simulated deployment."""

    num_mnos: int = 3                      # K: tenant operators leasing slices
    sbs_per_mno: int = 8                   # stations owned by each operator
    num_slices: int = 15                   # L: resource blocks offered for lease
    capacities: tuple[int, ...] = (2, 3, 4)  # per-operator slice quota c_k
    cell_radius: float = 500.0             # m, stations uniform in this disc
    ue_max_dist: float = 20.0              # m, each user within this of its station
    wall_loss_db: float = 15.0             # extra attenuation on cross links only
    shadow_sigma_db: float = 4.0           # log-normal shadowing std dev (dB)
    noise_dbm: float = -120.0              # thermal noise power
    sinr_threshold_db: float = 3.0         # QoS threshold
    max_power_dbm: float = 10.0            # total transmit power budget p_tot
    num_power_levels: int = 5              # N: discrete power levels incl. zero
    rng_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        if self.num_mnos < 1:
            raise ValueError("num_mnos must be >= 1")
        if self.sbs_per_mno < 1:
            raise ValueError("sbs_per_mno must be >= 1")
        if self.num_slices < 1:
            raise ValueError("num_slices must be >= 1")
        if len(self.capacities) != self.num_mnos:
            raise ValueError(
                f"capacities must have one entry per operator "
                f"({self.num_mnos}), got {len(self.capacities)}"
            )
        if any(c < 0 for c in self.capacities):
            raise ValueError("capacities must be >= 0")
        if self.cell_radius <= 0:
            raise ValueError("cell_radius must be positive")
        if self.ue_max_dist <= 0:
            raise ValueError("ue_max_dist must be positive")
        if self.wall_loss_db < 0:
            raise ValueError("wall_loss_db must be >= 0")
        if self.shadow_sigma_db < 0:
            raise ValueError("shadow_sigma_db must be >= 0")
        if self.num_power_levels < 2:
            raise ValueError("num_power_levels must be >= 2")

    @property
    def num_sbs(self) -> int:
        """Total station count across all operators."""
        return self.num_mnos * self.sbs_per_mno

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)

    @property
    def max_power_mw(self) -> float:
        return dbm_to_mw(self.max_power_dbm)

    @property
    def sinr_threshold(self) -> float:
        """QoS threshold as a linear ratio."""
        return dbm_to_mw(self.sinr_threshold_db)


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """One realised deployment: positions plus the full channel-gain tensor.

    ``gain[tx, rx, l]`` is the linear gain from station ``tx`` to the user
    served by station ``rx`` on resource block ``l``.  Shadowing is drawn once
    per (tx, rx) link; fading is drawn independently per resource block.
    """

    config: ScenarioConfig
    sbs_positions: np.ndarray    # (F, 2)
    ue_positions: np.ndarray     # (F, 2)
    mno_of_sbs: np.ndarray       # (F,) operator index per station
    gain: np.ndarray             # (F, F, L)

    @property
    def num_sbs(self) -> int:
        return self.sbs_positions.shape[0]

    @property
    def num_slices(self) -> int:
        return self.gain.shape[2]

    def sbs_of_mno(self, k: int) -> np.ndarray:
        """Indices of the stations owned by operator ``k``."""
        return np.flatnonzero(self.mno_of_sbs == k)


def _uniform_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def generate_topology(cfg: ScenarioConfig) -> NetworkTopology:
    """Sample a deployment deterministically from ``cfg.rng_seed``.

    Stations fall uniformly in a disc of ``cell_radius``; each user falls
    uniformly in a disc of ``ue_max_dist`` around its station.  Distances
    entering the gain formulas are clamped to ``MIN_GAIN_DISTANCE_M``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.num_sbs

    sbs_positions = _uniform_disc(n, cfg.cell_radius, rng)
    ue_positions = sbs_positions + _uniform_disc(n, cfg.ue_max_dist, rng)
    mno_of_sbs = np.repeat(np.arange(cfg.num_mnos), cfg.sbs_per_mno)

    # (tx, rx) distance from each station to each user
    delta = sbs_positions[:, None, :] - ue_positions[None, :, :]
    dist = np.maximum(np.hypot(delta[..., 0], delta[..., 1]), MIN_GAIN_DISTANCE_M)

    log_d = np.log10(dist)
    own_link = np.eye(n, dtype=bool)
    pl_db = np.where(
        own_link,
        37.0 + 20.0 * log_d,
        7.0 + 56.0 * log_d + cfg.wall_loss_db,
    )
    shadow_db = rng.normal(0.0, cfg.shadow_sigma_db, size=(n, n))
    fading = rng.exponential(1.0, size=(n, n, cfg.num_slices))
    # exponential() can in principle return exactly 0.0; keep gains positive
    fading = np.maximum(fading, np.finfo(float).tiny)

    gain = 10.0 ** (-(pl_db + shadow_db) / 10.0)
    gain = gain[:, :, None] * fading

    return NetworkTopology(
        config=cfg,
        sbs_positions=sbs_positions,
        ue_positions=ue_positions,
        mno_of_sbs=mno_of_sbs,
        gain=gain,
    )
