"""Edge-server offloading delays and caching budget allocation.

A station's file request is served by the edge server in whole time slots,
then pushed over the radio link.  The operator buys fractions of station
capacity under a probabilistic deadline: with total delay D_f and deadline
D_th, Markov's bound gives P(D_f >= D_th) <= E[D_f] / D_th, so spending
y_f * D_f within the budget eps * D_th keeps every purchased fraction's
violation mass within eps.  The budget is filled greedily by ascending
cost-per-delay, which is optimal for the fractional relaxation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Time-slot counts within this of an integer are treated as exact, so float
# noise cannot bump a perfectly divisible workload to an extra slot.
_SLOT_SNAP = 1e-9


@dataclass(frozen=True)
class MecConfig:
    file_bits: float = 100.0            # x_f: requested content size (bits)
    cpu_cycles_per_bit: float = 15.0    # tau
    server_speed: float = 20.0          # s_m: cycles per second
    slot_len: float = 0.9               # Q_m: seconds per server time slot
    tx_window: float = 1.0              # T_s: seconds of radio transmission
    delay_threshold: float = 0.001      # D_th: deadline (seconds)
    tolerance: float = 0.3              # eps: allowed violation mass
    sbs_prices: tuple[float, ...] = (50, 80, 200, 500, 800, 1000, 300, 400)

    def __post_init__(self) -> None:
        object.__setattr__(self, "sbs_prices", tuple(float(p) for p in self.sbs_prices))
        for name in ("file_bits", "cpu_cycles_per_bit", "server_speed",
                     "slot_len", "tx_window", "delay_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must be in (0, 1)")
        if any(p < 0 for p in self.sbs_prices):
            raise ValueError("sbs_prices must be >= 0")


def service_delay(cfg: MecConfig) -> float:
    """Server-side delay: the workload rounded up to whole time slots.

    n = ceil(tau * x_f / (s_m * Q_m)) slots of Q_m seconds each.
    """
    slots_needed = cfg.cpu_cycles_per_bit * cfg.file_bits / (cfg.server_speed * cfg.slot_len)
    n = math.ceil(slots_needed - _SLOT_SNAP)
    return n * cfg.slot_len


def downlink_delay(file_bits: float, rate: float, tx_window: float) -> float:
    """Radio-link delay x_f / (R * T_s); infinite when the rate is zero."""
    if file_bits < 0:
        raise ValueError("file_bits must be >= 0")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if tx_window <= 0:
        raise ValueError("tx_window must be positive")
    if file_bits == 0:
        return 0.0
    if rate == 0.0:
        return math.inf
    return file_bits / (rate * tx_window)


@dataclass(frozen=True)
class DelayProfile:
    """Per-station delay components (seconds)."""

    service: np.ndarray
    downlink: np.ndarray
    total: np.ndarray


def total_delay(service: np.ndarray, downlink: np.ndarray) -> DelayProfile:
    """Componentwise sum of the server and radio delays."""
    service = np.asarray(service, dtype=float)
    downlink = np.asarray(downlink, dtype=float)
    if service.shape != downlink.shape:
        raise ValueError("service and downlink delays must align")
    return DelayProfile(service=service, downlink=downlink, total=service + downlink)


def delay_profile(rates: np.ndarray, cfg: MecConfig) -> DelayProfile:
    """Delays of each station given its expected rate (zero rate -> inf)."""
    rates = np.asarray(rates, dtype=float)
    service = np.full(rates.shape, service_delay(cfg))
    downlink = np.array([downlink_delay(cfg.file_bits, r, cfg.tx_window) for r in rates])
    return total_delay(service, downlink)


def knapsack_capacity(tolerance: float, delay_threshold: float) -> float:
    """Delay budget eps * D_th shared by all purchased fractions."""
    if not 0.0 < tolerance < 1.0:
        raise ValueError("tolerance must be in (0, 1)")
    if delay_threshold <= 0:
        raise ValueError("delay_threshold must be positive")
    return tolerance * delay_threshold


@dataclass(frozen=True)
class KnapsackSolution:
    """Purchased fraction per station plus solution totals."""

    fractions: np.ndarray     # y_f in [0, 1], original item order
    total_cost: float         # sum c_f * y_f
    consumed: float           # sum y_f * D_f


def fractional_knapsack(costs, delays, capacity: float) -> KnapsackSolution:
    """Fill the delay budget by ascending cost-per-delay.

    Items are taken whole while they fit; the first item that does not fit is
    taken fractionally so the budget closes exactly, and everything after it
    (in ratio order) stays at zero.  Ratio ties break toward the lower item
    index.  Items with infinite delay are never purchased.
    """
    costs = np.asarray(costs, dtype=float)
    delays = np.asarray(delays, dtype=float)
    if costs.shape != delays.shape or costs.ndim != 1:
        raise ValueError("costs and delays must be 1-d and aligned")
    if np.any(costs < 0):
        raise ValueError("costs must be >= 0")
    if np.any(delays <= 0):
        raise ValueError("delays must be positive")
    if capacity < 0:
        raise ValueError("capacity must be >= 0")

    y = np.zeros(costs.size)
    finite = np.isfinite(delays)
    order = np.flatnonzero(finite)
    ratio = costs[order] / delays[order]
    order = order[np.argsort(ratio, kind="stable")]

    remaining = capacity
    for idx in order:
        d = delays[idx]
        if d <= remaining:
            y[idx] = 1.0
            remaining -= d
        else:
            y[idx] = remaining / d
            remaining = 0.0
            break

    # Tracked subtraction keeps consumed <= capacity even at float precision.
    consumed = float(capacity - remaining)
    total_cost = float(np.dot(y, costs))
    return KnapsackSolution(fractions=y, total_cost=total_cost, consumed=consumed)
