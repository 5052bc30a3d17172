"""Link-level rate model: SINR, spectral efficiency, expected per-station rates.

Because each resource block is leased to at most one operator, interference
is confined to stations of the same operator that landed on the same block.
Rate expectations therefore decompose per operator, and all samplers here
work on one operator's stations at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import NetworkTopology

DEFAULT_NUM_DRAWS = 200

# Joint block-choice enumerations larger than this are refused.
MAX_EXACT_JOINT_CHOICES = 1_000_000

_ENUM_CHUNK = 65536


@dataclass
class PowerAssignment:
    """A momentary snapshot: per-station transmit power and chosen block.

    ``rb_choice[f] == -1`` marks a station that is not transmitting (its
    operator holds no slice).
    """

    power_mw: np.ndarray   # (F,)
    rb_choice: np.ndarray  # (F,) int


@dataclass
class RateReport:
    """Expected rates, per station and aggregated per operator (bits/s/Hz)."""

    rate_per_sbs: np.ndarray  # (F,)
    rate_per_mno: np.ndarray  # (K,)


def sinr(f: int, l: int, pa: PowerAssignment, topo: NetworkTopology) -> float:
    """SINR of station ``f`` transmitting on block ``l``.

    Interference comes from same-operator stations whose current block choice
    is also ``l``.  Callers are responsible for only passing blocks that the
    station's operator actually holds.
    """
    p_f = float(pa.power_mw[f])
    if p_f == 0.0:
        return 0.0
    same_mno = topo.mno_of_sbs == topo.mno_of_sbs[f]
    colliding = same_mno & (pa.rb_choice == l)
    colliding[f] = False
    interference = float(np.sum(topo.gain[colliding, f, l] * pa.power_mw[colliding]))
    return topo.gain[f, f, l] * p_f / (interference + topo.config.noise_mw)


def rate_fixed(f: int, l: int, pa: PowerAssignment, topo: NetworkTopology) -> float:
    """Spectral efficiency log2(1 + SINR) for one momentary assignment."""
    return math.log2(1.0 + sinr(f, l, pa, topo))


def as_power_table(power, num_sbs: int) -> np.ndarray:
    """Normalise a power spec to a (F, 2) per-state table in mW.

    Accepts a scalar (same power always), a (F,) vector (per-station power,
    state-independent), or a (F, 2) table (column s is the power used when
    the station's QoS state is s).
    """
    arr = np.asarray(power, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("transmit powers must be non-negative")
    if arr.ndim == 0:
        return np.full((num_sbs, 2), float(arr))
    if arr.ndim == 1:
        if arr.shape[0] != num_sbs:
            raise ValueError(f"power vector length {arr.shape[0]} != station count {num_sbs}")
        return np.column_stack((arr, arr))
    if arr.shape != (num_sbs, 2):
        raise ValueError(f"power table must be ({num_sbs}, 2), got {arr.shape}")
    return arr


def _is_state_independent(table: np.ndarray) -> bool:
    return bool(np.all(table[:, 0] == table[:, 1]))


def _joint_rates(gain_k: np.ndarray, slice_ids: np.ndarray, powers: np.ndarray,
                 rbs: np.ndarray, noise_mw: float) -> tuple[np.ndarray, np.ndarray]:
    """Rates and SINRs for a batch of joint block choices of one operator.

    gain_k: (Fk, Fk, L) gain tensor restricted to the operator's stations,
    powers/rbs: (D, Fk) per-draw transmit powers (mW) and block choices.
    Returns (rates, sinrs), each (D, Fk).
    """
    d, fk = rbs.shape
    sinrs = np.zeros((d, fk))
    for l in slice_ids:
        on = rbs == l                            # (D, Fk) stations using block l
        if not on.any():
            continue
        tx = powers * on                         # (D, Fk) radiated power on l
        g = gain_k[:, :, l]                      # (Fk tx, Fk rx)
        rx_total = tx @ g                        # (D, Fk) all arriving power on l
        direct = tx * np.diag(g)                 # own-signal component
        with np.errstate(invalid="ignore"):
            s = direct / (rx_total - direct + noise_mw)
        sinrs += np.where(on, s, 0.0)
    rates = np.log2(1.0 + sinrs)
    return rates, sinrs


def _mno_rate_samples(k: int, matching, power_table: np.ndarray,
                      topo: NetworkTopology, num_draws: int,
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Rate samples for operator ``k``'s stations. Returns (sbs_idx, (D, Fk))."""
    sbs_idx = topo.sbs_of_mno(k)
    slice_ids = np.asarray(matching.slices_of(k), dtype=int)
    if slice_ids.size == 0:
        return sbs_idx, np.zeros((num_draws, sbs_idx.size))
    gain_k = topo.gain[np.ix_(sbs_idx, sbs_idx)]
    table = power_table[sbs_idx]
    noise = topo.config.noise_mw
    fk = sbs_idx.size

    if _is_state_independent(table):
        rbs = slice_ids[rng.integers(0, slice_ids.size, size=(num_draws, fk))]
        powers = np.broadcast_to(table[:, 0], (num_draws, fk))
        rates, _ = _joint_rates(gain_k, slice_ids, powers, rbs, noise)
        return sbs_idx, rates

    # State-dependent powers: the QoS state observed from the previous draw
    # selects this draw's power, so draws are simulated sequentially.
    threshold = topo.config.sinr_threshold
    state = np.ones(fk, dtype=int)  # start from the satisfied state
    rows = np.arange(fk)
    out = np.empty((num_draws, fk))
    for d in range(num_draws):
        rbs = slice_ids[rng.integers(0, slice_ids.size, size=(1, fk))]
        powers = table[rows, state][None, :]
        rates, sinrs = _joint_rates(gain_k, slice_ids, powers, rbs, noise)
        out[d] = rates[0]
        state = (sinrs[0] >= threshold).astype(int)
    return sbs_idx, out


def rate_samples(f: int, matching, power, topo: NetworkTopology,
                 num_draws: int = DEFAULT_NUM_DRAWS,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Independent per-draw rate samples for station ``f``.

    Only defined for state-independent powers, where the joint block draws
    are i.i.d. across draws.
    """
    if rng is None:
        raise ValueError("rng is required for reproducible sampling")
    table = as_power_table(power, topo.num_sbs)
    if not _is_state_independent(table):
        raise ValueError("rate_samples requires state-independent powers")
    k = int(topo.mno_of_sbs[f])
    sbs_idx, rates = _mno_rate_samples(k, matching, table, topo, num_draws, rng)
    col = int(np.flatnonzero(sbs_idx == f)[0])
    return rates[:, col]


def rate_expected(f: int, matching, power, topo: NetworkTopology,
                  num_draws: int = DEFAULT_NUM_DRAWS,
                  rng: np.random.Generator | None = None) -> float:
    """Monte Carlo expected rate of station ``f`` under uniform block choices.

    Each draw re-picks every same-operator station's block uniformly from the
    operator's leased slices.  Returns 0 when the operator holds no slice.
    """
    if rng is None:
        raise ValueError("rng is required for reproducible sampling")
    table = as_power_table(power, topo.num_sbs)
    k = int(topo.mno_of_sbs[f])
    sbs_idx, rates = _mno_rate_samples(k, matching, table, topo, num_draws, rng)
    col = int(np.flatnonzero(sbs_idx == f)[0])
    return float(rates[:, col].mean())


def mno_expected_rates(k: int, matching, power, topo: NetworkTopology,
                       num_draws: int = DEFAULT_NUM_DRAWS,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Expected rate of each station of operator ``k``, as a full (F,) vector."""
    if rng is None:
        raise ValueError("rng is required for reproducible sampling")
    table = as_power_table(power, topo.num_sbs)
    sbs_idx, rates = _mno_rate_samples(k, matching, table, topo, num_draws, rng)
    out = np.zeros(topo.num_sbs)
    out[sbs_idx] = rates.mean(axis=0)
    return out


def mno_rate(k: int, matching, power, topo: NetworkTopology,
             num_draws: int = DEFAULT_NUM_DRAWS,
             rng: np.random.Generator | None = None) -> float:
    """Sum of expected rates over operator ``k``'s stations."""
    return float(mno_expected_rates(k, matching, power, topo, num_draws, rng).sum())


def mno_rates_exact(k: int, matching, power, topo: NetworkTopology,
                    max_joint_choices: int = MAX_EXACT_JOINT_CHOICES) -> np.ndarray:
    """Exact expected rate of each station of operator ``k`` (full (F,) vector).

    Enumerates every joint block choice of the operator's stations with equal
    weight; other operators cannot interfere and are ignored.  Requires
    state-independent powers.
    """
    table = as_power_table(power, topo.num_sbs)
    if not _is_state_independent(table):
        raise ValueError("exact rate expectation requires state-independent powers")
    sbs_idx = topo.sbs_of_mno(k)
    slice_ids = np.asarray(matching.slices_of(k), dtype=int)
    out = np.zeros(topo.num_sbs)
    if slice_ids.size == 0:
        return out
    fk = sbs_idx.size
    total = slice_ids.size ** fk
    if total > max_joint_choices:
        raise ValueError(
            f"joint block-choice space has {total} points, "
            f"over the exact-enumeration bound {max_joint_choices}"
        )
    gain_k = topo.gain[np.ix_(sbs_idx, sbs_idx)]
    power_vec = table[sbs_idx, 0]
    noise = topo.config.noise_mw

    acc = np.zeros(fk)
    grids = np.meshgrid(*([slice_ids] * fk), indexing="ij")
    joint = np.stack([g.ravel() for g in grids], axis=1)  # (total, Fk)
    for start in range(0, total, _ENUM_CHUNK):
        chunk = joint[start:start + _ENUM_CHUNK]
        powers = np.broadcast_to(power_vec, chunk.shape)
        rates, _ = _joint_rates(gain_k, slice_ids, powers, chunk, noise)
        acc += rates.sum(axis=0)
    out[sbs_idx] = acc / total
    return out


def rate_report(matching, power, topo: NetworkTopology,
                num_draws: int = DEFAULT_NUM_DRAWS,
                rng: np.random.Generator | None = None,
                exact: bool = False) -> RateReport:
    """Expected rates for every operator, per station and per operator."""
    k_count = topo.config.num_mnos
    per_sbs = np.zeros(topo.num_sbs)
    for k in range(k_count):
        if exact:
            per_sbs += mno_rates_exact(k, matching, power, topo)
        else:
            per_sbs += mno_expected_rates(k, matching, power, topo, num_draws, rng)
    per_mno = np.array([per_sbs[topo.sbs_of_mno(k)].sum() for k in range(k_count)])
    return RateReport(rate_per_sbs=per_sbs, rate_per_mno=per_mno)
