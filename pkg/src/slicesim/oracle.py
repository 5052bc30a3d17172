"""Brute-force reference implementations for desk-scale instances.

These enumerate what the samplers and the swap search only approximate, so
tests can compare both routes.  Every function refuses inputs whose
enumeration would not finish at a desk.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import radio
from .matching import (
    Matching,
    max_power_level,
    propose_swap,  # noqa: F401  (re-exported convenience for stability checks)
    validate_matching,
)
from .scenario import NetworkTopology

MAX_ENUM_SLICES = 8
MAX_ENUM_MNOS = 3


@dataclass
class OracleResult:
    optimal_welfare: float
    optimal_matching: Matching
    num_enumerated: int  # valid matchings examined


def _exact_mno_rate(k: int, m: Matching, topo: NetworkTopology,
                    power_mw: float, cache: dict) -> float:
    key = (k, tuple(int(l) for l in m.slices_of(k)))
    hit = cache.get(key)
    if hit is None:
        hit = float(radio.mno_rates_exact(k, m, power_mw, topo).sum())
        cache[key] = hit
    return hit


def _exact_welfare(m: Matching, topo: NetworkTopology, power_mw: float,
                   cache: dict) -> float:
    total = 0.0
    for k in range(topo.config.num_mnos):
        if m.slices_of(k).size:
            total += _exact_mno_rate(k, m, topo, power_mw, cache)
    return total


def exhaustive_matching(topo: NetworkTopology, capacities=None,
                        power_mode: str = "uniform") -> OracleResult:
    """Globally optimal matching by enumerating every valid ownership vector.

    Welfare is the exact expected rate (full block-choice enumeration) with
    every station at the top power level; only deterministic power modes can
    be enumerated, so ``power_mode`` must be ``"uniform"``.
    """
    if power_mode != "uniform":
        raise ValueError(f"only power_mode='uniform' can be enumerated, got {power_mode!r}")
    cfg = topo.config
    caps = np.asarray(cfg.capacities if capacities is None else capacities, dtype=int)
    L = cfg.num_slices
    K = caps.size
    if L > MAX_ENUM_SLICES or K > MAX_ENUM_MNOS:
        raise ValueError(
            f"instance too large to enumerate (L={L} > {MAX_ENUM_SLICES} "
            f"or K={K} > {MAX_ENUM_MNOS})"
        )

    power_mw = max_power_level(cfg)
    cache: dict = {}
    best_welfare = -math.inf
    best: Matching | None = None
    valid_count = 0
    for owner in itertools.product(range(-1, K), repeat=L):
        m = Matching(np.array(owner, dtype=int))
        if not np.all(m.counts(K) <= caps):
            continue
        valid_count += 1
        w = _exact_welfare(m, topo, power_mw, cache)
        if w > best_welfare:
            best_welfare = w
            best = m
    assert best is not None  # the empty matching is always valid
    return OracleResult(optimal_welfare=best_welfare, optimal_matching=best,
                        num_enumerated=valid_count)


def exact_expected_rate(f: int, m: Matching, power, topo: NetworkTopology,
                        max_joint_choices: int = radio.MAX_EXACT_JOINT_CHOICES) -> float:
    """Reference expected rate of station ``f``: plain loop over block choices.

    Written as a scalar loop over ``rate_fixed`` on purpose, independent of
    the vectorised samplers it is used to check.  Only the station's own
    operator is enumerated; other operators cannot collide with it.
    """
    k = int(topo.mno_of_sbs[f])
    sbs_idx = topo.sbs_of_mno(k)
    slice_ids = [int(l) for l in m.slices_of(k)]
    if not slice_ids:
        return 0.0
    total = len(slice_ids) ** sbs_idx.size
    if total > max_joint_choices:
        raise ValueError(
            f"joint block-choice space has {total} points, "
            f"over the exact-enumeration bound {max_joint_choices}"
        )
    power_vec = radio.as_power_table(power, topo.num_sbs)[:, 0]

    rb = np.full(topo.num_sbs, -1)
    pw = np.zeros(topo.num_sbs)
    pw[sbs_idx] = power_vec[sbs_idx]
    acc = 0.0
    for joint in itertools.product(slice_ids, repeat=sbs_idx.size):
        rb[sbs_idx] = joint
        pa = radio.PowerAssignment(power_mw=pw, rb_choice=rb)
        l_f = rb[f]
        acc += radio.rate_fixed(f, int(l_f), pa, topo)
    return acc / total


def uniform_power_baseline(m: Matching, topo: NetworkTopology,
                           num_draws: int = radio.DEFAULT_NUM_DRAWS,
                           rng: np.random.Generator | None = None) -> radio.RateReport:
    """Rates with every station pinned at the top power level."""
    return radio.rate_report(m, max_power_level(topo.config), topo, num_draws, rng)


def check_swap_stability(m: Matching, topo: NetworkTopology,
                         rel_tol: float = 1e-9):
    """Test ``m`` against every single owner exchange (unassigned included).

    Uses the exact uniform-power welfare.  Returns (True, None) when no
    exchange strictly improves welfare, else (False, (l, l2)) with the first
    improving exchange found.  Ties count as stable.
    """
    cfg = topo.config
    caps = np.asarray(cfg.capacities, dtype=int)
    power_mw = max_power_level(cfg)
    cache: dict = {}
    base = _exact_welfare(m, topo, power_mw, cache)
    margin = rel_tol * max(1.0, abs(base))
    for l in range(m.num_slices):
        for l2 in range(l + 1, m.num_slices):
            if m.owner[l] == m.owner[l2]:
                continue
            cand = m.copy()
            cand.owner[l], cand.owner[l2] = m.owner[l2], m.owner[l]
            if not validate_matching(cand, caps):
                continue
            if _exact_welfare(cand, topo, power_mw, cache) > base + margin:
                return False, (l, l2)
    return True, None
