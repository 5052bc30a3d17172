"""Slice-to-operator matching and its MCMC swap search.

A matching assigns each resource block to at most one operator (exclusivity)
subject to per-operator quotas.  The search walks the space of matchings by
exchanging the owners of two blocks (the unassigned pool acts as an owner),
accepting each proposal with a sigmoid probability in the welfare change and
remembering the best matching evaluated along the way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import qlearning, radio
from .qlearning import QLearningConfig
from .scenario import NetworkTopology

UNASSIGNED = -1


class Matching:
    """Block ownership vector: ``owner[l]`` is an operator index or -1."""

    __slots__ = ("owner",)

    def __init__(self, owner) -> None:
        self.owner = np.asarray(owner, dtype=int)

    @classmethod
    def empty(cls, num_slices: int) -> "Matching":
        return cls(np.full(num_slices, UNASSIGNED))

    @property
    def num_slices(self) -> int:
        return self.owner.size

    def slices_of(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.owner == k)

    def counts(self, num_mnos: int) -> np.ndarray:
        return np.bincount(self.owner[self.owner >= 0], minlength=num_mnos)

    def as_matrix(self, num_mnos: int) -> np.ndarray:
        """Binary (L, K) view: row l has a single 1 in its owner's column."""
        x = np.zeros((self.num_slices, num_mnos), dtype=int)
        assigned = self.owner >= 0
        x[np.flatnonzero(assigned), self.owner[assigned]] = 1
        return x

    def copy(self) -> "Matching":
        return Matching(self.owner.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Matching) and np.array_equal(self.owner, other.owner)

    def __repr__(self) -> str:
        return f"Matching({self.owner.tolist()})"


def validate_matching(m: Matching, capacities) -> bool:
    """True when every block has at most one owner within quota.

    Exclusivity holds by construction of the ownership vector; this checks
    the owner range and the per-operator quotas.
    """
    caps = np.asarray(capacities, dtype=int)
    if m.owner.min(initial=UNASSIGNED) < UNASSIGNED or m.owner.max(initial=UNASSIGNED) >= caps.size:
        return False
    return bool(np.all(m.counts(caps.size) <= caps))


def initial_matching(num_slices: int, capacities, rng: np.random.Generator) -> Matching:
    """Random valid start: operator k gets min(c_k, L // K) random blocks."""
    caps = np.asarray(capacities, dtype=int)
    fair = num_slices // caps.size
    owner = np.full(num_slices, UNASSIGNED)
    deck = rng.permutation(num_slices)
    pos = 0
    for k, c in enumerate(caps):
        take = min(int(c), fair)
        owner[deck[pos:pos + take]] = k
        pos += take
    return Matching(owner)


def swap_probability(s_new: float, s_old: float, t_b: float) -> float:
    """Sigmoid acceptance probability 1 / (1 + exp(-t_b (s_new - s_old)))."""
    if t_b <= 0:
        raise ValueError(f"t_b must be positive, got {t_b}")
    return float(expit(t_b * (s_new - s_old)))


def propose_swap(m: Matching, rng: np.random.Generator):
    """Exchange the owners of two uniformly chosen distinct blocks.

    The unassigned pool counts as an owner, so a block can move in or out of
    an operator's holding; per-operator counts are preserved by the exchange.
    Returns (candidate, (l, l2), (owner_l, owner_l2)) with owners as operator
    indices or None for unassigned.
    """
    if m.num_slices < 2:
        raise ValueError("need at least two blocks to propose a swap")
    l, l2 = (int(x) for x in rng.choice(m.num_slices, size=2, replace=False))
    candidate = m.copy()
    candidate.owner[l], candidate.owner[l2] = m.owner[l2], m.owner[l]
    o1 = None if m.owner[l] == UNASSIGNED else int(m.owner[l])
    o2 = None if m.owner[l2] == UNASSIGNED else int(m.owner[l2])
    return candidate, (l, l2), (o1, o2)


@dataclass(frozen=True)
class MatchingConfig:
    """Knobs of the swap search."""

    iterations: int = 2500
    t_b: float = 100.0                    # sigmoid steepness
    power_mode: str = "uniform"           # "uniform" or "qlearning"
    welfare_reading: str = "active_sum"   # or "count_weighted"
    literal_acceptance: bool = False      # printed two-branch accept rule
    exact_rates: bool = False             # enumerate block choices instead of MC
    num_draws: int = radio.DEFAULT_NUM_DRAWS
    qlearning: QLearningConfig = field(default_factory=QLearningConfig)

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.t_b <= 0:
            raise ValueError("t_b must be positive")
        if self.power_mode not in ("uniform", "qlearning"):
            raise ValueError(f"unknown power_mode {self.power_mode!r}")
        if self.welfare_reading not in ("active_sum", "count_weighted"):
            raise ValueError(f"unknown welfare_reading {self.welfare_reading!r}")
        if self.num_draws < 1:
            raise ValueError("num_draws must be >= 1")
        if self.exact_rates and self.power_mode != "uniform":
            raise ValueError("exact_rates requires power_mode='uniform'")


def max_power_level(cfg) -> float:
    """Largest discrete transmit power (mW) available to a station."""
    return float(qlearning.action_space(cfg.max_power_mw, cfg.num_power_levels)[-1])


class UniformRateSource:
    """Operator rate with every station at the top power level (Monte Carlo)."""

    def __init__(self, topo: NetworkTopology, num_draws: int = radio.DEFAULT_NUM_DRAWS):
        self.topo = topo
        self.num_draws = num_draws
        self._power = max_power_level(topo.config)

    def __call__(self, k: int, m: Matching, rng: np.random.Generator) -> float:
        return radio.mno_rate(k, m, self._power, self.topo, self.num_draws, rng)


class ExactUniformRateSource:
    """Top power level everywhere, exact block-choice enumeration, memoised.

    Deterministic, so results are cached per (operator, slice set).
    """

    def __init__(self, topo: NetworkTopology):
        self.topo = topo
        self._power = max_power_level(topo.config)
        self._cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def __call__(self, k: int, m: Matching, rng=None) -> float:
        key = (k, tuple(int(l) for l in m.slices_of(k)))
        hit = self._cache.get(key)
        if hit is None:
            hit = float(radio.mno_rates_exact(k, m, self._power, self.topo).sum())
            self._cache[key] = hit
        return hit


class QLearningRateSource:
    """Operator rate after retraining that operator's power agents."""

    def __init__(self, topo: NetworkTopology, qcfg: QLearningConfig,
                 num_draws: int = radio.DEFAULT_NUM_DRAWS):
        self.topo = topo
        self.qcfg = qcfg
        self.num_draws = num_draws

    def __call__(self, k: int, m: Matching, rng: np.random.Generator) -> float:
        run = qlearning.run_qlearning(m, self.topo, self.qcfg, rng, mnos=[k],
                                      num_draws=self.num_draws)
        return float(run.report.rate_per_mno[k])


def make_rate_source(topo: NetworkTopology, cfg: MatchingConfig):
    if cfg.power_mode == "qlearning":
        return QLearningRateSource(topo, cfg.qlearning, cfg.num_draws)
    if cfg.exact_rates:
        return ExactUniformRateSource(topo)
    return UniformRateSource(topo, cfg.num_draws)


def _combine_welfare(rates: np.ndarray, m: Matching, reading: str) -> float:
    counts = m.counts(rates.size)
    if reading == "count_weighted":
        return float(np.dot(counts, rates))
    return float(rates[counts > 0].sum())


def social_welfare(m: Matching, topo: NetworkTopology, rate_source,
                   reading: str = "active_sum",
                   rng: np.random.Generator | None = None) -> float:
    """Total rate across operators that hold at least one block.

    The ``count_weighted`` reading instead weights each operator's rate by
    the number of blocks it holds.
    """
    rates = np.array([rate_source(k, m, rng) for k in range(topo.config.num_mnos)])
    return _combine_welfare(rates, m, reading)


@dataclass
class WelfareTrace:
    """Per-iteration record of the swap search."""

    iteration: np.ndarray      # (T,)
    welfare: np.ndarray        # (T,) welfare of the incumbent after the step
    best_welfare: np.ndarray   # (T,) best welfare evaluated so far
    accepted: np.ndarray       # (T,) bool


@dataclass
class McmcResult:
    best_matching: Matching
    best_welfare: float
    final_matching: Matching
    final_welfare: float
    trace: WelfareTrace


def mcmc_swap(topo: NetworkTopology, cfg: MatchingConfig,
              rng: np.random.Generator, rate_source=None) -> McmcResult:
    """Swap search over matchings, best-so-far included in the result.

    Per-operator rates are cached; a proposal only re-evaluates the one or
    two operators whose holdings change.  With ``literal_acceptance`` a
    rejected proposal is still adopted when the incumbent welfare beats the
    previous iteration's candidate welfare.
    """
    scfg = topo.config
    if rate_source is None:
        rate_source = make_rate_source(topo, cfg)
    caps = np.asarray(scfg.capacities, dtype=int)

    m = initial_matching(scfg.num_slices, caps, rng)
    rates = np.array([rate_source(k, m, rng) for k in range(scfg.num_mnos)])
    welfare = _combine_welfare(rates, m, cfg.welfare_reading)

    best = m.copy()
    best_welfare = welfare
    prev_candidate_welfare = welfare

    iters = np.arange(cfg.iterations)
    trace_welfare = np.empty(cfg.iterations)
    trace_best = np.empty(cfg.iterations)
    trace_accept = np.zeros(cfg.iterations, dtype=bool)

    for t in range(cfg.iterations):
        candidate, _, owners = propose_swap(m, rng)
        if not validate_matching(candidate, caps):
            # Exchanges preserve counts, so this is only a guard.
            trace_welfare[t] = welfare
            trace_best[t] = best_welfare
            continue

        affected = sorted({k for k in owners if k is not None})
        cand_rates = rates.copy()
        for k in affected:
            cand_rates[k] = rate_source(k, candidate, rng)
        cand_welfare = _combine_welfare(cand_rates, candidate, cfg.welfare_reading)

        if cand_welfare > best_welfare:
            best = candidate.copy()
            best_welfare = cand_welfare

        accept = rng.random() < swap_probability(cand_welfare, welfare, cfg.t_b)
        if not accept and cfg.literal_acceptance and welfare > prev_candidate_welfare:
            accept = True
        prev_candidate_welfare = cand_welfare

        if accept:
            m, rates, welfare = candidate, cand_rates, cand_welfare
            trace_accept[t] = True
        trace_welfare[t] = welfare
        trace_best[t] = best_welfare

    trace = WelfareTrace(iteration=iters, welfare=trace_welfare,
                         best_welfare=trace_best, accepted=trace_accept)
    return McmcResult(best_matching=best, best_welfare=best_welfare,
                      final_matching=m, final_welfare=welfare, trace=trace)
