"""Independent per-station Q-learning of transmit power levels.

Each station runs its own two-state agent: state 1 when the last observed
SINR met the QoS threshold, state 0 otherwise.  Actions are the discrete
power levels.  The reward is the achieved rate when the QoS threshold is met
and zero otherwise, so agents only get credit for episodes that satisfy QoS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import radio
from .scenario import NetworkTopology


def action_space(p_tot_mw: float, num_levels: int) -> np.ndarray:
    """Discrete transmit powers {0, d, ..., (N-1)d} with d = p_tot / N (mW)."""
    if num_levels < 2:
        raise ValueError(f"need at least 2 power levels, got {num_levels}")
    if p_tot_mw <= 0:
        raise ValueError(f"power budget must be positive, got {p_tot_mw}")
    delta = p_tot_mw / num_levels
    return delta * np.arange(num_levels)


@dataclass(frozen=True)
class QLearningConfig:
    discount: float = 0.95          # weight of the bootstrapped future value
    learning_rate: float = 0.5      # step size of each table update
    epsilon_explore: float = 0.1    # exploration probability (epsilon-greedy)
    boltzmann_temp: float = 0.5     # temperature for the softmax policy
    episodes: int = 2000
    policy_kind: str = "epsilon_greedy"   # or "boltzmann"
    # Reproduce the printed variants of the update/exploration rules:
    # exclude_current_action keeps the bootstrap max over actions other than
    # the one just taken; discount_as_explore reuses the discount factor as
    # the exploration probability.
    exclude_current_action: bool = True
    discount_as_explore: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")
        if not 0.0 <= self.learning_rate < 1.0:
            raise ValueError("learning_rate must be in [0, 1)")
        if not 0.0 <= self.epsilon_explore <= 1.0:
            raise ValueError("epsilon_explore must be in [0, 1]")
        if self.boltzmann_temp <= 0:
            raise ValueError("boltzmann_temp must be positive")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        if self.policy_kind not in ("epsilon_greedy", "boltzmann"):
            raise ValueError(f"unknown policy_kind {self.policy_kind!r}")

    @property
    def explore_probability(self) -> float:
        return self.discount if self.discount_as_explore else self.epsilon_explore


def observe_state(f: int, l: int, pa: radio.PowerAssignment,
                  topo: NetworkTopology, sinr_threshold: float) -> int:
    """1 when the station's SINR meets the threshold (inclusive), else 0."""
    return int(radio.sinr(f, l, pa, topo) >= sinr_threshold)


def reward(f: int, l: int, pa: radio.PowerAssignment,
           topo: NetworkTopology, sinr_threshold: float) -> float:
    """Achieved rate when QoS is satisfied, zero otherwise."""
    s = radio.sinr(f, l, pa, topo)
    if s < sinr_threshold:
        return 0.0
    return float(np.log2(1.0 + s))


def _bootstrap_value(q_row: np.ndarray, a: int, cfg: QLearningConfig) -> float:
    if not cfg.exclude_current_action:
        return float(q_row.max())
    masked = q_row.copy()
    masked[a] = -np.inf
    return float(masked.max())


def q_update(q: np.ndarray, s: int, a: int, w: float, cfg: QLearningConfig) -> np.ndarray:
    """One table update in place; returns the table.

    q'[s][a] = (1 - lr) q[s][a] + lr (w + discount * max_a' q[s][a'])
    where by default the max runs over actions other than ``a``.
    """
    beta = cfg.learning_rate
    boot = _bootstrap_value(q[s], a, cfg)
    q[s, a] = (1.0 - beta) * q[s, a] + beta * (w + cfg.discount * boot)
    return q


def select_action(q: np.ndarray, s: int, cfg: QLearningConfig,
                  rng: np.random.Generator) -> int:
    """Pick an action for state ``s`` from a single agent's table."""
    n = q.shape[1]
    if cfg.policy_kind == "boltzmann":
        logits = q[s] / cfg.boltzmann_temp
        p = np.exp(logits - logits.max())
        p /= p.sum()
        return int(rng.choice(n, p=p))
    if rng.random() < cfg.explore_probability:
        return int(rng.integers(n))
    return int(np.argmax(q[s]))  # argmax breaks ties toward the lowest index


@dataclass
class QLearningRun:
    """Outcome of a training run: tables, greedy policy, resulting rates."""

    q_tables: np.ndarray      # (F, 2, N)
    power_table: np.ndarray   # (F, 2) greedy power in mW per QoS state
    report: radio.RateReport
    max_abs_q: float          # largest |Q| seen during training


def greedy_power_table(q_tables: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Map per-state argmax actions to powers; ties go to the lowest index."""
    return levels[np.argmax(q_tables, axis=2)]


def _learn_mno(slice_ids: np.ndarray, sbs_idx: np.ndarray, topo: NetworkTopology,
               cfg: QLearningConfig, levels: np.ndarray,
               rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Train one operator's agents jointly; returns ((Fk, 2, N) tables, max |Q|)."""
    fk = sbs_idx.size
    n = levels.size
    gain_k = topo.gain[np.ix_(sbs_idx, sbs_idx)]
    noise = topo.config.noise_mw
    threshold = topo.config.sinr_threshold
    beta = cfg.learning_rate
    gamma = cfg.discount
    explore_p = cfg.explore_probability

    q = np.zeros((fk, 2, n))
    state = np.ones(fk, dtype=int)
    rows = np.arange(fk)
    max_abs_q = 0.0

    for _ in range(cfg.episodes):
        q_rows = q[rows, state]                       # (Fk, N)
        if cfg.policy_kind == "boltzmann":
            logits = q_rows / cfg.boltzmann_temp
            p = np.exp(logits - logits.max(axis=1, keepdims=True))
            p /= p.sum(axis=1, keepdims=True)
            u = rng.random((fk, 1))
            actions = (u > np.cumsum(p, axis=1)).sum(axis=1)
        else:
            greedy = np.argmax(q_rows, axis=1)
            explore = rng.random(fk) < explore_p
            random_actions = rng.integers(0, n, size=fk)
            actions = np.where(explore, random_actions, greedy)

        rbs = slice_ids[rng.integers(0, slice_ids.size, size=(1, fk))]
        powers = levels[actions][None, :]
        rates, sinrs = radio._joint_rates(gain_k, slice_ids, powers, rbs, noise)
        satisfied = sinrs[0] >= threshold
        w = np.where(satisfied, rates[0], 0.0)

        if cfg.exclude_current_action:
            masked = q_rows.copy()
            masked[rows, actions] = -np.inf
            boot = masked.max(axis=1)
        else:
            boot = q_rows.max(axis=1)
        q[rows, state, actions] = (1.0 - beta) * q[rows, state, actions] \
            + beta * (w + gamma * boot)

        state = satisfied.astype(int)
        max_abs_q = max(max_abs_q, float(np.abs(q).max()))

    return q, max_abs_q


def run_qlearning(matching, topo: NetworkTopology, cfg: QLearningConfig,
                  rng: np.random.Generator, mnos=None,
                  num_draws: int = radio.DEFAULT_NUM_DRAWS) -> QLearningRun:
    """Train agents (optionally only for ``mnos``) and evaluate greedy rates.

    Operators never interfere with each other, so training decomposes per
    operator.  Stations of an operator that holds no slice do not transmit
    and keep all-zero tables.  The returned report holds the Monte Carlo
    expected rates under the learned greedy policies.
    """
    scfg = topo.config
    levels = action_space(scfg.max_power_mw, scfg.num_power_levels)
    k_list = range(scfg.num_mnos) if mnos is None else list(mnos)

    q_tables = np.zeros((topo.num_sbs, 2, levels.size))
    max_abs_q = 0.0
    for k in k_list:
        sbs_idx = topo.sbs_of_mno(k)
        slice_ids = np.asarray(matching.slices_of(k), dtype=int)
        if slice_ids.size == 0:
            continue
        q_k, peak = _learn_mno(slice_ids, sbs_idx, topo, cfg, levels, rng)
        q_tables[sbs_idx] = q_k
        max_abs_q = max(max_abs_q, peak)

    power_table = greedy_power_table(q_tables, levels)
    per_sbs = np.zeros(topo.num_sbs)
    for k in k_list:
        per_sbs += radio.mno_expected_rates(k, matching, power_table, topo,
                                            num_draws, rng)
    per_mno = np.array([per_sbs[topo.sbs_of_mno(k)].sum()
                        for k in range(scfg.num_mnos)])
    report = radio.RateReport(rate_per_sbs=per_sbs, rate_per_mno=per_mno)
    return QLearningRun(q_tables=q_tables, power_table=power_table,
                        report=report, max_abs_q=max_abs_q)
