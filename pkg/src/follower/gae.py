"""Generalized advantage estimation over time-major reward/value arrays."""

import numpy as np


def compute_gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                gamma: float, lam: float, bootstrap_value: np.ndarray):
    """Backward recursion over a (T, B) segment.

    delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
    A_t     = delta_t + gamma * lam * (1 - done_t) * A_{t+1}

    `dones[t]` marks transitions that end an episode; `bootstrap_value`
    estimates the state after the final step. Returns (advantages,
    returns = advantages + values), both float64.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    if rewards.shape != values.shape or rewards.shape != dones.shape:
        raise ValueError("rewards, values and dones must share one shape")
    t_len = rewards.shape[0]
    advantages = np.zeros_like(rewards)
    carry = np.zeros_like(rewards[0])
    next_values = np.asarray(bootstrap_value, dtype=np.float64)
    for t in range(t_len - 1, -1, -1):
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * nonterminal - values[t]
        carry = delta + gamma * lam * nonterminal * carry
        advantages[t] = carry
        next_values = values[t]
    return advantages, advantages + values
