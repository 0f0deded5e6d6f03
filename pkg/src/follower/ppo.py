"""Clipped-surrogate policy optimization over collected rollouts."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from .errors import FollowerError
from .gae import compute_gae
from .rollout import RolloutBuffer


@dataclass
class UpdateStats:
    surrogate_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    mean_reward: float


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    """Whole-batch normalization to zero mean, unit std."""
    return (adv - adv.mean()) / (adv.std() + 1e-8)


def ppo_losses(net, obs, actions, old_log_probs, advantages, returns,
               clip_ratio, memory=None, recurrence: int = 1):
    """Surrogate, value and entropy terms for one minibatch.

    Non-recurrent: flat (N, ...) tensors, single forward. Recurrent: tensors
    shaped (R, N, ...) replayed step by step from `memory`.
    """
    if memory is None:
        logits, values, _ = net(obs)
    else:
        logits_l, values_l = [], []
        h = memory
        for t in range(recurrence):
            lg, vl, h = net(obs[t], h)
            logits_l.append(lg)
            values_l.append(vl)
        logits = torch.cat(logits_l)
        values = torch.cat(values_l)
        actions = actions.reshape(-1)
        old_log_probs = old_log_probs.reshape(-1)
        advantages = advantages.reshape(-1)
        returns = returns.reshape(-1)
    log_probs = torch.log_softmax(logits, dim=-1)
    taken = log_probs[torch.arange(len(actions)), actions]
    ratio = torch.exp(taken - old_log_probs)
    clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    surrogate = -torch.minimum(ratio * advantages, clipped * advantages).mean()
    value_loss = ((values - returns) ** 2).mean()
    probs = torch.softmax(logits, dim=-1)
    entropy = -(probs * log_probs).sum(-1).mean()
    clip_fraction = ((ratio - 1.0).abs() > clip_ratio).float().mean()
    return surrogate, value_loss, entropy, clip_fraction


def ppo_update(net, optimizer, buffer: RolloutBuffer, config,
               shuffle_rng: np.random.Generator) -> UpdateStats:
    """One PPO iteration: GAE, advantage normalization, clipped updates.

    Recurrent networks replay contiguous recurrence-rollout chunks from the
    stored chunk-start memories; feed-forward networks shuffle flat
    transitions. Raises on non-finite loss with diagnostics.
    """
    advantages, returns = compute_gae(
        buffer.rewards, buffer.values, buffer.dones,
        config.gamma, config.gae_lambda, buffer.bootstrap_values)
    advantages = normalize_advantages(advantages)

    t_len, width = buffer.segment_length, buffer.batch_width
    obs = torch.from_numpy(buffer.obs)
    actions = torch.from_numpy(buffer.actions)
    old_log_probs = torch.from_numpy(buffer.log_probs)
    adv_t = torch.from_numpy(advantages.astype(np.float32))
    ret_t = torch.from_numpy(returns.astype(np.float32))

    recurrent = net.recurrent
    recurrence = config.recurrence_rollout if recurrent else 1
    totals = np.zeros(4, dtype=np.float64)
    batches = 0
    for _ in range(config.optimization_epochs):
        if recurrent:
            chunks = t_len // recurrence
            items = [(j, b) for j in range(chunks) for b in range(width)]
            order = shuffle_rng.permutation(len(items))
            per_batch = max(1, config.batch_size // recurrence)
            for lo in range(0, len(items), per_batch):
                sel = [items[k] for k in order[lo:lo + per_batch]]
                js = [j for j, _ in sel]
                bs = [b for _, b in sel]
                t0s = [j * recurrence for j in js]
                ob = torch.stack([obs[t0:t0 + recurrence, b]
                                  for t0, b in zip(t0s, bs)], dim=1)
                ac = torch.stack([actions[t0:t0 + recurrence, b]
                                  for t0, b in zip(t0s, bs)], dim=1)
                lp = torch.stack([old_log_probs[t0:t0 + recurrence, b]
                                  for t0, b in zip(t0s, bs)], dim=1)
                ad = torch.stack([adv_t[t0:t0 + recurrence, b]
                                  for t0, b in zip(t0s, bs)], dim=1)
                rt = torch.stack([ret_t[t0:t0 + recurrence, b]
                                  for t0, b in zip(t0s, bs)], dim=1)
                mem = torch.from_numpy(
                    buffer.initial_memories[js, bs]).reshape(len(sel), -1)
                stats = _apply_batch(net, optimizer, config, ob, ac, lp, ad, rt,
                                     mem, recurrence)
                totals += stats
                batches += 1
        else:
            flat = t_len * width
            order = shuffle_rng.permutation(flat)
            ob = obs.reshape(flat, *obs.shape[2:])
            ac = actions.reshape(flat)
            lp = old_log_probs.reshape(flat)
            ad = adv_t.reshape(flat)
            rt = ret_t.reshape(flat)
            for lo in range(0, flat, config.batch_size):
                idx = torch.from_numpy(order[lo:lo + config.batch_size])
                stats = _apply_batch(net, optimizer, config, ob[idx], ac[idx],
                                     lp[idx], ad[idx], rt[idx], None, 1)
                totals += stats
                batches += 1
    totals /= max(batches, 1)
    return UpdateStats(
        surrogate_loss=float(totals[0]), value_loss=float(totals[1]),
        entropy=float(totals[2]), clip_fraction=float(totals[3]),
        mean_reward=float(buffer.rewards.mean()),
    )


def _apply_batch(net, optimizer, config, obs, actions, old_log_probs,
                 advantages, returns, memory, recurrence):
    surrogate, value_loss, entropy, clip_fraction = ppo_losses(
        net, obs, actions, old_log_probs, advantages, returns,
        config.clip_ratio, memory=memory, recurrence=recurrence)
    loss = (surrogate + config.value_loss_coef * value_loss
            - config.entropy_coef * entropy)
    if not torch.isfinite(loss):
        raise FollowerError(
            f"non-finite PPO loss: surrogate={surrogate.item()} "
            f"value={value_loss.item()} entropy={entropy.item()}")
    optimizer.zero_grad()
    loss.backward()
    torch.nn.utils.clip_grad_norm_(net.parameters(), config.max_grad_norm)
    optimizer.step()
    return np.array([surrogate.item(), value_loss.item(), entropy.item(),
                     clip_fraction.item()])
