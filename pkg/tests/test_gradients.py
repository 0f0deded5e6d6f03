"""Analytic gradients (autograd) vs central finite differences.

All checks run in float64 with FD step 1e-5, sampling parameter coordinates
across the network; coordinates with near-zero analytic gradient are skipped
because relative error is meaningless there.
"""

import numpy as np
import pytest
import torch

from follower.nets import ARCH_FOLLOWER, ARCH_LITE, build_network

REL_TOL = 1e-4
SKIP_BELOW = 1e-7


def _double_net(arch, seed):
    net = build_network(arch, seed=seed).double()
    return net


def _flat_params(net):
    return torch.cat([p.detach().reshape(-1) for p in net.parameters()])


def _set_flat(net, flat):
    offset = 0
    with torch.no_grad():
        for p in net.parameters():
            n = p.numel()
            p.copy_(flat[offset:offset + n].reshape(p.shape))
            offset += n


def _flat_grad(net):
    return torch.cat([
        (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1)
        for p in net.parameters()])


def _check_coords(net, scalar_fn, rng, coords_per_instance=8):
    """Compare autograd and FD on sampled parameter coordinates."""
    net.zero_grad()
    value = scalar_fn()
    value.backward()
    analytic = _flat_grad(net).numpy()
    theta = _flat_params(net).clone()
    # prefer coordinates where the gradient is informative
    candidates = np.flatnonzero(np.abs(analytic) > SKIP_BELOW)
    if len(candidates) == 0:
        return 0
    picks = rng.choice(candidates, size=min(coords_per_instance, len(candidates)),
                       replace=False)
    checked = 0
    for i in picks:
        step = 1e-5 * max(1.0, abs(float(theta[i])))
        for sign, out in ((+1, "plus"), (-1, "minus")):
            shifted = theta.clone()
            shifted[i] += sign * step
            _set_flat(net, shifted)
            with torch.no_grad():
                if sign > 0:
                    f_plus = float(scalar_fn())
                else:
                    f_minus = float(scalar_fn())
        fd = (f_plus - f_minus) / (2 * step)
        rel = abs(fd - analytic[i]) / max(abs(fd), abs(analytic[i]))
        assert rel < REL_TOL, f"coord {i}: analytic {analytic[i]} vs fd {fd}"
        checked += 1
    _set_flat(net, theta)
    return checked


def _random_input(net, rng):
    x = torch.from_numpy(
        rng.choice([0.0, 0.5, 1.0], size=(1, 2, net.input_size, net.input_size)))
    mem = (torch.from_numpy(rng.standard_normal((1, 256)) * 0.1)
           if net.recurrent else None)
    return x, mem


@pytest.mark.parametrize("arch,instances", [(ARCH_LITE, 40), (ARCH_FOLLOWER, 12)])
def test_logprob_gradients_match_fd(arch, instances):
    rng = np.random.default_rng(77)
    total = 0
    for k in range(instances):
        net = _double_net(arch, seed=100 + k)
        x, mem = _random_input(net, rng)
        action = int(rng.integers(5))

        def logprob():
            logits, _, _ = net(x, mem)
            return torch.log_softmax(logits, dim=-1)[0, action]

        total += _check_coords(net, logprob, rng)
    assert total >= instances * 4


@pytest.mark.parametrize("arch,instances", [(ARCH_LITE, 30), (ARCH_FOLLOWER, 8)])
def test_value_loss_gradients_match_fd(arch, instances):
    rng = np.random.default_rng(88)
    total = 0
    for k in range(instances):
        net = _double_net(arch, seed=200 + k)
        x, mem = _random_input(net, rng)
        target = float(rng.standard_normal())

        def value_loss():
            _, value, _ = net(x, mem)
            return (value[0] - target) ** 2

        total += _check_coords(net, value_loss, rng)
    assert total >= instances * 4


@pytest.mark.parametrize("arch,instances", [(ARCH_LITE, 30), (ARCH_FOLLOWER, 8)])
def test_full_ppo_loss_gradients_match_fd(arch, instances):
    rng = np.random.default_rng(99)
    total = 0
    for k in range(instances):
        net = _double_net(arch, seed=300 + k)
        x, mem = _random_input(net, rng)
        action = int(rng.integers(5))
        old_logp = float(np.log(0.1 + 0.8 * rng.random()))
        advantage = float(rng.standard_normal())
        ret = float(rng.standard_normal())

        def ppo_loss():
            logits, value, _ = net(x, mem)
            logp = torch.log_softmax(logits, dim=-1)[0, action]
            ratio = torch.exp(logp - old_logp)
            clipped = torch.clamp(ratio, 0.8, 1.2)
            surrogate = -torch.minimum(ratio * advantage, clipped * advantage)
            vloss = (value[0] - ret) ** 2
            probs = torch.softmax(logits, dim=-1)
            entropy = -(probs * torch.log_softmax(logits, dim=-1)).sum()
            return surrogate + 0.5 * vloss - 0.01 * entropy

        total += _check_coords(net, ppo_loss, rng)
    assert total >= instances * 3
