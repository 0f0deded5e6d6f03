import numpy as np
import pytest
import torch

from follower.errors import CheckpointError, UsageError
from follower.nets import (ARCH_FOLLOWER, ARCH_LITE, EXPECTED_PARAMS,
                           PolicyOutput, build_network, flatten_parameters,
                           load_checkpoint, parameter_count,
                           parameter_descriptor, policy_step, sample_action,
                           save_checkpoint)


def test_parameter_counts_pinned():
    assert parameter_count(build_network(ARCH_LITE)) == 3678
    assert parameter_count(build_network(ARCH_FOLLOWER)) == 5_150_406


def test_unknown_arch_rejected():
    with pytest.raises(UsageError):
        build_network("mlp")


def _zero(net):
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()
    return net


@pytest.mark.parametrize("arch", [ARCH_LITE, ARCH_FOLLOWER])
def test_zero_parameters_give_uniform_distribution(arch):
    net = _zero(build_network(arch))
    x = torch.rand(3, 2, net.input_size, net.input_size)
    logits, value, _ = net(x)
    assert torch.equal(logits, torch.zeros(3, 5))
    assert torch.equal(value, torch.zeros(3))


@pytest.mark.parametrize("arch", [ARCH_LITE, ARCH_FOLLOWER])
def test_forward_is_pure(arch):
    net = build_network(arch, seed=3)
    x = torch.rand(2, 2, net.input_size, net.input_size)
    mem = torch.rand(2, 256) if net.recurrent else None
    with torch.no_grad():
        a = net(x, mem)
        b = net(x, mem)
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])
    if net.recurrent:
        assert torch.equal(a[2], b[2])


def test_lite_ignores_memory():
    net = build_network(ARCH_LITE, seed=1)
    x = torch.rand(2, 2, 7, 7)
    with torch.no_grad():
        a = net(x, None)
        b = net(x, torch.rand(2, 99))
    assert torch.equal(a[0], b[0]) and torch.equal(a[1], b[1])
    assert a[2] is None and b[2] is None


def test_forward_rejects_bad_shapes():
    net = build_network(ARCH_LITE)
    with pytest.raises(UsageError):
        net(torch.rand(1, 2, 11, 11))
    with pytest.raises(UsageError):
        net(torch.rand(1, 3, 7, 7))


def test_softmax_probabilities_sum_to_one():
    net = build_network(ARCH_FOLLOWER, seed=5)
    x = torch.rand(4, 2, 11, 11)
    logits, _, _ = net(x)
    probs = torch.softmax(logits, dim=-1)
    assert torch.allclose(probs.sum(-1), torch.ones(4), atol=1e-6)


def test_outputs_finite_on_unit_box_inputs():
    for arch in (ARCH_LITE, ARCH_FOLLOWER):
        net = build_network(arch, seed=7)
        x = torch.rand(8, 2, net.input_size, net.input_size)
        logits, value, _ = net(x)
        assert torch.isfinite(logits).all() and torch.isfinite(value).all()


def test_batched_matches_sequential_closely():
    # BLAS batching may differ in the last float32 ulps; anything beyond
    # that tolerance is a real bug.
    for arch in (ARCH_LITE, ARCH_FOLLOWER):
        net = build_network(arch, seed=2)
        x = torch.rand(16, 2, net.input_size, net.input_size)
        mem = torch.rand(16, 256) if net.recurrent else None
        with torch.no_grad():
            lb, vb, _ = net(x, mem)
            for i in range(16):
                li, vi, _ = net(x[i:i + 1], mem[i:i + 1] if mem is not None else None)
                assert torch.allclose(li[0], lb[i], atol=1e-5)
                assert torch.allclose(vi[0], vb[i], atol=1e-5)


def _out(logits):
    return PolicyOutput(logits=np.asarray(logits, dtype=np.float64),
                        value=0.0, memory=None)


def test_sample_action_concentrated_logits():
    rng = np.random.default_rng(0)
    hits = sum(sample_action(_out([10, -10, -10, -10, -10]), rng) == 0
               for _ in range(2000))
    assert hits >= 1998


def test_sample_action_greedy_tie_break():
    rng = np.random.default_rng(0)
    assert sample_action(_out([0, 0, 0, 0, 0]), rng, greedy=True) == 0
    assert sample_action(_out([0, 3, 3, 0, 0]), rng, greedy=True) == 1


def test_sample_action_rejects_non_finite():
    rng = np.random.default_rng(0)
    with pytest.raises(UsageError):
        sample_action(_out([np.nan, 0, 0, 0, 0]), rng)
    with pytest.raises(UsageError):
        sample_action(_out([np.inf, 0, 0, 0, 0]), rng)


def test_sample_action_empirical_frequency():
    rng = np.random.default_rng(123)
    logits = [0.0, np.log(2.0), 0.0, 0.0, 0.0]
    samples = 100_000
    count = sum(sample_action(_out(logits), rng) == 1 for _ in range(samples))
    assert abs(count / samples - 2.0 / 6.0) < 0.01


def test_checkpoint_round_trip(tmp_path):
    net = build_network(ARCH_LITE, seed=11)
    path = tmp_path / "lite.ckpt"
    save_checkpoint(net, path)
    header = path.read_bytes().split(b"\n", 1)[0]
    assert header == b"FOLLOWER-CKPT v1 followerlite 3678"
    loaded = load_checkpoint(path)
    assert np.array_equal(flatten_parameters(loaded), flatten_parameters(net))
    x = torch.rand(1, 2, 7, 7)
    with torch.no_grad():
        assert torch.equal(net(x)[0], loaded(x)[0])


def test_checkpoint_header_validation(tmp_path):
    net = build_network(ARCH_LITE, seed=1)
    good = tmp_path / "good.ckpt"
    save_checkpoint(net, good)
    payload = good.read_bytes().split(b"\n", 1)[1]

    bad_magic = tmp_path / "m.ckpt"
    bad_magic.write_bytes(b"SOMETHING v1 followerlite 3678\n" + payload)
    with pytest.raises(CheckpointError):
        load_checkpoint(bad_magic)

    wrong_count = tmp_path / "c.ckpt"
    wrong_count.write_bytes(b"FOLLOWER-CKPT v1 followerlite 9999\n" + payload)
    with pytest.raises(CheckpointError):
        load_checkpoint(wrong_count)

    truncated = tmp_path / "t.ckpt"
    truncated.write_bytes(b"FOLLOWER-CKPT v1 followerlite 3678\n" + payload[:-8])
    with pytest.raises(CheckpointError):
        load_checkpoint(truncated)

    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "missing.ckpt")


def test_descriptor_matches_flat_order():
    net = build_network(ARCH_LITE, seed=0)
    desc = parameter_descriptor(net)
    total = sum(int(np.prod(shape)) for _, shape in desc)
    assert total == EXPECTED_PARAMS[ARCH_LITE]
    flat = flatten_parameters(net)
    first_name, first_shape = desc[0]
    first = dict(net.named_parameters())[first_name].detach().numpy().ravel()
    assert np.array_equal(flat[:first.size], first.astype(np.float32))


def test_policy_step_deterministic():
    net = build_network(ARCH_LITE, seed=4)
    enc = np.random.default_rng(0).random((2, 7, 7)).astype(np.float32)
    a = policy_step(net, enc, None)
    b = policy_step(net, enc, None)
    assert np.array_equal(a.logits, b.logits) and a.value == b.value


def _mirror_params_lr(net):
    """Transform parameters so the net commutes with a left-right input flip."""
    import copy
    mirrored = copy.deepcopy(net)
    with torch.no_grad():
        for mod in mirrored.modules():
            if isinstance(mod, torch.nn.Conv2d):
                mod.weight.copy_(torch.flip(mod.weight, dims=[-1]))
        k = net.input_size
        # permute flat feature indices (c, r, col) -> (c, r, k-1-col)
        idx = torch.arange(8 * k * k).reshape(8, k, k).flip(-1).reshape(-1)
        mirrored.actor.weight.copy_(mirrored.actor.weight[:, idx])
        mirrored.critic.weight.copy_(mirrored.critic.weight[:, idx])
        # swap LEFT (3) and RIGHT (4) actor rows
        swap = torch.tensor([0, 1, 2, 4, 3])
        mirrored.actor.weight.copy_(mirrored.actor.weight[swap])
        mirrored.actor.bias.copy_(mirrored.actor.bias[swap])
    return mirrored


def test_mirrored_inputs_give_mirrored_action_distribution():
    net = build_network(ARCH_LITE, seed=9)
    mirrored = _mirror_params_lr(net)
    x = torch.rand(4, 2, 7, 7)
    with torch.no_grad():
        logits, value, _ = net(x)
        m_logits, m_value, _ = mirrored(torch.flip(x, dims=[-1]))
    swap = [0, 1, 2, 4, 3]
    assert torch.allclose(m_logits, logits[:, swap], atol=1e-5)
    assert torch.allclose(m_value, value, atol=1e-5)
