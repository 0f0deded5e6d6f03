"""Policy networks and checkpoint serialization.

Two architectures share the same family: a 3x3 conv stem, residual blocks,
and linear actor/critic heads. The full network adds a wide projection and a
GRU cell between encoder and heads; the lite network wires the heads straight
to the flattened features and has no recurrence. Total parameter counts are
pinned at construction: 5,150,406 (follower) and 3,678 (followerlite).

Checkpoint format: one ASCII header line `FOLLOWER-CKPT v1 <arch> <count>`,
then the flat parameter vector as little-endian float32 in descriptor order
(module definition order, C-order per tensor).
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from .errors import CheckpointError, UsageError

ARCH_FOLLOWER = "follower"
ARCH_LITE = "followerlite"
EXPECTED_PARAMS = {ARCH_FOLLOWER: 5_150_406, ARCH_LITE: 3_678}

CKPT_MAGIC = "FOLLOWER-CKPT"
CKPT_VERSION = "v1"


@dataclass
class PolicyOutput:
    logits: np.ndarray          # (5,) float64
    value: float
    memory: Optional[torch.Tensor]


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x):
        return x + self.conv2(torch.relu(self.conv1(torch.relu(x))))


class FollowerNet(nn.Module):
    """Full policy: 8 residual blocks, 512-wide projection, GRU core."""

    arch_name = ARCH_FOLLOWER
    input_size = 11
    recurrent = True
    memory_size = 256

    def __init__(self):
        super().__init__()
        self.stem = nn.Conv2d(2, 64, 3, padding=1)
        self.blocks = nn.Sequential(*[ResidualBlock(64) for _ in range(8)])
        self.fc = nn.Linear(64 * 11 * 11, 512)
        self.core = nn.GRUCell(512, 256)
        self.actor = nn.Linear(256, 5)
        self.critic = nn.Linear(256, 1)

    def forward(self, x, memory=None):
        _check_input(x, self.input_size)
        if memory is None:
            memory = x.new_zeros(x.shape[0], self.memory_size)
        f = torch.relu(self.blocks(self.stem(x))).flatten(1)
        z = torch.relu(self.fc(f))
        h = self.core(z, memory)
        return self.actor(h), self.critic(h).squeeze(-1), h


class FollowerLiteNet(nn.Module):
    """Trimmed policy: one residual block, heads on the flat features, no RNN."""

    arch_name = ARCH_LITE
    input_size = 7
    recurrent = False
    memory_size = 0

    def __init__(self):
        super().__init__()
        self.stem = nn.Conv2d(2, 8, 3, padding=1)
        self.block = ResidualBlock(8)
        self.actor = nn.Linear(8 * 7 * 7, 5)
        self.critic = nn.Linear(8 * 7 * 7, 1)

    def forward(self, x, memory=None):
        _check_input(x, self.input_size)
        f = torch.relu(self.block(self.stem(x))).flatten(1)
        return self.actor(f), self.critic(f).squeeze(-1), None


def _check_input(x, size):
    if x.ndim != 4 or x.shape[1] != 2 or x.shape[2] != size or x.shape[3] != size:
        raise UsageError(
            f"expected input of shape (B, 2, {size}, {size}), got {tuple(x.shape)}")


def build_network(arch: str, seed: int = 0) -> nn.Module:
    """Construct and orthogonally initialize a network; pins the parameter count."""
    gen = torch.Generator().manual_seed(seed)
    if arch == ARCH_FOLLOWER:
        net = FollowerNet()
    elif arch == ARCH_LITE:
        net = FollowerLiteNet()
    else:
        raise UsageError(f"unknown architecture {arch!r}")
    _init_orthogonal(net, gen)
    count = parameter_count(net)
    expected = EXPECTED_PARAMS[arch]
    if count != expected:
        raise AssertionError(
            f"{arch} has {count} parameters, expected {expected}")
    return net


def _init_orthogonal(net: nn.Module, gen: torch.Generator):
    # Small actor gain keeps the initial policy near uniform.
    for name, mod in net.named_modules():
        if isinstance(mod, (nn.Conv2d, nn.Linear)):
            gain = math.sqrt(2.0)
            if name == "actor":
                gain = 0.01
            elif name == "critic":
                gain = 1.0
            _orthogonal_(mod.weight, gain, gen)
            nn.init.zeros_(mod.bias)
        elif isinstance(mod, nn.GRUCell):
            _orthogonal_(mod.weight_ih, 1.0, gen)
            _orthogonal_(mod.weight_hh, 1.0, gen)
            nn.init.zeros_(mod.bias_ih)
            nn.init.zeros_(mod.bias_hh)


def _orthogonal_(tensor, gain, gen):
    with torch.no_grad():
        rows, cols = tensor.flatten(1).shape
        a = torch.randn(rows, cols, generator=gen, dtype=tensor.dtype)
        if rows < cols:
            a = a.t()
        q, r = torch.linalg.qr(a)
        q = q * torch.sign(torch.diagonal(r)).unsqueeze(0)
        if rows < cols:
            q = q.t()
        tensor.copy_((gain * q[:rows, :cols]).reshape(tensor.shape))


def parameter_count(net: nn.Module) -> int:
    return sum(p.numel() for p in net.parameters())


def parameter_descriptor(net: nn.Module) -> List[Tuple[str, Tuple[int, ...]]]:
    """Canonical (name, shape) list; flattening order of the checkpoint vector."""
    return [(name, tuple(p.shape)) for name, p in net.named_parameters()]


def flatten_parameters(net: nn.Module) -> np.ndarray:
    with torch.no_grad():
        return np.concatenate(
            [p.detach().cpu().numpy().astype("<f4").ravel() for p in net.parameters()])


def load_flat_parameters(net: nn.Module, flat: np.ndarray):
    if flat.size != parameter_count(net):
        raise CheckpointError(
            f"parameter vector has {flat.size} entries, "
            f"architecture needs {parameter_count(net)}")
    offset = 0
    with torch.no_grad():
        for p in net.parameters():
            n = p.numel()
            chunk = flat[offset:offset + n].reshape(p.shape)
            p.copy_(torch.from_numpy(np.array(chunk, dtype=np.float32)))
            offset += n


def save_checkpoint(net: nn.Module, path):
    header = f"{CKPT_MAGIC} {CKPT_VERSION} {net.arch_name} {parameter_count(net)}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(flatten_parameters(net).tobytes())


def load_checkpoint(path) -> nn.Module:
    """Read a checkpoint; header must match a known architecture and count."""
    try:
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii", errors="replace").strip()
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    parts = header.split()
    if len(parts) != 4 or parts[0] != CKPT_MAGIC or parts[1] != CKPT_VERSION:
        raise CheckpointError(f"bad checkpoint header: {header!r}")
    arch, count = parts[2], parts[3]
    if arch not in EXPECTED_PARAMS:
        raise CheckpointError(f"unknown architecture in checkpoint: {arch!r}")
    if not count.isdigit() or int(count) != EXPECTED_PARAMS[arch]:
        raise CheckpointError(
            f"checkpoint declares {count} parameters, "
            f"{arch} requires {EXPECTED_PARAMS[arch]}")
    expected_bytes = EXPECTED_PARAMS[arch] * 4
    if len(blob) != expected_bytes:
        raise CheckpointError(
            f"checkpoint payload is {len(blob)} bytes, expected {expected_bytes}")
    net = build_network(arch)
    load_flat_parameters(net, np.frombuffer(blob, dtype="<f4"))
    return net


def policy_step(net: nn.Module, encoded: np.ndarray,
                memory: Optional[torch.Tensor]) -> PolicyOutput:
    """Single-agent forward pass on an encoded observation."""
    x = torch.from_numpy(encoded).unsqueeze(0)
    with torch.no_grad():
        logits, value, memory = net(x, memory)
    return PolicyOutput(logits=logits[0].double().numpy(),
                        value=float(value[0]), memory=memory)


def sample_action(output: PolicyOutput, rng: np.random.Generator,
                  greedy: bool = False) -> int:
    """Sample from softmax(logits), or take the argmax (lowest index on ties)."""
    logits = np.asarray(output.logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise UsageError(f"non-finite logits: {logits}")
    if greedy:
        return int(np.argmax(logits))
    z = logits - logits.max()
    p = np.exp(z)
    p /= p.sum()
    u = rng.random()
    action = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(action, len(logits) - 1)
