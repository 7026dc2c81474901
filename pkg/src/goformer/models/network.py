"""Residual and EfficientFormer-style policy/value networks on a fixed 19x19 grid."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from goformer.features import GRID, NUM_PLANES, POLICY_SIZE
from goformer.models.layers import Attention, BatchNorm, Conv, Dense, LayerNorm, Module
from goformer.tensor import Tensor, load_weights, ops, save_weights

TOKENS = GRID * GRID
VALUE_HIDDEN = 256
FFN_RATIO = 4
# samples per pass in predict(); small chunks are fastest on a CPU
INFERENCE_BATCH = 8

PRESETS = {
    "l1": ((48, 96), (3, 4), 1),
    "l3": ((64, 128), (4, 6), 1),
    "l7": ((96, 192), (6, 8), 2),
    "l9": ((128, 256), (8, 10), 2),
}
DEFAULT_HEADS = 2


@dataclass(frozen=True)
class ResidualConfig:
    blocks: int
    planes: int

    def __post_init__(self):
        if self.blocks < 1 or self.planes < 1:
            raise ValueError("blocks and planes must be positive")

    @property
    def descriptor(self) -> str:
        return f"res:{self.blocks}x{self.planes}"

    @property
    def display_name(self) -> str:
        return f"Residual({self.blocks},{self.planes})"


@dataclass(frozen=True)
class EfficientFormerConfig:
    widths: tuple[int, int]
    depths: tuple[int, int]
    mb3d_count: int = 1
    heads: int = DEFAULT_HEADS

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(self.widths))
        object.__setattr__(self, "depths", tuple(self.depths))
        if len(self.widths) != 2 or len(self.depths) != 2:
            raise ValueError("widths and depths must be pairs")
        if min(self.widths) < 1 or min(self.depths) < 1:
            raise ValueError("widths and depths must be positive")
        if self.widths[0] % 2:
            raise ValueError("widths[0] must be even (stem halves it)")
        if not 0 <= self.mb3d_count <= self.depths[1]:
            raise ValueError("mb3d_count must lie in [0, depths[1]]")
        if self.heads < 1 or self.widths[1] % self.heads:
            raise ValueError(f"widths[1]={self.widths[1]} not divisible by heads={self.heads}")

    @classmethod
    def preset(cls, name: str, mb3d_count: int | None = None, heads: int | None = None):
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}")
        widths, depths, mb3d = PRESETS[name]
        return cls(widths, depths, mb3d if mb3d_count is None else mb3d_count, heads or DEFAULT_HEADS)

    @property
    def descriptor(self) -> str:
        for name, (w, d, m) in PRESETS.items():
            if (w, d, m, DEFAULT_HEADS) == (self.widths, self.depths, self.mb3d_count, self.heads):
                return f"eff:{name}"
        w, d = self.widths, self.depths
        return f"eff:[{w[0]},{w[1]}]x[{d[0]},{d[1]}]:mb3d={self.mb3d_count}:heads={self.heads}"

    @property
    def display_name(self) -> str:
        return f"Efficient({self.descriptor[4:]})"


_RES = re.compile(r"res:(\d+)x(\d+)$")
_EFF_PRESET = re.compile(r"eff:(l1|l3|l7|l9)((?::\w+=\d+)*)$")
_EFF_FULL = re.compile(r"eff:\[(\d+),(\d+)\]x\[(\d+),(\d+)\]((?::\w+=\d+)*)$")


def _options(tail: str) -> dict[str, int]:
    opts = {}
    for part in filter(None, tail.split(":")):
        key, value = part.split("=")
        if key not in ("mb3d", "heads"):
            raise ValueError(f"unknown option {key!r}")
        opts[key] = int(value)
    return opts


def parse_descriptor(text: str) -> ResidualConfig | EfficientFormerConfig:
    """Parse ``res:BxP``, ``eff:l1`` (optionally ``:mb3d=n:heads=h``) or
    ``eff:[w0,w1]x[d0,d1]:mb3d=n:heads=h``."""
    s = text.replace(" ", "")
    if m := _RES.match(s):
        return ResidualConfig(int(m[1]), int(m[2]))
    if m := _EFF_PRESET.match(s):
        opts = _options(m[2])
        return EfficientFormerConfig.preset(m[1], opts.get("mb3d"), opts.get("heads"))
    if m := _EFF_FULL.match(s):
        opts = _options(m[5])
        return EfficientFormerConfig(
            (int(m[1]), int(m[2])), (int(m[3]), int(m[4])), opts.get("mb3d", 1), opts.get("heads", DEFAULT_HEADS)
        )
    raise ValueError(f"bad architecture descriptor {text!r}")


class PolicyValueOutput(NamedTuple):
    policy_logits: Tensor
    value: Tensor


Trace = Callable[[str, tuple[int, ...]], None]


class ResidualBlock(Module):
    def __init__(self, planes: int, rng):
        super().__init__()
        self.conv1 = Conv(planes, planes, 3, rng, bias=False)
        self.bn1 = BatchNorm(planes)
        self.conv2 = Conv(planes, planes, 3, rng, bias=False)
        self.bn2 = BatchNorm(planes)

    def __call__(self, x):
        y = ops.relu(self.bn1(self.conv1(x)))
        y = self.bn2(self.conv2(y))
        return ops.relu(ops.add(x, y))


class Meta4D(Module):
    """Pooling token mixer followed by a 1x1 conv FFN, both residual."""

    def __init__(self, channels: int, rng):
        super().__init__()
        hidden = channels * FFN_RATIO
        self.fc1 = Conv(channels, hidden, 1, rng)
        self.bn1 = BatchNorm(hidden)
        self.fc2 = Conv(hidden, channels, 1, rng)
        self.bn2 = BatchNorm(channels)

    def __call__(self, x):
        x = ops.add(x, ops.sub(ops.avg_pool3x3_same(x), x))
        y = ops.gelu(self.bn1(self.fc1(x)))
        return ops.add(x, self.bn2(self.fc2(y)))


class Meta3D(Module):
    """Pre-norm attention and MLP over B x T x C tokens."""

    def __init__(self, channels: int, heads: int, rng):
        super().__init__()
        self.norm1 = LayerNorm(channels)
        self.attn = Attention(channels, heads, TOKENS, rng)
        self.norm2 = LayerNorm(channels)
        self.fc1 = Dense(channels, channels * FFN_RATIO, rng)
        self.fc2 = Dense(channels * FFN_RATIO, channels, rng)

    def __call__(self, x):
        x = ops.add(x, self.attn(self.norm1(x)))
        return ops.add(x, self.fc2(ops.gelu(self.fc1(self.norm2(x)))))


class PolicyHead(Module):
    def __init__(self, channels: int, rng):
        super().__init__()
        self.conv = Conv(channels, 1, 1, rng)

    def __call__(self, x):
        return ops.reshape(self.conv(x), (x.shape[0], POLICY_SIZE))


class ValueHead(Module):
    def __init__(self, channels: int, rng):
        super().__init__()
        self.fc1 = Dense(channels, VALUE_HIDDEN, rng)
        self.fc2 = Dense(VALUE_HIDDEN, 1, rng)

    def __call__(self, x):
        return ops.sigmoid(self.fc2(ops.relu(self.fc1(ops.global_avg_pool(x)))))


class Network(Module):
    """Base for both families: input check, spatial asserts, heads, IO."""

    config: ResidualConfig | EfficientFormerConfig

    @property
    def descriptor(self) -> str:
        return self.config.descriptor

    @property
    def display_name(self) -> str:
        return self.config.display_name

    def _check(self, name: str, x: Tensor, trace: Trace | None) -> None:
        shape = x.shape
        if len(shape) == 4:
            ok = shape[2:] == (GRID, GRID)
        else:
            ok = len(shape) == 3 and shape[1] == TOKENS
        if not ok:
            raise AssertionError(f"{name}: activation {shape} lost the 19x19 extent")
        if trace is not None:
            trace(name, shape)

    def body(self, x: Tensor, trace: Trace | None) -> Tensor:
        raise NotImplementedError

    def __call__(self, x, mode: str = "eval", trace: Trace | None = None) -> PolicyValueOutput:
        return forward(self, x, mode, trace)

    def state_dict(self) -> dict[str, np.ndarray]:
        out = {name: p.data for name, p in self.named_parameters()}
        for name, b in self.named_buffers():
            out[name] = b
        return out

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        buffer_owners = {}
        for m_name, m in _walk(self, ""):
            for b in m.buffers:
                buffer_owners[m_name + b] = (m, b)
        expected = set(params) | set(buffer_owners)
        if set(arrays) != expected:
            missing = sorted(expected - set(arrays))[:3]
            extra = sorted(set(arrays) - expected)[:3]
            raise ValueError(f"checkpoint mismatch: missing {missing} unexpected {extra}")
        for name, arr in arrays.items():
            if name in params:
                p = params[name]
                if p.data.shape != arr.shape:
                    raise ValueError(f"{name}: shape {arr.shape} != {p.data.shape}")
                p.data = arr.astype(p.data.dtype).copy()
            else:
                m, b = buffer_owners[name]
                m.buffers[b] = arr.astype(m.buffers[b].dtype).copy()

    def save(self, path: str | Path) -> None:
        save_weights(path, self.descriptor, self.state_dict())


def _walk(module: Module, prefix: str):
    yield prefix, module
    for name, child in module._children.items():
        yield from _walk(child, f"{prefix}{name}.")


class ResidualNet(Network):
    def __init__(self, config: ResidualConfig, seed: int = 0):
        super().__init__()
        object.__setattr__(self, "config", config)
        rng = np.random.default_rng(seed)
        p = config.planes
        self.stem = Conv(NUM_PLANES, p, 3, rng, bias=False)
        self.stem_bn = BatchNorm(p)
        self.blocks = [ResidualBlock(p, rng) for _ in range(config.blocks)]
        self.policy = PolicyHead(p, rng)
        self.value = ValueHead(p, rng)

    def body(self, x, trace):
        x = ops.relu(self.stem_bn(self.stem(x)))
        self._check("stem", x, trace)
        for i, block in enumerate(self.blocks):
            x = block(x)
            self._check(f"blocks.{i}", x, trace)
        return x


class EfficientNet(Network):
    def __init__(self, config: EfficientFormerConfig, seed: int = 0):
        super().__init__()
        object.__setattr__(self, "config", config)
        rng = np.random.default_rng(seed)
        (w0, w1), (d0, d1) = config.widths, config.depths
        self.stem1 = Conv(NUM_PLANES, w0 // 2, 3, rng, bias=False)
        self.stem1_bn = BatchNorm(w0 // 2)
        self.stem2 = Conv(w0 // 2, w0, 3, rng, bias=False)
        self.stem2_bn = BatchNorm(w0)
        self.stage1 = [Meta4D(w0, rng) for _ in range(d0)]
        self.raise_ = Conv(w0, w1, 1, rng)
        self.stage2 = [Meta4D(w1, rng) for _ in range(d1 - config.mb3d_count)]
        self.attn_blocks = [Meta3D(w1, config.heads, rng) for _ in range(config.mb3d_count)]
        self.policy = PolicyHead(w1, rng)
        self.value = ValueHead(w1, rng)

    def body(self, x, trace):
        x = ops.gelu(self.stem1_bn(self.stem1(x)))
        self._check("stem1", x, trace)
        x = ops.gelu(self.stem2_bn(self.stem2(x)))
        self._check("stem2", x, trace)
        for i, block in enumerate(self.stage1):
            x = block(x)
            self._check(f"stage1.{i}", x, trace)
        x = self.raise_(x)
        self._check("raise", x, trace)
        for i, block in enumerate(self.stage2):
            x = block(x)
            self._check(f"stage2.{i}", x, trace)
        if self.attn_blocks:
            b, c = x.shape[:2]
            t = ops.transpose(ops.reshape(x, (b, c, TOKENS)), (0, 2, 1))
            for i, block in enumerate(self.attn_blocks):
                t = block(t)
                self._check(f"attn_blocks.{i}", t, trace)
            x = ops.reshape(ops.transpose(t, (0, 2, 1)), (b, c, GRID, GRID))
        return x


def build_residual(config: ResidualConfig, seed: int = 0) -> ResidualNet:
    return ResidualNet(config, seed)


def build_efficientformer(config: EfficientFormerConfig, seed: int = 0) -> EfficientNet:
    return EfficientNet(config, seed)


def build_network(descriptor: str | ResidualConfig | EfficientFormerConfig, seed: int = 0) -> Network:
    config = parse_descriptor(descriptor) if isinstance(descriptor, str) else descriptor
    if isinstance(config, ResidualConfig):
        return build_residual(config, seed)
    return build_efficientformer(config, seed)


def forward(net: Network, x, mode: str = "eval", trace: Trace | None = None) -> PolicyValueOutput:
    """Run the network on a B x 31 x 19 x 19 batch. ``mode`` is "train" or "eval"."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x))
    if x.ndim != 4 or x.shape[1:] != (NUM_PLANES, GRID, GRID):
        raise ValueError(f"expected input B x {NUM_PLANES} x {GRID} x {GRID}, got {x.shape}")
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    net.train(mode == "train")
    feats = net.body(x, trace)
    out = PolicyValueOutput(net.policy(feats), net.value(feats))
    if trace is not None:
        trace("policy", out.policy_logits.shape)
        trace("value", out.value.shape)
    return out


def predict(net: Network, planes: np.ndarray, chunk: int = INFERENCE_BATCH) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode logits (B, 361) and values (B,) as numpy arrays, no gradient tracking.

    The batch runs through the whole network ``chunk`` samples at a time so
    the working set stays cache-sized; results match a single full-batch pass.
    """
    x = np.asarray(planes, dtype=net.parameters()[0].data.dtype)
    if x.ndim != 4 or x.shape[1:] != (NUM_PLANES, GRID, GRID):
        raise ValueError(f"expected input B x {NUM_PLANES} x {GRID} x {GRID}, got {x.shape}")
    logits = np.empty((len(x), POLICY_SIZE), dtype=x.dtype)
    values = np.empty(len(x), dtype=x.dtype)
    for i in range(0, len(x), chunk):
        out = forward(net, Tensor(x[i : i + chunk]), "eval")
        logits[i : i + chunk] = out.policy_logits.data
        values[i : i + chunk] = out.value.data[:, 0]
    return logits, values


def parameter_count(net: Module) -> int:
    return sum(p.data.size for p in net.parameters())


def parameter_breakdown(net: Module) -> list[tuple[str, int]]:
    """Trainable scalars per top-level layer, in construction order."""
    rows: dict[str, int] = {}
    for name, p in net.named_parameters():
        parts = name.split(".")
        key = ".".join(parts[:2]) if len(parts) > 2 and parts[1].isdigit() else parts[0]
        rows[key] = rows.get(key, 0) + p.data.size
    return list(rows.items())


def load_network(path: str | Path) -> Network:
    descriptor, arrays = load_weights(path)
    net = build_network(descriptor)
    net.load_state_dict(arrays)
    return net
