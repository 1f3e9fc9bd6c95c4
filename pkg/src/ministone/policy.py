"""Two-branch policy/value net over the shared action table.

Action logits are a stage-gated sum: with the draft-stage indicator d,
logits = d * cb_branch(x) + (1 - d) * bt_branch(x), so perturbing one
branch never moves the other stage's action distribution. Card and hero
embeddings are shared by both branches; the value head reads the
concatenated intermediate features of both.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from . import actions as A
from . import obsact

CKPT_MAGIC = b"MNST"
CKPT_VERSION = 1

_MASK_FILL = -1e9


@dataclass
class PolicyConfig:
    emb_dim: int = 32
    hidden: int = 256
    dtype: str = "float32"  # float64 for gradient-check suites
    recurrent: bool = False
    recurrent_size: int = 256
    logit_init_scale: float = 0.01

    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32


@dataclass
class PolicyOutput:
    logits: torch.Tensor        # [B, TABLE]
    probs: torch.Tensor         # masked, renormalized; masked entries exactly 0
    value: torch.Tensor         # [B]
    mask: torch.Tensor          # [B, TABLE]
    stage_delta: torch.Tensor   # [B]
    recurrent_out: tuple | None = None


def _init_linear(layer: nn.Linear, gen: torch.Generator, scale: float = 1.0) -> None:
    bound = scale / math.sqrt(layer.in_features)
    with torch.no_grad():
        layer.weight.uniform_(-bound, bound, generator=gen)
        layer.bias.zero_()


class _Branch(nn.Module):
    def __init__(self, in_dim: int, cfg: PolicyConfig):
        super().__init__()
        self.fc1 = nn.Linear(in_dim, cfg.hidden)
        self.fc2 = nn.Linear(cfg.hidden, cfg.hidden)
        self.recurrent = cfg.recurrent
        if cfg.recurrent:
            self.core = nn.LSTMCell(cfg.hidden, cfg.recurrent_size)
            out_dim = cfg.recurrent_size
        else:
            out_dim = cfg.hidden
        self.logits = nn.Linear(out_dim, A.TABLE_SIZE)
        self.out_dim = out_dim

    def forward(self, x, state=None):
        h = torch.relu(self.fc1(x))
        h = torch.relu(self.fc2(h))
        if self.recurrent:
            if state is None:
                zeros = h.new_zeros(h.shape[0], self.core.hidden_size)
                state = (zeros, zeros)
            hx, cx = self.core(h, state)
            return self.logits(hx), hx, (hx, cx)
        return self.logits(h), h, None


class PolicyNet(nn.Module):
    """Feature extraction + both branches + value head."""

    def __init__(self, cfg: PolicyConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.emb_dim
        self.card_emb = nn.Embedding(A.POOL_SIZE + 1, d)
        self.hero_emb = nn.Embedding(4, d)
        # Scalar features exclude the action mask (it gates the output, not
        # the input); embedding summaries are appended.
        self.float_dim = obsact._OFFSETS["action_mask"][0]
        self.feat_dim = self.float_dim + 8 * d + 2 * d
        self.cb = _Branch(self.feat_dim, cfg)
        self.bt = _Branch(self.feat_dim, cfg)
        self.value_hidden = nn.Linear(self.cb.out_dim + self.bt.out_dim, cfg.hidden)
        self.value_out = nn.Linear(cfg.hidden, 1)
        self.to(cfg.torch_dtype())

    def reset_parameters(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            self.card_emb.weight.uniform_(-0.05, 0.05, generator=gen)
            self.hero_emb.weight.uniform_(-0.05, 0.05, generator=gen)
        for branch in (self.cb, self.bt):
            _init_linear(branch.fc1, gen)
            _init_linear(branch.fc2, gen)
            _init_linear(branch.logits, gen, scale=self.cfg.logit_init_scale)
            if branch.recurrent:
                for w in branch.core.parameters():
                    with torch.no_grad():
                        bound = 1.0 / math.sqrt(branch.core.hidden_size)
                        w.uniform_(-bound, bound, generator=gen)
        _init_linear(self.value_hidden, gen)
        _init_linear(self.value_out, gen, scale=self.cfg.logit_init_scale)

    def _count_summary(self, floats, name):
        off, w = obsact._OFFSETS[name]
        return floats[:, off:off + w] @ self.card_emb.weight[1:w + 1]

    def features(self, floats: torch.Tensor, ids: torch.Tensor) -> torch.Tensor:
        cards = self.card_emb(ids[:, 2:])  # hand + both boards, [B, 24, d]
        hand = cards[:, :A.MAX_HAND].sum(dim=1)
        my_board = cards[:, A.MAX_HAND:A.MAX_HAND + A.MAX_BOARD].sum(dim=1)
        opp_board = cards[:, A.MAX_HAND + A.MAX_BOARD:].sum(dim=1)
        sums = [self._count_summary(floats, n) for n in
                ("cb_selected", "my_deck_counts", "my_graveyard_counts",
                 "opp_graveyard_counts", "cheat_deck_counts")]
        heroes = self.hero_emb(ids[:, :2])
        return torch.cat(
            [floats[:, :self.float_dim], hand, my_board, opp_board, *sums,
             heroes[:, 0], heroes[:, 1]], dim=1)

    def forward(self, floats, ids, recurrent_in=None):
        x = self.features(floats, ids)
        cb_state = bt_state = None
        if recurrent_in is not None:
            cb_state, bt_state = recurrent_in
        cb_logits, cb_feat, cb_out = self.cb(x, cb_state)
        bt_logits, bt_feat, bt_out = self.bt(x, bt_state)
        delta = floats[:, 0:1]
        logits = delta * cb_logits + (1.0 - delta) * bt_logits
        off = self.float_dim
        mask = floats[:, off:off + A.TABLE_SIZE]
        probs = masked_probs(logits, mask)
        v = self.value_out(torch.relu(self.value_hidden(torch.cat([cb_feat, bt_feat], dim=1))))
        rec = (cb_out, bt_out) if self.cfg.recurrent else None
        return PolicyOutput(logits, probs, v.squeeze(-1), mask, delta.squeeze(-1), rec)


def masked_probs(logits: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Softmax with unavailable actions at exactly zero probability."""
    masked = logits + (mask - 1.0) * -_MASK_FILL
    probs = torch.softmax(masked, dim=-1) * mask
    return probs / probs.sum(dim=-1, keepdim=True)


@dataclass
class PolicyParams:
    """Learnable parameters plus checkpoint metadata."""
    net: PolicyNet
    pool_checksum: str
    version: int = CKPT_VERSION
    step: int = 0
    hero_tag: str = ""
    meta: dict = field(default_factory=dict)

    def clone(self) -> "PolicyParams":
        cfg = PolicyConfig(**vars(self.net.cfg))
        net = PolicyNet(cfg)
        net.load_state_dict(self.net.state_dict())
        return PolicyParams(net, self.pool_checksum, self.version, self.step,
                            self.hero_tag, dict(self.meta))


def init_params(pool_checksum: str, seed: int,
                cfg: PolicyConfig | None = None, hero_tag: str = "") -> PolicyParams:
    cfg = cfg or PolicyConfig()
    net = PolicyNet(cfg)
    net.reset_parameters(seed)
    return PolicyParams(net, pool_checksum, hero_tag=hero_tag)


def _obs_tensors(params: PolicyParams, obs: obsact.ObservationBundle):
    dt = params.net.cfg.torch_dtype()
    floats = torch.from_numpy(obs.floats[None, :].astype(
        np.float64 if dt == torch.float64 else np.float32))
    ids = torch.from_numpy(obs.ids[None, :])
    return floats.to(dt), ids


def forward(params: PolicyParams, obs: obsact.ObservationBundle,
            recurrent_in=None) -> PolicyOutput:
    if not np.isfinite(obs.floats).all():
        raise ValueError("non-finite observation")
    floats, ids = _obs_tensors(params, obs)
    with torch.no_grad():
        return params.net(floats, ids, recurrent_in)


def forward_batch(params: PolicyParams, floats: np.ndarray, ids: np.ndarray,
                  grad: bool = False) -> PolicyOutput:
    dt = params.net.cfg.torch_dtype()
    ft = torch.as_tensor(floats).to(dt)
    it = torch.as_tensor(ids)
    if grad:
        return params.net(ft, it)
    with torch.no_grad():
        return params.net(ft, it)


def random_cb_override(output: PolicyOutput, active: bool) -> PolicyOutput:
    """Exploration override: zero the draft logits, making picks uniform."""
    if not torch.all(output.stage_delta == 1.0):
        raise ValueError("random-CB override applies to draft-stage outputs only")
    if not active:
        return output
    logits = torch.zeros_like(output.logits)
    return PolicyOutput(logits, masked_probs(logits, output.mask), output.value,
                        output.mask, output.stage_delta, output.recurrent_out)


# ---------------------------------------------------------------------------
# Flat parameter access (finite-difference oracles, optimizer-free updates)


def flat_params(params: PolicyParams) -> np.ndarray:
    with torch.no_grad():
        return torch.cat([p.reshape(-1) for p in params.net.parameters()]).numpy().copy()


def set_flat_params(params: PolicyParams, flat: np.ndarray) -> None:
    t = torch.as_tensor(flat, dtype=params.net.cfg.torch_dtype())
    i = 0
    with torch.no_grad():
        for p in params.net.parameters():
            n = p.numel()
            p.copy_(t[i:i + n].reshape(p.shape))
            i += n


def backward(params: PolicyParams, loss: torch.Tensor) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. all parameters, flattened."""
    if not torch.isfinite(loss):
        raise ValueError("non-finite loss")
    params.net.zero_grad(set_to_none=True)
    loss.backward()
    chunks = []
    for p in params.net.parameters():
        g = p.grad
        chunks.append(torch.zeros_like(p).reshape(-1) if g is None else g.reshape(-1))
    return torch.cat(chunks).detach().numpy().copy()


# ---------------------------------------------------------------------------
# Checkpoints


def _pack_str(s: str) -> bytes:
    b = s.encode()
    return struct.pack("<H", len(b)) + b


def _read_str(buf: io.BytesIO) -> str:
    (n,) = struct.unpack("<H", buf.read(2))
    return buf.read(n).decode()


def save_checkpoint(params: PolicyParams, path) -> None:
    """Binary layout: MNST | u32 version | u64 step | checksum | hero tag |
    config json | u32 tensor count | tensors (name, dtype, shape, raw LE
    bytes) | sha256 of everything before it."""
    body = io.BytesIO()
    body.write(CKPT_MAGIC)
    body.write(struct.pack("<IQ", params.version, params.step))
    body.write(_pack_str(params.pool_checksum))
    body.write(_pack_str(params.hero_tag))
    body.write(_pack_str(json.dumps(vars(params.net.cfg), sort_keys=True)))
    state = params.net.state_dict()
    body.write(struct.pack("<I", len(state)))
    for name, tensor in state.items():
        arr = tensor.detach().numpy()
        body.write(_pack_str(name))
        body.write(_pack_str(str(arr.dtype)))
        body.write(struct.pack("<B", arr.ndim))
        body.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        body.write(arr.tobytes())
    raw = body.getvalue()
    with open(path, "wb") as fh:
        fh.write(raw)
        fh.write(hashlib.sha256(raw).digest())


def load_checkpoint(path, expected_pool_checksum: str | None = None) -> PolicyParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 36 or hashlib.sha256(raw[:-32]).digest() != raw[-32:]:
        raise ValueError("corrupt checkpoint file")
    buf = io.BytesIO(raw[:-32])
    if buf.read(4) != CKPT_MAGIC:
        raise ValueError("not a checkpoint file")
    version, step = struct.unpack("<IQ", buf.read(12))
    if version != CKPT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pool_checksum = _read_str(buf)
    if expected_pool_checksum is not None and pool_checksum != expected_pool_checksum:
        raise ValueError("checkpoint was trained against a different card pool")
    hero_tag = _read_str(buf)
    cfg = PolicyConfig(**json.loads(_read_str(buf)))
    (count,) = struct.unpack("<I", buf.read(4))
    state = {}
    for _ in range(count):
        name = _read_str(buf)
        dtype = np.dtype(_read_str(buf))
        (ndim,) = struct.unpack("<B", buf.read(1))
        shape = struct.unpack(f"<{ndim}I", buf.read(4 * ndim))
        arr = np.frombuffer(buf.read(dtype.itemsize * int(np.prod(shape, dtype=np.int64))),
                            dtype=dtype).reshape(shape)
        state[name] = torch.from_numpy(arr.copy())
    net = PolicyNet(cfg)
    net.load_state_dict(state)
    return PolicyParams(net, pool_checksum, version, step, hero_tag)
