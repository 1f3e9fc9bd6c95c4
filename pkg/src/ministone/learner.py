"""Targets and losses: V-Trace (canonical and double-clipped), the
importance-sampled policy gradient kept for ablation, the PPO surrogate
over V-Trace advantages, UPGO returns, value l2 and entropy penalty.

Target computation is plain numpy on frozen behavior-time data; only the
loss assembly is differentiable. Per-step conventions: `dones[t]` means
step t ended the episode (its continuation value is zero) and all later
steps in the segment are padding with zero loss weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from . import actions as actions_mod
from . import obsact, policy


@dataclass
class VTraceConfig:
    gamma: float = 1.0
    c_low: float = 0.001
    c_high: float = 1.007
    rho_low: float = 0.001
    rho_high: float = 1.007
    mode: str = "clipped"  # or "canonical"

    def __post_init__(self):
        if not 0 <= self.c_low <= self.c_high:
            raise ValueError("need 0 <= c_low <= c_high")
        if not 0 <= self.rho_low <= self.rho_high:
            raise ValueError("need 0 <= rho_low <= rho_high")
        if self.c_high > self.rho_high:
            raise ValueError("convergence requires c_high <= rho_high")
        if self.mode not in ("canonical", "clipped"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def clip_bounds(self) -> tuple[float, float, float, float]:
        """(c_low, c_high, rho_low, rho_high) with canonical floors at 0."""
        if self.mode == "canonical":
            return 0.0, self.c_high, 0.0, self.rho_high
        return self.c_low, self.c_high, self.rho_low, self.rho_high


@dataclass
class LearnerConfig:
    ppo_eps: float = 0.2
    w_ppo: float = 1.0
    w_upgo: float = 1.0
    w_value: float = 1.0
    w_entropy: float = 0.01
    learning_rate: float = 7e-5
    batch_size_steps: int = 512
    sample_reuse: int = 2
    segment_length: int = 16
    vtrace: VTraceConfig = field(default_factory=VTraceConfig)

    def __post_init__(self):
        if not 0 < self.ppo_eps < 1:
            raise ValueError("ppo_eps must be in (0, 1)")
        for w in (self.w_ppo, self.w_upgo, self.w_value, self.w_entropy):
            if w < 0:
                raise ValueError("loss weights must be >= 0")


@dataclass
class TrajectorySegment:
    """Fixed-length slice of one player's episode, behavior-time data."""
    floats: np.ndarray      # [k, FLOAT_SIZE] observations
    ids: np.ndarray         # [k, INT_SIZE]
    actions: np.ndarray     # [k] action table indices
    mu: np.ndarray          # [k] behavior probability of the taken action
    rewards: np.ndarray     # [k] in {-1, 0, +1}
    values: np.ndarray      # [k] behavior-time value predictions V_t
    dones: np.ndarray       # [k] bool; True where the episode ended
    bootstrap_value: float  # V_{t+k} at the segment cut (0 if cut at done)
    tag: str = ""           # provenance (hero routing under isolation)

    def __post_init__(self):
        k = len(self.actions)
        for name in ("mu", "rewards", "values", "dones"):
            if len(getattr(self, name)) != k:
                raise ValueError(f"{name} length mismatch")
        if np.any(self.mu[self.valid.astype(bool)] <= 0):
            raise ValueError("behavior probability must be positive on valid steps")

    @property
    def k(self) -> int:
        return len(self.actions)

    @property
    def valid(self) -> np.ndarray:
        """1.0 through the first done step inclusive, 0.0 after."""
        done_idx = np.flatnonzero(self.dones)
        v = np.ones(self.k)
        if len(done_idx):
            v[done_idx[0] + 1:] = 0.0
        return v


def vtrace_targets(segment: TrajectorySegment, cfg: VTraceConfig,
                   current_policy_probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Value targets v_t and advantages A_t = r_t + gamma*v_{t+1} - V_t.

    Single recursion covers both modes; the canonical form is the clipped
    form with floors at zero (ratios are nonnegative).
    """
    pi = np.asarray(current_policy_probs, dtype=np.float64)
    if np.any(pi[segment.valid.astype(bool)] < 0):
        raise ValueError("policy probabilities must be nonnegative")
    c_lo, c_hi, r_lo, r_hi = cfg.clip_bounds()
    k = segment.k
    valid = segment.valid
    rho = np.zeros(k)
    vb = valid.astype(bool)
    rho[vb] = pi[vb] / segment.mu[vb]
    crho = np.clip(rho, r_lo, r_hi)
    cc = np.clip(rho, c_lo, c_hi)
    V = np.asarray(segment.values, dtype=np.float64)
    r = np.asarray(segment.rewards, dtype=np.float64)
    cont = cfg.gamma * (1.0 - segment.dones.astype(np.float64))

    v = np.zeros(k + 1)
    v_next = float(segment.bootstrap_value)
    V_next = float(segment.bootstrap_value)
    v[k] = v_next
    for t in range(k - 1, -1, -1):
        if not valid[t]:
            v[t] = V[t]
            v_next, V_next = V[t], V[t]
            continue
        delta = r[t] + cont[t] * V_next - V[t]
        v[t] = V[t] + crho[t] * delta + cont[t] * cc[t] * (v_next - V_next)
        v_next, V_next = v[t], V[t]

    v_tp1 = np.empty(k)
    for t in range(k):
        if t + 1 < k and valid[t + 1]:
            v_tp1[t] = v[t + 1]
        elif segment.dones[t]:
            v_tp1[t] = 0.0
        else:
            v_tp1[t] = segment.bootstrap_value
    adv = r + cfg.gamma * (1.0 - segment.dones.astype(np.float64)) * v_tp1 - V
    return v[:k], adv * valid


def upgo_targets(segment: TrajectorySegment, gamma: float) -> np.ndarray:
    """Upgoing returns: bootstrap to the value whenever the realized
    one-step continuation underperforms it."""
    k = segment.k
    V = np.asarray(segment.values, dtype=np.float64)
    r = np.asarray(segment.rewards, dtype=np.float64)
    valid = segment.valid
    G = np.zeros(k)
    # Value and return beyond the segment cut.
    for t in range(k - 1, -1, -1):
        if not valid[t]:
            continue
        if segment.dones[t]:
            G[t] = r[t]
            continue
        V_tp1 = segment.bootstrap_value if t + 1 >= k else V[t + 1]
        if t + 1 >= k:
            # Cut mid-episode: no lookahead, bootstrap the value.
            G[t] = r[t] + gamma * V_tp1
            continue
        r_tp1 = r[t + 1]
        V_tp2 = 0.0 if segment.dones[t + 1] else (
            segment.bootstrap_value if t + 2 >= k else V[t + 2])
        if r_tp1 + gamma * V_tp2 >= V_tp1:
            G[t] = r[t] + gamma * G[t + 1]
        else:
            G[t] = r[t] + gamma * V_tp1
    return G * valid


# ---------------------------------------------------------------------------
# Differentiable loss terms. Frozen inputs (targets, clipped coefficients)
# are numpy constants; only `ratio`/`logp`/`values`/`probs` carry gradients.


def _wmean(x: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    return (x * valid).sum() / valid.sum().clamp(min=1.0)


def ppo_surrogate_loss(adv: torch.Tensor, ratio: torch.Tensor, eps: float,
                       valid: torch.Tensor) -> torch.Tensor:
    """Negative mean of min(A*ratio, A*clip(ratio, 1-eps, 1+eps))."""
    term = torch.minimum(adv * ratio, adv * torch.clamp(ratio, 1.0 - eps, 1.0 + eps))
    return -_wmean(term, valid)


def vtrace_pg_loss(adv: torch.Tensor, logp: torch.Tensor, rho_clipped: torch.Tensor,
                   valid: torch.Tensor) -> torch.Tensor:
    """Ablation path: importance-clipped advantage times grad-log-prob."""
    return -_wmean(rho_clipped * adv * logp, valid)


def upgo_loss(G: torch.Tensor, V_behavior: torch.Tensor, logp: torch.Tensor,
              rho_capped: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    return -_wmean(rho_capped * (G - V_behavior) * logp, valid)


def value_loss(v_pred: torch.Tensor, v_target: torch.Tensor,
               valid: torch.Tensor) -> torch.Tensor:
    return _wmean((v_pred - v_target) ** 2, valid)


def entropy_loss(probs: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Negative masked entropy (minimizing it pushes toward uniform)."""
    plogp = torch.where(probs > 0, probs * torch.log(probs.clamp(min=1e-30)),
                        torch.zeros_like(probs))
    return _wmean(plogp.sum(dim=-1), valid)


@dataclass
class FrozenTargets:
    """Per-batch constants computed from the current policy, then detached."""
    pi: np.ndarray           # [B, k] current policy prob of taken action
    v: np.ndarray            # [B, k] V-Trace value targets
    adv: np.ndarray          # [B, k] PPO/V-Trace advantages
    upgo: np.ndarray         # [B, k] upgoing returns
    rho: np.ndarray          # [B, k] raw importance ratios
    valid: np.ndarray        # [B, k]


def stack_segments(segments: list[TrajectorySegment]):
    floats = np.stack([s.floats for s in segments]).reshape(-1, obsact.FLOAT_SIZE)
    ids = np.stack([s.ids for s in segments]).reshape(-1, obsact.INT_SIZE)
    # Padded steps may carry all-zero masks; give them one legal action so
    # the masked softmax stays finite (their loss weight is zero anyway).
    off, w = obsact._OFFSETS["action_mask"]
    dead = floats[:, off:off + w].sum(axis=1) == 0
    floats = floats.copy()
    floats[dead, off + actions_mod.TYPE_END_TURN] = 1.0
    return floats, ids


def policy_eval(params: policy.PolicyParams, segments: list[TrajectorySegment]):
    """Differentiable per-step quantities from the current policy."""
    B, k = len(segments), segments[0].k
    floats, ids = stack_segments(segments)
    out = policy.forward_batch(params, floats, ids, grad=True)
    actions = torch.as_tensor(np.stack([s.actions for s in segments]).reshape(-1))
    pa = out.probs.gather(1, actions[:, None]).squeeze(1).clamp(min=1e-30)
    return {
        "prob_a": pa.reshape(B, k),
        "logp_a": torch.log(pa).reshape(B, k),
        "value": out.value.reshape(B, k),
        "probs": out.probs.reshape(B, k, -1),
    }


def compute_frozen(params: policy.PolicyParams, segments: list[TrajectorySegment],
                   cfg: LearnerConfig) -> FrozenTargets:
    with torch.no_grad():
        ev = policy_eval(params, segments)
    pi = ev["prob_a"].numpy()
    B, k = pi.shape
    v = np.zeros((B, k))
    adv = np.zeros((B, k))
    upgo = np.zeros((B, k))
    rho = np.zeros((B, k))
    valid = np.stack([s.valid for s in segments])
    for i, seg in enumerate(segments):
        v[i], adv[i] = vtrace_targets(seg, cfg.vtrace, pi[i])
        upgo[i] = upgo_targets(seg, cfg.vtrace.gamma)
        vb = valid[i].astype(bool)
        rho[i, vb] = pi[i, vb] / seg.mu[vb]
    return FrozenTargets(pi, v, adv, upgo, rho, valid)


def total_loss(params: policy.PolicyParams, segments: list[TrajectorySegment],
               cfg: LearnerConfig, frozen: FrozenTargets | None = None):
    """Weighted training loss and its components (tensors)."""
    if frozen is None:
        frozen = compute_frozen(params, segments, cfg)
    ev = policy_eval(params, segments)
    dt = params.net.cfg.torch_dtype()
    t = lambda arr: torch.as_tensor(arr, dtype=dt)
    valid = t(frozen.valid)
    mu_np = np.where(frozen.valid > 0, np.stack([s.mu for s in segments]), 1.0)
    mu = t(mu_np)
    ratio = ev["prob_a"] / mu
    V_b = t(np.stack([s.values for s in segments]))
    comps = {
        "ppo": ppo_surrogate_loss(t(frozen.adv), ratio, cfg.ppo_eps, valid),
        "upgo": upgo_loss(t(frozen.upgo), V_b, ev["logp_a"],
                          t(np.minimum(frozen.rho, 1.0)), valid),
        "value": value_loss(ev["value"], t(frozen.v), valid),
        "entropy": entropy_loss(ev["probs"], valid),
    }
    loss = (cfg.w_ppo * comps["ppo"] + cfg.w_upgo * comps["upgo"]
            + cfg.w_value * comps["value"] + cfg.w_entropy * comps["entropy"])
    with torch.no_grad():
        clipped = ((ratio < 1 - cfg.ppo_eps) | (ratio > 1 + cfg.ppo_eps)).to(dt)
        metrics = {
            "loss": float(loss),
            **{f"loss_{n}": float(v) for n, v in comps.items()},
            "mean_ratio": float(_wmean(ratio, valid)),
            "max_ratio": float((ratio * valid).max()),
            "clip_fraction": float(_wmean(clipped, valid)),
        }
    return loss, metrics


class Learner:
    """Owns one PolicyParams instance and its optimizer state."""

    def __init__(self, params: policy.PolicyParams, cfg: LearnerConfig | None = None):
        self.params = params
        self.cfg = cfg or LearnerConfig()
        self.opt = torch.optim.Adam(params.net.parameters(), lr=self.cfg.learning_rate)
        self.updates = 0

    def update(self, segments: list[TrajectorySegment],
               frozen: FrozenTargets | None = None) -> dict:
        if self.params.hero_tag:
            for s in segments:
                if s.tag and s.tag != self.params.hero_tag:
                    raise ValueError(
                        f"segment tagged {s.tag!r} routed to learner "
                        f"{self.params.hero_tag!r}")
        loss, metrics = total_loss(self.params, segments, self.cfg, frozen)
        if not torch.isfinite(loss):
            raise RuntimeError("non-finite loss; update aborted")
        self.opt.zero_grad(set_to_none=True)
        loss.backward()
        self.opt.step()
        self.updates += 1
        self.params.step += 1
        metrics["step"] = self.params.step
        return metrics


def total_loss_and_update(learner: Learner, segments: list[TrajectorySegment]):
    metrics = learner.update(segments)
    return learner.params, metrics
