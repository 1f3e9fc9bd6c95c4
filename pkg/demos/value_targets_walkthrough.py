"""Walk through off-policy value targets on a tiny hand example.

Builds a 2-step trajectory segment with known values, rewards, and
importance ratios, then prints the corrected value targets under the
library's two modes: "canonical" (importance weights clipped from above
at 1) and "clipped" (weights clipped from below and above), plus the
resulting policy-gradient advantages.
"""

import numpy as np

from ministone import learner


def make_segment():
    return learner.TrajectorySegment(
        floats=np.zeros((2, 722), dtype=np.float32),
        ids=np.zeros((2, 26), dtype=np.int64),
        actions=np.zeros(2, dtype=np.int64),
        mu=np.array([0.5, 0.5]),
        rewards=np.array([0.0, 1.0]),
        values=np.array([1.0, 2.0]),
        dones=np.zeros(2, dtype=bool),
        bootstrap_value=0.5,
    )


def main():
    seg = make_segment()
    pi = np.array([1.0, 0.00025])  # target-policy probs: rho = 2.0, 0.0005

    configs = (learner.VTraceConfig(mode="canonical", c_high=1.0, rho_high=1.0),
               learner.VTraceConfig(mode="clipped"))
    for cfg in configs:
        mode = cfg.mode
        v, adv = learner.vtrace_targets(seg, cfg, pi)
        c_lo, c_hi, r_lo, r_hi = cfg.clip_bounds()
        print(f"mode={mode:9s} rho clip=[{r_lo}, {r_hi}] "
              f"targets={np.round(v, 5)} advantages={np.round(adv, 5)}")

    up = learner.upgo_targets(seg, gamma=1.0)
    print(f"upgoing returns: {np.round(up, 5)} "
          "(bootstraps to the value when the continuation underperforms)")


if __name__ == "__main__":
    main()
