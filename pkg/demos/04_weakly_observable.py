"""Weakly observable graphs: where the best arm sits matters.

On a directed complete bipartite graph the arms with self-loops (S) see every
arm without one. When the best arm is in S the corrected OMD learner behaves
like a sqrt(T) algorithm; when it is outside S and every S arm is costly, the
learner has to pay for exploration and regret grows faster.

The second half builds the lower-bound environment pair: two loss sequences
that differ only on one arm for a stretch of rounds, which no learner can tell
apart cheaply.

Takes under a minute.
"""

import math

from graphbandit.environments import gen_lower_bound_pair
from graphbandit.graph import FeedbackGraph
from graphbandit.harness import ExperimentConfig, run_trial, scaling_suite

bip = FeedbackGraph(6, [(i, i) for i in range(3)] + [(i, j) for i in range(3) for j in range(3, 6)])
seeds = tuple(range(4))
for label, env in (("best arm in S", "smallloss:mu_star=0.1,gap=0.5,best_arm=0"),
                   ("best arm outside S", "smallloss:mu_star=0.1,gap=0.3,best_arm=5")):
    cfg = ExperimentConfig(bip, "weakly_bipartite", 5000, env, seeds, params={"L_oracle": "auto"})
    rows, _ = scaling_suite(cfg, "T", [5000, 20000])
    print(f"{label}: regret {rows[0].mean_regret:.0f} at T=5000, "
          f"{rows[1].mean_regret:.0f} at T=20000, growth exponent {rows[1].slope:.2f}")

weak = FeedbackGraph(4, [(0, 0), (1, 1), (0, 1), (1, 0), (0, 2), (1, 3)])
T = 20_000
pair = gen_lower_bound_pair(weak, T)
start, stop = pair.interval
print(f"\nlower-bound pair on arms u={pair.u}, v={pair.v}; environments differ on rounds [{start}, {stop})")
print(f"L* in A: {pair.A.L_star:.0f} (arm {pair.A.best_arm}); L* in B: {pair.B.L_star:.1f} (arm {pair.B.best_arm})")
cfg = ExperimentConfig(weak, "weakly_general_adaptive", T, "lowerbound", (0,))
for name, lm in (("A", pair.A), ("B", pair.B)):
    reg = run_trial(cfg, 0, losses=lm).report.regret
    print(f"regret on {name}: {reg:.0f}   (T^(2/3) ln T = {T ** (2 / 3) * math.log(T):.0f})")
