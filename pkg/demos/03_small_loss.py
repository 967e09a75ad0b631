"""Small-loss behaviour on a self-aware graph.

When the best arm rarely incurs loss, a first-order algorithm's regret should
track sqrt(L*) rather than sqrt(T). We vary the best arm's mean on a union of
three 2-cliques and compare a worst-case tuned learner with the clipped
two-stage learner, which needs no knowledge of L*.

Takes about half a minute.
"""

import math

from graphbandit.graph import clique_union_graph
from graphbandit.harness import ExperimentConfig, loglog_slope, scaling_suite

g = clique_union_graph([2, 2, 2])
T = 10_000
seeds = tuple(range(4))
grid = [0.01, 0.04, 0.16]

for algo, params in (("exp3g_hybrid", {"alpha_hint": 3}), ("clipped_two_stage", {"alpha_hint": 3})):
    cfg = ExperimentConfig(g, algo, T, "smallloss:mu_star=0.01,gap=0.3", seeds, params=params)
    rows, _ = scaling_suite(cfg, "mu_star", grid)
    L = [r.mean_L_star for r in rows]
    R = [r.mean_regret for r in rows]
    print(f"{algo}")
    for mu, l, r in zip(grid, L, R):
        print(f"  mu*={mu:<5} L*={l:7.1f}  regret={r:7.1f}  regret/sqrt(L*)={r / math.sqrt(l):5.2f}")
    print(f"  log-log slope of regret against L*: {loglog_slope(L, R):.2f}\n")
