"""One online mirror descent step, seen from several angles.

The same hybrid regulariser drives most policies here: negative entropy on
some coordinates and a log-barrier on others. This script takes one step
with a large importance-weighted loss and checks the properties the analysis
relies on.
"""

import numpy as np

from graphbandit.diagnostics import sample_feasible
from graphbandit.estimators import importance_weighted, reveal
from graphbandit.graph import FeedbackGraph
from graphbandit.mirror import (
    DecisionSet,
    RegularizerSpec,
    best_shift,
    bregman,
    check_multiplicative_stability,
    local_norm_shifted,
    omd_step,
)

rng = np.random.default_rng(0)
K, T = 5, 10_000
g = FeedbackGraph(
    K, [(0, 0), (1, 1), (0, 1), (1, 0), (2, 2)] + [(j, i) for i in (3, 4) for j in range(K) if j != i]
)

eta = 0.5
reg = RegularizerSpec.hybrid(K, 1 / eta, 64 * K)  # entropy 1/eta plus barrier 64K
omega = DecisionSet(K, lower_bounds=1 / T)

# arm 2 only sees itself, so playing it at 2% probability inflates its estimate 50x
p = np.array([0.5, 0.2, 0.02, 0.2, 0.08])
loss = np.array([0.3, 0.6, 0.9, 0.2, 0.4])
arm = 2
est = importance_weighted(g, p, reveal(g, loss, arm))
print("loss      ", np.round(loss, 3))
print("estimate  ", np.round(est, 3), f"(played arm {arm})")

q = omd_step(reg, p, est, omega)
print("p_t       ", p)
print("p_{t+1}   ", np.round(q, 5))
print("ratio     ", np.round(q / p, 4))
# even a 45x estimate barely moves p: the 64K barrier term is what keeps every
# coordinate within a factor of two of its previous value
print("within a factor of two of p_t:", check_multiplicative_stability(p, q))

# The step minimises <x, est> + D(x, p) over omega, so nearby feasible points
# (1% of the way toward random feasible directions) never do better.
def obj(x):
    return float(x @ est + bregman(reg, x, p))


near = 0.99 * q + 0.01 * sample_feasible(omega, q, rng, 200)
print(f"objective at p_(t+1) {obj(q):.6f}; best of 200 nearby feasible points {min(map(obj, near)):.6f}")

# Loss shifting: subtracting a constant from the estimate changes nothing in the
# step but can shrink the local-norm term of the analysis a lot.
z = best_shift(reg, p, est)
print(f"local norm without shift {local_norm_shifted(reg, p, est, 0.0):.5f}, "
      f"with best shift z={z:.3f}: {local_norm_shifted(reg, p, est, z):.5f}")
np.testing.assert_allclose(omd_step(reg, p, est - z, omega), q, atol=1e-9)
print("shifted step agrees with the original step")
