"""
Edge choice and radial law at the vertex
=========================================

Three half-lines glued at a vertex, Brownian motion on every edge. Each time
the path reaches the vertex it restarts a distance ``delta`` out on an edge
drawn with probabilities ``alpha``. At time T the edge frequencies should
match ``alpha`` and the distance to the vertex should follow the law of
``|x0 + W_T|``.
"""

import numpy as np

from junctionsde import CoefficientField, Constant, SimConfig, VertexWeights, ks_statistic, run_ensemble
from junctionsde.engine import TerminalState
from junctionsde.stats import folded_normal_cdf

field = CoefficientField.uniform(Constant(0.0), Constant(1.0), 3, c=1.0, bound_b=1.0,
                                 bound_sigma=1.5, T=1.0)
alpha = VertexWeights((0.2, 0.3, 0.5))
cfg = SimConfig(field, alpha, x0=0.01, delta=0.01, seed=1)
print(f"{cfg.n_steps} steps of h = {cfg.h:.2e}")

###############################################################################
# A streaming ensemble keeps only the terminal state of each path.

out = run_ensemble(cfg, 2000, lambda: [TerminalState()])
for i, a in enumerate(alpha.alpha, start=1):
    f = np.mean(out["edge_T"] == i)
    print(f"edge {i}: frequency {f:.3f}  alpha {a:.1f}  stderr {np.sqrt(a * (1 - a) / 2000):.3f}")

###############################################################################
# The radial part is reflected Brownian motion whatever alpha is.

ks = ks_statistic(out["x_T"], folded_normal_cdf(cfg.x0, cfg.T))
print(f"KS D = {ks.D:.4f}, 1% critical value {ks.critical:.4f}, passed: {ks.passed}")

###############################################################################
# delta times the number of vertex hits approximates the local time.

print(f"mean delta N(1) = {cfg.delta * out['N_T'].mean():.3f}, sqrt(2/pi) = {np.sqrt(2 / np.pi):.3f}")
