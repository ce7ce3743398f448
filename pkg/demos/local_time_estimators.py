"""
Three ways to read off the local time
=====================================

On a single path we compare the jump count ``delta N``, the normalized time
spent within ``eps`` of the vertex, and the estimator built from the smooth
function ``phi_eps``. Shrinking ``eps`` (with ``delta`` well below it) brings
them together.
"""

import numpy as np

from junctionsde import (CoefficientField, Constant, SimConfig, VertexWeights,
                         jump_count_local_time, run_ensemble, occupation_local_time, phi_decomposition_local_time,
                         simulate_delta_path)
from junctionsde.localtime import LocalTimeObserver, compare_estimators

field = CoefficientField.uniform(Constant(0.0), Constant(1.0), 3, c=1.0, bound_b=1.0,
                                 bound_sigma=1.5, T=1.0)
alpha = VertexWeights((0.2, 0.3, 0.5))
cfg = SimConfig(field, alpha, x0=0.01, delta=0.01, seed=5)

p = simulate_delta_path(cfg)
l = jump_count_local_time(p)
print(f"jump count: l(1) = {l.final:.4f} from {p.jump_counter[-1]} vertex hits")
for eps in (0.2, 0.1, 0.05):
    occ = occupation_local_time(p, field, alpha, eps)
    phi = phi_decomposition_local_time(p, field, eps)
    print(f"eps = {eps:<5} occupation {occ.final:.4f}   phi {phi.final:.4f}")

###############################################################################
# Restricting the occupation estimator to a subset of edges reweights by the
# subset's alpha mass, so on average it agrees with the full estimator.

for subset in ((1,), (1, 2), (3,)):
    s = occupation_local_time(p, field, alpha, 0.1, subset=subset)
    print(f"edges {subset}: {s.final:.4f}")

###############################################################################
# Over an ensemble the mean absolute gap between occupation and jump count
# shrinks with eps.

for eps in (0.2, 0.1):
    sim = SimConfig(field, alpha, x0=eps / 10, delta=eps / 10, seed=5)
    out = run_ensemble(sim, 200, lambda: [LocalTimeObserver(field, alpha, [eps])])
    row = compare_estimators(out[LocalTimeObserver.occ_key(eps, (1, 2, 3))], out["lt_jump"], eps, sim.delta)
    print(f"eps = {eps}: mean |gap| {row['mean_abs_gap']:.4f} +- {row['stderr']:.4f}")
print("mean local time at T = 1 from the vertex: sqrt(2/pi) =", round(np.sqrt(2 / np.pi), 4))
