"""
Distances between junction paths
================================

Paths on a junction are compared with the junction metric: plain distance on
one edge, sum of distances through the vertex across edges. Two paths driven
by the same noise at different ``delta`` are close in the uniform sense, and
closer still once small time shifts are allowed.
"""

from junctionsde import (CoefficientField, Constant, SimConfig, VertexWeights, modulus_of_continuity,
                         simulate_coupled_refinement, skorokhod_distance_upper, uniform_distance,
                         validate_Ddelta_membership)

field = CoefficientField.uniform(Constant(0.0), Constant(1.0), 3, c=1.0, bound_b=1.0,
                                 bound_sigma=1.5, T=1.0)
cfg = SimConfig(field, VertexWeights((0.2, 0.3, 0.5)), x0=0.3, delta=0.08, seed=9)
coarse, fine = simulate_coupled_refinement(cfg, [0.08, 0.02])

for p in (coarse, fine):
    rep = validate_Ddelta_membership(p)
    print(f"delta = {p.delta}: {rep.n_jumps} restarts, only vertex jumps: {rep.passed}, "
          f"modulus(0.05) = {modulus_of_continuity(p, 0.05):.3f}")

print(f"uniform distance    {uniform_distance(coarse, fine):.4f}")
print(f"Skorokhod (upper)   {skorokhod_distance_upper(coarse, fine):.4f}")
