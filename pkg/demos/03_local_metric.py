"""The Riemannian metric behind the distances.

For a tangent direction delta at rho, the squared length is
<delta, delta>_rho. Short geodesics reproduce it: W(rho, rho + eps delta)
is eps times the length, up to O(eps^2).

Run: python3 demos/03_local_metric.py
"""
import numpy as np

from qmot import (MetricMode, SolverConfig, basis_hermitian, bures_identity_check, distance,
                  fisher_rao_tangent_cost, local_inner)
from qmot.hermitian import random_hermitian, random_pd

rng = np.random.default_rng(2)
B = basis_hermitian(2)
rho, delta = random_pd(rng, 2), random_hermitian(rng, 2)

for mode in ("wfs", "wf"):
    speed = np.sqrt(local_inner(rho, delta, delta, MetricMode(mode, 1.0), B))
    for eps in (1e-1, 1e-2, 5e-3):
        d = distance(rho, rho + eps * delta, B, SolverConfig(mode=mode))
        print(f"{mode} eps={eps:<6g} W/(eps*|delta|) = {d / (eps * speed):.6f}")

print("Fisher-Rao tangent cost:", fisher_rao_tangent_cost(rho, delta))
lhs, rhs = bures_identity_check(rho, delta)
print(f"Bures pair: 1/2 tr(G delta) = {lhs:.12f}, tr(rho G^2) = {rhs:.12f}")
