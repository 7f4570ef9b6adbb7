"""Distances and geodesics between positive definite matrices.

The 1x1 case has closed forms: [1] -> [4] costs 2 under WFS and 3 under WF
(alpha = 1). For matrices the solver returns a discrete geodesic whose
midpoint sits halfway in distance.

Run: python3 demos/02_geodesics.py
"""
import numpy as np

from qmot import SolverConfig, basis_hermitian, distance, interpolate, solve
from qmot.hermitian import random_pd

B1 = basis_hermitian(1)
one, four = np.array([[1.0]]), np.array([[4.0]])
for mode, exact in (("wfs", 2.0), ("wf", 3.0), ("fr", 2.0), ("frob", 3.0)):
    d = distance(one, four, B1, SolverConfig(mode=mode))
    print(f"{mode:5s} [1] -> [4]: {d:.5f} (closed form {exact})")

# WFS scalar geodesic: sqrt(rho) moves linearly, so rho(t) = (1 + t)^2
sol = solve(one, four, B1)
for t in (0.25, 0.5, 0.75):
    print(f"  rho({t}) = {interpolate(sol, t)[0, 0].real:.4f}   (1+t)^2 = {(1 + t) ** 2:.4f}")

rng = np.random.default_rng(1)
B2 = basis_hermitian(2)
a, b = random_pd(rng, 2), random_pd(rng, 2)
for mode in ("wfs", "wf"):
    cfg = SolverConfig(mode=mode, steps=32)
    sol = solve(a, b, B2, cfg)
    half = distance(a, interpolate(sol, 0.5), B2, cfg)
    print(f"{mode}: W = {sol.distance:.5f}, W(rho0, rho(1/2)) = {half:.5f}, "
          f"{sol.iterations} iterations, KKT residual {sol.kkt_residual:.1e}")

# pure transport needs equal traces; with them it bounds the unbalanced distances
a, b = random_pd(rng, 2, trace=1.0), random_pd(rng, 2, trace=1.0)
w2 = distance(a, b, B2, SolverConfig(mode="balanced"))
for alpha in (1.0, 10.0, 1e3):
    print(f"alpha={alpha:7g}: W_FS = {distance(a, b, B2, SolverConfig(alpha=alpha)):.5f}"
          f"   W_2 = {w2:.5f}")
