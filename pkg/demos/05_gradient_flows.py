"""Gradient flows: entropy rises to its maximizer I, energy falls to the target.

Run: python3 demos/05_gradient_flows.py
"""
import numpy as np

from qmot import FlowConfig, basis_hermitian, run_flow
from qmot.hermitian import frob, random_pd

rng = np.random.default_rng(5)
B = basis_hermitian(2)
start, target = random_pd(rng, 2), random_pd(rng, 2)

for functional in ("entropy", "quadratic"):
    for metric in ("wfs", "wf"):
        cfg = FlowConfig(functional=functional, metric=metric, dt=1e-3, steps=5000,
                         target=target if functional == "quadratic" else None)
        traj = run_flow(start, cfg, B)
        goal = np.eye(2) if functional == "entropy" else target
        print(f"{functional:9s} {metric}: value {traj.values[0]:.4f} -> {traj.values[-1]:.4f}, "
              f"distance to fixed point {frob(traj.states[-1] - goal):.2e}")

# 1x1, WF, quadratic with target 1: rho(t) = 1 + e^{-t}
cfg = FlowConfig("quadratic", "wf", target=np.array([[1.0]]))
traj = run_flow(np.array([[2.0]]), cfg, basis_hermitian(1))
err = np.max(np.abs(traj.states[:, 0, 0].real - 1 - np.exp(-traj.times)))
print(f"scalar flow vs 1 + exp(-t): max error {err:.2e} (dt = {cfg.dt})")
