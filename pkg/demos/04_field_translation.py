"""Matrix-valued fields on a line: transport in space versus local growth.

A bump of mass at the left end moves to the right end. Cheap spatial
transport (large alpha makes creation expensive) carries the mass across;
with small alpha it is cheaper to shrink one bump and grow the other.

Run: python3 demos/04_field_translation.py
"""
import numpy as np

from qmot import MatrixField, SolverConfig, basis_hermitian, solve_field

M, n = 8, 2
B = basis_hermitian(n)


def bump(where):
    cells = np.repeat(0.2 * np.eye(n)[None], M, axis=0).astype(complex)
    cells[where] += np.eye(n)
    return MatrixField(cells, 1.0 / M)


f0, f1 = bump(0), bump(M - 1)
for alpha in (1e-2, 1.0, 1e2):
    sol = solve_field(f0, f1, B, SolverConfig(alpha=alpha, steps=16))
    traces = sol.path.cell_traces()[len(sol.path.rho) // 2]
    print(f"alpha={alpha:6g}: W = {sol.distance:.4f}, max flux {sol.max_flux:.3f}, "
          f"mass {sol.path.total_mass().min():.4f}..{sol.path.total_mass().max():.4f}")
    print("   cell traces at t=1/2:", " ".join(f"{x:.2f}" for x in traces))
