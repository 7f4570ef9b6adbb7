"""Commutator gradient, divergence and Laplacian on Hermitian matrices.

Run: python3 demos/01_operators.py
"""
import numpy as np

from qmot import basis_hermitian, check_null_space, grad_L, div_L, laplacian_L, lindblad_diffusion
from qmot.hermitian import random_hermitian, frob

rng = np.random.default_rng(0)

for n in (1, 2, 3, 4):
    B = basis_hermitian(n)
    rep = check_null_space(B)
    print(f"n={n}: {B.count} generators, gradient rank {rep.rank} (want {n * n - 1})")

B = basis_hermitian(3)
X = random_hermitian(rng, 3)
Y = rng.standard_normal((B.count, 3, 3)) + 1j * rng.standard_normal((B.count, 3, 3))

# the divergence is the adjoint of the gradient under the trace pairing
print("adjoint gap      ", abs(np.vdot(grad_L(B, X), Y) - np.vdot(X, div_L(B, Y))))
print("laplacian gap    ", frob(laplacian_L(B, X) + div_L(B, grad_L(B, X))))
print("lindblad gap     ", frob(2 * lindblad_diffusion(B, X) - laplacian_L(B, X)))

# the identity commutes with everything: it spans the kernel
print("grad of identity ", frob(grad_L(B, np.eye(3))))
