"""Matricial gradient, divergence and Laplacian built from Hermitian generators.

For a tuple ``L = (L_1, ..., L_N)`` of Hermitian matrices,

    grad_L X = [L_k X - X L_k]_k            (Hermitian -> skew stack)
    div_L Y  = sum_k L_k Y_k - Y_k L_k      (adjoint of grad_L)
    lap_L X  = -div_L grad_L X

Stacks are arrays of shape ``(..., N, n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BasisError, DimensionError, HermitianError
from .hermitian import HERM_TOL, as_hermitian, hermitian_basis, hvec, skew_part

RANK_RTOL = 1e-8


class NullSpaceReport(NamedTuple):
    rank: int
    identity_in_null: bool


def _operator_matrix(mats: np.ndarray) -> np.ndarray:
    """Real matrix of X -> grad_L X from Hermitian coordinates to skew coordinates."""
    n = mats.shape[-1]
    basis = hermitian_basis(n)
    g = mats[None] @ basis[:, None] - basis[:, None] @ mats[None]   # (n^2, N, n, n)
    # a skew Y is i times the Hermitian -iY
    coords = hvec(-1j * g)                                          # (n^2, N, n^2)
    return coords.reshape(n * n, -1).T


def _null_space_report(mats: np.ndarray) -> NullSpaceReport:
    n = mats.shape[-1]
    if mats.shape[0] == 0:
        return NullSpaceReport(0, n == 1)
    s = np.linalg.svd(_operator_matrix(mats), compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > RANK_RTOL * smax)) if smax > 0 else 0
    return NullSpaceReport(rank, rank == n * n - 1)


@dataclass(frozen=True, eq=False)
class LindbladBasis:
    """Hermitian generators ``L_k`` whose commutators define ``grad_L``.

    Construction validates Hermitianity (tolerance 1e-9) and that the induced
    gradient annihilates exactly the multiples of the identity.
    """

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[0] < 1:
            raise DimensionError(f"expected an (N, n, n) stack, got shape {m.shape}",
                                 shape=list(m.shape))
        try:
            m = as_hermitian(m, HERM_TOL)
        except HermitianError as err:
            raise HermitianError("Lindblad generators must be Hermitian: " + err.message,
                                 **err.context) from None
        report = _null_space_report(m)
        if not report.identity_in_null:
            n = m.shape[-1]
            raise BasisError(
                f"grad_L has rank {report.rank}, expected {n * n - 1}; "
                "the null space is larger than span(I)",
                rank=report.rank, expected=n * n - 1)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def n(self) -> int:
        return self.matrices.shape[-1]

    @property
    def count(self) -> int:
        return self.matrices.shape[0]

    def __len__(self):
        return self.count

    def __repr__(self):
        return f"LindbladBasis(n={self.n}, N={self.count})"


def basis_hermitian(n: int, full: bool = False) -> LindbladBasis:
    """Default generator set: the real symmetric unit matrices.

    ``{E_jj} U {(E_jk + E_kj)/sqrt 2, j<k}``, ``n(n+1)/2`` of them, orthonormal
    under the trace inner product. ``full=True`` returns the complete
    orthonormal Hermitian basis of size ``n^2`` instead.
    """
    if n < 1:
        raise DimensionError("n must be >= 1", n=n)
    b = hermitian_basis(n)
    if not full:
        b = b[: n * (n + 1) // 2]
    return LindbladBasis(np.array(b))


def _check_dim(B: LindbladBasis, x: np.ndarray):
    if x.shape[-1] != B.n or x.shape[-2] != B.n:
        raise DimensionError(f"matrix dimension {x.shape[-2:]} does not match basis n={B.n}",
                             basis_n=B.n, shape=list(x.shape))


def commutators(B: LindbladBasis, x) -> np.ndarray:
    """Raw stack ``L_k X - X L_k`` without any symmetrization."""
    x = np.asarray(x, dtype=complex)
    _check_dim(B, x)
    xe = x[..., None, :, :]
    return B.matrices @ xe - xe @ B.matrices


def grad_L(B: LindbladBasis, x) -> np.ndarray:
    """Gradient of a Hermitian matrix (stack); returns a skew stack ``(..., N, n, n)``."""
    return skew_part(commutators(B, x))


def div_L(B: LindbladBasis, y) -> np.ndarray:
    """Divergence ``sum_k L_k Y_k - Y_k L_k`` of a stack; Hermitian when ``y`` is skew."""
    y = np.asarray(y, dtype=complex)
    _check_dim(B, y)
    if y.ndim < 3 or y.shape[-3] != B.count:
        raise DimensionError(f"stack has {y.shape[-3] if y.ndim >= 3 else 0} components, "
                             f"basis has {B.count}", count=B.count)
    return np.sum(B.matrices @ y - y @ B.matrices, axis=-3)


def laplacian_L(B: LindbladBasis, x) -> np.ndarray:
    """``sum_k 2 L_k X L_k - X L_k L_k - L_k L_k X``."""
    x = np.asarray(x, dtype=complex)
    _check_dim(B, x)
    L = B.matrices
    LL = np.sum(L @ L, axis=0)
    xe = x[..., None, :, :]
    return np.sum(2 * (L @ xe @ L), axis=-3) - x @ LL - LL @ x


def lindblad_diffusion(B: LindbladBasis, x) -> np.ndarray:
    """Dissipative part of the Lindblad generator, ``sum L X L^H - (X L^H L + L^H L X)/2``."""
    x = np.asarray(x, dtype=complex)
    _check_dim(B, x)
    L = B.matrices
    Lh = np.conj(np.swapaxes(L, -1, -2))
    LhL = np.sum(Lh @ L, axis=0)
    xe = x[..., None, :, :]
    return np.sum(L @ xe @ Lh, axis=-3) - 0.5 * (x @ LhL) - 0.5 * (LhL @ x)


def gradient_operator_matrix(B: LindbladBasis) -> np.ndarray:
    """Real ``(N n^2, n^2)`` matrix of ``grad_L`` acting on Hermitian coordinates."""
    return _operator_matrix(np.asarray(B.matrices))


def check_null_space(B: LindbladBasis | np.ndarray) -> NullSpaceReport:
    """Numerical rank of ``grad_L`` on Hermitian matrices and whether it equals ``n^2 - 1``.

    Accepts a raw generator stack as well, so candidate bases can be inspected
    before construction rejects them.
    """
    mats = B.matrices if isinstance(B, LindbladBasis) else np.asarray(B, dtype=complex)
    return _null_space_report(mats)
