"""Dense complex matrix kernel.

Hermitian, skew-Hermitian and general matrices are plain complex ``ndarray``
objects of shape ``(..., n, n)``; leading axes are treated as batch axes by
every function here. Constructors that produce a Hermitian (or skew) result
symmetrize exactly, so type invariants never drift with repeated arithmetic.

All spectral functions go through :func:`numpy.linalg.eigh`.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DimensionError, HermitianError, NotPositiveDefiniteError

EPS_PD = 1e-9
HERM_TOL = 1e-9


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + dagger(a))


def skew_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a - dagger(a))


def as_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Validate that ``a`` is square and Hermitian within ``tol``, then symmetrize."""
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"expected square matrices, got shape {a.shape}",
                             shape=list(a.shape))
    defect = float(np.max(np.abs(a - dagger(a)), initial=0.0))
    if defect > tol:
        raise HermitianError(f"matrix is not Hermitian (max |A - A^H| = {defect:.3e})",
                             defect=defect, tol=tol)
    return hermitian_part(a)


def inner(x, y) -> complex:
    """Trace inner product ``trace(X^H Y)``, summed over any stack axes."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}",
                             left=list(x.shape), right=list(y.shape))
    return complex(np.vdot(x, y))


def real_inner(x, y) -> float:
    return inner(x, y).real


def frob(x) -> float:
    return float(np.linalg.norm(np.asarray(x).ravel()))


def min_eig(rho) -> float | np.ndarray:
    w = np.linalg.eigvalsh(hermitian_part(rho))
    return w[..., 0]


def is_pd(rho, floor: float = EPS_PD) -> bool:
    """True iff every matrix in ``rho`` has minimum eigenvalue above ``floor``."""
    return bool(np.all(min_eig(rho) > floor))


def check_pd(rho, floor: float = EPS_PD, name: str = "rho"):
    """Eigendecomposition of a PD matrix (stack); raises if any eigenvalue <= floor."""
    w, v = np.linalg.eigh(hermitian_part(rho))
    lo = float(np.min(w))
    if lo <= floor:
        raise NotPositiveDefiniteError(
            f"{name} is not positive definite: eigenvalue {lo:.6e} <= floor {floor:.1e}",
            min_eigenvalue=lo, floor=floor)
    return w, v


def _spectral(w, v, f):
    return hermitian_part((v * f(w)[..., None, :]) @ dagger(v))


def matrix_log(rho, floor: float = EPS_PD) -> np.ndarray:
    w, v = check_pd(rho, floor)
    return _spectral(w, v, np.log)


def matrix_exp(x) -> np.ndarray:
    w, v = np.linalg.eigh(hermitian_part(x))
    return _spectral(w, v, np.exp)


def matrix_inv(rho, floor: float = EPS_PD) -> np.ndarray:
    w, v = check_pd(rho, floor)
    return _spectral(w, v, np.reciprocal)


def matrix_sqrt(rho, floor: float = EPS_PD) -> np.ndarray:
    w, v = check_pd(rho, floor)
    return _spectral(w, v, np.sqrt)


def sylvester_solve(rho, delta, floor: float = EPS_PD) -> np.ndarray:
    """Hermitian ``G`` with ``rho G + G rho = delta``.

    Solved in the eigenbasis of ``rho`` where the equation decouples into
    ``G_jk = delta_jk / (w_j + w_k)``.
    """
    delta = hermitian_part(delta)
    w, v = check_pd(rho, floor)
    if delta.shape[-1] != w.shape[-1]:
        raise DimensionError("rho and delta differ in dimension",
                             n_rho=int(w.shape[-1]), n_delta=int(delta.shape[-1]))
    dt = dagger(v) @ delta @ v
    g = dt / (w[..., :, None] + w[..., None, :])
    return hermitian_part(v @ g @ dagger(v))


@lru_cache(maxsize=None)
def _hbasis(n: int) -> np.ndarray:
    mats = []
    for j in range(n):
        e = np.zeros((n, n), complex)
        e[j, j] = 1.0
        mats.append(e)
    r2 = np.sqrt(0.5)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), complex)
            e[j, k] = e[k, j] = r2
            mats.append(e)
    for j in range(n):
        for k in range(j + 1, n):
            e = np.zeros((n, n), complex)
            e[j, k] = 1j * r2
            e[k, j] = -1j * r2
            mats.append(e)
    out = np.array(mats)
    out.setflags(write=False)
    return out


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal real basis of the n^2-dimensional space of Hermitian matrices."""
    return _hbasis(int(n))


def hvec(x) -> np.ndarray:
    """Real coordinates of Hermitian matrices in :func:`hermitian_basis`."""
    x = np.asarray(x)
    b = hermitian_basis(x.shape[-1])
    return np.einsum("aij,...ji->...a", b, x).real


def hmat(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    n = int(round(np.sqrt(c.shape[-1])))
    if n * n != c.shape[-1]:
        raise DimensionError(f"coordinate length {c.shape[-1]} is not a square")
    return np.einsum("...a,aij->...ij", c, hermitian_basis(n))


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * hermitian_part(a)


def random_skew(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return skew_part(a)


def random_pd(rng: np.random.Generator, n: int, lo: float = 0.2, hi: float = 2.0,
              trace: float | None = None) -> np.ndarray:
    """Random PD matrix with eigenvalues uniform in ``[lo, hi]`` and a Haar-ish eigenbasis."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    w = rng.uniform(lo, hi, n)
    if trace is not None:
        w = w * (trace / w.sum())
    return hermitian_part((q * w) @ dagger(q))
