"""Unbalanced transport between matrix-valued measures on a 1-D grid.

A :class:`MatrixField` holds one positive definite matrix per cell of width
``h``. Along a path the density may move between cells (spatial momenta
``q = rho w`` on interior faces), rotate inside a cell (matricial momenta
``u = rho v``) and be created or destroyed (sources ``s``). The discrete
constraint on interval ``k`` and cell ``i`` is

    (rho_{k+1} - rho_k)/dt + 1/2 div_x(q + q^H) - 1/2 div_L(u - u^H) - S = 0

with zero flux through the outer faces, ``S = (s + s^H)/2`` and cost

    h dt sum [ tr(q^H rho_f^-1 q) + gamma tr(u^H rho^-1 u) + source ]

where ``rho_f`` averages the two cells next to a face. As in
:mod:`qmot.transport`, ``(q, u, s)`` are eliminated exactly for fixed
densities; here the per-interval operator couples neighbouring cells and
is assembled from Kronecker-product superoperators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._optim import block_tridiagonal_solver, lbfgs, polish
from .errors import DimensionError
from .geometry import Mode
from .hermitian import (EPS_PD, as_hermitian, check_pd, dagger, hermitian_basis,
                        hermitian_part, hmat, hvec, is_pd, matrix_inv, skew_part)
from .lindblad import LindbladBasis, div_L, grad_L
from .transport import ROUNDOFF, SolverConfig


@dataclass(frozen=True, eq=False)
class MatrixField:
    """Positive definite matrices on ``M`` cells of width ``h``."""

    cells: np.ndarray
    h: float = 1.0

    def __post_init__(self):
        c = as_hermitian(np.asarray(self.cells, dtype=complex))
        if c.ndim != 3:
            raise DimensionError(f"expected (M, n, n) cells, got shape {c.shape}")
        if not self.h > 0:
            raise ValueError(f"cell width must be positive, got {self.h}")
        check_pd(c, EPS_PD, "field cell")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.cells.shape[-1]

    @property
    def M(self) -> int:
        return self.cells.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.h * np.trace(self.cells, axis1=-2, axis2=-1).real.sum())

    @classmethod
    def uniform(cls, rho, M: int, h: float = 1.0) -> "MatrixField":
        rho = np.asarray(rho, dtype=complex)
        return cls(np.repeat(rho[None], M, axis=0), h)


@dataclass
class FieldPath:
    """Densities ``rho (K+1, M, n, n)`` with momenta ``q (K, M-1, n, n)``,
    ``u (K, M, N, n, n)`` and sources ``s (K, M, n, n)``."""

    rho: np.ndarray
    q: np.ndarray
    u: np.ndarray
    s: np.ndarray
    h: float

    @property
    def K(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def M(self) -> int:
        return self.rho.shape[1]

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.rho[:-1] + self.rho[1:])

    def cell_traces(self) -> np.ndarray:
        return np.trace(self.rho, axis1=-2, axis2=-1).real

    def total_mass(self) -> np.ndarray:
        return self.h * self.cell_traces().sum(axis=-1)


@dataclass
class FieldTransportSolution:
    path: FieldPath
    objective: float
    distance: float
    lambda_: np.ndarray          # (K, M, n, n) interval duals
    feas_residual: float
    kkt_residual: float
    converged: bool
    iterations: int
    gamma: float = 1.0
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def max_flux(self) -> float:
        q = self.path.q
        return float(np.max(np.abs(q), initial=0.0))


def spatial_divergence(q_faces, h: float) -> np.ndarray:
    """Cell-wise ``(q_{i+1/2} - q_{i-1/2})/h`` with zero flux on the boundary faces.

    ``q_faces`` has shape ``(..., M-1, n, n)``; the result ``(..., M, n, n)``.
    """
    q = np.asarray(q_faces)
    pad = [(0, 0)] * q.ndim
    pad[-3] = (1, 1)
    qp = np.pad(q, pad)
    return (qp[..., 1:, :, :] - qp[..., :-1, :, :]) / h


def face_gradient(lam, h: float) -> np.ndarray:
    """``(lam_{i+1} - lam_i)/h`` on interior faces."""
    lam = np.asarray(lam)
    return (lam[..., 1:, :, :] - lam[..., :-1, :, :]) / h


def face_average(R) -> np.ndarray:
    return 0.5 * (R[..., 1:, :, :] + R[..., :-1, :, :])


def _kron_sym(R):
    """Superoperator of ``X -> R X + X R`` on column-stacked vectors, batched."""
    n = R.shape[-1]
    eye = np.eye(n)
    left = np.einsum("ab,...ij->...aibj", eye, R)
    right = np.einsum("...ba,ij->...aibj", R, eye)
    return (left + right).reshape(R.shape[:-2] + (n * n, n * n))


def _kron_comm(L):
    n = L.shape[-1]
    eye = np.eye(n)
    left = np.einsum("ab,kij->kaibj", eye, L)
    right = np.einsum("kba,ij->kaibj", L, eye)
    return (left - right).reshape(L.shape[0], n * n, n * n)


class _FieldModel:
    def __init__(self, B: LindbladBasis, config: SolverConfig, gamma: float, h: float, M: int):
        if config.mode not in (Mode.WFS, Mode.WF):
            raise ValueError(f"field transport supports modes wfs and wf, got {config.mode.value}")
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        self.B, self.config, self.gamma, self.h, self.M = B, config, gamma, h, M
        n = B.n
        basis = hermitian_basis(n)
        # columns: column-stacked basis matrices
        self.U = np.swapaxes(basis, -1, -2).reshape(n * n, n * n).T
        self.C = _kron_comm(B.matrices)

    def _coords(self, op):
        return np.real(dagger(self.U) @ op @ self.U)

    def assemble(self, R):
        """Negated interval operators ``-A``, shape ``(K, M n^2, M n^2)``."""
        cfg, h, M = self.config, self.h, self.M
        K, n = R.shape[0], R.shape[-1]
        p = n * n
        S = _kron_sym(R)                                   # (K, M, p, p)
        T = np.einsum("aij,kmjl,alr->kmir", self.C, S, self.C)
        local = -T / (2 * self.gamma)
        if cfg.mode.source == "relative":
            local = local - S / (2 * cfg.alpha)
        else:
            local = local - np.eye(p) / cfg.alpha
        A = np.zeros((K, M * p, M * p))
        loc = self._coords(local)
        for i in range(M):
            A[:, i * p:(i + 1) * p, i * p:(i + 1) * p] += loc[:, i]
        if M > 1:
            Sf = self._coords(0.5 * _kron_sym(face_average(R))) / h ** 2
            for f in range(M - 1):
                a, b = slice(f * p, (f + 1) * p), slice((f + 1) * p, (f + 2) * p)
                A[:, a, a] -= Sf[:, f]
                A[:, b, b] -= Sf[:, f]
                A[:, a, b] += Sf[:, f]
                A[:, b, a] += Sf[:, f]
        return -A

    def duals(self, nodes):
        K = nodes.shape[0] - 1
        R = 0.5 * (nodes[:-1] + nodes[1:])
        delta = (nodes[1:] - nodes[:-1]) * K
        negA = self.assemble(R)
        dc = hvec(delta).reshape(K, -1)
        lc = np.linalg.solve(negA, -dc[..., None])[..., 0]
        lam = hmat(lc.reshape(K, self.M, -1))
        V = -self.h * np.sum(lc * dc, axis=-1)
        return R, delta, lam, V

    def preconditioner(self, nodes):
        """Inverse of the action's Hessian with midpoint densities held fixed."""
        K = nodes.shape[0] - 1
        W = np.linalg.inv(self.assemble(0.5 * (nodes[:-1] + nodes[1:])))
        W = 0.5 * (W + np.swapaxes(W, -1, -2))
        c = 2 * K * self.h
        return block_tridiagonal_solver(c * (W[:-1] + W[1:]), -c * W[1:-1])

    def hamiltonian(self, lam):
        """Cell-wise ``1/2 |grad_x lam|^2 + |grad_L lam|^2/(2 gamma) (+ lam^2/(2 alpha))``."""
        cfg = self.config
        g = grad_L(self.B, lam)
        out = np.sum(dagger(g) @ g, axis=-3) / (2 * self.gamma)
        if cfg.mode.source == "relative":
            out = out + lam @ lam / (2 * cfg.alpha)
        if self.M > 1:
            G = face_gradient(lam, self.h)
            G2 = G @ G
            pad = [(0, 0)] * G2.ndim
            pad[-3] = (1, 1)
            G2p = np.pad(G2, pad)
            out = out + 0.25 * (G2p[..., 1:, :, :] + G2p[..., :-1, :, :])
        return hermitian_part(out)

    def evaluate(self, nodes):
        K = nodes.shape[0] - 1
        R, delta, lam, V = self.duals(nodes)
        D = -2.0 * self.h * self.hamiltonian(lam)
        grad = 0.5 * (D[:-1] + D[1:]) / K - 2.0 * self.h * (lam[:-1] - lam[1:])
        return float(np.sum(V) / K), grad, lam

    def controls(self, R, lam):
        cfg = self.config
        q = -(face_average(R) @ face_gradient(lam, self.h))
        u = -(R[..., None, :, :] @ grad_L(self.B, lam)) / self.gamma
        if cfg.mode.source == "relative":
            s = -(R @ lam) / cfg.alpha
        else:
            s = -lam / cfg.alpha
        return q, u, s


def field_continuity_residual(path: FieldPath, B: LindbladBasis) -> float:
    res = (path.rho[1:] - path.rho[:-1]) * path.K
    res = res + 0.5 * spatial_divergence(path.q + dagger(path.q), path.h)
    res = res - 0.5 * div_L(B, path.u - dagger(path.u))
    res = res - 0.5 * (path.s + dagger(path.s))
    return float(np.max(np.linalg.norm(res, axis=(-2, -1)), initial=0.0))


def field_objective(path: FieldPath, config: SolverConfig, gamma: float = 1.0) -> float:
    """``h dt sum [tr(q^H rho_f^-1 q) + gamma tr(u^H rho^-1 u) + source]``."""
    R = path.midpoints()
    Rinv = matrix_inv(R, config.eps_pd)
    total = gamma * np.einsum("kmaji,kmjl,kmali->", np.conj(path.u), Rinv, path.u).real
    if path.M > 1:
        Finv = matrix_inv(face_average(R), config.eps_pd)
        total += np.einsum("kfji,kfjl,kfli->", np.conj(path.q), Finv, path.q).real
    if config.mode.source == "relative":
        total += config.alpha * np.einsum("kmji,kmjl,kmli->", np.conj(path.s), Rinv,
                                          path.s).real
    else:
        total += config.alpha * np.sum(np.abs(path.s) ** 2)
    return float(path.h * total / path.K)


def _validate(rho0: MatrixField, rho1: MatrixField, B: LindbladBasis):
    if rho0.cells.shape != rho1.cells.shape:
        raise DimensionError(f"fields have shapes {rho0.cells.shape} and {rho1.cells.shape}")
    if rho0.h != rho1.h:
        raise DimensionError(f"fields have cell widths {rho0.h} and {rho1.h}")
    if rho0.n != B.n:
        raise DimensionError(f"fields hold {rho0.n}x{rho0.n} matrices, basis expects n={B.n}")


def solve_field(rho0: MatrixField, rho1: MatrixField, B: LindbladBasis,
                config: SolverConfig | None = None, gamma: float = 1.0
                ) -> FieldTransportSolution:
    """Squared distance and geodesic between two matrix fields (modes wfs, wf)."""
    config = config or SolverConfig()
    _validate(rho0, rho1, B)
    model = _FieldModel(B, config, gamma, rho0.h, rho0.M)
    K, M, n = config.steps, rho0.M, rho0.n
    a, b = rho0.cells, rho1.cells
    t = np.linspace(0.0, 1.0, K + 1)[:, None, None, None]
    nodes0 = (1 - t) * a + t * b

    def assemble(x):
        return np.concatenate([a[None], hmat(x.reshape(K - 1, M, n * n)), b[None]])

    def fun(x):
        nodes = assemble(x)
        if not is_pd(nodes, config.eps_pd):
            return None
        f, g, _ = model.evaluate(nodes)
        return f, hvec(g).ravel()

    def precond(x):
        return model.preconditioner(assemble(x))

    scale = max(rho0.total_mass, rho1.total_mass)
    res = lbfgs(fun, hvec(nodes0[1:-1]).ravel(), precond=precond, max_iter=config.max_iter,
                rtol=config.tol_obj, atol=ROUNDOFF * scale)
    res = polish(fun, res, precond)
    nodes = assemble(res.x)
    R, _, lam, _ = model.duals(nodes)
    q, u, s = model.controls(R, lam)
    path = FieldPath(nodes, q, u, s, rho0.h)
    obj = field_objective(path, config, gamma)
    feas = field_continuity_residual(path, B)
    sol = FieldTransportSolution(path=path, objective=obj,
                                 distance=float(np.sqrt(max(obj, 0.0))), lambda_=lam,
                                 feas_residual=feas, kkt_residual=np.nan,
                                 converged=bool(res.converged and feas <= config.tol_feas),
                                 iterations=res.iterations, gamma=gamma, config=config)
    sol.kkt_residual = field_kkt_residual(sol, B, config)
    return sol


def field_kkt_residual(sol: FieldTransportSolution, B: LindbladBasis,
                       config: SolverConfig | None = None) -> float:
    """Defect of the discrete dual evolution plus the control mismatches.

    Checks ``dlam/dt = H(lam)`` at interior time nodes together with
    ``w = -grad_x lam``, ``v = -grad_L lam / gamma`` and the source relation.
    """
    config = config or sol.config
    path = sol.path
    model = _FieldModel(B, config, sol.gamma, path.h, path.M)
    lam = sol.lambda_
    K = path.K
    R = path.midpoints()
    parts = [0.0]
    if K >= 2:
        r = (lam[1:] - lam[:-1]) * K - model.hamiltonian(0.5 * (lam[1:] + lam[:-1]))
        parts.append(np.max(np.linalg.norm(r, axis=(-2, -1))))
    if path.M > 1:
        w = hermitian_part(matrix_inv(face_average(R)) @ path.q)
        parts.append(np.max(np.linalg.norm(w + face_gradient(lam, path.h), axis=(-2, -1))))
    v = skew_part(matrix_inv(R)[..., None, :, :] @ path.u)
    parts.append(np.max(np.linalg.norm(v + grad_L(B, lam) / sol.gamma, axis=(-2, -1))))
    if config.mode.source == "relative":
        src = hermitian_part(matrix_inv(R) @ path.s)
    else:
        src = hermitian_part(path.s)
    parts.append(np.max(np.linalg.norm(src + lam / config.alpha, axis=(-2, -1))))
    return float(max(parts))


def interpolate_field(sol: FieldTransportSolution, t: float) -> np.ndarray:
    """Field ``(M, n, n)`` on the computed geodesic at time ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    rho = sol.path.rho
    K = sol.path.K
    if t == 1.0:
        return rho[-1].copy()
    k = int(np.floor(t * K))
    w = t * K - k
    if w == 0.0:
        return rho[k].copy()
    return hermitian_part((1 - w) * rho[k] + w * rho[k + 1])
