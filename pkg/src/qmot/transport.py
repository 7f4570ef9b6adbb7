"""Dynamic unbalanced transport between positive definite matrices.

The convex problem in momentum variables ``u = rho v`` and ``s = rho r``

    min  int tr(u^H rho^-1 u) + alpha tr(s^H rho^-1 s) dt        (WFS)
    s.t. d rho/dt = 1/2 div_L(u - u^H) + 1/2 (s + s^H)

(and its WF / BALANCED / FR / FROB variants) is discretized on a uniform
time grid with ``K`` intervals. Densities live on the nodes, momenta and
sources on the intervals, and kinetic terms are evaluated at interval
midpoints.

The default ``"reduced"`` method eliminates ``(u, s)`` exactly: for fixed
densities the per-interval problem is the local metric problem at the
midpoint, solved by one dense linear solve. What remains is a smooth convex
function of the interior densities, minimized with L-BFGS and Armijo
backtracking that rejects steps leaving the positive definite cone. The
``"alm"`` method keeps all variables and runs an augmented Lagrangian on
the continuity constraints instead.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import _alm
from ._optim import block_tridiagonal_solver, lbfgs, polish
from .errors import DimensionError, TraceMismatchError
from .geometry import MetricMode, Mode, metric_matrix
from .hermitian import (EPS_PD, as_hermitian, check_pd, dagger, hermitian_part, hmat, hvec,
                        is_pd, matrix_inv, skew_part)
from .lindblad import LindbladBasis, div_L, grad_L

TRACE_TOL = 1e-9
# decrements below this (relative to the marginals' size) are rounding noise
ROUNDOFF = 1e-24


@dataclass(frozen=True)
class SolverConfig:
    """Discretization and stopping parameters.

    ``tol_obj`` bounds the quasi-Newton decrement relative to the objective,
    which estimates the relative objective error of the returned path.
    ``penalty*`` and ``max_outer`` only affect ``method="alm"``.
    """

    mode: Mode = Mode.WFS
    alpha: float = 1.0
    steps: int = 32
    max_iter: int = 5000
    tol_feas: float = 1e-6
    tol_obj: float = 1e-15
    eps_pd: float = EPS_PD
    method: str = "reduced"
    penalty0: float = 1.0
    penalty_growth: float = 2.0
    penalty_max: float = 1e6
    max_outer: int = 60

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.steps < 2:
            raise ValueError(f"steps must be >= 2, got {self.steps}")
        if self.mode is not Mode.BALANCED and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.method not in ("reduced", "alm"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def metric(self) -> MetricMode:
        return MetricMode(self.mode, self.alpha)

    def replace(self, **kw) -> "SolverConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mode"] = self.mode.value
        return d


@dataclass
class DensityPath:
    """Nodes ``rho[0..K]`` at ``t_k = k/K`` with per-interval momenta and sources.

    ``u`` has shape ``(K, N, n, n)`` (zero in FR/FROB mode); ``s`` has shape
    ``(K, n, n)`` and is None in BALANCED mode.
    """

    rho: np.ndarray
    u: np.ndarray | None
    s: np.ndarray | None

    @property
    def K(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.K + 1)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.rho[:-1] + self.rho[1:])


@dataclass
class TransportSolution:
    path: DensityPath
    objective: float
    distance: float
    lambda_: np.ndarray          # interval duals, shape (K, n, n)
    feas_residual: float
    kkt_residual: float
    converged: bool
    iterations: int
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def dual_times(self) -> np.ndarray:
        K = self.path.K
        return (np.arange(K) + 0.5) / K


def _source_term(s):
    return 0.5 * (s + dagger(s))


def continuity_residual(path: DensityPath, B: LindbladBasis, mode) -> float:
    """Largest Frobenius defect of the discrete continuity equation over intervals."""
    mode = Mode(mode.kind if isinstance(mode, MetricMode) else mode)
    rho = np.asarray(path.rho)
    res = (rho[1:] - rho[:-1]) * path.K
    if mode.transport and path.u is not None:
        res = res - 0.5 * div_L(B, path.u - dagger(path.u))
    if mode.source is not None and path.s is not None:
        res = res - _source_term(path.s)
    return float(np.max(np.linalg.norm(res, axis=(-2, -1)), initial=0.0))


def objective(path: DensityPath, B: LindbladBasis, config: SolverConfig) -> float:
    """Discrete action ``dt * sum_k [kinetic(u_k) + source(s_k)]`` at midpoints."""
    mode = config.mode
    R = path.midpoints()
    Rinv = matrix_inv(R, config.eps_pd)
    total = 0.0
    if mode.transport and path.u is not None:
        total += np.einsum("kaji,kjl,kali->", np.conj(path.u), Rinv, path.u).real
    if path.s is not None:
        if mode.source == "relative":
            total += config.alpha * np.einsum("kji,kjl,kli->", np.conj(path.s), Rinv,
                                              path.s).real
        elif mode.source == "absolute":
            total += config.alpha * np.sum(np.abs(path.s) ** 2)
    return float(total / path.K)


def _validate(rho0, rho1, B: LindbladBasis, config: SolverConfig):
    rho0 = as_hermitian(rho0)
    rho1 = as_hermitian(rho1)
    if rho0.shape != rho1.shape or rho0.ndim != 2:
        raise DimensionError(f"marginals have shapes {rho0.shape} and {rho1.shape}")
    if rho0.shape[-1] != B.n:
        raise DimensionError(f"marginals are {rho0.shape[-1]}x{rho0.shape[-1]}, "
                             f"basis expects n={B.n}")
    check_pd(rho0, config.eps_pd, "rho0")
    check_pd(rho1, config.eps_pd, "rho1")
    if config.mode is Mode.BALANCED:
        gap = abs(np.trace(rho0).real - np.trace(rho1).real)
        if gap > TRACE_TOL:
            raise TraceMismatchError("balanced transport needs marginals of equal trace",
                                     trace0=float(np.trace(rho0).real),
                                     trace1=float(np.trace(rho1).real))
    return rho0, rho1


def _hamiltonian(lam, B: LindbladBasis, mode: Mode, alpha: float):
    """Right-hand side of the dual evolution ``dlam/dt = 1/2 |grad lam|^2 (+ lam^2/(2 alpha))``."""
    out = np.zeros_like(lam)
    if mode.transport:
        g = grad_L(B, lam)
        out = out + 0.5 * np.sum(dagger(g) @ g, axis=-3)
    if mode.source == "relative":
        out = out + lam @ lam / (2 * alpha)
    return hermitian_part(out)


class _ReducedModel:
    """Path action with momenta and sources eliminated by local metric solves."""

    def __init__(self, B: LindbladBasis, config: SolverConfig):
        self.B = B
        self.config = config
        self.metric = config.metric
        n = B.n
        self.null = hvec(np.eye(n)) / np.sqrt(n) if config.mode is Mode.BALANCED else None

    def operators(self, R):
        A = -metric_matrix(R, self.metric, self.B)
        if self.null is not None:
            A = A + np.outer(self.null, self.null)
        return A

    def duals(self, nodes):
        K = nodes.shape[0] - 1
        R = 0.5 * (nodes[:-1] + nodes[1:])
        delta = (nodes[1:] - nodes[:-1]) * K
        A = self.operators(R)
        dc = hvec(delta)
        lc = np.linalg.solve(A, -dc[..., None])[..., 0]
        return R, delta, hmat(lc), -np.sum(lc * dc, axis=-1)

    def evaluate(self, nodes):
        K = nodes.shape[0] - 1
        R, delta, lam, V = self.duals(nodes)
        # dV/dR by the envelope theorem; dV/d(delta) = -2 lam
        D = -2.0 * _hamiltonian(lam, self.B, self.config.mode, self.config.alpha)
        grad = 0.5 * (D[:-1] + D[1:]) / K - 2.0 * (lam[:-1] - lam[1:])
        return float(np.sum(V) / K), grad, lam

    def preconditioner(self, nodes):
        """Inverse of the action's Hessian with midpoint densities held fixed."""
        K = nodes.shape[0] - 1
        W = np.linalg.inv(self.operators(0.5 * (nodes[:-1] + nodes[1:])))
        W = 0.5 * (W + np.swapaxes(W, -1, -2))
        return block_tridiagonal_solver(2 * K * (W[:-1] + W[1:]), -2 * K * W[1:-1])

    def project(self, g):
        if self.null is None:
            return g
        n2 = self.null.size
        gg = g.reshape(-1, n2)
        return (gg - np.outer(gg @ self.null, self.null)).ravel()


def controls_from_duals(R, lam, B: LindbladBasis, config: SolverConfig):
    """Optimal momenta ``u = -rho grad lam`` and sources for given interval duals."""
    mode = config.mode
    K, n = lam.shape[0], lam.shape[-1]
    if mode.transport:
        u = -(R[:, None] @ grad_L(B, lam))
    else:
        u = np.zeros((K, B.count, n, n), complex)
    s = None
    if mode.source == "relative":
        s = -(R @ lam) / config.alpha
    elif mode.source == "absolute":
        s = -lam / config.alpha
    return u, s


def solve(rho0, rho1, B: LindbladBasis, config: SolverConfig | None = None
          ) -> TransportSolution:
    """Squared distance and geodesic between two positive definite matrices.

    Non-convergence is not an error: the best iterate is returned with
    ``converged=False``.
    """
    config = config or SolverConfig()
    rho0, rho1 = _validate(rho0, rho1, B, config)
    if config.method == "alm":
        nodes, u, s, lam, iters, ok = _alm.solve_matrix(rho0, rho1, B, config)
        path = DensityPath(nodes, u, s)
        return _finish(path, lam, iters, ok, B, config)

    K, n = config.steps, B.n
    t = np.linspace(0.0, 1.0, K + 1)[:, None, None]
    nodes0 = (1 - t) * rho0 + t * rho1
    model = _ReducedModel(B, config)

    def assemble(x):
        return np.concatenate([rho0[None], hmat(x.reshape(K - 1, n * n)), rho1[None]])

    def fun(x):
        nodes = assemble(x)
        if not is_pd(nodes, config.eps_pd):
            return None
        f, g, _ = model.evaluate(nodes)
        return f, hvec(g).ravel()

    def precond(x):
        return model.preconditioner(assemble(x))

    scale = max(np.trace(rho0).real, np.trace(rho1).real)
    res = lbfgs(fun, hvec(nodes0[1:-1]).ravel(), project=model.project, precond=precond,
                max_iter=config.max_iter, rtol=config.tol_obj, atol=ROUNDOFF * scale)
    res = polish(fun, res, precond, project=model.project)
    nodes = assemble(res.x)
    R, _, lam, _ = model.duals(nodes)
    u, s = controls_from_duals(R, lam, B, config)
    if config.mode is Mode.BALANCED:
        s = None
    return _finish(DensityPath(nodes, u, s), lam, res.iterations, res.converged, B, config)


def _finish(path, lam, iters, ok, B, config) -> TransportSolution:
    obj = objective(path, B, config)
    feas = continuity_residual(path, B, config.mode)
    sol = TransportSolution(path=path, objective=obj, distance=float(np.sqrt(max(obj, 0.0))),
                            lambda_=lam, feas_residual=feas, kkt_residual=np.nan,
                            converged=bool(ok and feas <= config.tol_feas), iterations=iters,
                            config=config)
    sol.kkt_residual = kkt_residual(sol, B, config)
    return sol


def interpolate(sol: TransportSolution, t: float) -> np.ndarray:
    """Density on the computed geodesic at time ``t``, linear between nodes."""
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


def kkt_residual(sol: TransportSolution, B: LindbladBasis, config: SolverConfig | None = None
                 ) -> float:
    """Finite-difference defect of the optimality system along the computed path.

    Combines the dual evolution equation at interior nodes, the velocity
    mismatch ``v + grad lam`` and the source mismatch ``r + lam/alpha``
    (``s + lam/alpha`` for absolute sources). Diagnostic only.
    """
    config = config or sol.config
    mode, alpha = config.mode, config.alpha
    lam = sol.lambda_
    K = sol.path.K
    R = sol.path.midpoints()
    parts = [0.0]
    if K >= 2:
        lam_dot = (lam[1:] - lam[:-1]) * K
        lam_bar = 0.5 * (lam[1:] + lam[:-1])
        r = lam_dot - _hamiltonian(lam_bar, B, mode, alpha)
        if mode is Mode.BALANCED:
            # duals are only defined up to c(t) I in the balanced problem
            n = r.shape[-1]
            r = r - np.trace(r, axis1=-2, axis2=-1)[:, None, None] * np.eye(n) / n
        parts.append(np.max(np.linalg.norm(r, axis=(-2, -1))))
    if mode.transport and sol.path.u is not None:
        v = skew_part(matrix_inv(R, config.eps_pd)[:, None] @ sol.path.u)
        parts.append(np.max(np.linalg.norm(v + grad_L(B, lam), axis=(-2, -1))))
    if sol.path.s is not None:
        if mode.source == "relative":
            src = hermitian_part(matrix_inv(R, config.eps_pd) @ sol.path.s)
        else:
            src = hermitian_part(sol.path.s)
        if mode.source is not None:
            parts.append(np.max(np.linalg.norm(src + lam / alpha, axis=(-2, -1))))
    return float(max(parts))


def distance(rho0, rho1, B: LindbladBasis, config: SolverConfig | None = None) -> float:
    return solve(rho0, rho1, B, config).distance
