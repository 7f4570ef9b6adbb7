"""Augmented Lagrangian on the full discrete variables ``(rho, u, s)``.

Minimizes

    dt * sum_k [ f_k(rho, u, s) + <mu_k, c_k> + beta/2 |c_k|^2 ]

over interior densities, momenta and sources, where ``c_k`` is the discrete
continuity defect on interval ``k``, then updates ``mu += beta c``. The
penalty doubles whenever an outer step fails to halve the defect. At a
solution the interval duals are ``lam = -mu/2``.

Much slower than the reduced method; kept as an independent route that
never forms the metric operator.
"""

from __future__ import annotations

import numpy as np

from ._optim import lbfgs
from .hermitian import dagger, hermitian_part, hmat, hvec, is_pd, matrix_inv
from .lindblad import div_L, grad_L


class _Layout:
    def __init__(self, K, n, N, transport, source):
        self.K, self.n, self.N = K, n, N
        self.transport, self.source = transport, source
        self.n_rho = (K - 1) * n * n
        self.n_u = 2 * K * N * n * n if transport else 0
        self.n_s = 2 * K * n * n if source else 0

    def unpack(self, x):
        K, n, N = self.K, self.n, self.N
        i = self.n_rho
        rho = hmat(x[:i].reshape(K - 1, n * n))
        u = s = None
        if self.transport:
            a = x[i:i + self.n_u].reshape(2, K, N, n, n)
            u = a[0] + 1j * a[1]
            i += self.n_u
        if self.source:
            a = x[i:i + self.n_s].reshape(2, K, n, n)
            s = a[0] + 1j * a[1]
        return rho, u, s

    def pack(self, rho, u, s):
        parts = [hvec(rho).ravel()]
        if self.transport:
            parts.append(np.stack([u.real, u.imag]).ravel())
        if self.source:
            parts.append(np.stack([s.real, s.imag]).ravel())
        return np.concatenate(parts)


def solve_matrix(rho0, rho1, B, config):
    mode, alpha, K = config.mode, config.alpha, config.steps
    n, N = B.n, B.count
    lay = _Layout(K, n, N, mode.transport, mode.source is not None)
    t = np.linspace(0.0, 1.0, K + 1)[:, None, None]
    nodes = (1 - t) * rho0 + t * rho1
    u0 = np.zeros((K, N, n, n), complex)
    s0 = (nodes[1:] - nodes[:-1]) * K + 0j
    x = lay.pack(nodes[1:-1], u0, s0)
    mu = np.zeros((K, n, n), complex)
    beta = config.penalty0
    scale = max(np.trace(rho0).real, np.trace(rho1).real)

    def full_nodes(rho):
        return np.concatenate([rho0[None], rho, rho1[None]])

    def defect(nodes, u, s):
        c = (nodes[1:] - nodes[:-1]) * K
        if u is not None:
            c = c - 0.5 * div_L(B, u - dagger(u))
        if s is not None:
            c = c - 0.5 * (s + dagger(s))
        return hermitian_part(c)

    def lagrangian(x, mu, beta):
        rho, u, s = lay.unpack(x)
        nodes = full_nodes(rho)
        if not is_pd(nodes, config.eps_pd):
            return None
        R = 0.5 * (nodes[:-1] + nodes[1:])
        Rinv = matrix_inv(R)
        c = defect(nodes, u, s)
        X = mu + beta * c
        f = 0.0
        M = np.zeros_like(R)
        gu = gs = None
        if u is not None:
            Ru = Rinv[:, None] @ u
            f += np.sum(np.conj(u) * Ru).real
            M = M + np.sum(u @ dagger(u), axis=1)
            gu = (2 * Ru - grad_L(B, X)) / K
        if s is not None:
            if mode.source == "relative":
                Rs = Rinv @ s
                f += alpha * np.sum(np.conj(s) * Rs).real
                M = M + alpha * (s @ dagger(s))
                gs = (2 * alpha * Rs - X) / K
            else:
                f += alpha * np.sum(np.abs(s) ** 2)
                gs = (2 * alpha * s - X) / K
        Df = -hermitian_part(Rinv @ M @ Rinv)
        grho = 0.5 * (Df[:-1] + Df[1:]) / K + (X[:-1] - X[1:])
        val = (f + np.sum(np.conj(mu) * c).real + 0.5 * beta * np.sum(np.abs(c) ** 2)) / K
        g = lay.pack(grho, gu, gs)
        # hvec of the node block already matches the real gradient
        return float(val), g

    total_iters = 0
    feas_prev = np.inf
    obj_prev = np.inf
    converged = False
    for _ in range(config.max_outer):
        res = lbfgs(lambda z: lagrangian(z, mu, beta), x, max_iter=config.max_iter,
                    rtol=max(config.tol_obj, 1e-13), atol=1e-24 * scale)
        x = res.x
        total_iters += res.iterations
        rho, u, s = lay.unpack(x)
        nodes = full_nodes(rho)
        c = defect(nodes, u, s)
        feas = float(np.max(np.linalg.norm(c, axis=(-2, -1))))
        mu = mu + beta * c
        obj = res.f
        if feas <= config.tol_feas and abs(obj - obj_prev) <= 1e-6 * max(abs(obj), 1e-300):
            converged = True
            break
        if feas > 0.5 * feas_prev:
            beta = min(beta * config.penalty_growth, config.penalty_max)
        feas_prev, obj_prev = feas, obj
    if u is None:
        u = np.zeros((K, N, n, n), complex)
    return nodes, u, s, hermitian_part(-0.5 * mu), total_iters, converged
